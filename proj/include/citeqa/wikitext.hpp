#pragma once

// Wikipedia dump ingestion: markup stripping with citation capture, sentence
// segmentation, citation-URL extraction, and statement-reference pairing.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace citeqa {

// One inline reference, anchored to the sentence it annotates.
struct Citation {
    std::pair<size_t, size_t> sentence_span;  // char span of that sentence in body
    size_t sentence_index = 0;                // its index in the page's sentence list
    std::string raw;                          // markup between the ref delimiters
};

struct PageDoc {
    std::string page_id;
    std::string title;
    std::string body;  // markup stripped, whitespace collapsed
    std::vector<Citation> citations;
    size_t unanchored_refs = 0;  // refs with no sentence text before them
};

struct StatementRef {
    std::string statement;  // exact substring of the source body
    std::string page_id;
    std::string title;
    std::string url;
    size_t position = 0;  // sentence index within the page
};

// Markup stripping only: plain-text body plus raw refs with the body offset
// where each ref marker sat.
struct StripResult {
    std::string body;
    std::vector<std::pair<size_t, std::string>> refs;
};

StripResult strip_wikitext(std::string_view source);

bool is_redirect(std::string_view wikitext);

// Sentence boundaries: [.?!] plus closing quotes/brackets, followed by
// whitespace and a capital, with dotted-abbreviation and single-initial
// guards. Spans are disjoint, ordered, and cover all non-whitespace text.
// Passing nullptr uses the built-in abbreviation list.
std::vector<std::pair<size_t, size_t>> segment_sentences(
    std::string_view text, const std::unordered_set<std::string>* abbreviations = nullptr);

const std::unordered_set<std::string>& default_abbreviations();

// One lowercase entry per line ('#' comments allowed), merged with the
// built-in defaults. Throws dump_error if the file cannot be read.
std::unordered_set<std::string> load_abbreviations(const std::filesystem::path& path);

// url= parameter of a cite template, else the first bare http(s) URL,
// else nothing.
std::optional<std::string> extract_citation_url(std::string_view raw_citation);

bool is_absolute_http_url(std::string_view url);

struct RawPage {
    std::string page_id;
    std::string title;
    std::string text;  // wikitext source
};

struct ParseDiagnostics {
    uint64_t pages_seen = 0;
    uint64_t articles = 0;
    uint64_t redirects_skipped = 0;
    uint64_t non_articles_skipped = 0;
    uint64_t malformed_skipped = 0;
};

class dump_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Streams article pages from an XML dump (optionally .gz) or a directory of
// .wikitext files (sorted by filename; page id = file stem). Redirects,
// non-article namespaces, and malformed records are skipped and tallied.
class DumpReader {
public:
    explicit DumpReader(const std::filesystem::path& input);
    ~DumpReader();
    DumpReader(DumpReader&&) noexcept;
    DumpReader& operator=(DumpReader&&) noexcept;

    std::optional<RawPage> next();
    const ParseDiagnostics& diagnostics() const { return diag_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ParseDiagnostics diag_;
};

// Strip + segment + anchor citations for one page. Each ref is attributed to
// the last sentence beginning before it; refs before any sentence are
// dropped and counted in unanchored_refs.
PageDoc parse_page(const RawPage& raw,
                   const std::unordered_set<std::string>* abbreviations = nullptr);

// All pages of a dump, in input order.
std::vector<PageDoc> parse_dump(const std::filesystem::path& input,
                                ParseDiagnostics* diagnostics = nullptr);

// One StatementRef per (sentence, cited URL); statements shorter than 6 or
// longer than 120 words are dropped, as are repeat citations of the same URL
// on one sentence.
std::vector<StatementRef> extract_statement_refs(const PageDoc& page);

}  // namespace citeqa
