#pragma once

// Sparse lexical retrieval: tokenizer, Okapi BM25 scoring, an on-disk
// inverted index with a memory-bounded builder, and exact top-k search.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace citeqa {

struct TokenizerOptions {
    bool stem = false;             // Porter-stem each token
    bool remove_stopwords = false; // drop common English function words
};

// True when the code point belongs inside a word token.
bool is_word_codepoint(uint32_t cp);

// Byte spans [begin, end) of the words in `text`, in order. Words are maximal
// runs of alphanumeric/letter-like code points; punctuation and whitespace
// separate them. The same boundaries drive tokenization and text chunking.
std::vector<std::pair<size_t, size_t>> word_spans(std::string_view text);

// Lowercased word tokens of `text`, honoring `opts`.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts = {});

// Porter (1980) stem of a lowercase ASCII word; other input returns unchanged.
std::string porter_stem(std::string_view word);

const std::unordered_set<std::string>& english_stopwords();

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    uint32_t doc;  // document ordinal (insertion order)
    uint32_t tf;   // term frequency in that document

    bool operator==(const Posting&) const = default;
};

struct ScoredId {
    std::string id;
    double score;

    bool operator==(const ScoredId&) const = default;
};

// Search results ordered by descending score; ties broken by ascending id.
using RankedList = std::vector<ScoredId>;

class index_io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexBuilder;

// Immutable inverted index over a passage corpus.
class PassageIndex {
public:
    PassageIndex() = default;
    PassageIndex(const PassageIndex&) = delete;
    PassageIndex& operator=(const PassageIndex&) = delete;
    PassageIndex(PassageIndex&&) = default;
    PassageIndex& operator=(PassageIndex&&) = default;

    const Bm25Params& params() const { return params_; }
    size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    uint32_t doc_length(uint32_t ordinal) const { return doc_lengths_[ordinal]; }
    const std::string& doc_id(uint32_t ordinal) const { return doc_ids_[ordinal]; }
    size_t term_count() const { return terms_.size(); }

    // Postings for `term`, or nullptr if absent from the corpus.
    const std::vector<Posting>* postings(const std::string& term) const;

    // BM25 score of one document for an already-tokenized query. Duplicate
    // query terms contribute once.
    double score(const std::vector<std::string>& query_tokens, uint32_t ordinal) const;

    // Exact top-k retrieval. Only documents sharing at least one term with
    // the query are candidates.
    RankedList top_k(std::string_view query, size_t k, const TokenizerOptions& opts = {}) const;
    RankedList top_k_tokens(const std::vector<std::string>& query_tokens, size_t k) const;

    // Deterministic binary serialization; load() throws index_io_error on a
    // missing, truncated, or corrupt file.
    void save(const std::filesystem::path& path) const;
    static PassageIndex load(const std::filesystem::path& path);

private:
    friend class IndexBuilder;

    void rebuild_lookup();
    double idf(size_t df) const;
    double tf_norm(uint32_t tf, uint32_t doc_len) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;      // ordinal -> external id
    std::vector<uint32_t> doc_lengths_;     // ordinal -> token count
    uint64_t total_tokens_ = 0;
    double avg_doc_length_ = 0.0;
    std::vector<std::string> terms_;                 // sorted lexicographically
    std::vector<std::vector<Posting>> postings_;     // parallel to terms_
    // Views into terms_; rebuilt on load/finish, so the index is move-only.
    std::unordered_map<std::string_view, size_t> term_lookup_;
};

// Accumulates postings in memory up to a budget, spilling term-sorted runs
// to disk and merging them in finish(). Safe for corpora larger than RAM.
class IndexBuilder {
public:
    explicit IndexBuilder(Bm25Params params = {}, TokenizerOptions opts = {},
                          size_t memory_budget_bytes = 256ull << 20,
                          std::filesystem::path spill_dir = {});
    ~IndexBuilder();

    IndexBuilder(const IndexBuilder&) = delete;
    IndexBuilder& operator=(const IndexBuilder&) = delete;

    // Throws std::invalid_argument if `id` was already added.
    void add(std::string_view id, std::string_view text);

    PassageIndex finish();

    size_t spill_count() const { return run_files_.size(); }

private:
    void spill();

    Bm25Params params_;
    TokenizerOptions opts_;
    size_t budget_;
    std::filesystem::path spill_dir_;
    bool owns_spill_dir_ = false;
    std::vector<std::filesystem::path> run_files_;
    std::unordered_set<std::string> seen_ids_;
    std::vector<std::string> doc_ids_;
    std::vector<uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::vector<Posting>> acc_;
    size_t acc_bytes_ = 0;
};

// Builds an index over (id, text) pairs in one call.
PassageIndex build_index(const std::vector<std::pair<std::string, std::string>>& corpus,
                         Bm25Params params = {}, TokenizerOptions opts = {});

}  // namespace citeqa
