#include "citeqa/wikitext.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <fstream>

#include "citeqa/bm25.hpp"
#include "citeqa/text.hpp"

namespace citeqa {

// ---------------------------------------------------------------------------
// Markup stripping
// ---------------------------------------------------------------------------

namespace {

bool ieq(char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) ==
           std::tolower(static_cast<unsigned char>(b));
}

// Tags whose entire content is dropped.
const char* const kDropTags[] = {"math", "code", "syntaxhighlight", "pre",
                                 "nowiki", "gallery", "timeline", "score",
                                 "style", "script"};

class Stripper {
public:
    explicit Stripper(std::string_view src) : src_(src), out_(body_) {}

    StripResult run() {
        while (i_ < src_.size()) {
            if (at_line_start_ && line_start_construct()) continue;
            step();
        }
        return {std::move(body_), std::move(refs_)};
    }

private:
    std::string_view src_;
    size_t i_ = 0;
    std::string body_;
    CollapsingWriter out_;
    std::vector<std::pair<size_t, std::string>> refs_;
    bool at_line_start_ = true;

    bool starts(std::string_view s) const {
        if (i_ + s.size() > src_.size()) return false;
        for (size_t k = 0; k < s.size(); ++k)
            if (!ieq(src_[i_ + k], s[k])) return false;
        return true;
    }

    // Case-insensitive find from `from`; npos if absent.
    size_t find_ci_from(std::string_view needle, size_t from) const {
        return find_ci(src_, needle, from);
    }

    void skip_line() {
        while (i_ < src_.size() && src_[i_] != '\n') ++i_;
    }

    // Heading, list marker, table, or horizontal rule at line start.
    bool line_start_construct() {
        char c = src_[i_];
        if (c == '=') {  // heading line: drop
            skip_line();
            out_.break_word();
            return true;
        }
        if (c == '*' || c == '#' || c == ';' || c == ':') {
            while (i_ < src_.size() &&
                   (src_[i_] == '*' || src_[i_] == '#' || src_[i_] == ';' || src_[i_] == ':'))
                ++i_;
            while (i_ < src_.size() && (src_[i_] == ' ' || src_[i_] == '\t')) ++i_;
            out_.break_word();
            at_line_start_ = false;
            return true;
        }
        if (starts("{|")) {  // table: drop until the closing |} line
            int depth = 1;
            skip_line();
            while (i_ < src_.size() && depth > 0) {
                ++i_;  // consume '\n'
                if (i_ >= src_.size()) break;
                if (src_.substr(i_).starts_with("{|")) ++depth;
                else if (src_.substr(i_).starts_with("|}")) --depth;
                skip_line();
            }
            out_.break_word();
            at_line_start_ = true;
            return true;
        }
        if (c == '|' || c == '!') {  // stray table row: drop the line
            skip_line();
            out_.break_word();
            return true;
        }
        if (starts("----")) {
            skip_line();
            out_.break_word();
            return true;
        }
        return false;
    }

    void step() {
        char c = src_[i_];
        if (c == '\n') {
            out_.put(' ');
            ++i_;
            at_line_start_ = true;
            return;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            out_.put(' ');
            ++i_;
            return;
        }
        at_line_start_ = false;
        if (starts("<!--")) {
            size_t end = src_.find("-->", i_ + 4);
            i_ = end == std::string_view::npos ? src_.size() : end + 3;
            return;
        }
        if (starts("{{")) {
            skip_template();
            return;
        }
        if (starts("[[")) {
            handle_internal_link();
            return;
        }
        if (starts("[http://") || starts("[https://") || starts("[//")) {
            handle_external_link();
            return;
        }
        if (c == '\'' && i_ + 1 < src_.size() && src_[i_ + 1] == '\'') {
            while (i_ < src_.size() && src_[i_] == '\'') ++i_;
            return;
        }
        if (c == '&') {
            std::string decoded;
            size_t probe = i_;
            if (decode_entity(src_, probe, decoded)) {
                out_.write(decoded);
                i_ = probe;
                return;
            }
            out_.put('&');
            ++i_;
            return;
        }
        if (c == '<') {
            if (handle_tag()) return;
            out_.put('<');
            ++i_;
            return;
        }
        out_.put(c);
        ++i_;
    }

    void skip_template() {
        int depth = 0;
        while (i_ < src_.size()) {
            if (src_.substr(i_).starts_with("{{")) {
                depth += 1;
                i_ += 2;
            } else if (src_.substr(i_).starts_with("}}")) {
                depth -= 1;
                i_ += 2;
                if (depth == 0) break;
            } else {
                ++i_;
            }
        }
        out_.break_word();
    }

    // Emits display text of a link target, handling entities, quote markup,
    // and one level of nested links.
    void emit_inline(std::string_view s, int depth) {
        size_t k = 0;
        while (k < s.size()) {
            char c = s[k];
            if (c == '\'' && k + 1 < s.size() && s[k + 1] == '\'') {
                while (k < s.size() && s[k] == '\'') ++k;
                continue;
            }
            if (c == '&') {
                std::string decoded;
                size_t probe = k;
                if (decode_entity(s, probe, decoded)) {
                    out_.write(decoded);
                    k = probe;
                    continue;
                }
            }
            if (depth < 3 && s.substr(k).starts_with("[[")) {
                size_t close = s.find("]]", k + 2);
                if (close != std::string_view::npos) {
                    std::string_view inner = s.substr(k + 2, close - k - 2);
                    size_t pipe = inner.find('|');
                    emit_inline(pipe == std::string_view::npos ? inner : inner.substr(pipe + 1),
                                depth + 1);
                    k = close + 2;
                    continue;
                }
            }
            out_.put(c);
            ++k;
        }
    }

    void handle_internal_link() {
        size_t start = i_ + 2;
        int depth = 1;
        size_t k = start;
        while (k < src_.size() && depth > 0) {
            if (src_.substr(k).starts_with("[[")) {
                depth += 1;
                k += 2;
            } else if (src_.substr(k).starts_with("]]")) {
                depth -= 1;
                k += 2;
            } else {
                ++k;
            }
        }
        if (depth != 0) {  // unbalanced: treat the brackets as literal
            out_.put('[');
            out_.put('[');
            i_ += 2;
            return;
        }
        std::string_view inner = src_.substr(start, k - 2 - start);
        i_ = k;

        size_t pipe = std::string_view::npos;
        int nest = 0;
        for (size_t p = 0; p < inner.size(); ++p) {
            if (inner.substr(p).starts_with("[[")) nest += 1;
            else if (inner.substr(p).starts_with("]]")) nest -= 1;
            else if (inner[p] == '|' && nest == 0) {
                pipe = p;
                break;
            }
        }
        std::string_view target = pipe == std::string_view::npos ? inner : inner.substr(0, pipe);
        std::string_view t = trim(target);
        bool escaped = !t.empty() && t.front() == ':';  // [[:Category:X]] renders as a link
        if (escaped) t = trim(t.substr(1));
        for (std::string_view prefix : {"file:", "image:", "category:", "media:"}) {
            if (!escaped && starts_with_ci(t, prefix)) {
                out_.break_word();
                return;  // non-rendering construct: drop entirely
            }
        }
        emit_inline(pipe == std::string_view::npos ? trim(inner) : inner.substr(pipe + 1), 0);
    }

    void handle_external_link() {
        size_t close = src_.find(']', i_ + 1);
        if (close == std::string_view::npos) {
            out_.put('[');
            ++i_;
            return;
        }
        std::string_view inner = src_.substr(i_ + 1, close - i_ - 1);
        i_ = close + 1;
        size_t sp = inner.find_first_of(" \t");
        if (sp == std::string_view::npos) {
            out_.break_word();  // bare bracketed URL renders as a footnote mark
            return;
        }
        emit_inline(trim(inner.substr(sp + 1)), 0);
    }

    // i_ is at '<'. Returns false if this is not tag-like.
    bool handle_tag() {
        if (i_ + 1 >= src_.size()) return false;
        char next = src_[i_ + 1];
        if (!(std::isalpha(static_cast<unsigned char>(next)) || next == '/')) return false;

        if (starts("<ref")) {
            char after = i_ + 4 < src_.size() ? src_[i_ + 4] : '>';
            if (after == '>' || after == ' ' || after == '\t' || after == '/' ||
                after == '\n') {
                handle_ref();
                return true;
            }
        }
        if (starts("<br")) {
            size_t gt = src_.find('>', i_);
            i_ = gt == std::string_view::npos ? src_.size() : gt + 1;
            out_.break_word();
            return true;
        }
        for (const char* name : kDropTags) {
            std::string open = std::string("<") + name;
            if (starts(open)) {
                char after = i_ + open.size() < src_.size() ? src_[i_ + open.size()] : '>';
                if (!(after == '>' || after == ' ' || after == '\t' || after == '/')) continue;
                size_t gt = src_.find('>', i_);
                if (gt == std::string_view::npos) {
                    i_ = src_.size();
                    return true;
                }
                if (src_[gt - 1] == '/') {  // self-closing
                    i_ = gt + 1;
                    out_.break_word();
                    return true;
                }
                std::string close = std::string("</") + name;
                size_t end = find_ci_from(close, gt + 1);
                if (end == std::string_view::npos) {
                    i_ = src_.size();
                    return true;
                }
                size_t end_gt = src_.find('>', end);
                i_ = end_gt == std::string_view::npos ? src_.size() : end_gt + 1;
                out_.break_word();
                return true;
            }
        }
        // Unknown tag: drop the tag itself, keep surrounding text flowing.
        size_t gt = src_.find('>', i_);
        if (gt == std::string_view::npos || gt - i_ > 256) return false;
        i_ = gt + 1;
        return true;
    }

    void handle_ref() {
        size_t gt = src_.find('>', i_);
        if (gt == std::string_view::npos) {
            i_ = src_.size();
            return;
        }
        if (src_[gt - 1] == '/') {  // self-closing <ref name=... />
            std::string raw(trim(src_.substr(i_ + 4, gt - 1 - (i_ + 4))));
            refs_.emplace_back(out_.size(), std::move(raw));
            i_ = gt + 1;
            return;
        }
        size_t close = find_ci_from("</ref", gt + 1);
        size_t content_end = close == std::string_view::npos ? src_.size() : close;
        std::string raw(src_.substr(gt + 1, content_end - gt - 1));
        refs_.emplace_back(out_.size(), std::move(raw));
        if (close == std::string_view::npos) {
            i_ = src_.size();
            return;
        }
        size_t end_gt = src_.find('>', close);
        i_ = end_gt == std::string_view::npos ? src_.size() : end_gt + 1;
    }
};

}  // namespace

StripResult strip_wikitext(std::string_view source) { return Stripper(source).run(); }

bool is_redirect(std::string_view wikitext) {
    return starts_with_ci(trim(wikitext), "#redirect");
}

// ---------------------------------------------------------------------------
// Sentence segmentation
// ---------------------------------------------------------------------------

const std::unordered_set<std::string>& default_abbreviations() {
    static const std::unordered_set<std::string> set = {
        "mr",   "mrs",  "ms",   "dr",   "prof", "rev",  "hon",  "st",
        "sr",   "jr",   "gen",  "col",  "lt",   "sgt",  "capt", "maj",
        "no",   "nos",  "vol",  "vols", "pp",   "ed",   "eds",  "op",
        "cit",  "etc",  "approx", "dept", "est", "fig",  "figs", "min",
        "max",  "misc", "al",   "ca",   "cf",   "vs",   "inc",  "ltd",
        "co",   "corp", "univ", "assn", "bros", "jan",  "feb",  "mar",
        "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct",  "nov",
        "dec",  "mon",  "tue",  "wed",  "thu",  "fri",  "sat",  "sun",
        "e.g",  "i.e",  "u.s",  "u.k",  "u.n",  "d.c",  "a.m",  "p.m",
        "b.c",  "a.d",  "ph.d", "m.d",  "b.a",  "m.a",  "r.i.p"};
    return set;
}

std::unordered_set<std::string> load_abbreviations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw dump_error("cannot open abbreviation file: " + path.string());
    auto set = default_abbreviations();
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        set.insert(ascii_lower(sv));
    }
    return set;
}

namespace {

bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Closing quotes/brackets that may follow terminal punctuation. The UTF-8
// sequences cover typographic quotes.
bool consume_closers(std::string_view text, size_t& pos) {
    bool any = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (c == '"' || c == '\'' || c == ')' || c == ']') {
            ++pos;
            any = true;
            continue;
        }
        for (std::string_view closer : {"”", "’", "»"}) {
            if (text.substr(pos).starts_with(closer)) {
                pos += closer.size();
                any = true;
                goto next;
            }
        }
        break;
    next:;
    }
    return any;
}

bool consume_openers(std::string_view text, size_t& pos) {
    bool any = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (c == '"' || c == '\'' || c == '(' || c == '[') {
            ++pos;
            any = true;
            continue;
        }
        for (std::string_view opener : {"“", "‘", "«"}) {
            if (text.substr(pos).starts_with(opener)) {
                pos += opener.size();
                any = true;
                goto next;
            }
        }
        break;
    next:;
    }
    return any;
}

// The dotted word ending at `dot` (exclusive), e.g. "e.g" for the final
// period of "e.g.", lowercased and stripped of leading punctuation.
std::string word_before(std::string_view text, size_t dot) {
    size_t begin = dot;
    while (begin > 0 && !is_ws(text[begin - 1])) --begin;
    while (begin < dot && !std::isalnum(static_cast<unsigned char>(text[begin]))) ++begin;
    return ascii_lower(text.substr(begin, dot - begin));
}

}  // namespace

std::vector<std::pair<size_t, size_t>> segment_sentences(
    std::string_view text, const std::unordered_set<std::string>* abbreviations) {
    const auto& abbrevs = abbreviations ? *abbreviations : default_abbreviations();
    std::vector<std::pair<size_t, size_t>> spans;

    size_t begin = 0;
    while (begin < text.size() && is_ws(text[begin])) ++begin;
    if (begin >= text.size()) return spans;

    size_t i = begin;
    while (i < text.size()) {
        char c = text[i];
        if (c != '.' && c != '?' && c != '!') {
            ++i;
            continue;
        }
        if (c == '.') {
            std::string w = word_before(text, i);
            bool initial = w.size() == 1 && std::isupper(static_cast<unsigned char>(text[i - 1]));
            if (initial || abbrevs.count(w)) {
                ++i;
                continue;
            }
        }
        size_t end = i + 1;
        while (end < text.size() && (text[end] == '.' || text[end] == '?' || text[end] == '!'))
            ++end;  // "..." / "?!" runs terminate together
        consume_closers(text, end);
        // A boundary needs whitespace and then a capital (openers allowed).
        size_t probe = end;
        bool saw_ws = false;
        while (probe < text.size() && is_ws(text[probe])) {
            saw_ws = true;
            ++probe;
        }
        if (probe >= text.size()) {
            spans.emplace_back(begin, end);
            begin = text.size();
            break;
        }
        consume_openers(text, probe);
        if (!saw_ws || probe >= text.size() ||
            !std::isupper(static_cast<unsigned char>(text[probe]))) {
            i = end;
            continue;
        }
        spans.emplace_back(begin, end);
        begin = end;
        while (begin < text.size() && is_ws(text[begin])) ++begin;
        i = begin;
    }
    if (begin < text.size()) {
        size_t last = text.size();
        while (last > begin && is_ws(text[last - 1])) --last;
        if (last > begin) spans.emplace_back(begin, last);
    }
    return spans;
}

// ---------------------------------------------------------------------------
// Citation URLs
// ---------------------------------------------------------------------------

bool is_absolute_http_url(std::string_view url) {
    std::string_view rest;
    if (starts_with_ci(url, "https://")) rest = url.substr(8);
    else if (starts_with_ci(url, "http://")) rest = url.substr(7);
    else return false;
    size_t host_end = rest.find_first_of("/?#");
    std::string_view host = host_end == std::string_view::npos ? rest : rest.substr(0, host_end);
    return !host.empty();
}

namespace {

std::string_view trim_bare_url(std::string_view url) {
    while (!url.empty()) {
        char c = url.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
            c == ')' || c == '\'' || c == '"')
            url.remove_suffix(1);
        else
            break;
    }
    return url;
}

std::optional<std::string> first_bare_url(std::string_view text) {
    for (size_t i = 0; i + 7 < text.size(); ++i) {
        if (!starts_with_ci(text.substr(i), "http://") &&
            !starts_with_ci(text.substr(i), "https://"))
            continue;
        size_t end = i;
        while (end < text.size() && !is_ws(text[end]) && text[end] != ']' && text[end] != '|' &&
               text[end] != '}' && text[end] != '<' && text[end] != '"')
            ++end;
        std::string_view url = trim_bare_url(text.substr(i, end - i));
        if (is_absolute_http_url(url)) return std::string(url);
        i = end;
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_citation_url(std::string_view raw_citation) {
    // A cite template's url parameter: |url = value
    size_t pos = 0;
    while ((pos = raw_citation.find('|', pos)) != std::string_view::npos) {
        ++pos;
        size_t eq = raw_citation.find_first_of("|=}", pos);
        if (eq == std::string_view::npos || raw_citation[eq] != '=') continue;
        std::string name = ascii_lower(trim(raw_citation.substr(pos, eq - pos)));
        if (name != "url") continue;
        size_t vstart = eq + 1;
        size_t vend = raw_citation.find_first_of("|}", vstart);
        if (vend == std::string_view::npos) vend = raw_citation.size();
        std::string_view value = trim(raw_citation.substr(vstart, vend - vstart));
        if (is_absolute_http_url(value)) return std::string(value);
    }
    return first_bare_url(raw_citation);
}

// ---------------------------------------------------------------------------
// Dump reading
// ---------------------------------------------------------------------------

namespace {

// Chunked byte source over a plain or gzip-compressed file.
class ByteSource {
public:
    explicit ByteSource(const std::filesystem::path& path) {
        if (path.extension() == ".gz") {
            gz_ = gzopen(path.string().c_str(), "rb");
            if (!gz_) throw dump_error("cannot open dump: " + path.string());
        } else {
            file_.open(path, std::ios::binary);
            if (!file_) throw dump_error("cannot open dump: " + path.string());
        }
    }
    ~ByteSource() {
        if (gz_) gzclose(gz_);
    }

    // Appends up to `n` bytes to buf; returns bytes read (0 at EOF).
    size_t read_into(std::string& buf, size_t n) {
        std::string chunk(n, '\0');
        size_t got = 0;
        if (gz_) {
            int r = gzread(gz_, chunk.data(), static_cast<unsigned>(n));
            if (r < 0) throw dump_error("gzip read error");
            got = static_cast<size_t>(r);
        } else {
            file_.read(chunk.data(), static_cast<std::streamsize>(n));
            got = static_cast<size_t>(file_.gcount());
        }
        buf.append(chunk.data(), got);
        return got;
    }

private:
    std::ifstream file_;
    gzFile gz_ = nullptr;
};

std::optional<std::string> tag_text(std::string_view block, std::string_view name) {
    std::string open = "<" + std::string(name);
    size_t start = block.find(open);
    while (start != std::string_view::npos) {
        size_t after = start + open.size();
        if (after < block.size() && (block[after] == '>' || block[after] == ' ')) break;
        start = block.find(open, after);
    }
    if (start == std::string_view::npos) return std::nullopt;
    size_t gt = block.find('>', start);
    if (gt == std::string_view::npos) return std::nullopt;
    if (block[gt - 1] == '/') return std::string();  // self-closing, empty content
    std::string close = "</" + std::string(name) + ">";
    size_t end = block.find(close, gt + 1);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(block.substr(gt + 1, end - gt - 1));
}

}  // namespace

struct DumpReader::Impl {
    // XML mode
    std::unique_ptr<ByteSource> source;
    std::string buffer;
    size_t scan_pos = 0;
    bool eof = false;

    // Directory mode
    std::vector<std::filesystem::path> files;
    size_t file_index = 0;
    bool directory = false;
};

DumpReader::DumpReader(const std::filesystem::path& input) : impl_(new Impl) {
    if (std::filesystem::is_directory(input)) {
        impl_->directory = true;
        for (const auto& entry : std::filesystem::directory_iterator(input))
            if (entry.path().extension() == ".wikitext") impl_->files.push_back(entry.path());
        std::sort(impl_->files.begin(), impl_->files.end(),
                  [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    } else if (std::filesystem::exists(input)) {
        impl_->source = std::make_unique<ByteSource>(input);
    } else {
        throw dump_error("dump input does not exist: " + input.string());
    }
}

DumpReader::~DumpReader() = default;
DumpReader::DumpReader(DumpReader&&) noexcept = default;
DumpReader& DumpReader::operator=(DumpReader&&) noexcept = default;

std::optional<RawPage> DumpReader::next() {
    if (impl_->directory) {
        while (impl_->file_index < impl_->files.size()) {
            const auto& path = impl_->files[impl_->file_index++];
            ++diag_.pages_seen;
            std::ifstream in(path, std::ios::binary);
            if (!in) {
                ++diag_.malformed_skipped;
                continue;
            }
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            if (is_redirect(text)) {
                ++diag_.redirects_skipped;
                continue;
            }
            RawPage page;
            page.page_id = path.stem().string();
            page.title = page.page_id;
            std::replace(page.title.begin(), page.title.end(), '_', ' ');
            page.text = std::move(text);
            ++diag_.articles;
            return page;
        }
        return std::nullopt;
    }

    constexpr size_t kChunk = 1 << 16;
    while (true) {
        size_t open = impl_->buffer.find("<page>", impl_->scan_pos);
        size_t close = open == std::string::npos
                           ? std::string::npos
                           : impl_->buffer.find("</page>", open);
        if (close == std::string::npos) {
            if (impl_->eof) return std::nullopt;
            // Drop consumed bytes before growing the buffer.
            size_t keep_from = open == std::string::npos ? impl_->scan_pos : open;
            if (keep_from > 0) {
                impl_->buffer.erase(0, keep_from);
                impl_->scan_pos = 0;
            }
            if (impl_->source->read_into(impl_->buffer, kChunk) == 0) impl_->eof = true;
            continue;
        }
        std::string_view block(impl_->buffer.data() + open, close - open);
        impl_->scan_pos = close + 7;
        ++diag_.pages_seen;

        auto ns = tag_text(block, "ns");
        if (ns && trim(*ns) != "0") {
            ++diag_.non_articles_skipped;
            continue;
        }
        if (block.find("<redirect") != std::string_view::npos) {
            ++diag_.redirects_skipped;
            continue;
        }
        auto title = tag_text(block, "title");
        auto id = tag_text(block, "id");  // first <id> under <page>
        auto text = tag_text(block, "text");
        if (!title || !id || !text || trim(*id).empty()) {
            ++diag_.malformed_skipped;
            continue;
        }
        RawPage page;
        page.page_id = std::string(trim(*id));
        page.title = xml_unescape(*title);
        page.text = xml_unescape(*text);
        if (is_redirect(page.text)) {
            ++diag_.redirects_skipped;
            continue;
        }
        ++diag_.articles;
        return page;
    }
}

// ---------------------------------------------------------------------------
// Page assembly
// ---------------------------------------------------------------------------

PageDoc parse_page(const RawPage& raw, const std::unordered_set<std::string>* abbreviations) {
    // Sanitize before stripping so ref anchors index into the final body.
    auto stripped = strip_wikitext(utf8_sanitize(raw.text));
    PageDoc page;
    page.page_id = raw.page_id;
    page.title = raw.title;
    page.body = std::move(stripped.body);
    auto sentences = segment_sentences(page.body, abbreviations);

    for (auto& [anchor, raw_ref] : stripped.refs) {
        // The anchoring sentence is the last one beginning before the ref.
        size_t idx = sentences.size();
        for (size_t s = 0; s < sentences.size(); ++s) {
            if (sentences[s].first < anchor) idx = s;
            else break;
        }
        if (idx == sentences.size()) {
            ++page.unanchored_refs;
            continue;
        }
        Citation c;
        c.sentence_span = sentences[idx];
        c.sentence_index = idx;
        c.raw = std::move(raw_ref);
        page.citations.push_back(std::move(c));
    }
    return page;
}

std::vector<PageDoc> parse_dump(const std::filesystem::path& input,
                                ParseDiagnostics* diagnostics) {
    DumpReader reader(input);
    std::vector<PageDoc> pages;
    while (auto raw = reader.next()) pages.push_back(parse_page(*raw));
    if (diagnostics) *diagnostics = reader.diagnostics();
    return pages;
}

std::vector<StatementRef> extract_statement_refs(const PageDoc& page) {
    std::vector<StatementRef> out;
    std::unordered_set<std::string> seen;  // "position|url" dedup
    for (const auto& citation : page.citations) {
        auto url = extract_citation_url(citation.raw);
        if (!url) continue;
        auto [begin, end] = citation.sentence_span;
        std::string_view statement =
            std::string_view(page.body).substr(begin, end - begin);
        size_t words = word_spans(statement).size();
        if (words < 6 || words > 120) continue;
        std::string key = std::to_string(citation.sentence_index) + "|" + *url;
        if (!seen.insert(key).second) continue;
        StatementRef ref;
        ref.statement = std::string(statement);
        ref.page_id = page.page_id;
        ref.title = page.title;
        ref.url = *url;
        ref.position = citation.sentence_index;
        out.push_back(std::move(ref));
    }
    return out;
}

}  // namespace citeqa
