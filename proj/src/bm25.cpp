#include "citeqa/bm25.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include "citeqa/text.hpp"

namespace citeqa {

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

bool is_word_codepoint(uint32_t cp) {
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp >= 0xA0 && cp <= 0xBF) return false;      // Latin-1 punctuation/symbols
    if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    return true;
}


std::vector<std::pair<size_t, size_t>> word_spans(std::string_view text) {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t pos = 0;
    size_t begin = std::string_view::npos;
    while (pos < text.size()) {
        size_t at = pos;
        uint32_t cp = utf8_decode(text, pos);
        if (is_word_codepoint(cp)) {
            if (begin == std::string_view::npos) begin = at;
        } else if (begin != std::string_view::npos) {
            spans.emplace_back(begin, at);
            begin = std::string_view::npos;
        }
    }
    if (begin != std::string_view::npos) spans.emplace_back(begin, text.size());
    return spans;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&]() {
        if (cur.empty()) return;
        if (opts.remove_stopwords && english_stopwords().count(cur)) {
            cur.clear();
            return;
        }
        if (opts.stem) cur = porter_stem(cur);
        tokens.push_back(std::move(cur));
        cur.clear();
    };
    size_t pos = 0;
    while (pos < text.size()) {
        uint32_t cp = utf8_decode(text, pos);
        if (is_word_codepoint(cp)) {
            utf8_encode(lower_cp(cp), cur);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> set = {
        "a",     "an",   "and",  "are",  "as",    "at",   "be",    "but",
        "by",    "for",  "if",   "in",   "into",  "is",   "it",    "no",
        "not",   "of",   "on",   "or",   "such",  "that", "the",   "their",
        "then",  "there", "these", "they", "this", "to",  "was",   "will",
        "with"};
    return set;
}

// ---------------------------------------------------------------------------
// Porter stemmer (Porter 1980), restricted to lowercase ASCII words.
// ---------------------------------------------------------------------------

namespace {

class Porter {
public:
    explicit Porter(std::string word)
        : b_(std::move(word)), k_(static_cast<ptrdiff_t>(b_.size()) - 1) {}

    std::string run() {
        if (b_.size() <= 2) return b_;
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return b_.substr(0, static_cast<size_t>(k_ + 1));
    }

private:
    std::string b_;
    ptrdiff_t k_;       // index of last letter of the current word
    ptrdiff_t j_ = 0;   // index of last letter of the stem under test

    bool cons(ptrdiff_t i) const {
        char c = b_[static_cast<size_t>(i)];
        if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
        if (c == 'y') return i == 0 ? true : !cons(i - 1);
        return true;
    }

    // Number of consonant-vowel sequences in [0, j_].
    int m() const {
        int n = 0;
        ptrdiff_t i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (ptrdiff_t i = 0; i <= j_; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool double_cons(ptrdiff_t i) const {
        if (i < 1) return false;
        if (b_[static_cast<size_t>(i)] != b_[static_cast<size_t>(i - 1)]) return false;
        return cons(i);
    }

    bool cvc(ptrdiff_t i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        char c = b_[static_cast<size_t>(i)];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view s) {
        ptrdiff_t len = static_cast<ptrdiff_t>(s.size());
        if (len > k_ + 1) return false;
        if (b_.compare(static_cast<size_t>(k_ + 1 - len), s.size(), s) != 0) return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(std::string_view s) {
        b_.replace(static_cast<size_t>(j_ + 1), static_cast<size_t>(k_ - j_), s);
        k_ = j_ + static_cast<ptrdiff_t>(s.size());
    }

    void r(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    char at(ptrdiff_t i) const { return b_[static_cast<size_t>(i)]; }

    void step1ab() {
        if (at(k_) == 's') {
            if (ends("sses")) k_ -= 2;
            else if (ends("ies")) set_to("i");
            else if (at(k_ - 1) != 's') --k_;
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) set_to("ate");
            else if (ends("bl")) set_to("ble");
            else if (ends("iz")) set_to("ize");
            else if (double_cons(k_)) {
                char c = at(k_);
                if (c != 'l' && c != 's' && c != 'z') --k_;
            } else {
                j_ = k_;
                if (m() == 1 && cvc(k_)) set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[static_cast<size_t>(k_)] = 'i';
    }

    void step2() {
        if (k_ < 1) return;
        switch (at(k_ - 1)) {
            case 'a':
                if (ends("ational")) { r("ate"); break; }
                if (ends("tional")) { r("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { r("ence"); break; }
                if (ends("anci")) { r("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { r("ize"); break; }
                break;
            case 'l':
                if (ends("bli")) { r("ble"); break; }
                if (ends("alli")) { r("al"); break; }
                if (ends("entli")) { r("ent"); break; }
                if (ends("eli")) { r("e"); break; }
                if (ends("ousli")) { r("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { r("ize"); break; }
                if (ends("ation")) { r("ate"); break; }
                if (ends("ator")) { r("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { r("al"); break; }
                if (ends("iveness")) { r("ive"); break; }
                if (ends("fulness")) { r("ful"); break; }
                if (ends("ousness")) { r("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { r("al"); break; }
                if (ends("iviti")) { r("ive"); break; }
                if (ends("biliti")) { r("ble"); break; }
                break;
            case 'g':
                if (ends("logi")) { r("log"); break; }
                break;
            default:
                break;
        }
    }

    void step3() {
        switch (at(k_)) {
            case 'e':
                if (ends("icate")) { r("ic"); break; }
                if (ends("ative")) { r(""); break; }
                if (ends("alize")) { r("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { r("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { r("ic"); break; }
                if (ends("ful")) { r(""); break; }
                break;
            case 's':
                if (ends("ness")) { r(""); break; }
                break;
            default:
                break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        switch (at(k_ - 1)) {
            case 'a': if (ends("al")) break; return;
            case 'c': if (ends("ance")) break; if (ends("ence")) break; return;
            case 'e': if (ends("er")) break; return;
            case 'i': if (ends("ic")) break; return;
            case 'l': if (ends("able")) break; if (ends("ible")) break; return;
            case 'n':
                if (ends("ant")) break;
                if (ends("ement")) break;
                if (ends("ment")) break;
                if (ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) break;
                if (ends("ou")) break;
                return;
            case 's': if (ends("ism")) break; return;
            case 't': if (ends("ate")) break; if (ends("iti")) break; return;
            case 'u': if (ends("ous")) break; return;
            case 'v': if (ends("ive")) break; return;
            case 'z': if (ends("ize")) break; return;
            default: return;
        }
        if (m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (at(k_) == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (at(k_) == 'l' && double_cons(k_) && m() > 1) --k_;
    }
};

}  // namespace

std::string porter_stem(std::string_view word) {
    for (unsigned char c : word)
        if (c >= 0x80 || !(c >= 'a' && c <= 'z')) return std::string(word);
    return Porter(std::string(word)).run();
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

const std::vector<Posting>* PassageIndex::postings(const std::string& term) const {
    auto it = term_lookup_.find(std::string_view(term));
    if (it == term_lookup_.end()) return nullptr;
    return &postings_[it->second];
}

void PassageIndex::rebuild_lookup() {
    term_lookup_.clear();
    term_lookup_.reserve(terms_.size());
    for (size_t i = 0; i < terms_.size(); ++i) term_lookup_.emplace(terms_[i], i);
}

double PassageIndex::idf(size_t df) const {
    double n = static_cast<double>(doc_count());
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double PassageIndex::tf_norm(uint32_t tf, uint32_t doc_len) const {
    double t = tf;
    double norm = 1.0 - params_.b + params_.b * (doc_len / avg_doc_length_);
    return t * (params_.k1 + 1.0) / (t + params_.k1 * norm);
}

namespace {

std::vector<std::string> dedupe_keep_order(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    std::unordered_set<std::string_view> seen;
    for (const auto& t : tokens)
        if (seen.insert(t).second) out.push_back(t);
    return out;
}

}  // namespace

double PassageIndex::score(const std::vector<std::string>& query_tokens, uint32_t ordinal) const {
    double total = 0.0;
    for (const auto& term : dedupe_keep_order(query_tokens)) {
        const auto* plist = postings(term);
        if (!plist) continue;
        auto it = std::lower_bound(plist->begin(), plist->end(), ordinal,
                                   [](const Posting& p, uint32_t d) { return p.doc < d; });
        if (it == plist->end() || it->doc != ordinal) continue;
        total += idf(plist->size()) * tf_norm(it->tf, doc_lengths_[ordinal]);
    }
    return total;
}

RankedList PassageIndex::top_k(std::string_view query, size_t k,
                               const TokenizerOptions& opts) const {
    return top_k_tokens(tokenize(query, opts), k);
}

RankedList PassageIndex::top_k_tokens(const std::vector<std::string>& query_tokens,
                                      size_t k) const {
    struct Cand {
        double score;
        uint32_t ordinal;
    };
    if (k == 0 || doc_count() == 0) return {};

    struct Cursor {
        const std::vector<Posting>* plist;
        size_t pos;
        double idf;
    };
    std::vector<Cursor> cursors;
    for (const auto& term : dedupe_keep_order(query_tokens)) {
        const auto* plist = postings(term);
        if (plist && !plist->empty()) cursors.push_back({plist, 0, idf(plist->size())});
    }
    if (cursors.empty()) return {};

    auto better = [this](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        return doc_ids_[a.ordinal] < doc_ids_[b.ordinal];
    };
    // Heap with the worst kept candidate on top.
    std::priority_queue<Cand, std::vector<Cand>, decltype(better)> heap(better);

    // Document-at-a-time: walk the union of the term postings in ordinal
    // order, accumulating per-term contributions in query-term order.
    while (true) {
        uint32_t doc = UINT32_MAX;
        for (const auto& c : cursors)
            if (c.pos < c.plist->size()) doc = std::min(doc, (*c.plist)[c.pos].doc);
        if (doc == UINT32_MAX) break;
        double s = 0.0;
        for (auto& c : cursors) {
            if (c.pos < c.plist->size() && (*c.plist)[c.pos].doc == doc) {
                s += c.idf * tf_norm((*c.plist)[c.pos].tf, doc_lengths_[doc]);
                ++c.pos;
            }
        }
        Cand cand{s, doc};
        if (heap.size() < k) {
            heap.push(cand);
        } else if (better(cand, heap.top())) {
            heap.pop();
            heap.push(cand);
        }
    }

    std::vector<Cand> cands;
    cands.reserve(heap.size());
    while (!heap.empty()) {
        cands.push_back(heap.top());
        heap.pop();
    }
    std::sort(cands.begin(), cands.end(), better);
    RankedList out;
    out.reserve(cands.size());
    for (const auto& c : cands) out.push_back({doc_ids_[c.ordinal], c.score});
    return out;
}

// ---------------------------------------------------------------------------
// Binary persistence (little-endian, varint-delta postings)
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[6] = {'C', 'Q', 'I', 'D', 'X', '1'};
constexpr uint32_t kVersion = 1;

void write_varint(std::string& buf, uint64_t v) {
    while (v >= 0x80) {
        buf.push_back(static_cast<char>((v & 0x7F) | 0x80));
        v >>= 7;
    }
    buf.push_back(static_cast<char>(v));
}

struct ByteReader {
    const std::string& data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) throw index_io_error("truncated index file");
    }
    uint64_t varint() {
        uint64_t v = 0;
        int shift = 0;
        while (true) {
            need(1);
            unsigned char b = static_cast<unsigned char>(data[pos++]);
            v |= static_cast<uint64_t>(b & 0x7F) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
            if (shift > 63) throw index_io_error("corrupt varint");
        }
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
    double f64() {
        need(8);
        double d;
        std::memcpy(&d, data.data() + pos, 8);
        pos += 8;
        return d;
    }
    uint32_t u32() {
        need(4);
        uint32_t v;
        std::memcpy(&v, data.data() + pos, 4);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v;
        std::memcpy(&v, data.data() + pos, 8);
        pos += 8;
        return v;
    }
};

void put_raw(std::string& buf, const void* p, size_t n) {
    buf.append(static_cast<const char*>(p), n);
}

}  // namespace

void PassageIndex::save(const std::filesystem::path& path) const {
    std::string buf;
    buf.reserve(1 << 20);
    put_raw(buf, kMagic, sizeof(kMagic));
    put_raw(buf, &kVersion, 4);
    put_raw(buf, &params_.k1, 8);
    put_raw(buf, &params_.b, 8);
    uint64_t dc = doc_ids_.size();
    put_raw(buf, &dc, 8);
    put_raw(buf, &total_tokens_, 8);
    for (size_t i = 0; i < doc_ids_.size(); ++i) {
        write_varint(buf, doc_ids_[i].size());
        buf += doc_ids_[i];
        write_varint(buf, doc_lengths_[i]);
    }
    uint64_t tc = terms_.size();
    put_raw(buf, &tc, 8);
    for (size_t t = 0; t < terms_.size(); ++t) {
        write_varint(buf, terms_[t].size());
        buf += terms_[t];
        write_varint(buf, postings_[t].size());
        uint32_t prev = 0;
        for (const Posting& p : postings_[t]) {
            write_varint(buf, p.doc - prev);
            write_varint(buf, p.tf);
            prev = p.doc;
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw index_io_error("cannot open index file for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw index_io_error("short write to index file: " + path.string());
}

PassageIndex PassageIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw index_io_error("cannot open index file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r{data};

    std::string magic = r.bytes(sizeof(kMagic));
    if (magic.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0)
        throw index_io_error("bad index magic");
    uint32_t version = r.u32();
    if (version != kVersion) throw index_io_error("unsupported index version");

    PassageIndex idx;
    idx.params_.k1 = r.f64();
    idx.params_.b = r.f64();
    uint64_t dc = r.u64();
    idx.total_tokens_ = r.u64();
    idx.doc_ids_.reserve(dc);
    idx.doc_lengths_.reserve(dc);
    for (uint64_t i = 0; i < dc; ++i) {
        size_t len = r.varint();
        idx.doc_ids_.push_back(r.bytes(len));
        idx.doc_lengths_.push_back(static_cast<uint32_t>(r.varint()));
    }
    idx.avg_doc_length_ = dc ? static_cast<double>(idx.total_tokens_) / dc : 0.0;
    uint64_t tc = r.u64();
    idx.terms_.reserve(tc);
    idx.postings_.reserve(tc);
    for (uint64_t t = 0; t < tc; ++t) {
        size_t len = r.varint();
        idx.terms_.push_back(r.bytes(len));
        uint64_t pc = r.varint();
        std::vector<Posting> plist;
        plist.reserve(pc);
        uint32_t prev = 0;
        for (uint64_t p = 0; p < pc; ++p) {
            uint32_t doc = prev + static_cast<uint32_t>(r.varint());
            uint32_t tf = static_cast<uint32_t>(r.varint());
            if (doc >= dc) throw index_io_error("posting ordinal out of range");
            plist.push_back({doc, tf});
            prev = doc;
        }
        idx.postings_.push_back(std::move(plist));
    }
    idx.rebuild_lookup();
    return idx;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

IndexBuilder::IndexBuilder(Bm25Params params, TokenizerOptions opts,
                           size_t memory_budget_bytes, std::filesystem::path spill_dir)
    : params_(params), opts_(opts), budget_(memory_budget_bytes),
      spill_dir_(std::move(spill_dir)) {
    if (spill_dir_.empty()) {
        static std::atomic<uint64_t> counter{0};
        spill_dir_ = std::filesystem::temp_directory_path() /
                     ("citeqa-spill-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter.fetch_add(1)));
        owns_spill_dir_ = true;
    }
}

IndexBuilder::~IndexBuilder() {
    std::error_code ec;
    for (const auto& f : run_files_) std::filesystem::remove(f, ec);
    if (owns_spill_dir_) std::filesystem::remove_all(spill_dir_, ec);
}

void IndexBuilder::add(std::string_view id, std::string_view text) {
    std::string id_str(id);
    if (!seen_ids_.insert(id_str).second)
        throw std::invalid_argument("duplicate passage id: " + id_str);
    uint32_t ordinal = static_cast<uint32_t>(doc_ids_.size());
    auto tokens = tokenize(text, opts_);
    doc_ids_.push_back(std::move(id_str));
    doc_lengths_.push_back(static_cast<uint32_t>(tokens.size()));

    std::unordered_map<std::string_view, uint32_t> tf;
    tf.reserve(tokens.size());
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) {
        auto it = acc_.find(std::string(term));
        if (it == acc_.end()) {
            it = acc_.emplace(std::string(term), std::vector<Posting>{}).first;
            acc_bytes_ += term.size() + 64;  // rough node overhead
        }
        it->second.push_back({ordinal, count});
        acc_bytes_ += sizeof(Posting);
    }
    if (acc_bytes_ > budget_) spill();
}

void IndexBuilder::spill() {
    if (acc_.empty()) return;
    std::filesystem::create_directories(spill_dir_);
    std::vector<const std::string*> terms;
    terms.reserve(acc_.size());
    for (const auto& [term, plist] : acc_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    auto path = spill_dir_ / ("run-" + std::to_string(run_files_.size()) + ".bin");
    std::string buf;
    for (const auto* term : terms) {
        const auto& plist = acc_[*term];
        write_varint(buf, term->size());
        buf += *term;
        write_varint(buf, plist.size());
        uint32_t prev = 0;
        for (const Posting& p : plist) {
            write_varint(buf, p.doc - prev);
            write_varint(buf, p.tf);
            prev = p.doc;
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw index_io_error("cannot open spill run for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw index_io_error("short write to spill run: " + path.string());
    run_files_.push_back(path);
    acc_.clear();
    acc_bytes_ = 0;
}

namespace {

// Sequential reader over one sorted spill run.
struct RunCursor {
    std::string data;
    size_t pos = 0;
    std::string term;
    std::vector<Posting> postings;

    bool next() {
        if (pos >= data.size()) return false;
        ByteReader r{data};
        r.pos = pos;
        size_t len = r.varint();
        term = r.bytes(len);
        uint64_t pc = r.varint();
        postings.clear();
        postings.reserve(pc);
        uint32_t prev = 0;
        for (uint64_t i = 0; i < pc; ++i) {
            uint32_t doc = prev + static_cast<uint32_t>(r.varint());
            uint32_t tf = static_cast<uint32_t>(r.varint());
            postings.push_back({doc, tf});
            prev = doc;
        }
        pos = r.pos;
        return true;
    }
};

}  // namespace

PassageIndex IndexBuilder::finish() {
    PassageIndex idx;
    idx.params_ = params_;
    idx.doc_ids_ = std::move(doc_ids_);
    idx.doc_lengths_ = std::move(doc_lengths_);
    idx.total_tokens_ = 0;
    for (uint32_t len : idx.doc_lengths_) idx.total_tokens_ += len;
    idx.avg_doc_length_ = idx.doc_ids_.empty()
                              ? 0.0
                              : static_cast<double>(idx.total_tokens_) / idx.doc_ids_.size();

    if (run_files_.empty()) {
        std::vector<const std::string*> terms;
        terms.reserve(acc_.size());
        for (const auto& [term, plist] : acc_) terms.push_back(&term);
        std::sort(terms.begin(), terms.end(),
                  [](const std::string* a, const std::string* b) { return *a < *b; });
        idx.terms_.reserve(terms.size());
        idx.postings_.reserve(terms.size());
        for (const auto* term : terms) {
            idx.terms_.push_back(*term);
            idx.postings_.push_back(std::move(acc_[*term]));
        }
        acc_.clear();
    } else {
        spill();  // flush the tail
        // K-way merge of term-sorted runs. Runs were written in document
        // order, so for equal terms earlier runs hold smaller ordinals.
        std::vector<RunCursor> runs(run_files_.size());
        std::vector<size_t> alive;
        for (size_t i = 0; i < run_files_.size(); ++i) {
            std::ifstream in(run_files_[i], std::ios::binary);
            runs[i].data.assign((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
            if (runs[i].next()) alive.push_back(i);
        }
        while (!alive.empty()) {
            const std::string* min_term = nullptr;
            for (size_t i : alive)
                if (!min_term || runs[i].term < *min_term) min_term = &runs[i].term;
            std::string term = *min_term;
            std::vector<Posting> merged;
            std::vector<size_t> still_alive;
            for (size_t i : alive) {
                if (runs[i].term == term) {
                    merged.insert(merged.end(), runs[i].postings.begin(),
                                  runs[i].postings.end());
                    if (runs[i].next()) still_alive.push_back(i);
                } else {
                    still_alive.push_back(i);
                }
            }
            idx.terms_.push_back(std::move(term));
            idx.postings_.push_back(std::move(merged));
            alive = std::move(still_alive);
        }
        std::error_code ec;
        for (const auto& f : run_files_) std::filesystem::remove(f, ec);
        run_files_.clear();
    }
    idx.rebuild_lookup();
    return idx;
}

PassageIndex build_index(const std::vector<std::pair<std::string, std::string>>& corpus,
                         Bm25Params params, TokenizerOptions opts) {
    IndexBuilder builder(params, opts);
    for (const auto& [id, text] : corpus) builder.add(id, text);
    return builder.finish();
}

}  // namespace citeqa
