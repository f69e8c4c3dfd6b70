#include "citeqa/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "citeqa/bm25.hpp"
#include "citeqa/text.hpp"

namespace citeqa {

namespace {

constexpr std::string_view kTypeNames[kEntityTypeCount] = {
    "CARDINAL", "DATE",    "EVENT",   "FAC",     "GPE",      "LANGUAGE",
    "LAW",      "LOC",     "MONEY",   "NORP",    "ORDINAL",  "ORG",
    "PERCENT",  "PERSON",  "PRODUCT", "QUANTITY", "TIME",    "WORK_OF_ART",
};

}  // namespace

const std::array<EntityType, kEntityTypeCount>& all_entity_types() {
    static const std::array<EntityType, kEntityTypeCount> types = [] {
        std::array<EntityType, kEntityTypeCount> a{};
        for (size_t i = 0; i < kEntityTypeCount; ++i) a[i] = static_cast<EntityType>(i);
        return a;
    }();
    return types;
}

std::string_view to_string(EntityType t) { return kTypeNames[static_cast<size_t>(t)]; }

std::optional<EntityType> entity_type_from(std::string_view name) {
    for (size_t i = 0; i < kEntityTypeCount; ++i)
        if (kTypeNames[i] == name) return static_cast<EntityType>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Sidecar annotations
// ---------------------------------------------------------------------------

SidecarTagger::SidecarTagger(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw tagger_error("cannot open sidecar file: " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
            !rec["id"].is_string())
            throw tagger_error("bad sidecar record at " + path.string() + ":" +
                               std::to_string(lineno));
        std::vector<RawMention> mentions;
        if (rec.contains("mentions")) {
            for (const auto& m : rec["mentions"]) {
                if (!m.is_object() || !m.contains("surface") || !m.contains("type") ||
                    !m.contains("begin") || !m.contains("end"))
                    throw tagger_error("bad sidecar mention at " + path.string() + ":" +
                                       std::to_string(lineno));
                auto etype = entity_type_from(m["type"].get<std::string>());
                if (!etype)
                    throw tagger_error("unknown entity type \"" + m["type"].get<std::string>() +
                                       "\" at " + path.string() + ":" + std::to_string(lineno));
                mentions.push_back({m["surface"].get<std::string>(), *etype,
                                    m["begin"].get<size_t>(), m["end"].get<size_t>()});
            }
        }
        annotations_[rec["id"].get<std::string>()] = std::move(mentions);
    }
}

std::optional<std::vector<EntityMention>> SidecarTagger::tag(const std::string& statement_id,
                                                             std::string_view statement) const {
    auto it = annotations_.find(statement_id);
    if (it == annotations_.end()) return std::nullopt;
    std::vector<RawMention> raw = it->second;
    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawMention& a, const RawMention& b) { return a.begin < b.begin; });
    std::vector<EntityMention> out;
    size_t covered = 0;  // end of the last accepted mention
    for (const auto& m : raw) {
        if (m.begin >= m.end || m.end > statement.size()) continue;
        if (statement.substr(m.begin, m.end - m.begin) != m.surface) continue;
        if (!out.empty() && m.begin < covered) continue;
        out.push_back({m.surface, m.etype, {m.begin, m.end}});
        covered = m.end;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rule-based fallback
// ---------------------------------------------------------------------------

void RuleTagger::add_gazetteer(EntityType type, const std::vector<std::string>& entries) {
    for (const auto& entry : entries) {
        std::vector<std::string> words;
        for (auto [b, e] : word_spans(entry))
            words.push_back(ascii_lower(std::string_view(entry).substr(b, e - b)));
        if (words.empty()) continue;
        gazetteer_[words.front()].push_back({std::move(words), type});
    }
}

void RuleTagger::load_gazetteer(EntityType type, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw tagger_error("cannot open gazetteer file: " + path.string());
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        std::string uncommented = line.substr(0, line.find('#'));
        auto t = trim(uncommented);
        if (!t.empty()) entries.emplace_back(t);
    }
    add_gazetteer(type, entries);
}

RuleTagger make_default_rule_tagger(const std::filesystem::path& data_dir) {
    RuleTagger tagger;
    auto dir = data_dir / "gazetteers";
    tagger.load_gazetteer(EntityType::GPE, dir / "gpe.txt");
    tagger.load_gazetteer(EntityType::PERSON, dir / "person.txt");
    tagger.load_gazetteer(EntityType::ORG, dir / "org.txt");
    tagger.load_gazetteer(EntityType::LANGUAGE, dir / "language.txt");
    return tagger;
}

namespace {

// Lower rank = higher precedence when matches overlap.
enum Rank : int {
    kMoney = 0,
    kPercent,
    kTime,
    kDate,
    kOrdinal,
    kQuantity,
    kGazetteer,
    kCardinal,
};

struct Candidate {
    int rank;
    size_t begin, end;
    EntityType etype;
};

bool all_digits(std::string_view s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::optional<int> small_int(std::string_view s) {
    if (!all_digits(s) || s.size() > 4) return std::nullopt;
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

const std::set<std::string_view> kMonths = {
    "january", "february", "march",   "april",    "may",      "june",     "july",
    "august",  "september", "october", "november", "december", "jan",     "feb",
    "mar",     "apr",       "jun",     "jul",      "aug",      "sep",     "sept",
    "oct",     "nov",       "dec"};

const std::set<std::string_view> kScaleWords = {"thousand", "million", "billion", "trillion"};

const std::set<std::string_view> kCurrencyWords = {"dollar", "dollars", "euro", "euros",
                                                   "pound",  "pounds",  "cent", "cents",
                                                   "yen",    "francs"};

const std::set<std::string_view> kWordOrdinals = {
    "first",      "second",     "third",     "fourth",     "fifth",      "sixth",
    "seventh",    "eighth",     "ninth",     "tenth",      "eleventh",   "twelfth",
    "thirteenth", "fourteenth", "fifteenth", "sixteenth",  "seventeenth", "eighteenth",
    "nineteenth", "twentieth",  "thirtieth", "fortieth",   "fiftieth",   "sixtieth",
    "seventieth", "eightieth",  "ninetieth", "hundredth",  "thousandth"};

const std::set<std::string_view> kUnits = {"km", "kg", "cm", "mm", "mi",
                                           "lb", "ft", "oz", "mph", "kph"};

bool plural_ish(std::string_view w) {
    if (w == "people" || w == "children") return true;
    if (w.size() >= 3 && w.substr(w.size() - 3) == "men") return true;
    if (w.size() >= 4 && w.back() == 's') {
        auto tail = w.substr(w.size() - 2);
        if (tail != "ss" && tail != "us" && tail != "is") return true;
    }
    return false;
}

bool ascii_upper_initial(std::string_view w) {
    if (w.empty()) return false;
    unsigned char c = static_cast<unsigned char>(w.front());
    return (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::optional<std::vector<EntityMention>> RuleTagger::tag(const std::string&,
                                                          std::string_view text) const {
    auto spans = word_spans(text);
    const size_t n = spans.size();
    std::vector<std::string> lower(n);
    for (size_t i = 0; i < n; ++i)
        lower[i] = ascii_lower(text.substr(spans[i].first, spans[i].second - spans[i].first));

    std::vector<Candidate> cands;

    // Numbers directly from the raw text so "3.5" and "1,000" stay whole.
    // Also the base for money/percent/quantity context checks.
    struct Number {
        size_t begin, end;
        size_t first_word, last_word;  // indices into spans
    };
    std::vector<Number> numbers;
    {
        size_t w = 0;
        size_t i = 0;
        while (i < text.size()) {
            unsigned char c = text[i];
            bool digit = std::isdigit(c);
            bool start_ok = digit && (i == 0 || !std::isalnum(static_cast<unsigned char>(
                                                    text[i - 1])));
            if (!start_ok) {
                ++i;
                continue;
            }
            size_t b = i;
            while (i < text.size()) {
                unsigned char cc = text[i];
                if (std::isdigit(cc)) {
                    ++i;
                } else if ((cc == '.' || cc == ',') && i + 1 < text.size() &&
                           std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                    ++i;
                } else {
                    break;
                }
            }
            // A trailing letter glues to the run ("1990s", "3rd"); those are
            // word-level patterns, not plain numbers.
            if (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) continue;
            while (w < n && spans[w].second <= b) ++w;
            size_t first = w;
            size_t last = w;
            while (last + 1 < n && spans[last + 1].first < i) ++last;
            numbers.push_back({b, i, first, last});
        }
    }

    auto word_at = [&](size_t i) { return std::string_view(lower[i]); };

    // MONEY: currency symbol + number (+ scale word), or number + currency word.
    for (const auto& num : numbers) {
        size_t b = num.begin;
        size_t sym = std::string_view::npos;
        if (b >= 1 && text[b - 1] == '$') sym = b - 1;
        if (b >= 2 && (text.substr(b - 2, 2) == "\xC2\xA3" ||   // pound sign
                       text.substr(b - 2, 2) == "\xC2\xA5"))    // yen sign
            sym = b - 2;
        if (b >= 3 && text.substr(b - 3, 3) == "\xE2\x82\xAC")  // euro sign
            sym = b - 3;
        size_t end = num.end;
        size_t next = num.last_word + 1;
        if (next < n && spans[next].first <= num.end + 1 && kScaleWords.count(word_at(next))) {
            end = spans[next].second;
            ++next;
        }
        if (sym != std::string_view::npos) {
            cands.push_back({kMoney, sym, end, EntityType::MONEY});
        } else if (next < n && kCurrencyWords.count(word_at(next))) {
            cands.push_back({kMoney, num.begin, spans[next].second, EntityType::MONEY});
        }
    }

    // PERCENT: number + '%' or number + "percent" / "per cent".
    for (const auto& num : numbers) {
        size_t p = num.end;
        if (p < text.size() && text[p] == ' ') ++p;
        if (p < text.size() && text[p] == '%') {
            cands.push_back({kPercent, num.begin, p + 1, EntityType::PERCENT});
            continue;
        }
        size_t next = num.last_word + 1;
        if (next < n && word_at(next) == "percent")
            cands.push_back({kPercent, num.begin, spans[next].second, EntityType::PERCENT});
        else if (next + 1 < n && word_at(next) == "per" && word_at(next + 1) == "cent")
            cands.push_back({kPercent, num.begin, spans[next + 1].second, EntityType::PERCENT});
    }

    // TIME: HH:MM(:SS) with optional am/pm, bare hour + am/pm, noon, midnight.
    auto ampm_end = [&](size_t j) -> std::optional<size_t> {
        // Returns the byte end of an am/pm marker starting at word j.
        if (j >= n) return std::nullopt;
        if (word_at(j) == "am" || word_at(j) == "pm") return spans[j].second;
        if (j + 1 < n && (word_at(j) == "a" || word_at(j) == "p") && word_at(j + 1) == "m" &&
            spans[j].second < text.size() && text[spans[j].second] == '.' &&
            spans[j + 1].first == spans[j].second + 1) {
            size_t e = spans[j + 1].second;
            if (e < text.size() && text[e] == '.') ++e;
            return e;
        }
        return std::nullopt;
    };
    for (size_t i = 0; i < n; ++i) {
        if (word_at(i) == "noon" || word_at(i) == "midnight") {
            cands.push_back({kTime, spans[i].first, spans[i].second, EntityType::TIME});
            continue;
        }
        if (!all_digits(lower[i])) continue;
        size_t end = 0;
        size_t last = i;
        if (lower[i].size() <= 2 && i + 1 < n && text[spans[i].second] == ':' &&
            spans[i + 1].first == spans[i].second + 1 && all_digits(lower[i + 1]) &&
            lower[i + 1].size() == 2) {
            end = spans[i + 1].second;
            last = i + 1;
            if (last + 1 < n && text[spans[last].second] == ':' &&
                spans[last + 1].first == spans[last].second + 1 && all_digits(lower[last + 1]) &&
                lower[last + 1].size() == 2) {
                ++last;
                end = spans[last].second;
            }
        } else {
            auto v = small_int(lower[i]);
            if (!(v && *v >= 1 && *v <= 12 && ampm_end(i + 1))) continue;
            end = spans[i].second;
        }
        if (auto e = ampm_end(last + 1)) end = *e;
        cands.push_back({kTime, spans[i].first, end, EntityType::TIME});
    }

    // DATE patterns over the word sequence.
    auto is_month = [&](size_t i) { return i < n && kMonths.count(word_at(i)) > 0; };
    auto day_val = [&](size_t i) -> bool {
        if (i >= n) return false;
        auto v = small_int(lower[i]);
        return v && *v >= 1 && *v <= 31 && lower[i].size() <= 2;
    };
    auto year_at = [&](size_t i) -> bool {
        if (i >= n) return false;
        auto v = small_int(lower[i]);
        return v && lower[i].size() == 4 && *v >= 1000 && *v <= 2999;
    };
    for (size_t i = 0; i < n; ++i) {
        if (day_val(i) && is_month(i + 1)) {
            size_t end = year_at(i + 2) ? spans[i + 2].second : spans[i + 1].second;
            cands.push_back({kDate, spans[i].first, end, EntityType::DATE});
        } else if (is_month(i)) {
            if (day_val(i + 1)) {
                size_t end = year_at(i + 2) ? spans[i + 2].second : spans[i + 1].second;
                cands.push_back({kDate, spans[i].first, end, EntityType::DATE});
            } else if (year_at(i + 1)) {
                cands.push_back({kDate, spans[i].first, spans[i + 1].second, EntityType::DATE});
            }
        } else if (year_at(i)) {
            cands.push_back({kDate, spans[i].first, spans[i].second, EntityType::DATE});
        } else if (lower[i].size() == 5 && lower[i].back() == 's' &&
                   all_digits(std::string_view(lower[i]).substr(0, 4))) {
            auto v = small_int(std::string_view(lower[i]).substr(0, 4));
            if (v && *v >= 1000 && *v <= 2999)
                cands.push_back({kDate, spans[i].first, spans[i].second, EntityType::DATE});
        }
    }

    // ORDINAL: 1st/22nd/103rd/11th and spelled-out ordinals.
    for (size_t i = 0; i < n; ++i) {
        const std::string& w = lower[i];
        bool suffixed = w.size() >= 3 && all_digits(std::string_view(w).substr(0, w.size() - 2));
        if (suffixed) {
            auto suf = std::string_view(w).substr(w.size() - 2);
            suffixed = suf == "st" || suf == "nd" || suf == "rd" || suf == "th";
        }
        if (suffixed || kWordOrdinals.count(w))
            cands.push_back({kOrdinal, spans[i].first, spans[i].second, EntityType::ORDINAL});
    }

    // Gazetteer: longest match originating at each word; the first word must
    // look like a proper noun in the original text.
    for (size_t i = 0; i < n; ++i) {
        auto it = gazetteer_.find(lower[i]);
        if (it == gazetteer_.end()) continue;
        if (!ascii_upper_initial(text.substr(spans[i].first, spans[i].second - spans[i].first)))
            continue;
        const GazetteerEntry* best = nullptr;
        for (const auto& entry : it->second) {
            if (best && entry.words.size() <= best->words.size()) continue;
            if (i + entry.words.size() > n) continue;
            bool match = true;
            for (size_t j = 1; j < entry.words.size(); ++j)
                if (lower[i + j] != entry.words[j]) {
                    match = false;
                    break;
                }
            if (match) best = &entry;
        }
        if (best)
            cands.push_back({kGazetteer, spans[i].first,
                             spans[i + best->words.size() - 1].second, best->etype});
    }

    // Remaining numbers: QUANTITY when a countable word follows within five
    // words, CARDINAL otherwise.
    for (const auto& num : numbers) {
        bool quantity = false;
        for (size_t j = num.last_word + 1; j < std::min(num.last_word + 6, n); ++j) {
            if (plural_ish(word_at(j)) || kUnits.count(word_at(j))) {
                quantity = true;
                break;
            }
        }
        cands.push_back({quantity ? kQuantity : kCardinal, num.begin, num.end,
                         quantity ? EntityType::QUANTITY : EntityType::CARDINAL});
    }

    // Precedence-major greedy selection, leftmost-longest within a family.
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.rank != b.rank) return a.rank < b.rank;
        if (a.begin != b.begin) return a.begin < b.begin;
        if (a.end != b.end) return a.end > b.end;
        return a.etype < b.etype;
    });
    std::vector<Candidate> kept;
    for (const auto& c : cands) {
        bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Candidate& k) {
            return c.begin < k.end && k.begin < c.end;
        });
        if (!overlaps) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(),
              [](const Candidate& a, const Candidate& b) { return a.begin < b.begin; });

    std::vector<EntityMention> out;
    out.reserve(kept.size());
    for (const auto& c : kept)
        out.push_back({std::string(text.substr(c.begin, c.end - c.begin)), c.etype,
                       {c.begin, c.end}});
    return out;
}

}  // namespace citeqa
