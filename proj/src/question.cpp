#include "citeqa/question.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "citeqa/parallel.hpp"
#include "citeqa/text.hpp"

namespace citeqa {

// ---------------------------------------------------------------------------
// Reformation table
// ---------------------------------------------------------------------------

namespace {

const std::pair<EntityType, std::vector<std::string>> kDefaultPhrases[] = {
    {EntityType::CARDINAL, {"what"}},
    {EntityType::DATE, {"when", "what time", "what date"}},
    {EntityType::EVENT, {"what event", "what", "which event"}},
    {EntityType::FAC, {"where", "what buildings"}},
    {EntityType::GPE, {"where", "what country"}},
    {EntityType::LANGUAGE, {"what language", "which language"}},
    {EntityType::LAW, {"which law", "what law"}},
    {EntityType::LOC, {"where", "what location", "which place", "what place"}},
    {EntityType::MONEY, {"how much money", "how much"}},
    {EntityType::NORP, {"what", "what groups", "where"}},
    {EntityType::ORDINAL, {"what rank", "what"}},
    {EntityType::ORG, {"which organization", "what organization", "what"}},
    {EntityType::PERCENT, {"what percent", "what percentage"}},
    {EntityType::PERSON, {"who", "which person"}},
    {EntityType::PRODUCT, {"what", "what product"}},
    {EntityType::QUANTITY, {"how many", "how much"}},
    {EntityType::TIME, {"when", "what time"}},
    {EntityType::WORK_OF_ART, {"what", "what title"}},
};

}  // namespace

ReformationTable ReformationTable::builtin() {
    ReformationTable table;
    for (const auto& [etype, phrases] : kDefaultPhrases)
        table.phrases_[static_cast<size_t>(etype)] = phrases;
    table.validate();
    return table;
}

ReformationTable ReformationTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open phrase table: " + path.string());
    ReformationTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto where = path.string() + ":" + std::to_string(lineno);
        std::string uncommented = line.substr(0, line.find('#'));
        auto content = trim(uncommented);
        if (content.empty()) continue;
        size_t colon = content.find(':');
        if (colon == std::string_view::npos)
            throw config_error("missing ':' in phrase table at " + where);
        auto etype = entity_type_from(trim(content.substr(0, colon)));
        if (!etype) throw config_error("unknown entity type in phrase table at " + where);
        auto& list = table.phrases_[static_cast<size_t>(*etype)];
        if (!list.empty()) throw config_error("duplicate entity type in phrase table at " + where);
        auto rest = content.substr(colon + 1);
        size_t start = 0;
        while (start <= rest.size()) {
            size_t comma = rest.find(',', start);
            auto piece = trim(rest.substr(start, comma - start));
            if (!piece.empty()) list.emplace_back(piece);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (list.empty()) throw config_error("empty phrase list at " + where);
    }
    table.validate();
    return table;
}

void ReformationTable::validate() const {
    for (EntityType t : all_entity_types())
        if (phrases_[static_cast<size_t>(t)].empty())
            throw config_error("phrase table misses entity type " + std::string(to_string(t)));
}

const std::vector<std::string>& ReformationTable::phrases(EntityType t) const {
    return phrases_[static_cast<size_t>(t)];
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

size_t Rng::uniform_index(size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index requires n > 0");
    uint64_t range = n;
    uint64_t threshold = (0 - range) % range;  // 2^64 mod range
    uint64_t x;
    do {
        x = engine_();
    } while (x < threshold);
    return static_cast<size_t>(x % range);
}

uint64_t pair_seed(uint64_t master_seed, std::string_view statement_id, std::string_view url) {
    std::string key;
    key.reserve(statement_id.size() + url.size() + 1);
    key.append(statement_id);
    key.push_back('|');
    key.append(url);
    return splitmix64(master_seed ^ fnv1a64(key));
}

std::string statement_id(const StatementRef& ref) {
    return ref.page_id + ":" + std::to_string(ref.position);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

std::vector<EntityMention> filter_in_evidence(const std::vector<EntityMention>& mentions,
                                              const Evidence& evidence) {
    std::vector<EntityMention> kept;
    for (const auto& m : mentions)
        if (find_ci(evidence.text, m.surface) != std::string_view::npos) kept.push_back(m);
    return kept;
}

const EntityMention& sample_answer(const std::vector<EntityMention>& mentions, Rng& rng) {
    if (mentions.empty()) throw std::invalid_argument("sample_answer requires candidates");
    return mentions[rng.uniform_index(mentions.size())];
}

std::string reform_question(std::string_view statement, const EntityMention& answer,
                            const ReformationTable& table, Rng& rng) {
    auto [begin, end] = answer.span;
    if (begin > end || end > statement.size())
        throw std::invalid_argument("answer span outside the statement");
    const auto& phrases = table.phrases(answer.etype);
    std::string phrase = phrases[rng.uniform_index(phrases.size())];

    bool sentence_start = true;
    for (size_t i = begin; i > 0;) {
        unsigned char c = static_cast<unsigned char>(statement[--i]);
        if (std::isspace(c)) continue;
        sentence_start = c == '.' || c == '!' || c == '?';
        break;
    }
    if (sentence_start && !phrase.empty() && phrase.front() >= 'a' && phrase.front() <= 'z')
        phrase.front() = static_cast<char>(phrase.front() - 'a' + 'A');

    std::string question(statement);
    question.replace(begin, end - begin, phrase);
    return question;
}

namespace {

uint32_t cp_at(std::string_view text, size_t pos) {
    return utf8_decode(text, pos);
}

uint32_t cp_ending_at(std::string_view text, size_t end) {
    size_t b = end;
    do {
        --b;
    } while (b > 0 && (static_cast<unsigned char>(text[b]) & 0xC0) == 0x80);
    return cp_at(text, b);
}

}  // namespace

size_t find_token_boundary_ci(std::string_view text, std::string_view needle, size_t from) {
    if (needle.empty() || needle.size() > text.size()) return std::string_view::npos;
    bool left_is_word = is_word_codepoint(cp_at(needle, 0));
    bool right_is_word = is_word_codepoint(cp_ending_at(needle, needle.size()));
    size_t pos = from;
    while ((pos = find_ci(text, needle, pos)) != std::string_view::npos) {
        size_t end = pos + needle.size();
        bool left_ok = !left_is_word || pos == 0 || !is_word_codepoint(cp_ending_at(text, pos));
        bool right_ok = !right_is_word || end == text.size() || !is_word_codepoint(cp_at(text, end));
        if (left_ok && right_ok) return pos;
        ++pos;
    }
    return std::string_view::npos;
}

// ---------------------------------------------------------------------------
// Triplet assembly
// ---------------------------------------------------------------------------

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::sidecar_missing: return "sidecar_missing";
        case DropReason::no_entity: return "no_entity";
        case DropReason::no_entity_in_evidence: return "no_entity_in_evidence";
        case DropReason::weak_context: return "weak_context";
        case DropReason::answer_not_in_block: return "answer_not_in_block";
    }
    return "unknown";
}

uint64_t TripletStats::total_drops() const {
    uint64_t total = 0;
    for (const auto& [reason, count] : drops) total += count;
    return total;
}

std::optional<QACTriplet> build_triplet(const StatementRef& ref, const Evidence& evidence,
                                        const EntityTagger& tagger, const ReformationTable& table,
                                        const TripletOptions& options, DropReason* reason) {
    auto fail = [&](DropReason r) -> std::optional<QACTriplet> {
        if (reason) *reason = r;
        return std::nullopt;
    };

    std::string sid = statement_id(ref);
    auto tagged = tagger.tag(sid, ref.statement);
    if (!tagged) return fail(DropReason::sidecar_missing);
    if (tagged->empty()) return fail(DropReason::no_entity);

    auto candidates = filter_in_evidence(*tagged, evidence);
    if (candidates.empty()) return fail(DropReason::no_entity_in_evidence);

    uint64_t seed = pair_seed(options.master_seed, sid, ref.url);
    Rng rng(seed);
    const EntityMention& answer = sample_answer(candidates, rng);
    std::string question = reform_question(ref.statement, answer, table, rng);

    auto blocks = chunk_multi(evidence.text, options.chunk_configs, ref.url);
    if (blocks.empty()) return fail(DropReason::weak_context);
    auto sel = select_context(question, blocks, options.scorer);
    if (sel.weak) return fail(DropReason::weak_context);
    const TextBlock& block = blocks[sel.index];

    size_t at = find_token_boundary_ci(block.text, answer.surface);
    if (at == std::string_view::npos) return fail(DropReason::answer_not_in_block);

    QACTriplet triplet;
    triplet.question = std::move(question);
    triplet.answer = block.text.substr(at, answer.surface.size());
    triplet.answer_span = {at, at + answer.surface.size()};
    triplet.context = block.text;
    triplet.meta = {ref.page_id, ref.title, ref.url, answer.etype, block.config, seed};
    return triplet;
}

std::vector<QACTriplet> build_triplets(
    const std::vector<std::pair<StatementRef, Evidence>>& pairs, const EntityTagger& tagger,
    const ReformationTable& table, const TripletOptions& options, TripletStats& stats,
    size_t threads) {
    std::vector<std::optional<QACTriplet>> slots(pairs.size());
    std::vector<DropReason> reasons(pairs.size(), DropReason::sidecar_missing);
    parallel_for(pairs.size(), threads, [&](size_t i) {
        slots[i] = build_triplet(pairs[i].first, pairs[i].second, tagger, table, options,
                                 &reasons[i]);
    });
    stats.inputs += pairs.size();
    std::vector<QACTriplet> out;
    for (size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) {
            out.push_back(std::move(*slots[i]));
            ++stats.emitted;
        } else {
            ++stats.drops[std::string(to_string(reasons[i]))];
        }
    }
    return out;
}

}  // namespace citeqa
