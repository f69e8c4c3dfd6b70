#pragma once

// Pseudo question generation: sample an entity found in both the statement
// and its evidence, swap it for an interrogative phrase, pick the best
// evidence block as context, and emit the question/answer/context triplet.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "citeqa/chunking.hpp"
#include "citeqa/fetcher.hpp"
#include "citeqa/tagger.hpp"
#include "citeqa/wikitext.hpp"

namespace citeqa {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Entity type -> candidate interrogative phrases. Every type maps to a
// non-empty list; construction fails otherwise.
class ReformationTable {
public:
    // The shipped defaults (same content as data/question_phrases.txt).
    static ReformationTable builtin();

    // Data file, one "TYPE: phrase, phrase, ..." entry per line; '#' starts
    // a comment. All 18 types must be covered. Throws config_error.
    static ReformationTable load(const std::filesystem::path& path);

    const std::vector<std::string>& phrases(EntityType t) const;

private:
    ReformationTable() = default;
    void validate() const;  // throws config_error

    std::array<std::vector<std::string>, kEntityTypeCount> phrases_;
};

// Deterministic RNG used everywhere randomness is needed: fixed engine,
// rejection-sampled bounded draws, so streams are stable across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Uniform draw from [0, n); n must be positive.
    size_t uniform_index(size_t n);

private:
    std::mt19937_64 engine_;
};

// Seed for one (statement, evidence) pair, mixed from the master seed and
// the pair identity so results never depend on processing order.
uint64_t pair_seed(uint64_t master_seed, std::string_view statement_id, std::string_view url);

// "<page_id>:<position>" — the identity used in sidecar files and seeds.
std::string statement_id(const StatementRef& ref);

// Mentions whose surface occurs in the evidence text, case-insensitively.
std::vector<EntityMention> filter_in_evidence(const std::vector<EntityMention>& mentions,
                                              const Evidence& evidence);

// Uniform pick. Throws std::invalid_argument on an empty list.
const EntityMention& sample_answer(const std::vector<EntityMention>& mentions, Rng& rng);

// Replaces the answer span with a phrase drawn from table[etype]; the rest
// of the statement is untouched. The phrase is capitalized when it starts a
// sentence. No question mark is appended.
std::string reform_question(std::string_view statement, const EntityMention& answer,
                            const ReformationTable& table, Rng& rng);

// First occurrence of needle in text at word boundaries, case-insensitive;
// npos when absent. A boundary requires the neighbouring code point to be a
// non-word character whenever the needle edge is a word character.
size_t find_token_boundary_ci(std::string_view text, std::string_view needle, size_t from = 0);

enum class DropReason {
    sidecar_missing,        // tagger has no annotations for the statement
    no_entity,              // statement holds no entity mentions
    no_entity_in_evidence,  // no mention survives the evidence filter
    weak_context,           // no block shares a term with the question
    answer_not_in_block,    // selected block lacks the answer surface
};

std::string_view to_string(DropReason r);

struct TripletMeta {
    std::string page_id;
    std::string title;  // title of the citing page
    std::string url;
    EntityType etype = EntityType::CARDINAL;
    ChunkConfig chunk;
    uint64_t seed = 0;
};

struct QACTriplet {
    std::string question;
    std::string answer;  // casing as it appears in the context block
    std::pair<size_t, size_t> answer_span{0, 0};  // byte range in context
    std::string context;
    TripletMeta meta;
};

struct TripletStats {
    uint64_t inputs = 0;
    uint64_t emitted = 0;
    std::map<std::string, uint64_t> drops;  // keyed by DropReason name

    uint64_t total_drops() const;
};

struct TripletOptions {
    std::vector<ChunkConfig> chunk_configs = default_chunk_configs();
    Bm25Params scorer;
    uint64_t master_seed = 0;
};

// One pair -> at most one triplet. On a skip, `reason` (when given) is set.
std::optional<QACTriplet> build_triplet(const StatementRef& ref, const Evidence& evidence,
                                        const EntityTagger& tagger, const ReformationTable& table,
                                        const TripletOptions& options,
                                        DropReason* reason = nullptr);

// All pairs, parallelized; output order and content are independent of the
// thread count, and stats partition the inputs.
std::vector<QACTriplet> build_triplets(
    const std::vector<std::pair<StatementRef, Evidence>>& pairs, const EntityTagger& tagger,
    const ReformationTable& table, const TripletOptions& options, TripletStats& stats,
    size_t threads = 1);

}  // namespace citeqa
