#pragma once

// Entity mention tagging over statements: a sidecar reader for precomputed
// annotations and a rule-based fallback for numeric/temporal types plus
// gazetteer lookups.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace citeqa {

enum class EntityType {
    CARDINAL,
    DATE,
    EVENT,
    FAC,
    GPE,
    LANGUAGE,
    LAW,
    LOC,
    MONEY,
    NORP,
    ORDINAL,
    ORG,
    PERCENT,
    PERSON,
    PRODUCT,
    QUANTITY,
    TIME,
    WORK_OF_ART,
};

inline constexpr size_t kEntityTypeCount = 18;

// All types in declaration order.
const std::array<EntityType, kEntityTypeCount>& all_entity_types();

std::string_view to_string(EntityType t);
std::optional<EntityType> entity_type_from(std::string_view name);

struct EntityMention {
    std::string surface;                  // equals the statement substring at span
    EntityType etype = EntityType::CARDINAL;
    std::pair<size_t, size_t> span{0, 0};  // byte range in the statement
};

class tagger_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Produces non-overlapping mentions for a statement. A nullopt result means
// no annotation source covers the statement (as opposed to an empty list,
// which means the statement was examined and holds no entities).
class EntityTagger {
public:
    virtual ~EntityTagger() = default;
    virtual std::optional<std::vector<EntityMention>> tag(const std::string& statement_id,
                                                          std::string_view statement) const = 0;
};

// Reads precomputed annotations from a line-delimited JSON file. Each line:
//   {"id": "<statement id>", "mentions":
//     [{"surface": "...", "type": "DATE", "begin": 0, "end": 4}, ...]}
// Mentions whose surface does not equal the statement substring at
// [begin, end), or which overlap an earlier mention, are ignored.
// Statements absent from the file yield nullopt.
class SidecarTagger : public EntityTagger {
public:
    explicit SidecarTagger(const std::filesystem::path& path);  // throws tagger_error

    std::optional<std::vector<EntityMention>> tag(const std::string& statement_id,
                                                  std::string_view statement) const override;

    size_t size() const { return annotations_.size(); }

private:
    struct RawMention {
        std::string surface;
        EntityType etype;
        size_t begin, end;
    };
    std::unordered_map<std::string, std::vector<RawMention>> annotations_;
};

// Pattern rules for CARDINAL, DATE, TIME, MONEY, PERCENT, ORDINAL and
// QUANTITY, plus case-sensitive-initial gazetteer lookup for GPE, PERSON,
// ORG and LANGUAGE. Deterministic; never returns nullopt.
class RuleTagger : public EntityTagger {
public:
    RuleTagger() = default;

    // One entry per line; '#' starts a comment. Multi-word entries allowed.
    void load_gazetteer(EntityType type, const std::filesystem::path& path);  // throws tagger_error
    void add_gazetteer(EntityType type, const std::vector<std::string>& entries);

    std::optional<std::vector<EntityMention>> tag(const std::string& statement_id,
                                                  std::string_view statement) const override;

private:
    struct GazetteerEntry {
        std::vector<std::string> words;  // lowercased
        EntityType etype;
    };
    // first lowercased word -> entries starting with it
    std::unordered_map<std::string, std::vector<GazetteerEntry>> gazetteer_;
};

// RuleTagger preloaded with the gazetteer files shipped under
// <data_dir>/gazetteers (gpe.txt, person.txt, org.txt, language.txt).
RuleTagger make_default_rule_tagger(const std::filesystem::path& data_dir);

}  // namespace citeqa
