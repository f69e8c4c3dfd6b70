#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citeqa/bm25.hpp"
#include "citeqa/chunking.hpp"
#include "citeqa/fetcher.hpp"
#include "citeqa/question.hpp"

namespace citeqa {

// Thrown for bad invocations: unknown config keys, invalid values, and
// missing input artifacts.  The CLI maps this to exit code 2.
class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Everything a pipeline run needs, loadable from a key=value config file and
// overridable per key from the command line.  Paths left empty fall back to
// the defaults documented next to each field.
struct PipelineConfig {
    std::filesystem::path dump;           // XML dump file (input to extract)
    std::filesystem::path mirror;         // offline mirror dir; empty = fetch over the network
    std::filesystem::path cache;          // evidence cache dir; empty = no cache
    std::filesystem::path output = "out"; // artifact directory
    std::filesystem::path table;          // question phrase table; empty = builtin
    std::filesystem::path abbreviations;  // sentence-split abbreviation list; empty = builtin
    std::filesystem::path gazetteers;     // gazetteer dir for the rule tagger; empty = none
    std::string tagger = "rule";          // "rule" or "sidecar"
    std::filesystem::path sidecar;        // mention sidecar (required when tagger=sidecar)
    std::filesystem::path corpus;         // passage TSV for index/evaluate; empty = output/contexts.tsv
    std::filesystem::path questions;      // question JSONL for retrieve; empty = dev/triplet fallback
    std::filesystem::path dense_vectors;  // passage vectors; set together with dense_questions
    std::filesystem::path dense_questions;

    uint64_t seed = 0;
    size_t threads = 1;
    size_t dev_size = 0;
    std::vector<ChunkConfig> chunk_configs = default_chunk_configs();
    Bm25Params bm25;
    size_t top_k = 100;                   // depth of retrieval lists
    std::vector<size_t> eval_ks = {20, 100};
    size_t negatives = 2;                 // hard negatives per exported question
    FetchPolicy fetch;                    // offline_mirror is filled from `mirror`
    bool force = false;                   // redo stages whose outputs already exist
};

// Parses one `key = value` assignment into `config`.  Unknown keys and
// unparseable values raise usage_error.  Shared by the config-file loader and
// the command-line override path so both accept exactly the same syntax.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

// Loads a config file: one `key = value` per line, '#' starts a comment,
// blank lines ignored.
PipelineConfig load_config_file(const std::filesystem::path& path);

// Checks cross-field invariants and that every referenced input file exists.
// Artifacts derived by earlier stages are not checked here; each stage checks
// its own inputs when it runs.
void validate_config(const PipelineConfig& config);

enum class Stage {
    Extract,
    Fetch,
    Generate,
    Split,
    Index,
    Retrieve,
    Evaluate,
    Stats,
    Export,
};

std::optional<Stage> stage_from(std::string_view name);
std::string_view to_string(Stage stage);

// All stages in dependency order, as run by `all`.
const std::vector<Stage>& all_stages();

// Runs one stage.  Returns false when the stage's outputs already exist and
// config.force is unset (nothing done), true when work was performed.
// Missing inputs raise usage_error naming the artifact.
bool run_stage(Stage stage, const PipelineConfig& config);

// Runs every stage in order.
void run_all(const PipelineConfig& config);

// Holds an exclusive lock file inside the output directory so concurrent
// runs cannot interleave artifact writes.  Creating the guard creates the
// directory if needed; the lock file is removed on destruction.
class PipelineLock {
public:
    explicit PipelineLock(const std::filesystem::path& output_dir);
    ~PipelineLock();
    PipelineLock(const PipelineLock&) = delete;
    PipelineLock& operator=(const PipelineLock&) = delete;

private:
    std::filesystem::path path_;
    bool owned_ = false;
};

// ---- artifact serialization -------------------------------------------------
// Line formats are stable: serialization is deterministic so reruns with the
// same inputs and seed produce byte-identical files.

void write_statements_jsonl(const std::vector<StatementRef>& refs,
                            const std::filesystem::path& path);
std::vector<StatementRef> read_statements_jsonl(const std::filesystem::path& path);

void write_pairs_jsonl(const std::vector<std::pair<StatementRef, Evidence>>& pairs,
                       const std::filesystem::path& path);
std::vector<std::pair<StatementRef, Evidence>> read_pairs_jsonl(const std::filesystem::path& path);

void write_triplets_jsonl(const std::vector<QACTriplet>& triplets,
                          const std::filesystem::path& path);
std::vector<QACTriplet> read_triplets_jsonl(const std::filesystem::path& path);

// The retrieval corpus convention: one passage per row, `id \t text \t title`.
struct ContextCatalog {
    struct Row {
        std::string id;
        std::string text;
        std::string title;
    };

    std::vector<Row> rows;
    std::unordered_map<std::string, size_t> by_id;

    void add(std::string id, std::string text, std::string title);
    const Row* find(std::string_view id) const;

    static ContextCatalog load_tsv(const std::filesystem::path& path);
    void save_tsv(const std::filesystem::path& path) const;
};

// Context passage ids are "<h12>:<k>" where h12 is the first 12 hex digits of
// url_hash(evidence url) and k counts distinct context blocks of that
// document in order of first appearance.  The prefix lets later stages tell
// whether a passage came from the same evidence document as a triplet.
std::string context_id_prefix(std::string_view url);

// Builds the deduplicated context catalog for a triplet stream: one row per
// distinct (evidence url, block text), titled after the citing page.
ContextCatalog build_context_catalog(const std::vector<QACTriplet>& triplets);

// ---- split ------------------------------------------------------------------

// Samples exactly dev_size lines uniformly without replacement (seeded,
// deterministic) into dev_path; the complement goes to train_path.  Both
// outputs preserve the input line order.  dev_size > line count raises
// usage_error.
void split_train_dev(const std::filesystem::path& triplets_path, size_t dev_size, uint64_t seed,
                     const std::filesystem::path& train_path,
                     const std::filesystem::path& dev_path);

// ---- trainer export ---------------------------------------------------------

// One trainer record per triplet surviving exact-duplicate removal:
//   {question, answers:[answer], positive_ctxs:[...], hard_negative_ctxs:[...]}
// Positives are the triplet's own context block.  Hard negatives are the
// top-scoring index passages that come from a different evidence document and
// do not contain the answer on token boundaries, at most negatives_per_q of
// them (fewer when fewer qualify).
void export_trainer_json(const std::vector<QACTriplet>& triplets, const PassageIndex& index,
                         const ContextCatalog& contexts, size_t negatives_per_q,
                         const std::filesystem::path& out_path, size_t threads = 1);

}  // namespace citeqa
