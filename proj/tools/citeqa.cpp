// citeqa: build question-answer-context training data from the statements
// Wikipedia articles make and the external pages they cite.
//
// Usage:
//   citeqa [options] <stage>
//   citeqa --config run.cfg all
//   citeqa --dump dump.xml --mirror mirror/ --output out extract
//
// Stages run in this order under `all`:
//   extract fetch generate split index retrieve evaluate stats export
// Each stage reads the previous stage's artifacts from the output directory
// and is skipped when its own outputs already exist (use --force to redo).
//
// Every config-file key has a flag of the same name; flags win over the file.
// Exit codes: 0 success, 1 internal error, 2 bad usage or missing input.

#include <exception>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "citeqa/pipeline.hpp"

namespace {

struct Override {
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mine statement-citation pairs from a Wikipedia dump into "
                 "question-answer-context training data, with sparse and dense "
                 "retrieval plus evaluation over the result."};
    app.require_subcommand(1);

    std::string config_file;
    app.add_option("-c,--config", config_file, "key = value config file");
    bool force = false;
    app.add_flag("--force", force, "redo stages whose outputs already exist");

    std::vector<std::unique_ptr<Override>> overrides;
    auto add = [&](const char* flag, const char* key, const char* desc) {
        auto o = std::make_unique<Override>();
        o->key = key;
        o->opt = app.add_option(flag, o->value, desc);
        overrides.push_back(std::move(o));
    };

    add("--dump", "dump", "XML dump file (or directory of .wikitext files)");
    add("--mirror", "mirror", "offline mirror directory; unset fetches over the network");
    add("--cache", "cache", "evidence cache directory");
    add("-o,--output", "output", "artifact directory (default: out)");
    add("--table", "table", "question phrase table file");
    add("--abbreviations", "abbreviations", "sentence-split abbreviation list");
    add("--gazetteers", "gazetteers", "gazetteer directory for the rule tagger");
    add("--tagger", "tagger", "entity tagger: rule or sidecar");
    add("--sidecar", "sidecar", "mention sidecar JSONL (tagger=sidecar)");
    add("--corpus", "corpus", "passage TSV for index/evaluate/export (default: contexts.tsv)");
    add("--questions", "questions", "question JSONL for retrieve (default: dev split)");
    add("--dense-vectors", "dense_vectors", "passage vector file for dense retrieval");
    add("--dense-questions", "dense_questions", "question vector file for dense retrieval");
    add("--seed", "seed", "master random seed (default: 0)");
    add("-j,--threads", "threads", "worker thread count (default: 1)");
    add("--dev-size", "dev_size", "dev split size (default: 0)");
    add("--chunks", "chunks", "context block configs, e.g. 128:64,256:128,512:256");
    add("--k1", "k1", "BM25 k1 (default: 1.2)");
    add("--b", "b", "BM25 b (default: 0.75)");
    add("--top-k", "top_k", "retrieval depth (default: 100)");
    add("--eval-ks", "eval_ks", "accuracy cutoffs, e.g. 20,100");
    add("--negatives", "negatives", "hard negatives per exported question (default: 2)");
    add("--timeout-s", "timeout_s", "per-request timeout in seconds");
    add("--max-retries", "max_retries", "fetch retries after the first attempt");
    add("--per-host-delay-s", "per_host_delay_s", "minimum delay between hits to one host");
    add("--max-body-bytes", "max_body_bytes", "response size cap");

    for (citeqa::Stage stage : citeqa::all_stages()) {
        std::string name(citeqa::to_string(stage));
        app.add_subcommand(name, "run the " + name + " stage")->fallthrough();
    }
    app.add_subcommand("all", "run every stage in order")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        citeqa::PipelineConfig config;
        if (!config_file.empty()) config = citeqa::load_config_file(config_file);
        for (const auto& o : overrides)
            if (o->opt->count() > 0) citeqa::set_config_value(config, o->key, o->value);
        if (force) config.force = true;
        citeqa::validate_config(config);

        std::string command = app.get_subcommands().front()->get_name();
        citeqa::PipelineLock lock(config.output);
        if (command == "all") {
            citeqa::run_all(config);
        } else {
            auto stage = citeqa::stage_from(command);
            if (!stage) throw citeqa::usage_error("unknown stage: " + command);
            citeqa::run_stage(*stage, config);
        }
        return 0;
    } catch (const citeqa::usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
