#include "citeqa/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <unordered_set>

#include <json.hpp>

#include "citeqa/dense.hpp"
#include "citeqa/evalkit.hpp"
#include "citeqa/parallel.hpp"
#include "citeqa/tagger.hpp"
#include "citeqa/text.hpp"
#include "citeqa/wikitext.hpp"

namespace citeqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- config parsing ---------------------------------------------------------

uint64_t parse_u64(std::string_view key, std::string_view value) {
    uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw usage_error("bad value for " + std::string(key) + ": " + std::string(value));
    return out;
}

double parse_f64(std::string_view key, std::string_view value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw usage_error("bad value for " + std::string(key) + ": " + std::string(value));
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw usage_error("bad value for " + std::string(key) + ": " + std::string(value));
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= value.size()) {
        size_t comma = value.find(',', start);
        if (comma == std::string_view::npos) comma = value.size();
        auto piece = trim(value.substr(start, comma - start));
        if (!piece.empty()) parts.emplace_back(piece);
        start = comma + 1;
    }
    return parts;
}

std::vector<ChunkConfig> parse_chunks(std::string_view key, std::string_view value) {
    std::vector<ChunkConfig> configs;
    for (const auto& part : split_list(value)) {
        size_t colon = part.find(':');
        if (colon == std::string::npos)
            throw usage_error("bad value for " + std::string(key) + ": expected n:m pairs, got " +
                              part);
        ChunkConfig config;
        config.n = parse_u64(key, trim(std::string_view(part).substr(0, colon)));
        config.m = parse_u64(key, trim(std::string_view(part).substr(colon + 1)));
        if (config.n == 0 || config.m == 0)
            throw usage_error("chunk sizes must be positive: " + part);
        configs.push_back(config);
    }
    if (configs.empty()) throw usage_error("empty value for " + std::string(key));
    return configs;
}

std::vector<size_t> parse_ks(std::string_view key, std::string_view value) {
    std::vector<size_t> ks;
    for (const auto& part : split_list(value)) {
        size_t k = parse_u64(key, part);
        if (k == 0) throw usage_error("cutoffs must be positive: " + std::string(value));
        ks.push_back(k);
    }
    if (ks.empty()) throw usage_error("empty value for " + std::string(key));
    return ks;
}

// ---- artifact locations -----------------------------------------------------

struct Paths {
    fs::path statements, extract_report, passages;
    fs::path pairs, funnel_report;
    fs::path triplets, contexts, generate_report;
    fs::path train, dev;
    fs::path index;
    fs::path retrieved;
    fs::path eval_json, eval_text;
    fs::path stats_json, stats_text;
    fs::path exported;
};

Paths artifact_paths(const PipelineConfig& config) {
    const fs::path& out = config.output;
    Paths p;
    p.statements = out / "statements.jsonl";
    p.extract_report = out / "extract_report.json";
    p.passages = out / "passages.tsv";
    p.pairs = out / "pairs.jsonl";
    p.funnel_report = out / "funnel_report.json";
    p.triplets = out / "triplets.jsonl";
    p.contexts = out / "contexts.tsv";
    p.generate_report = out / "generate_report.json";
    p.train = out / "train.jsonl";
    p.dev = out / "dev.jsonl";
    p.index = out / "index.bin";
    p.retrieved = out / "retrieved.jsonl";
    p.eval_json = out / "eval_report.json";
    p.eval_text = out / "eval_report.txt";
    p.stats_json = out / "stats.json";
    p.stats_text = out / "stats.txt";
    p.exported = out / "export.json";
    return p;
}

fs::path corpus_path(const PipelineConfig& config) {
    return config.corpus.empty() ? artifact_paths(config).contexts : config.corpus;
}

bool exists_all(std::initializer_list<fs::path> paths) {
    for (const auto& p : paths)
        if (!fs::exists(p)) return false;
    return true;
}

void note(Stage stage, const std::string& msg) {
    std::cout << "[" << to_string(stage) << "] " << msg << "\n";
}

bool skip_if_done(Stage stage, const PipelineConfig& config,
                  std::initializer_list<fs::path> outputs) {
    if (!config.force && exists_all(outputs)) {
        note(stage, "outputs up to date; skipping (--force to redo)");
        return true;
    }
    return false;
}

// Missing stage input: exit-code-2 territory, message names the artifact.
void require_input(Stage stage, const fs::path& path, std::string_view what,
                   std::string_view hint) {
    if (!path.empty() && fs::exists(path)) return;
    std::string msg = std::string(to_string(stage)) + ": missing " + std::string(what) + ": " +
                      (path.empty() ? std::string("(not set)") : path.string());
    if (!hint.empty()) msg += " (" + std::string(hint) + ")";
    throw usage_error(msg);
}

// Writes to "<path>.tmp", then renames into place on commit() so interrupted
// runs never leave a plausible-looking partial artifact behind.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path path)
        : final_(std::move(path)), tmp_(final_.string() + ".tmp"), out_(tmp_, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + tmp_.string());
    }

    ~ArtifactWriter() {
        if (out_.is_open()) {
            out_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }

    std::ostream& stream() { return out_; }

    void commit() {
        out_.flush();
        if (!out_) throw std::runtime_error("write failed: " + tmp_.string());
        out_.close();
        fs::rename(tmp_, final_);
    }

private:
    fs::path final_;
    fs::path tmp_;
    std::ofstream out_;
};

void write_text_file(const fs::path& path, std::string_view content) {
    ArtifactWriter writer(path);
    writer.stream() << content;
    if (!content.empty() && content.back() != '\n') writer.stream() << '\n';
    writer.commit();
}

// ---- JSON helpers -------------------------------------------------------

template <class Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot open " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw usage_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

json ref_to_json(const StatementRef& ref) {
    return json{{"page_id", ref.page_id},
                {"position", ref.position},
                {"statement", ref.statement},
                {"title", ref.title},
                {"url", ref.url}};
}

StatementRef ref_from_json(const json& j) {
    StatementRef ref;
    ref.page_id = j.at("page_id").get<std::string>();
    ref.position = j.at("position").get<size_t>();
    ref.statement = j.at("statement").get<std::string>();
    ref.title = j.at("title").get<std::string>();
    ref.url = j.at("url").get<std::string>();
    return ref;
}

json evidence_to_json(const Evidence& evidence) {
    return json{{"content_type", evidence.content_type},
                {"fetched_at", evidence.fetched_at},
                {"text", evidence.text},
                {"url", evidence.url}};
}

Evidence evidence_from_json(const json& j) {
    Evidence evidence;
    evidence.content_type = j.at("content_type").get<std::string>();
    evidence.fetched_at = j.at("fetched_at").get<int64_t>();
    evidence.text = j.at("text").get<std::string>();
    evidence.url = j.at("url").get<std::string>();
    return evidence;
}

json triplet_to_json(const QACTriplet& t) {
    return json{{"answer", t.answer},
                {"answer_span", json::array({t.answer_span.first, t.answer_span.second})},
                {"context", t.context},
                {"meta", json{{"chunk", json{{"m", t.meta.chunk.m}, {"n", t.meta.chunk.n}}},
                              {"etype", std::string(to_string(t.meta.etype))},
                              {"page_id", t.meta.page_id},
                              {"seed", t.meta.seed},
                              {"title", t.meta.title},
                              {"url", t.meta.url}}},
                {"question", t.question}};
}

QACTriplet triplet_from_json(const json& j) {
    QACTriplet t;
    t.question = j.at("question").get<std::string>();
    t.answer = j.at("answer").get<std::string>();
    const auto& span = j.at("answer_span");
    t.answer_span = {span.at(0).get<size_t>(), span.at(1).get<size_t>()};
    t.context = j.at("context").get<std::string>();
    const auto& meta = j.at("meta");
    t.meta.page_id = meta.at("page_id").get<std::string>();
    t.meta.title = meta.at("title").get<std::string>();
    t.meta.url = meta.at("url").get<std::string>();
    auto etype = entity_type_from(meta.at("etype").get<std::string>());
    if (!etype) throw usage_error("unknown entity type: " + meta.at("etype").get<std::string>());
    t.meta.etype = *etype;
    t.meta.chunk.n = meta.at("chunk").at("n").get<size_t>();
    t.meta.chunk.m = meta.at("chunk").at("m").get<size_t>();
    t.meta.seed = meta.at("seed").get<uint64_t>();
    return t;
}

TripletStats triplet_stats_from_json(const json& j) {
    TripletStats stats;
    stats.inputs = j.at("inputs").get<uint64_t>();
    stats.emitted = j.at("emitted").get<uint64_t>();
    for (const auto& [key, value] : j.at("drops").items())
        stats.drops[key] = value.get<uint64_t>();
    return stats;
}

json triplet_stats_to_json(const TripletStats& stats) {
    json drops = json::object();
    for (const auto& [key, value] : stats.drops) drops[key] = value;
    return json{{"drops", drops}, {"emitted", stats.emitted}, {"inputs", stats.inputs}};
}

// ---- TSV helpers --------------------------------------------------------

std::string tsv_field(std::string_view s) {
    std::string out(s);
    for (char& ch : out)
        if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    return out;
}

template <class Fn>
void tsv_for_each(const fs::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot open " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t first = line.find('\t');
        size_t last = line.rfind('\t');
        if (first == std::string::npos || last == first)
            throw usage_error(path.string() + ":" + std::to_string(lineno) +
                              ": expected id<TAB>text<TAB>title");
        fn(line.substr(0, first), line.substr(first + 1, last - first - 1),
           line.substr(last + 1));
    }
}

// ---- question rows (retrieve input) --------------------------------------

struct QuestionRow {
    std::string question;
    std::vector<std::string> answers;
};

std::vector<QuestionRow> read_questions_jsonl(const fs::path& path) {
    std::vector<QuestionRow> rows;
    for_each_json_line(path, [&](const json& j) {
        QuestionRow row;
        row.question = j.at("question").get<std::string>();
        if (j.contains("answers"))
            for (const auto& a : j.at("answers")) row.answers.push_back(a.get<std::string>());
        else if (j.contains("answer"))
            row.answers.push_back(j.at("answer").get<std::string>());
        rows.push_back(std::move(row));
    });
    return rows;
}

// ---- stage implementations ------------------------------------------------

bool run_extract(const PipelineConfig& config) {
    const Stage stage = Stage::Extract;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.statements, p.extract_report, p.passages})) return false;
    require_input(stage, config.dump, "dump", "set `dump` in the config or pass --dump");

    DumpReader reader(config.dump);
    std::vector<RawPage> raw;
    while (auto page = reader.next()) raw.push_back(std::move(*page));

    std::unordered_set<std::string> abbreviations;
    const std::unordered_set<std::string>* abbrev_ptr = nullptr;
    if (!config.abbreviations.empty()) {
        abbreviations = load_abbreviations(config.abbreviations);
        abbrev_ptr = &abbreviations;
    }

    std::vector<PageDoc> docs(raw.size());
    parallel_for(raw.size(), config.threads,
                 [&](size_t i) { docs[i] = parse_page(raw[i], abbrev_ptr); });

    std::vector<StatementRef> refs;
    uint64_t unanchored = 0;
    size_t passage_count = 0;
    {
        ArtifactWriter passages(p.passages);
        for (const auto& doc : docs) {
            auto page_refs = extract_statement_refs(doc);
            refs.insert(refs.end(), std::make_move_iterator(page_refs.begin()),
                        std::make_move_iterator(page_refs.end()));
            unanchored += doc.unanchored_refs;
            for (const auto& unit : split_100w(doc.page_id, doc.title, doc.body)) {
                passages.stream() << tsv_field(unit.id) << '\t' << tsv_field(unit.text) << '\t'
                                  << tsv_field(unit.title) << '\n';
                ++passage_count;
            }
        }
        passages.commit();
    }

    write_statements_jsonl(refs, p.statements);

    const ParseDiagnostics& diag = reader.diagnostics();
    json report{{"articles", diag.articles},
                {"malformed_skipped", diag.malformed_skipped},
                {"non_articles_skipped", diag.non_articles_skipped},
                {"pages_seen", diag.pages_seen},
                {"passages", passage_count},
                {"redirects_skipped", diag.redirects_skipped},
                {"statements", refs.size()},
                {"unanchored_refs", unanchored}};
    write_text_file(p.extract_report, report.dump(2));

    note(stage, "wrote " + std::to_string(refs.size()) + " statements from " +
                    std::to_string(diag.articles) + " articles");
    return true;
}

bool run_fetch(const PipelineConfig& config) {
    const Stage stage = Stage::Fetch;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.pairs, p.funnel_report})) return false;
    require_input(stage, p.statements, "statement file", "run `extract` first");

    auto refs = read_statements_jsonl(p.statements);

    FetchPolicy policy = config.fetch;
    policy.offline_mirror = config.mirror;
    Fetcher fetcher(policy);

    std::unique_ptr<EvidenceCache> cache;
    if (!config.cache.empty()) {
        fs::create_directories(config.cache);
        cache = std::make_unique<EvidenceCache>(config.cache);
    }

    FunnelReport report;
    auto pairs = filter_reachable(refs, fetcher, report, cache.get(), config.threads);
    write_pairs_jsonl(pairs, p.pairs);

    json drops = json::object();
    for (const auto& [reason, count] : report.drops) drops[reason] = count;
    json funnel{{"drops", drops}, {"input", report.input}, {"output", report.output}};
    write_text_file(p.funnel_report, funnel.dump(2));

    note(stage, std::to_string(report.output) + " of " + std::to_string(report.input) +
                    " statements kept");
    return true;
}

bool run_generate(const PipelineConfig& config) {
    const Stage stage = Stage::Generate;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.triplets, p.contexts, p.generate_report})) return false;
    require_input(stage, p.pairs, "statement-evidence file", "run `fetch` first");

    auto pairs = read_pairs_jsonl(p.pairs);

    std::unique_ptr<EntityTagger> tagger;
    if (config.tagger == "sidecar") {
        require_input(stage, config.sidecar, "mention sidecar",
                      "set `sidecar` when tagger=sidecar");
        tagger = std::make_unique<SidecarTagger>(config.sidecar);
    } else {
        auto rules = std::make_unique<RuleTagger>();
        if (!config.gazetteers.empty()) {
            static constexpr std::pair<EntityType, const char*> kFiles[] = {
                {EntityType::GPE, "gpe.txt"},
                {EntityType::PERSON, "person.txt"},
                {EntityType::ORG, "org.txt"},
                {EntityType::LANGUAGE, "language.txt"},
            };
            size_t loaded = 0;
            for (const auto& [etype, name] : kFiles) {
                fs::path file = config.gazetteers / name;
                if (fs::exists(file)) {
                    rules->load_gazetteer(etype, file);
                    ++loaded;
                }
            }
            if (loaded == 0)
                throw usage_error("generate: no gazetteer files found in " +
                                  config.gazetteers.string());
        }
        tagger = std::move(rules);
    }

    ReformationTable table =
        config.table.empty() ? ReformationTable::builtin() : ReformationTable::load(config.table);

    TripletOptions options;
    options.chunk_configs = config.chunk_configs;
    options.scorer = config.bm25;
    options.master_seed = config.seed;

    TripletStats stats;
    auto triplets = build_triplets(pairs, *tagger, table, options, stats, config.threads);

    write_triplets_jsonl(triplets, p.triplets);
    build_context_catalog(triplets).save_tsv(p.contexts);
    write_text_file(p.generate_report, triplet_stats_to_json(stats).dump(2));

    note(stage, std::to_string(stats.emitted) + " triplets from " + std::to_string(stats.inputs) +
                    " statement-evidence pairs");
    return true;
}

bool run_split(const PipelineConfig& config) {
    const Stage stage = Stage::Split;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.train, p.dev})) return false;
    require_input(stage, p.triplets, "triplet file", "run `generate` first");

    split_train_dev(p.triplets, config.dev_size, config.seed, p.train, p.dev);
    note(stage, "dev size " + std::to_string(config.dev_size));
    return true;
}

bool run_index(const PipelineConfig& config) {
    const Stage stage = Stage::Index;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.index})) return false;
    fs::path corpus = corpus_path(config);
    require_input(stage, corpus, "passage corpus", "run `generate` first or pass --corpus");

    IndexBuilder builder(config.bm25, {}, 256ull << 20, config.output / "index_spill");
    size_t count = 0;
    tsv_for_each(corpus, [&](std::string id, std::string text, std::string) {
        builder.add(id, text);
        ++count;
    });
    PassageIndex index = builder.finish();

    fs::path tmp = p.index.string() + ".tmp";
    index.save(tmp);
    fs::rename(tmp, p.index);

    note(stage, "indexed " + std::to_string(count) + " passages");
    return true;
}

// The question list for retrieval: an explicit override, else the dev split
// when it has content, else every generated triplet.
fs::path questions_path(const PipelineConfig& config, const Paths& p) {
    if (!config.questions.empty()) return config.questions;
    std::error_code ec;
    if (fs::exists(p.dev) && fs::file_size(p.dev, ec) > 0 && !ec) return p.dev;
    return p.triplets;
}

bool run_retrieve(const PipelineConfig& config) {
    const Stage stage = Stage::Retrieve;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.retrieved})) return false;

    fs::path questions_file = questions_path(config, p);
    require_input(stage, questions_file, "question file", "run `generate` first or pass --questions");
    auto questions = read_questions_jsonl(questions_file);
    if (questions.empty()) throw usage_error("retrieve: no questions in " + questions_file.string());

    bool dense = !config.dense_vectors.empty() || !config.dense_questions.empty();
    std::vector<RankedList> ranked(questions.size());

    if (dense) {
        require_input(stage, config.dense_vectors, "passage vector file", "pass --dense-vectors");
        require_input(stage, config.dense_questions, "question vector file",
                      "pass --dense-questions");
        VectorStore store = VectorStore::load(config.dense_vectors);
        VectorStore qvecs = VectorStore::load(config.dense_questions);
        if (qvecs.size() != questions.size())
            throw usage_error("retrieve: question vector count " + std::to_string(qvecs.size()) +
                              " does not match question count " +
                              std::to_string(questions.size()));
        size_t partitions = std::max<size_t>(config.threads, 1);
        for (size_t i = 0; i < questions.size(); ++i) {
            std::vector<float> query(qvecs.row(i), qvecs.row(i) + qvecs.dim());
            ranked[i] = top_k_dense(query, store, config.top_k, partitions);
        }
    } else {
        require_input(stage, p.index, "index file", "run `index` first");
        PassageIndex index = PassageIndex::load(p.index);
        parallel_for(questions.size(), config.threads,
                     [&](size_t i) { ranked[i] = index.top_k(questions[i].question, config.top_k); });
    }

    ArtifactWriter out(p.retrieved);
    for (size_t i = 0; i < questions.size(); ++i) {
        json hits = json::array();
        for (const auto& hit : ranked[i]) hits.push_back(json{{"id", hit.id}, {"score", hit.score}});
        json row{{"answers", questions[i].answers},
                 {"question", questions[i].question},
                 {"retrieved", hits}};
        out.stream() << row.dump() << '\n';
    }
    out.commit();

    note(stage, "retrieved top-" + std::to_string(config.top_k) + " for " +
                    std::to_string(questions.size()) + " questions");
    return true;
}

bool run_evaluate(const PipelineConfig& config) {
    const Stage stage = Stage::Evaluate;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.eval_json, p.eval_text})) return false;
    require_input(stage, p.retrieved, "retrieval results", "run `retrieve` first");
    fs::path corpus = corpus_path(config);
    require_input(stage, corpus, "passage corpus", "run `generate` first or pass --corpus");

    ContextCatalog catalog = ContextCatalog::load_tsv(corpus);

    std::vector<EvalCase> cases;
    for_each_json_line(p.retrieved, [&](const json& j) {
        EvalCase c;
        c.question = j.at("question").get<std::string>();
        for (const auto& a : j.at("answers")) c.gold_answers.push_back(a.get<std::string>());
        for (const auto& hit : j.at("retrieved")) {
            auto id = hit.at("id").get<std::string>();
            const auto* row = catalog.find(id);
            if (!row)
                throw usage_error("evaluate: retrieved id " + id + " not in corpus " +
                                  corpus.string());
            c.retrieved_texts.push_back(row->text);
        }
        if (j.contains("prediction")) c.prediction = j.at("prediction").get<std::string>();
        cases.push_back(std::move(c));
    });
    if (cases.empty()) throw usage_error("evaluate: no cases in " + p.retrieved.string());

    EvalReport report;
    try {
        report = topk_accuracy(cases, config.eval_ks);
    } catch (const std::invalid_argument& e) {
        throw usage_error("evaluate: " + std::string(e.what()) + " in " + p.retrieved.string());
    }

    write_text_file(p.eval_json, report_json(report));
    write_text_file(p.eval_text, report_text(report));

    std::string summary = "evaluated " + std::to_string(report.cases) + " cases:";
    for (const auto& [k, acc] : report.accuracy_at)
        summary += " top-" + std::to_string(k) + "=" + std::to_string(acc);
    note(stage, summary);
    return true;
}

bool run_stats(const PipelineConfig& config) {
    const Stage stage = Stage::Stats;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.stats_json, p.stats_text})) return false;
    require_input(stage, p.triplets, "triplet file", "run `generate` first");

    auto triplets = read_triplets_jsonl(p.triplets);

    TripletStats funnel;
    const TripletStats* funnel_ptr = nullptr;
    if (fs::exists(p.generate_report)) {
        std::ifstream in(p.generate_report, std::ios::binary);
        try {
            funnel = triplet_stats_from_json(json::parse(in));
            funnel_ptr = &funnel;
        } catch (const json::exception& e) {
            throw usage_error(p.generate_report.string() + ": " + e.what());
        }
    }

    DatasetStats stats = dataset_stats(triplets, funnel_ptr);
    write_text_file(p.stats_json, stats_json(stats));
    write_text_file(p.stats_text, stats_text(stats));

    note(stage, "summarized " + std::to_string(stats.triplets) + " triplets");
    return true;
}

bool run_export(const PipelineConfig& config) {
    const Stage stage = Stage::Export;
    Paths p = artifact_paths(config);
    if (skip_if_done(stage, config, {p.exported})) return false;
    require_input(stage, p.triplets, "triplet file", "run `generate` first");
    require_input(stage, p.index, "index file", "run `index` first");
    fs::path corpus = corpus_path(config);
    require_input(stage, corpus, "passage corpus", "run `generate` first or pass --corpus");

    auto triplets = read_triplets_jsonl(p.triplets);
    PassageIndex index = PassageIndex::load(p.index);
    ContextCatalog catalog = ContextCatalog::load_tsv(corpus);

    export_trainer_json(triplets, index, catalog, config.negatives, p.exported, config.threads);

    note(stage, "exported " + std::to_string(triplets.size()) + " triplets");
    return true;
}

}  // namespace

// ---- public config API --------------------------------------------------

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
    std::string k(trim(key));
    std::string v(trim(value));
    if (k == "dump") config.dump = v;
    else if (k == "mirror") config.mirror = v;
    else if (k == "cache") config.cache = v;
    else if (k == "output") config.output = v;
    else if (k == "table") config.table = v;
    else if (k == "abbreviations") config.abbreviations = v;
    else if (k == "gazetteers") config.gazetteers = v;
    else if (k == "tagger") config.tagger = v;
    else if (k == "sidecar") config.sidecar = v;
    else if (k == "corpus") config.corpus = v;
    else if (k == "questions") config.questions = v;
    else if (k == "dense_vectors") config.dense_vectors = v;
    else if (k == "dense_questions") config.dense_questions = v;
    else if (k == "seed") config.seed = parse_u64(k, v);
    else if (k == "threads") config.threads = parse_u64(k, v);
    else if (k == "dev_size") config.dev_size = parse_u64(k, v);
    else if (k == "chunks") config.chunk_configs = parse_chunks(k, v);
    else if (k == "k1") config.bm25.k1 = parse_f64(k, v);
    else if (k == "b") config.bm25.b = parse_f64(k, v);
    else if (k == "top_k") config.top_k = parse_u64(k, v);
    else if (k == "eval_ks") config.eval_ks = parse_ks(k, v);
    else if (k == "negatives") config.negatives = parse_u64(k, v);
    else if (k == "timeout_s") config.fetch.timeout_s = parse_u64(k, v);
    else if (k == "max_retries") config.fetch.max_retries = parse_u64(k, v);
    else if (k == "per_host_delay_s") config.fetch.per_host_delay_s = parse_f64(k, v);
    else if (k == "max_body_bytes") config.fetch.max_body_bytes = parse_u64(k, v);
    else if (k == "force") config.force = parse_bool(k, v);
    else throw usage_error("unknown config key: " + k);
}

PipelineConfig load_config_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot open config file: " + path.string());
    PipelineConfig config;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string uncommented = line.substr(0, line.find('#'));
        auto content = trim(uncommented);
        if (content.empty()) continue;
        size_t eq = content.find('=');
        if (eq == std::string_view::npos)
            throw usage_error(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        try {
            set_config_value(config, content.substr(0, eq), content.substr(eq + 1));
        } catch (const usage_error& e) {
            throw usage_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return config;
}

void validate_config(const PipelineConfig& config) {
    if (config.threads == 0) throw usage_error("threads must be at least 1");
    if (config.top_k == 0) throw usage_error("top_k must be at least 1");
    if (config.eval_ks.empty()) throw usage_error("eval_ks must not be empty");
    for (size_t k : config.eval_ks)
        if (k == 0) throw usage_error("eval_ks entries must be positive");
    if (config.chunk_configs.empty()) throw usage_error("chunks must not be empty");
    for (const auto& chunk : config.chunk_configs)
        if (chunk.n == 0 || chunk.m == 0) throw usage_error("chunk sizes must be positive");
    if (config.bm25.k1 < 0.0) throw usage_error("k1 must be non-negative");
    if (config.bm25.b < 0.0 || config.bm25.b > 1.0) throw usage_error("b must be in [0, 1]");
    if (config.tagger != "rule" && config.tagger != "sidecar")
        throw usage_error("tagger must be `rule` or `sidecar`, got: " + config.tagger);
    if (config.tagger == "sidecar" && config.sidecar.empty())
        throw usage_error("tagger=sidecar requires the `sidecar` path");
    if (config.dense_vectors.empty() != config.dense_questions.empty())
        throw usage_error("dense_vectors and dense_questions must be set together");

    const std::pair<const fs::path*, const char*> referenced[] = {
        {&config.dump, "dump"},
        {&config.mirror, "mirror"},
        {&config.table, "table"},
        {&config.abbreviations, "abbreviations"},
        {&config.gazetteers, "gazetteers"},
        {&config.sidecar, "sidecar"},
        {&config.corpus, "corpus"},
        {&config.questions, "questions"},
        {&config.dense_vectors, "dense_vectors"},
        {&config.dense_questions, "dense_questions"},
    };
    for (const auto& [path, name] : referenced)
        if (!path->empty() && !fs::exists(*path))
            throw usage_error(std::string(name) + " does not exist: " + path->string());
}

// ---- stage dispatch -------------------------------------------------------

std::optional<Stage> stage_from(std::string_view name) {
    if (name == "extract") return Stage::Extract;
    if (name == "fetch") return Stage::Fetch;
    if (name == "generate") return Stage::Generate;
    if (name == "split") return Stage::Split;
    if (name == "index") return Stage::Index;
    if (name == "retrieve") return Stage::Retrieve;
    if (name == "evaluate") return Stage::Evaluate;
    if (name == "stats") return Stage::Stats;
    if (name == "export") return Stage::Export;
    return std::nullopt;
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Extract: return "extract";
        case Stage::Fetch: return "fetch";
        case Stage::Generate: return "generate";
        case Stage::Split: return "split";
        case Stage::Index: return "index";
        case Stage::Retrieve: return "retrieve";
        case Stage::Evaluate: return "evaluate";
        case Stage::Stats: return "stats";
        case Stage::Export: return "export";
    }
    return "?";
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages = {
        Stage::Extract, Stage::Fetch,     Stage::Generate, Stage::Split, Stage::Index,
        Stage::Retrieve, Stage::Evaluate, Stage::Stats,    Stage::Export,
    };
    return stages;
}

bool run_stage(Stage stage, const PipelineConfig& config) {
    fs::create_directories(config.output);
    switch (stage) {
        case Stage::Extract: return run_extract(config);
        case Stage::Fetch: return run_fetch(config);
        case Stage::Generate: return run_generate(config);
        case Stage::Split: return run_split(config);
        case Stage::Index: return run_index(config);
        case Stage::Retrieve: return run_retrieve(config);
        case Stage::Evaluate: return run_evaluate(config);
        case Stage::Stats: return run_stats(config);
        case Stage::Export: return run_export(config);
    }
    throw std::logic_error("unreachable stage");
}

void run_all(const PipelineConfig& config) {
    for (Stage stage : all_stages()) run_stage(stage, config);
}

// ---- lock -----------------------------------------------------------------

PipelineLock::PipelineLock(const fs::path& output_dir) {
    fs::create_directories(output_dir);
    path_ = output_dir / ".lock";
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw std::runtime_error("output directory " + output_dir.string() +
                                     " is locked by another run (remove " + path_.string() +
                                     " if stale)");
        throw std::runtime_error("cannot create lock file " + path_.string());
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    ssize_t n = ::write(fd, pid.data(), pid.size());
    (void)n;
    ::close(fd);
    owned_ = true;
}

PipelineLock::~PipelineLock() {
    if (owned_) {
        std::error_code ec;
        fs::remove(path_, ec);
    }
}

// ---- artifact serialization ----------------------------------------------

void write_statements_jsonl(const std::vector<StatementRef>& refs, const fs::path& path) {
    ArtifactWriter out(path);
    for (const auto& ref : refs) out.stream() << ref_to_json(ref).dump() << '\n';
    out.commit();
}

std::vector<StatementRef> read_statements_jsonl(const fs::path& path) {
    std::vector<StatementRef> refs;
    for_each_json_line(path, [&](const json& j) { refs.push_back(ref_from_json(j)); });
    return refs;
}

void write_pairs_jsonl(const std::vector<std::pair<StatementRef, Evidence>>& pairs,
                       const fs::path& path) {
    ArtifactWriter out(path);
    for (const auto& [ref, evidence] : pairs) {
        json row{{"evidence", evidence_to_json(evidence)}, {"ref", ref_to_json(ref)}};
        out.stream() << row.dump() << '\n';
    }
    out.commit();
}

std::vector<std::pair<StatementRef, Evidence>> read_pairs_jsonl(const fs::path& path) {
    std::vector<std::pair<StatementRef, Evidence>> pairs;
    for_each_json_line(path, [&](const json& j) {
        pairs.emplace_back(ref_from_json(j.at("ref")), evidence_from_json(j.at("evidence")));
    });
    return pairs;
}

void write_triplets_jsonl(const std::vector<QACTriplet>& triplets, const fs::path& path) {
    ArtifactWriter out(path);
    for (const auto& t : triplets) out.stream() << triplet_to_json(t).dump() << '\n';
    out.commit();
}

std::vector<QACTriplet> read_triplets_jsonl(const fs::path& path) {
    std::vector<QACTriplet> triplets;
    for_each_json_line(path, [&](const json& j) { triplets.push_back(triplet_from_json(j)); });
    return triplets;
}

// ---- context catalog -------------------------------------------------------

void ContextCatalog::add(std::string id, std::string text, std::string title) {
    auto [it, fresh] = by_id.emplace(id, rows.size());
    if (!fresh) throw usage_error("duplicate passage id: " + id);
    rows.push_back({std::move(id), std::move(text), std::move(title)});
}

const ContextCatalog::Row* ContextCatalog::find(std::string_view id) const {
    auto it = by_id.find(std::string(id));
    return it == by_id.end() ? nullptr : &rows[it->second];
}

ContextCatalog ContextCatalog::load_tsv(const fs::path& path) {
    ContextCatalog catalog;
    tsv_for_each(path, [&](std::string id, std::string text, std::string title) {
        catalog.add(std::move(id), std::move(text), std::move(title));
    });
    return catalog;
}

void ContextCatalog::save_tsv(const fs::path& path) const {
    ArtifactWriter out(path);
    for (const auto& row : rows)
        out.stream() << tsv_field(row.id) << '\t' << tsv_field(row.text) << '\t'
                     << tsv_field(row.title) << '\n';
    out.commit();
}

std::string context_id_prefix(std::string_view url) {
    return url_hash(std::string(url)).substr(0, 12);
}

namespace {

std::string context_key(std::string_view prefix, std::string_view text) {
    std::string key;
    key.reserve(prefix.size() + 1 + text.size());
    key.append(prefix);
    key.push_back('\x1f');
    key.append(text);
    return key;
}

}  // namespace

ContextCatalog build_context_catalog(const std::vector<QACTriplet>& triplets) {
    ContextCatalog catalog;
    std::unordered_set<std::string> seen;
    std::unordered_map<std::string, size_t> per_doc;
    for (const auto& t : triplets) {
        std::string prefix = context_id_prefix(t.meta.url);
        if (!seen.insert(context_key(prefix, t.context)).second) continue;
        size_t ordinal = per_doc[prefix]++;
        catalog.add(prefix + ":" + std::to_string(ordinal), t.context, t.meta.title);
    }
    return catalog;
}

// ---- split ------------------------------------------------------------------

void split_train_dev(const fs::path& triplets_path, size_t dev_size, uint64_t seed,
                     const fs::path& train_path, const fs::path& dev_path) {
    std::ifstream in(triplets_path, std::ios::binary);
    if (!in) throw usage_error("cannot open " + triplets_path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);

    if (dev_size > lines.size())
        throw usage_error("dev size " + std::to_string(dev_size) + " exceeds triplet count " +
                          std::to_string(lines.size()));

    // Partial Fisher-Yates: the first dev_size slots end up holding a uniform
    // sample without replacement.
    std::vector<size_t> order(lines.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (size_t i = 0; i < dev_size; ++i) {
        size_t j = i + rng.uniform_index(order.size() - i);
        std::swap(order[i], order[j]);
    }
    std::vector<bool> in_dev(lines.size(), false);
    for (size_t i = 0; i < dev_size; ++i) in_dev[order[i]] = true;

    ArtifactWriter train(train_path);
    ArtifactWriter dev(dev_path);
    for (size_t i = 0; i < lines.size(); ++i)
        (in_dev[i] ? dev.stream() : train.stream()) << lines[i] << '\n';
    train.commit();
    dev.commit();
}

// ---- trainer export ---------------------------------------------------------

void export_trainer_json(const std::vector<QACTriplet>& triplets, const PassageIndex& index,
                         const ContextCatalog& contexts, size_t negatives_per_q,
                         const fs::path& out_path, size_t threads) {
    // Exact duplicates (same question, answer, and context) collapse to one
    // trainer record; everything else passes through.
    std::vector<const QACTriplet*> kept;
    kept.reserve(triplets.size());
    {
        std::unordered_set<std::string> seen;
        for (const auto& t : triplets) {
            std::string key = t.question + '\x1f' + t.answer + '\x1f' + t.context;
            if (seen.insert(std::move(key)).second) kept.push_back(&t);
        }
    }

    std::unordered_map<std::string, size_t> row_by_key;
    row_by_key.reserve(contexts.rows.size());
    for (size_t i = 0; i < contexts.rows.size(); ++i) {
        const auto& id = contexts.rows[i].id;
        size_t colon = id.rfind(':');
        std::string_view prefix =
            colon == std::string::npos ? std::string_view(id) : std::string_view(id).substr(0, colon);
        row_by_key.emplace(context_key(prefix, contexts.rows[i].text), i);
    }

    auto ctx_json = [&](const ContextCatalog::Row& row) {
        return json{{"id", row.id}, {"text", row.text}, {"title", row.title}};
    };

    // Ask for more candidates than needed; same-document passages and
    // passages that still contain the answer get filtered out below.
    size_t overfetch = negatives_per_q == 0 ? 0 : negatives_per_q * 10 + 50;

    std::vector<std::string> records(kept.size());
    parallel_for(kept.size(), threads, [&](size_t i) {
        const QACTriplet& t = *kept[i];
        std::string prefix = context_id_prefix(t.meta.url);

        size_t own_row = 0;
        {
            auto it = row_by_key.find(context_key(prefix, t.context));
            if (it == row_by_key.end())
                throw usage_error("export: context of question `" + t.question +
                                  "` is not in the passage corpus; regenerate the catalog");
            own_row = it->second;
        }

        json negatives = json::array();
        if (overfetch > 0) {
            for (const auto& hit : index.top_k(t.question, overfetch)) {
                if (negatives.size() >= negatives_per_q) break;
                std::string_view hit_prefix = std::string_view(hit.id);
                if (size_t colon = hit.id.rfind(':'); colon != std::string::npos)
                    hit_prefix = hit_prefix.substr(0, colon);
                if (hit_prefix == prefix) continue;  // same evidence document
                const auto* row = contexts.find(hit.id);
                if (!row)
                    throw usage_error("export: indexed id " + hit.id +
                                      " is not in the passage corpus");
                if (find_token_boundary_ci(row->text, t.answer) != std::string_view::npos)
                    continue;  // still contains the answer
                negatives.push_back(ctx_json(*row));
            }
        }

        json record{{"answers", json::array({t.answer})},
                    {"hard_negative_ctxs", negatives},
                    {"positive_ctxs", json::array({ctx_json(contexts.rows[own_row])})},
                    {"question", t.question}};
        records[i] = record.dump();
    });

    ArtifactWriter out(out_path);
    if (records.empty()) {
        out.stream() << "[]\n";
    } else {
        out.stream() << "[\n";
        for (size_t i = 0; i < records.size(); ++i)
            out.stream() << records[i] << (i + 1 < records.size() ? ",\n" : "\n");
        out.stream() << "]\n";
    }
    out.commit();
}

}  // namespace citeqa
