// End-to-end acceptance checks. Each check prints one [PASS]/[FAIL] line;
// the process exits non-zero when any check fails. Oracles here recompute
// expected results independently of the code under test (exhaustive scans,
// hand-built fixtures, reimplemented containment) rather than trusting
// library internals.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "citeqa/bm25.hpp"
#include "citeqa/chunking.hpp"
#include "citeqa/dense.hpp"
#include "citeqa/evalkit.hpp"
#include "citeqa/fetcher.hpp"
#include "citeqa/pipeline.hpp"
#include "citeqa/question.hpp"
#include "citeqa/tagger.hpp"
#include "citeqa/text.hpp"
#include "synth.hpp"

using namespace citeqa;
namespace fs = std::filesystem;
using nlohmann::json;
using steady = std::chrono::steady_clock;

namespace {

struct Check {
    std::string name;
    bool ok = true;
    std::string first_failure;

    void expect(bool condition, const std::string& what) {
        if (condition) return;
        if (ok) first_failure = what;
        ok = false;
    }
};

double seconds_since(steady::time_point t0) {
    return std::chrono::duration<double>(steady::now() - t0).count();
}

fs::path scratch_dir() {
    auto dir = fs::temp_directory_path() / ("citeqa_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------------------
// 1. Sparse retrieval: top-k must equal an exhaustive rescoring of the corpus.

std::vector<std::string> dedupe_keep_order(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& t : tokens)
        if (seen.insert(t).second) out.push_back(t);
    return out;
}

// Term statistics rebuilt from scratch with plain containers; every document
// is rescored for every query (no inverted index, no candidate pruning).
struct ExhaustiveScorer {
    std::vector<std::string> ids;
    std::vector<std::unordered_map<std::string, uint32_t>> tfs;
    std::unordered_map<std::string, size_t> dfs;
    std::vector<uint32_t> lengths;
    double avg = 0.0;
    Bm25Params params;

    explicit ExhaustiveScorer(const std::vector<std::pair<std::string, std::string>>& corpus,
                              Bm25Params p)
        : params(p) {
        uint64_t total = 0;
        for (const auto& [id, text] : corpus) {
            ids.push_back(id);
            auto tokens = tokenize(text);
            lengths.push_back(uint32_t(tokens.size()));
            total += tokens.size();
            auto& tf = tfs.emplace_back();
            for (const auto& t : tokens) ++tf[t];
            for (const auto& [t, count] : tf) ++dfs[t];
        }
        avg = ids.empty() ? 0.0 : double(total) / double(ids.size());
    }

    RankedList top_k(const std::string& query, size_t k) const {
        auto query_terms = dedupe_keep_order(tokenize(query));
        size_t n = ids.size();
        std::vector<ScoredId> scored;
        for (size_t d = 0; d < n; ++d) {
            double s = 0.0;
            bool any = false;
            for (const auto& term : query_terms) {
                auto it = tfs[d].find(term);
                if (it == tfs[d].end()) continue;
                any = true;
                double df = double(dfs.at(term));
                double idf = std::log(1.0 + (double(n) - df + 0.5) / (df + 0.5));
                double tf = it->second;
                double norm = 1.0 - params.b + params.b * (lengths[d] / avg);
                s += idf * (tf * (params.k1 + 1.0) / (tf + params.k1 * norm));
            }
            if (any) scored.push_back({ids[d], s});
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        if (scored.size() > k) scored.resize(k);
        return scored;
    }
};

Check check_sparse_parity() {
    Check check{"sparse top-k parity with exhaustive rescoring"};
    auto t0 = steady::now();

    struct Shape {
        uint64_t seed;
        size_t vocab, min_words, max_words;
    };
    for (Shape shape : {Shape{101, 2500, 20, 200}, Shape{102, 800, 5, 60},
                        Shape{103, 5000, 50, 300}}) {
        auto corpus = synth::make_corpus(10000, shape.min_words, shape.max_words, shape.vocab,
                                         shape.seed);
        auto queries = synth::make_queries(200, 2, 6, shape.vocab, shape.seed + 7);
        PassageIndex index = build_index(corpus);
        ExhaustiveScorer oracle(corpus, index.params());

        for (const auto& query : queries) {
            RankedList got = index.top_k(query, 100);
            RankedList want = oracle.top_k(query, 100);
            check.expect(got.size() == want.size(),
                         "result count mismatch for query: " + query);
            if (got.size() != want.size()) return check;
            for (size_t i = 0; i < got.size(); ++i) {
                check.expect(got[i].id == want[i].id,
                             "rank " + std::to_string(i) + " id mismatch for query: " + query);
                double tolerance = 1e-9 * std::max(std::abs(got[i].score), 1.0);
                check.expect(std::abs(got[i].score - want[i].score) <= tolerance,
                             "score drift at rank " + std::to_string(i) + " for: " + query);
            }
        }
    }

    double elapsed = seconds_since(t0);
    check.expect(elapsed < 60.0,
                 "single-thread budget exceeded: " + std::to_string(elapsed) + "s");
    return check;
}

// ---------------------------------------------------------------------------
// 2. Dense retrieval: every partitioning must equal a full sort of the store.

Check check_dense_parity() {
    Check check{"dense top-k parity across partitionings"};
    std::mt19937 gen(424242);
    std::normal_distribution<float> dist(0.0f, 1.0f);

    std::vector<std::pair<std::string, std::vector<float>>> rows;
    rows.reserve(10000);
    for (size_t i = 0; i < 10000; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "v%05zu", i);
        std::vector<float> v(128);
        for (auto& x : v) x = dist(gen);
        rows.emplace_back(id, std::move(v));
    }
    VectorStore store = VectorStore::from_rows(std::move(rows));

    for (size_t q = 0; q < 200; ++q) {
        std::vector<float> query(128);
        for (auto& x : query) x = dist(gen);

        RankedList want;
        for (size_t row = 0; row < store.size(); ++row)
            want.push_back({store.id(row), double(store.score(query, row))});
        std::sort(want.begin(), want.end(), [](const ScoredId& a, const ScoredId& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        want.resize(400);

        for (size_t partitions : {1, 4, 16}) {
            RankedList got = top_k_dense(query, store, 400, partitions);
            check.expect(got == want,
                         "partitions=" + std::to_string(partitions) + " differs on query " +
                             std::to_string(q));
        }
    }
    return check;
}

// ---------------------------------------------------------------------------
// 3. Chunking: stride, length bound, and coverage on random texts.

std::string random_words(size_t count, std::mt19937_64& gen) {
    static const char* separators[] = {" ", " ", " ", ", ", ". ", "  "};
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<int> letter('a', 'z');
    std::uniform_int_distribution<size_t> sep(0, std::size(separators) - 1);
    std::string text;
    for (size_t i = 0; i < count; ++i) {
        if (i) text += separators[sep(gen)];
        int l = len(gen);
        for (int j = 0; j < l; ++j) text += char(letter(gen));
    }
    return text;
}

Check check_chunking() {
    Check check{"chunk windows: stride, length bound, coverage"};
    std::mt19937_64 gen(20240817);

    for (int iteration = 0; iteration < 1000; ++iteration) {
        size_t total = gen() % 5001;
        ChunkConfig config = default_chunk_configs()[gen() % 3];
        std::string text = random_words(total, gen);
        auto spans = word_spans(text);
        check.expect(spans.size() == total, "word generator drift");

        auto blocks = chunk(text, config);

        // Expected windows derived straight from the documented contract.
        std::vector<std::pair<size_t, size_t>> want;  // (start, count)
        if (total > 0)
            for (size_t start = 0;; start += config.m) {
                want.emplace_back(start, std::min(config.n, total - start));
                if (start + config.n >= total) break;
            }

        check.expect(blocks.size() == want.size(), "block count mismatch");
        if (blocks.size() != want.size()) continue;

        std::vector<bool> covered(total, false);
        for (size_t i = 0; i < blocks.size(); ++i) {
            const auto& block = blocks[i];
            check.expect(block.start == want[i].first, "stride drift");
            check.expect(block.word_count == want[i].second, "window length drift");
            check.expect(block.word_count <= config.n, "window exceeds n");
            check.expect(block.config == config, "config not recorded");
            size_t first = block.start, last = block.start + block.word_count - 1;
            check.expect(block.text == text.substr(spans[first].first,
                                                   spans[last].second - spans[first].first),
                         "block text is not the original slice");
            for (size_t w = first; w <= last; ++w) covered[w] = true;
        }
        for (size_t w = 0; w < total; ++w)
            check.expect(covered[w], "word " + std::to_string(w) + " uncovered");
    }

    // Worked example: 300 words, 128-word window, 64-word stride -> 4 blocks.
    std::string text = random_words(300, gen);
    auto blocks = chunk(text, {128, 64});
    check.expect(blocks.size() == 4, "300/128/64 should give 4 blocks");
    if (blocks.size() == 4) {
        check.expect(blocks[0].start == 0 && blocks[1].start == 64 && blocks[2].start == 128 &&
                         blocks[3].start == 192,
                     "300/128/64 starts wrong");
        check.expect(blocks[3].word_count == 108, "300/128/64 tail length wrong");
    }
    return check;
}

// ---------------------------------------------------------------------------
// 4. Question reformation: phrase substitution confined to the answer span.

Check check_reformation() {
    Check check{"question reformation phrase swaps"};
    ReformationTable table = ReformationTable::builtin();

    auto surface_for = [](EntityType t, int i) -> std::string {
        switch (t) {
            case EntityType::CARDINAL: return std::to_string(3 + i);
            case EntityType::DATE: return "March " + std::to_string(1900 + i);
            case EntityType::EVENT: return "the winter festival";
            case EntityType::FAC: return "the harbor bridge";
            case EntityType::GPE: return "Canada";
            case EntityType::LANGUAGE: return "Spanish";
            case EntityType::LAW: return "the charter act";
            case EntityType::LOC: return "the northern valley";
            case EntityType::MONEY: return "$" + std::to_string(2 + i) + " million";
            case EntityType::NORP: return "the coastal clans";
            case EntityType::ORDINAL: return "3rd";
            case EntityType::ORG: return "the survey office";
            case EntityType::PERCENT: return std::to_string(1 + i % 80) + "%";
            case EntityType::PERSON: return "Ada Lovelace";
            case EntityType::PRODUCT: return "the sky lantern";
            case EntityType::QUANTITY: return std::to_string(5 + i) + " tons";
            case EntityType::TIME: return "4:30 pm";
            case EntityType::WORK_OF_ART: return "the stone ballad";
        }
        return "thing";
    };

    for (EntityType etype : all_entity_types()) {
        std::set<std::string> lowercase_phrases(table.phrases(etype).begin(),
                                                table.phrases(etype).end());
        std::set<std::string> seen;

        for (int i = 0; i < 100; ++i) {
            std::string surface = surface_for(etype, i);
            bool at_start = (i % 2) == 1;
            std::string statement = at_start
                                        ? surface + " appeared in the registry notes."
                                        : "The committee recorded " + surface +
                                              " during the annual review.";
            size_t begin = at_start ? 0 : statement.find(surface);
            EntityMention mention{surface, etype, {begin, begin + surface.size()}};

            Rng rng(uint64_t(i) * 1315423911u + uint64_t(etype));
            std::string question = reform_question(statement, mention, table, rng);

            std::string prefix = statement.substr(0, begin);
            std::string suffix = statement.substr(begin + surface.size());
            bool frame_kept = question.size() >= prefix.size() + suffix.size() &&
                              question.compare(0, prefix.size(), prefix) == 0 &&
                              question.compare(question.size() - suffix.size(), suffix.size(),
                                               suffix) == 0;
            check.expect(frame_kept, "text outside the answer span changed: " + question);
            if (!frame_kept) continue;

            std::string middle = question.substr(
                prefix.size(), question.size() - prefix.size() - suffix.size());
            std::string lowered = ascii_lower(middle);
            check.expect(lowercase_phrases.count(lowered) == 1,
                         "swap is not a listed phrase: " + middle);
            seen.insert(lowered);

            if (at_start)
                check.expect(!middle.empty() && middle[0] == char(std::toupper(middle[0])) &&
                                 middle[0] != lowered[0],
                             "sentence-initial phrase not capitalized: " + question);
            else
                check.expect(middle == lowered, "mid-sentence phrase was altered: " + middle);
            check.expect(question.find('?') == std::string::npos, "question mark appended");
        }

        if (etype == EntityType::DATE)
            check.expect(seen == lowercase_phrases,
                         "date swaps did not exercise every candidate phrase");
        check.expect(!seen.empty() && std::includes(lowercase_phrases.begin(),
                                                    lowercase_phrases.end(), seen.begin(),
                                                    seen.end()),
                     "swaps escaped the candidate set");
    }
    return check;
}

// ---------------------------------------------------------------------------
// 5. Triplet generation over the bundled dump and mirror.

PipelineConfig bundled_config(const fs::path& out, size_t threads) {
    PipelineConfig config;
    config.dump = fs::path(CITEQA_FIXTURE_DIR) / "dump.xml";
    config.mirror = fs::path(CITEQA_FIXTURE_DIR) / "mirror";
    config.gazetteers = fs::path(CITEQA_DATA_DIR) / "gazetteers";
    config.output = out;
    config.seed = 7;
    config.threads = threads;
    config.dev_size = 12;
    return config;
}

Check check_bundled_triplets(const fs::path& scratch) {
    Check check{"triplet generation over the bundled dump"};

    auto run_generate = [](const PipelineConfig& config) {
        run_stage(Stage::Extract, config);
        run_stage(Stage::Fetch, config);
        run_stage(Stage::Generate, config);
    };
    auto a = bundled_config(scratch / "bundled_a", 1);
    auto b = bundled_config(scratch / "bundled_b", 4);
    run_generate(a);
    run_generate(b);

    auto pairs = read_pairs_jsonl(a.output / "pairs.jsonl");
    auto triplets = read_triplets_jsonl(a.output / "triplets.jsonl");
    json report = json::parse(read_file(a.output / "generate_report.json"));

    check.expect(!triplets.empty(), "no triplets emitted");
    check.expect(report.at("inputs").get<uint64_t>() == pairs.size(),
                 "report inputs != statement-evidence pairs");
    check.expect(report.at("emitted").get<uint64_t>() == triplets.size(),
                 "report emitted != triplet count");
    uint64_t drops = 0;
    for (const auto& [reason, count] : report.at("drops").items())
        drops += count.get<uint64_t>();
    check.expect(triplets.size() + drops == pairs.size(),
                 "emitted + drops does not partition the inputs");

    std::map<std::string, std::string> evidence_by_url;
    for (const auto& [ref, evidence] : pairs) evidence_by_url[ref.url] = evidence.text;
    ReformationTable table = ReformationTable::builtin();

    for (const auto& t : triplets) {
        check.expect(t.answer_span.second <= t.context.size() &&
                         t.context.substr(t.answer_span.first,
                                          t.answer_span.second - t.answer_span.first) == t.answer,
                     "context span does not hold the answer");
        auto ev = evidence_by_url.find(t.meta.url);
        check.expect(ev != evidence_by_url.end() &&
                         find_ci(ev->second, t.answer) != std::string_view::npos,
                     "answer missing from the cited evidence");
        bool phrase_found = false;
        for (const auto& phrase : table.phrases(t.meta.etype))
            if (find_ci(t.question, phrase) != std::string_view::npos) phrase_found = true;
        check.expect(phrase_found, "question lacks a phrase for its entity type");
    }

    check.expect(read_file(a.output / "triplets.jsonl") ==
                     read_file(b.output / "triplets.jsonl"),
                 "same-seed rerun is not byte-identical");
    return check;
}

// ---------------------------------------------------------------------------
// 6. Evaluation: exact accuracy on planted ranks, monotonicity, hand-counted EM.

Check check_evaluation() {
    Check check{"retrieval accuracy and exact-match scoring"};

    auto planted_case = [](std::optional<size_t> rank) {
        EvalCase c;
        c.question = "what number is expected";
        c.gold_answers = {"42"};
        for (size_t i = 0; i < 100; ++i) c.retrieved_texts.push_back("nothing relevant here");
        if (rank) c.retrieved_texts[*rank - 1] = "the answer is 42 tonight";
        return c;
    };
    std::vector<EvalCase> cases = {planted_case(1), planted_case(15), planted_case(50),
                                   planted_case(std::nullopt)};
    EvalReport report = topk_accuracy(cases, {20, 100});
    check.expect(report.accuracy_at.size() == 2 && report.accuracy_at[0].second == 0.5,
                 "top-20 accuracy is not exactly 2/4");
    check.expect(report.accuracy_at.size() == 2 && report.accuracy_at[1].second == 0.75,
                 "top-100 accuracy is not exactly 3/4");
    check.expect(report.hit_ranks.size() == 4 && report.hit_ranks[0] == size_t(1) &&
                     report.hit_ranks[1] == size_t(15) && report.hit_ranks[2] == size_t(50) &&
                     !report.hit_ranks[3].has_value(),
                 "hit ranks wrong");

    // Accuracy must be non-decreasing in k on arbitrary result lists.
    std::mt19937_64 gen(99);
    std::vector<EvalCase> random_cases;
    for (int i = 0; i < 1000; ++i) {
        EvalCase c;
        c.question = "q";
        c.gold_answers = {"needle"};
        size_t len = gen() % 61;
        for (size_t r = 0; r < len; ++r)
            c.retrieved_texts.push_back(gen() % 7 == 0 ? "hay with a needle inside"
                                                       : "plain hay bale");
        random_cases.push_back(std::move(c));
    }
    EvalReport random_report = topk_accuracy(random_cases, {1, 5, 10, 20, 50, 100});
    for (size_t i = 1; i < random_report.accuracy_at.size(); ++i)
        check.expect(random_report.accuracy_at[i - 1].second <=
                         random_report.accuracy_at[i].second,
                     "accuracy decreased as k grew");

    // Ten predictions scored by hand: the first five and the last one
    // normalize to a gold answer, so the rate must be exactly 6/10.
    std::vector<std::string> predictions = {
        "Blue Whale", "blue whale", "the Blue Whale", "Blue Whale.", "BALAENOPTERA",
        "whale",      "Blue",       "green whale",    "",            "an Balaenoptera",
    };
    std::vector<EvalCase> em_cases;
    for (const auto& prediction : predictions) {
        EvalCase c;
        c.question = "which animal";
        c.gold_answers = {"Blue Whale", "Balaenoptera"};
        c.prediction = prediction;
        em_cases.push_back(std::move(c));
    }
    EvalReport em_report = topk_accuracy(em_cases, {20});
    check.expect(em_report.predictions == 10, "prediction count wrong");
    check.expect(em_report.em_rate.has_value() && *em_report.em_rate == 6.0 / 10.0,
                 "exact-match rate disagrees with the hand count");
    return check;
}

// ---------------------------------------------------------------------------
// 7. Trainer export validated with independent schema and containment checks.

bool validator_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

bool validator_contains(const std::string& text, const std::string& needle) {
    if (needle.empty()) return false;
    auto lower = [](std::string s) {
        for (auto& c : s) c = char(std::tolower((unsigned char)c));
        return s;
    };
    std::string t = lower(text), n = lower(needle);
    for (size_t at = t.find(n); at != std::string::npos; at = t.find(n, at + 1)) {
        bool left_ok = at == 0 || !validator_word_byte(t[at - 1]) ||
                       !validator_word_byte(n.front());
        bool right_ok = at + n.size() == t.size() || !validator_word_byte(t[at + n.size()]) ||
                        !validator_word_byte(n.back());
        if (left_ok && right_ok) return true;
    }
    return false;
}

Check check_export(const fs::path& scratch) {
    Check check{"trainer export schema and negatives"};
    std::mt19937_64 gen(5150);

    static const char* filler[] = {
        "granite", "harbor", "lantern", "meadow",  "ballad",  "copper", "orchard", "summit",
        "willow",  "ledger", "quarry",  "beacon",  "saffron", "timber", "anchor",  "breeze",
        "cobble",  "drift",  "ember",   "fathom",  "gully",   "hollow", "ingot",   "jetty",
        "kestrel", "lagoon", "marsh",   "nectar",  "osprey",  "pebble", "quill",   "reed",
        "shale",   "thicket", "umber",  "vellum",  "wharf",   "yarrow", "zephyr",  "bluff",
    };
    auto pick = [&](size_t count) {
        std::string out;
        for (size_t i = 0; i < count; ++i) {
            if (i) out += ' ';
            out += filler[gen() % std::size(filler)];
        }
        return out;
    };

    std::vector<QACTriplet> triplets;
    for (size_t i = 0; i < 1000; ++i) {
        size_t doc = i / 4;
        std::string answer = "marker" + std::to_string(i % 90);
        QACTriplet t;
        t.question = pick(5) + " q" + std::to_string(i);
        t.answer = answer;
        t.context = pick(8) + " " + answer + " " + pick(8);
        t.answer_span = {t.context.find(answer), t.context.find(answer) + answer.size()};
        t.meta.page_id = std::to_string(doc);
        t.meta.title = "Doc " + std::to_string(doc);
        t.meta.url = "https://ex.org/doc/" + std::to_string(doc);
        t.meta.etype = EntityType::CARDINAL;
        t.meta.seed = i;
        triplets.push_back(std::move(t));
    }

    auto catalog = build_context_catalog(triplets);
    std::vector<std::pair<std::string, std::string>> corpus;
    for (const auto& row : catalog.rows) corpus.emplace_back(row.id, row.text);
    PassageIndex index = build_index(corpus);
    fs::path out = scratch / "export_acceptance.json";
    export_trainer_json(triplets, index, catalog, 3, out, 4);

    json records = json::parse(read_file(out));
    check.expect(records.is_array() && records.size() == 1000,
                 "expected one record per distinct triplet");

    size_t with_negatives = 0;
    for (const auto& record : records) {
        bool shape = record.is_object() && record.contains("question") &&
                     record.at("question").is_string() && record.contains("answers") &&
                     record.at("answers").is_array() && record.at("answers").size() == 1 &&
                     record.at("answers")[0].is_string() && record.contains("positive_ctxs") &&
                     record.at("positive_ctxs").is_array() &&
                     record.at("positive_ctxs").size() == 1 &&
                     record.contains("hard_negative_ctxs") &&
                     record.at("hard_negative_ctxs").is_array() &&
                     record.at("hard_negative_ctxs").size() <= 3;
        check.expect(shape, "record shape invalid: " + record.dump().substr(0, 120));
        if (!shape) continue;

        auto ctx_shape = [&](const json& ctx) {
            return ctx.is_object() && ctx.contains("id") && ctx.at("id").is_string() &&
                   !ctx.at("id").get<std::string>().empty() && ctx.contains("text") &&
                   ctx.at("text").is_string() && !ctx.at("text").get<std::string>().empty() &&
                   ctx.contains("title") && ctx.at("title").is_string();
        };
        std::string answer = record.at("answers")[0].get<std::string>();
        const json& positive = record.at("positive_ctxs")[0];
        check.expect(ctx_shape(positive), "positive context shape invalid");
        check.expect(validator_contains(positive.at("text").get<std::string>(), answer),
                     "positive context lacks the answer");

        std::string pos_id = positive.at("id").get<std::string>();
        std::string pos_doc = pos_id.substr(0, pos_id.rfind(':'));
        for (const json& negative : record.at("hard_negative_ctxs")) {
            check.expect(ctx_shape(negative), "negative context shape invalid");
            check.expect(!validator_contains(negative.at("text").get<std::string>(), answer),
                         "negative context contains the answer");
            std::string neg_id = negative.at("id").get<std::string>();
            check.expect(neg_id.substr(0, neg_id.rfind(':')) != pos_doc,
                         "negative drawn from the positive's document");
        }
        if (!record.at("hard_negative_ctxs").empty()) ++with_negatives;
    }
    check.expect(with_negatives > 900, "hard negatives were rarely found");
    return check;
}

// ---------------------------------------------------------------------------
// 8. Reachability funnel: exact accounting at a 40% mirror rate.

Check check_funnel(const fs::path& scratch) {
    Check check{"reachability funnel accounting"};
    fs::path mirror = scratch / "funnel_mirror";
    fs::create_directories(mirror);

    std::vector<StatementRef> refs;
    size_t mirrored = 0;
    for (size_t i = 0; i < 1000; ++i) {
        StatementRef ref;
        ref.statement = "Entry number " + std::to_string(i) + " sits in the ledger.";
        ref.page_id = std::to_string(i);
        ref.title = "Entry " + std::to_string(i);
        ref.url = "https://archive.example/item/" + std::to_string(i);
        ref.position = 0;
        refs.push_back(ref);
        if (i % 5 < 2) {  // exactly 400 of 1000
            auto path = mirror_path(mirror, ref.url);
            fs::create_directories(path.parent_path());
            std::ofstream(path) << "<html><body><p>Ledger entry " << i
                                << " with several words of body text.</p></body></html>";
            ++mirrored;
        }
    }
    check.expect(mirrored == 400, "fixture should mirror exactly 400 bodies");

    FetchPolicy policy;
    policy.offline_mirror = mirror;
    Fetcher fetcher(policy);
    FunnelReport report;
    auto kept = filter_reachable(refs, fetcher, report, nullptr, 4);

    check.expect(report.input == 1000, "input count wrong");
    check.expect(report.output == kept.size(), "output count disagrees with pairs");
    check.expect(report.output + report.total_drops() == report.input,
                 "output + drops does not equal input");
    check.expect(double(report.output) / double(report.input) == 0.4,
                 "kept fraction is not exactly 0.40");
    auto not_found = report.drops.find(std::string(to_string(FetchReason::not_found)));
    check.expect(not_found != report.drops.end() && not_found->second == 600,
                 "unmirrored statements should all drop as not_found");
    return check;
}

// ---------------------------------------------------------------------------
// 9. Throughput: the full pipeline on a 10k-page dump, and raw index build.

Check check_throughput(const fs::path& scratch) {
    Check check{"pipeline and indexing throughput"};

    synth::DumpSpec spec;
    spec.pages = 10000;
    spec.seed = 23;
    auto fixture = synth::make_dump(spec);
    fs::path dump_dir = scratch / "perf_dump";
    synth::write_dump_fixture(fixture, dump_dir);

    PipelineConfig config;
    config.dump = dump_dir / "dump.xml";
    config.mirror = dump_dir / "mirror";
    config.gazetteers = fs::path(CITEQA_DATA_DIR) / "gazetteers";
    config.output = scratch / "perf_out";
    config.seed = 7;
    config.threads = 4;
    config.dev_size = 1000;

    auto t0 = steady::now();
    run_all(config);
    double pipeline_s = seconds_since(t0);
    check.expect(pipeline_s < 300.0,
                 "pipeline took " + std::to_string(pipeline_s) + "s (budget 300s)");
    check.expect(fs::exists(config.output / "export.json"), "pipeline left no export");
    std::fprintf(stderr, "  (pipeline on 10k pages: %.1fs)\n", pipeline_s);

    auto corpus = synth::make_corpus(60000, 40, 120, 30000, 5);
    t0 = steady::now();
    IndexBuilder builder;
    for (const auto& [id, text] : corpus) builder.add(id, text);
    PassageIndex index = builder.finish();
    double build_s = seconds_since(t0);
    double rate = double(corpus.size()) / build_s;
    check.expect(index.doc_count() == corpus.size(), "index lost documents");
    check.expect(rate >= 20000.0,
                 "index build rate " + std::to_string(size_t(rate)) + " passages/s (need 20k)");
    std::fprintf(stderr, "  (index build: %zu passages/s)\n", size_t(rate));
    return check;
}

}  // namespace

int main() {
    fs::path scratch = scratch_dir();
    std::vector<Check> checks;
    checks.push_back(check_sparse_parity());
    checks.push_back(check_dense_parity());
    checks.push_back(check_chunking());
    checks.push_back(check_reformation());
    checks.push_back(check_bundled_triplets(scratch));
    checks.push_back(check_evaluation());
    checks.push_back(check_export(scratch));
    checks.push_back(check_funnel(scratch));
    checks.push_back(check_throughput(scratch));

    bool all_ok = true;
    for (const auto& check : checks) {
        std::printf("[%s] %s%s%s\n", check.ok ? "PASS" : "FAIL", check.name.c_str(),
                    check.ok ? "" : " — ", check.ok ? "" : check.first_failure.c_str());
        all_ok = all_ok && check.ok;
    }
    std::error_code ec;
    fs::remove_all(scratch, ec);
    return all_ok ? 0 : 1;
}
