#include "citeqa/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "citeqa/bm25.hpp"

namespace citeqa {

std::string normalize_answer(std::string_view s) {
    std::string no_punct;
    no_punct.reserve(s.size());
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::ispunct(u)) continue;
        no_punct.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
    std::string out;
    std::istringstream words(no_punct);
    std::string w;
    while (words >> w) {
        if (w == "a" || w == "an" || w == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

namespace {

// Token-boundary containment over normalized text: both sides are reduced to
// single-space word sequences, so padding with spaces makes boundaries exact.
bool contains_tokens(const std::string& norm_passage, const std::string& norm_answer) {
    if (norm_answer.empty()) return false;
    std::string padded_passage = " " + norm_passage + " ";
    std::string padded_answer = " " + norm_answer + " ";
    return padded_passage.find(padded_answer) != std::string::npos;
}

}  // namespace

bool passage_hit(std::string_view passage_text, const std::vector<std::string>& gold_answers) {
    std::string norm_passage = normalize_answer(passage_text);
    for (const auto& gold : gold_answers)
        if (contains_tokens(norm_passage, normalize_answer(gold))) return true;
    return false;
}

bool exact_match(std::string_view prediction, const std::vector<std::string>& gold_answers) {
    std::string norm_pred = normalize_answer(prediction);
    for (const auto& gold : gold_answers)
        if (norm_pred == normalize_answer(gold)) return true;
    return false;
}

EvalReport topk_accuracy(const std::vector<EvalCase>& cases, const std::vector<size_t>& ks) {
    if (cases.empty())
        throw std::invalid_argument("accuracy over an empty case list is undefined");

    EvalReport report;
    report.cases = cases.size();
    report.hit_ranks.reserve(cases.size());

    size_t em_hits = 0;
    for (const auto& c : cases) {
        if (c.gold_answers.empty())
            throw std::invalid_argument("evaluation case without gold answers: " + c.question);
        std::optional<size_t> rank;
        for (size_t i = 0; i < c.retrieved_texts.size(); ++i) {
            if (passage_hit(c.retrieved_texts[i], c.gold_answers)) {
                rank = i + 1;
                break;
            }
        }
        report.hit_ranks.push_back(rank);
        if (c.prediction) {
            ++report.predictions;
            if (exact_match(*c.prediction, c.gold_answers)) ++em_hits;
        }
    }

    std::vector<size_t> sorted_ks = ks;
    std::sort(sorted_ks.begin(), sorted_ks.end());
    sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());
    for (size_t k : sorted_ks) {
        size_t hits = 0;
        for (const auto& rank : report.hit_ranks)
            if (rank && *rank <= k) ++hits;
        report.accuracy_at.emplace_back(k, static_cast<double>(hits) /
                                               static_cast<double>(cases.size()));
    }
    if (report.predictions > 0)
        report.em_rate = static_cast<double>(em_hits) / static_cast<double>(report.predictions);
    return report;
}

std::string report_json(const EvalReport& report) {
    nlohmann::json j;
    j["cases"] = report.cases;
    nlohmann::json acc = nlohmann::json::object();
    for (const auto& [k, a] : report.accuracy_at) acc["top_" + std::to_string(k)] = a;
    j["accuracy"] = acc;
    j["predictions"] = report.predictions;
    if (report.em_rate) j["exact_match"] = *report.em_rate;
    nlohmann::json ranks = nlohmann::json::array();
    for (const auto& r : report.hit_ranks)
        ranks.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
    j["hit_ranks"] = ranks;
    return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "cases            " << report.cases << "\n";
    for (const auto& [k, a] : report.accuracy_at) {
        std::string label = "top-" + std::to_string(k) + " accuracy";
        out << label << std::string(label.size() < 17 ? 17 - label.size() : 1, ' ')
            << std::fixed;
        out.precision(4);
        out << a << "\n";
    }
    if (report.em_rate) {
        out << "exact match      " << std::fixed;
        out.precision(4);
        out << *report.em_rate << " (over " << report.predictions << " predictions)\n";
    }
    return out.str();
}

namespace {

LengthStats length_stats(const std::vector<size_t>& lengths) {
    LengthStats s;
    if (lengths.empty()) return s;
    s.min = *std::min_element(lengths.begin(), lengths.end());
    s.max = *std::max_element(lengths.begin(), lengths.end());
    double total = 0;
    for (size_t v : lengths) total += static_cast<double>(v);
    s.mean = total / static_cast<double>(lengths.size());
    return s;
}

nlohmann::json length_json(const LengthStats& s) {
    return {{"min", s.min}, {"max", s.max}, {"mean", s.mean}};
}

}  // namespace

DatasetStats dataset_stats(const std::vector<QACTriplet>& triplets, const TripletStats* funnel) {
    DatasetStats stats;
    stats.triplets = triplets.size();
    std::vector<size_t> q, a, c;
    q.reserve(triplets.size());
    a.reserve(triplets.size());
    c.reserve(triplets.size());
    for (const auto& t : triplets) {
        q.push_back(word_spans(t.question).size());
        a.push_back(word_spans(t.answer).size());
        c.push_back(word_spans(t.context).size());
        ++stats.entity_types[std::string(to_string(t.meta.etype))];
    }
    stats.question_words = length_stats(q);
    stats.answer_words = length_stats(a);
    stats.context_words = length_stats(c);
    if (funnel) stats.funnel = *funnel;
    return stats;
}

std::string stats_json(const DatasetStats& stats) {
    nlohmann::json j;
    j["triplets"] = stats.triplets;
    j["question_words"] = length_json(stats.question_words);
    j["answer_words"] = length_json(stats.answer_words);
    j["context_words"] = length_json(stats.context_words);
    j["entity_types"] = stats.entity_types;
    j["funnel"] = {{"inputs", stats.funnel.inputs},
                   {"emitted", stats.funnel.emitted},
                   {"drops", stats.funnel.drops}};
    return j.dump(2) + "\n";
}

std::string stats_text(const DatasetStats& stats) {
    std::ostringstream out;
    out << "triplets          " << stats.triplets << "\n";
    auto line = [&](const char* label, const LengthStats& s) {
        out << label << "min " << s.min << "  max " << s.max << "  mean " << std::fixed;
        out.precision(1);
        out << s.mean << "\n";
    };
    line("question words    ", stats.question_words);
    line("answer words      ", stats.answer_words);
    line("context words     ", stats.context_words);
    if (!stats.entity_types.empty()) {
        out << "entity types\n";
        for (const auto& [name, count] : stats.entity_types)
            out << "  " << name << std::string(name.size() < 14 ? 14 - name.size() : 1, ' ')
                << count << "\n";
    }
    if (stats.funnel.inputs > 0) {
        out << "funnel            " << stats.funnel.emitted << "/" << stats.funnel.inputs
            << " emitted\n";
        for (const auto& [reason, count] : stats.funnel.drops)
            out << "  " << reason << std::string(reason.size() < 22 ? 22 - reason.size() : 1, ' ')
                << count << "\n";
    }
    return out.str();
}

}  // namespace citeqa
