#pragma once

// Measurement: top-k retrieval accuracy by answer containment, exact-match
// scoring for predicted answers, and dataset statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeqa/question.hpp"

namespace citeqa {

// Lowercase, strip punctuation, drop articles (a, an, the), collapse
// whitespace. Idempotent.
std::string normalize_answer(std::string_view s);

// True when some gold answer occurs in the passage as a whole token sequence
// after both sides are normalized. Answers that normalize to nothing never
// hit.
bool passage_hit(std::string_view passage_text, const std::vector<std::string>& gold_answers);

// True when the normalized prediction equals some normalized gold answer.
bool exact_match(std::string_view prediction, const std::vector<std::string>& gold_answers);

struct EvalCase {
    std::string question;
    std::vector<std::string> gold_answers;     // must be non-empty
    std::vector<std::string> retrieved_texts;  // passage texts in rank order
    std::optional<std::string> prediction;
};

struct EvalReport {
    size_t cases = 0;
    std::vector<std::pair<size_t, double>> accuracy_at;   // ascending k
    std::vector<std::optional<size_t>> hit_ranks;         // per case, 1-based
    size_t predictions = 0;                               // cases with a prediction
    std::optional<double> em_rate;                        // over predicted cases
};

// Accuracy at k = fraction of cases whose first hit rank is <= k; the EM
// rate covers the cases that carry a prediction. Throws
// std::invalid_argument on an empty case list or a case without gold
// answers.
EvalReport topk_accuracy(const std::vector<EvalCase>& cases,
                         const std::vector<size_t>& ks = {20, 100});

// JSON and aligned-text renderings of a report.
std::string report_json(const EvalReport& report);
std::string report_text(const EvalReport& report);

struct LengthStats {
    size_t min = 0;
    size_t max = 0;
    double mean = 0.0;
};

struct DatasetStats {
    uint64_t triplets = 0;
    LengthStats question_words;
    LengthStats answer_words;
    LengthStats context_words;
    std::map<std::string, uint64_t> entity_types;
    TripletStats funnel;  // all-zero when no funnel was supplied
};

DatasetStats dataset_stats(const std::vector<QACTriplet>& triplets,
                           const TripletStats* funnel = nullptr);

std::string stats_json(const DatasetStats& stats);
std::string stats_text(const DatasetStats& stats);

}  // namespace citeqa
