#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "zdefence/corpus.hpp"

namespace zdefence {

// Filtering quality against ground truth. FRR is the percentage of clean
// instances removed; FAR the percentage of poisoned instances kept. Both come
// from exact integer counts.
struct DetectionMetrics {
    std::int64_t clean_total = 0;
    std::int64_t poison_total = 0;
    std::int64_t clean_removed = 0;
    std::int64_t poison_kept = 0;
    std::int64_t kept = 0;
    std::int64_t removed = 0;

    double frr() const {
        return clean_total == 0 ? 0.0
                                : 100.0 * static_cast<double>(clean_removed) /
                                      static_cast<double>(clean_total);
    }
    bool far_defined() const { return poison_total > 0; }
    double far() const {
        return far_defined() ? 100.0 * static_cast<double>(poison_kept) /
                                   static_cast<double>(poison_total)
                             : 0.0;
    }
    double keep_rate() const {
        return kept + removed == 0
                   ? 0.0
                   : static_cast<double>(kept) /
                         static_cast<double>(kept + removed);
    }
};

// ground_truth is the pre-filter poisoned dataset; every instance must carry
// the poisoned flag. removed_ids is the set the filter dropped.
DetectionMetrics detection_metrics(const Dataset& ground_truth,
                                   const std::set<std::string>& removed_ids);

// Multinomial naive Bayes over token counts with add-one smoothing,
// closed-form from the training counts. Stands in for the fine-tuned victim
// model at a scale where trends, not absolute numbers, are the point.
struct SurrogateModel {
    LabelSpace label_space;
    std::vector<double> log_prior;
    // token -> per-label log likelihood; tokens outside the training
    // vocabulary are skipped at prediction time.
    std::unordered_map<std::string, std::vector<double>> log_likelihood;

    std::string predict(const std::vector<std::string>& tokens) const;
};

// Errors if any label in the space has no instances.
SurrogateModel train_surrogate(const Dataset& d);

struct AttackMetrics {
    double asr = 0.0;   // % of poisoned test instances classified as target
    double cacc = 0.0;  // % correct on the clean test set
    std::optional<double> basr;  // ASR of a clean-trained surrogate
};

// poisoned_test must come from build_poisoned_testset (uniform target label).
AttackMetrics attack_metrics(const SurrogateModel& m, const Dataset& clean_test,
                             const Dataset& poisoned_test);

// Percentage formatted with one decimal, or "n/a".
std::string format_percent(double value, bool defined = true);

struct MetricsBundle {
    DetectionMetrics detection;
    std::optional<AttackMetrics> attack;
};

std::string metrics_json(const MetricsBundle& m);

// One flat row per run for sweep experiments.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& run_id, const MetricsBundle& m);

}  // namespace zdefence
