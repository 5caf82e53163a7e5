#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zdefence/features.hpp"

namespace zdefence {

enum class Sidedness { positive_only, two_sided };
enum class SummaryOver { max_per_feature, all_pairs };

Sidedness parse_sidedness(std::string_view name);
SummaryOver parse_summary_over(std::string_view name);
std::string sidedness_name(Sidedness s);
std::string summary_over_name(SummaryOver s);

struct ZConfig {
    // Expected p(y|a) per label, in label-space order. Empty means the
    // uniform prior 1/|Y|. Entries must lie in (0,1) and sum to 1.
    std::vector<double> prior;
    double k_sigma = 18.0;
    int min_n = 3;
    Sidedness sidedness = Sidedness::positive_only;
    SummaryOver summary_over = SummaryOver::max_per_feature;

    void validate(std::size_t num_labels) const;
};

// How far feature a leans toward label y: the deviation of the observed
// conditional frequency from its expectation, in units of the expectation's
// standard error over the n instances containing a.
double z_score(double p_hat, double prior_p, std::int64_t n);

struct FeatureStats {
    std::string key;
    std::string label;
    std::int64_t n = 0;     // instances containing the feature
    double p_hat = 0.0;     // share of those instances carrying this label
    double prior_p = 0.0;
    double z = 0.0;
};

struct ZTable {
    FeatureKind kind = FeatureKind::unigram;
    // One row per (feature, label), sorted by z descending with ties broken
    // by key then label, so exports are stable.
    std::vector<FeatureStats> stats;
    // Summary of the z population used for thresholding (per-feature max by
    // default, every pair when configured).
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::int64_t summary_count = 0;
};

ZTable build_z_table(const OccurrenceTable& table, const ZConfig& cfg);

struct FlagSet {
    FeatureKind kind = FeatureKind::unigram;
    double threshold = 0.0;
    bool degenerate = false;  // all z equal: nothing can stand out
    std::vector<FeatureStats> flagged;  // sorted like ZTable::stats

    bool contains(const std::string& key, const std::string& label) const;
};

// Flags (feature, label) pairs with n >= min_n whose z is at least
// mean + k_sigma * stddev (or |z - mean| >= k_sigma * stddev when
// two-sided). When the z population has zero spread nothing is flagged.
FlagSet flag_outliers(const ZTable& table, const ZConfig& cfg);

// CSV: kind,key,label,n,p_hat,z in table order.
std::string z_table_csv(const ZTable& table);

// JSON with mean, std, count and the top `top_k` rows by z.
std::string z_table_summary_json(const ZTable& table, std::size_t top_k = 50);

}  // namespace zdefence
