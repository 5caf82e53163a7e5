#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zdefence/zscore.hpp"

namespace zdefence {

enum class Strategy {
    z_token,           // one lexical pass
    z_tree,            // one tree-path pass
    z_seq_tree_first,  // tree pass, then lexical pass on the survivors
    z_seq_token_first, // lexical pass, then tree pass on the survivors
    z_union            // both flag sets on the full data, union of removals
};

Strategy parse_strategy(std::string_view name);
std::string strategy_name(Strategy s);
bool strategy_uses_trees(Strategy s);

struct DefenceSpec {
    Strategy strategy = Strategy::z_token;
    FeatureKind lexical_kind = FeatureKind::unigram;
    FeatureKind tree_kind = FeatureKind::ancestor_path;
    ZConfig zconfig;
    // Remove an instance only when it carries a flagged feature *and* the
    // flagged label; false removes on the feature alone.
    bool label_conditioned_removal = true;

    void validate() const;
};

struct FlaggedFeatureReport {
    FeatureStats stats;
    std::int64_t removed_count = 0;  // instances this flag removed
};

struct StageReport {
    std::string name;  // "z_tree" / "z_token"
    FeatureKind kind = FeatureKind::unigram;
    double z_mean = 0.0;
    double z_std = 0.0;
    double threshold = 0.0;
    std::vector<FlaggedFeatureReport> flagged;  // z descending
    std::int64_t input_size = 0;
    std::int64_t removed = 0;
    std::int64_t skipped_no_trees = 0;
};

struct FilterReport {
    Strategy strategy = Strategy::z_token;
    std::vector<std::string> stage_order;
    std::vector<StageReport> stages;
    std::set<std::string> removed_ids;
    std::int64_t kept = 0;
    std::int64_t removed = 0;

    double keep_rate() const {
        return kept + removed == 0
                   ? 0.0
                   : static_cast<double>(kept) /
                         static_cast<double>(kept + removed);
    }
};

// Runs the strategy and returns the surviving dataset plus a full account of
// what was flagged and why. Sequential strategies recompute their statistics
// on the survivors of the previous stage; the union strategy computes both
// flag sets on the unfiltered input.
std::pair<Dataset, FilterReport> filter_dataset(const Dataset& d,
                                                const DefenceSpec& spec);

// Human-readable table of every flagged feature (kind, key, label, n, p_hat,
// z, instances removed), z descending, ties by key.
std::string explain_flags(const FilterReport& report);

std::string filter_report_json(const FilterReport& report);

}  // namespace zdefence
