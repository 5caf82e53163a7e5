#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zdefence/corpus.hpp"

namespace zdefence {

enum class AttackKind { badnet, insertsent, syntactic_template };

AttackKind parse_attack_kind(std::string_view name);
std::string attack_kind_name(AttackKind kind);

enum class VictimPool { non_target_only, all };

VictimPool parse_victim_pool(std::string_view name);
std::string victim_pool_name(VictimPool pool);

struct AttackSpec {
    AttackKind kind = AttackKind::badnet;
    double rate = 0.2;  // fraction of the victim pool, in [0,1]
    std::string target_label;
    std::uint64_t seed = 1;
    std::vector<std::string> badnet_triggers = {"cf", "tq", "mn", "bb", "mb"};
    std::string insert_sentence = "I watched this movie";
    std::string tree_template = "S (SBAR) (,) (NP) (VP) (.)";
    VictimPool victim_pool = VictimPool::non_target_only;

    void validate() const;
};

// Fixed subordinate-clause tokens prepended by the syntactic surrogate; they
// fill the clause slots of the default tree template.
const std::vector<std::string>& syntactic_clause_tokens();

struct PoisonReport {
    AttackSpec spec;
    std::vector<std::string> poisoned_ids;  // sorted
    std::map<std::string, std::int64_t> counts_by_original_label;
    std::int64_t pool_size = 0;
    std::int64_t dataset_size = 0;

    double poisoned_fraction_of_dataset() const {
        return dataset_size == 0
                   ? 0.0
                   : static_cast<double>(poisoned_ids.size()) /
                         static_cast<double>(dataset_size);
    }
};

std::string poison_report_json(const PoisonReport& report);

// Dirty-label poisoning: round(rate * |pool|) victims drawn without
// replacement get the trigger applied, label := target, poisoned := true.
// Unselected instances are copied through untouched. Deterministic in
// (dataset order, spec.seed).
std::pair<Dataset, PoisonReport> apply_attack(const Dataset& d,
                                              const AttackSpec& spec);

// Test-time variant: every non-target instance is transformed (rate and
// victim_pool are ignored); target-label instances are dropped, so the result
// measures the attack alone. Refuses inputs already carrying poisoned=true.
Dataset build_poisoned_testset(const Dataset& d, const AttackSpec& spec);

}  // namespace zdefence
