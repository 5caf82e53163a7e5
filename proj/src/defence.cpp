#include "zdefence/defence.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace zdefence {

Strategy parse_strategy(std::string_view name) {
    if (name == "z_token") return Strategy::z_token;
    if (name == "z_tree") return Strategy::z_tree;
    if (name == "z_seq_tree_first") return Strategy::z_seq_tree_first;
    if (name == "z_seq_token_first") return Strategy::z_seq_token_first;
    if (name == "z_union") return Strategy::z_union;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::z_token: return "z_token";
        case Strategy::z_tree: return "z_tree";
        case Strategy::z_seq_tree_first: return "z_seq_tree_first";
        case Strategy::z_seq_token_first: return "z_seq_token_first";
        case Strategy::z_union: return "z_union";
    }
    throw std::logic_error("bad Strategy");
}

bool strategy_uses_trees(Strategy s) {
    return s != Strategy::z_token;
}

void DefenceSpec::validate() const {
    if (is_tree_kind(lexical_kind)) {
        throw ConfigError("lexical_kind must be unigram or bigram");
    }
    if (!is_tree_kind(tree_kind)) {
        throw ConfigError(
            "tree_kind must be ancestor_path or root_to_leaf_path");
    }
}

namespace {

struct StageOutcome {
    StageReport report;
    std::vector<bool> remove;  // parallel to the stage's input dataset
};

// One scan: build the table, flag outliers, mark carriers for removal.
StageOutcome run_stage(const Dataset& d, FeatureKind kind,
                       const DefenceSpec& spec, const std::string& name) {
    StageOutcome out;
    OccurrenceTable table = build_occurrence_table(d, kind);
    ZTable zt = build_z_table(table, spec.zconfig);
    FlagSet flags = flag_outliers(zt, spec.zconfig);

    out.report.name = name;
    out.report.kind = kind;
    out.report.z_mean = zt.mean;
    out.report.z_std = zt.stddev;
    out.report.threshold = flags.threshold;
    out.report.input_size = static_cast<std::int64_t>(d.instances.size());
    out.report.skipped_no_trees = table.skipped_no_trees;
    out.remove.assign(d.instances.size(), false);

    // flag index -> removal tally, keyed by (key, label)
    std::unordered_map<std::string, std::size_t> flag_index;
    out.report.flagged.reserve(flags.flagged.size());
    for (const auto& fs : flags.flagged) {
        flag_index[fs.key + "\x1f" + fs.label] = out.report.flagged.size();
        out.report.flagged.push_back({fs, 0});
    }
    if (flag_index.empty()) return out;

    for (std::size_t i = 0; i < d.instances.size(); ++i) {
        const LabeledInstance& inst = d.instances[i];
        bool hit = false;
        auto check = [&](const std::string& key, const std::string& label) {
            auto it = flag_index.find(key + "\x1f" + label);
            if (it != flag_index.end()) {
                ++out.report.flagged[it->second].removed_count;
                hit = true;
            }
        };
        for (const std::string& key : instance_features(inst, kind)) {
            if (spec.label_conditioned_removal) {
                check(key, inst.label);
            } else {
                // Any flagged label for this feature counts.
                for (const auto& label : d.label_space.labels()) {
                    check(key, label);
                }
            }
        }
        if (hit) {
            out.remove[i] = true;
            ++out.report.removed;
        }
    }
    return out;
}

Dataset drop_marked(const Dataset& d, const std::vector<bool>& remove,
                    std::set<std::string>& removed_ids) {
    Dataset out;
    out.label_space = d.label_space;
    for (std::size_t i = 0; i < d.instances.size(); ++i) {
        if (remove[i]) {
            removed_ids.insert(d.instances[i].id);
        } else {
            out.instances.push_back(d.instances[i]);
        }
    }
    return out;
}

std::int64_t tree_coverage(const Dataset& d) {
    std::int64_t covered = 0;
    for (const auto& inst : d.instances) {
        if (!inst.trees.empty()) ++covered;
    }
    return covered;
}

}  // namespace

std::pair<Dataset, FilterReport> filter_dataset(const Dataset& d,
                                                const DefenceSpec& spec) {
    spec.validate();
    if (d.instances.empty()) throw DataError("empty dataset");
    if (strategy_uses_trees(spec.strategy) && tree_coverage(d) == 0) {
        throw DataError("strategy " + strategy_name(spec.strategy) +
                        " requires instances with trees");
    }

    FilterReport report;
    report.strategy = spec.strategy;

    Dataset current = d;
    auto apply = [&](FeatureKind kind, const std::string& name) {
        StageOutcome stage = run_stage(current, kind, spec, name);
        current = drop_marked(current, stage.remove, report.removed_ids);
        report.stage_order.push_back(name);
        report.stages.push_back(std::move(stage.report));
    };

    switch (spec.strategy) {
        case Strategy::z_token:
            apply(spec.lexical_kind, "z_token");
            break;
        case Strategy::z_tree:
            apply(spec.tree_kind, "z_tree");
            break;
        case Strategy::z_seq_tree_first:
            apply(spec.tree_kind, "z_tree");
            apply(spec.lexical_kind, "z_token");
            break;
        case Strategy::z_seq_token_first:
            apply(spec.lexical_kind, "z_token");
            apply(spec.tree_kind, "z_tree");
            break;
        case Strategy::z_union: {
            StageOutcome tree_stage =
                run_stage(current, spec.tree_kind, spec, "z_tree");
            StageOutcome token_stage =
                run_stage(current, spec.lexical_kind, spec, "z_token");
            std::vector<bool> either(current.instances.size(), false);
            for (std::size_t i = 0; i < either.size(); ++i) {
                either[i] = tree_stage.remove[i] || token_stage.remove[i];
            }
            current = drop_marked(current, either, report.removed_ids);
            report.stage_order = {"z_tree", "z_token"};
            report.stages.push_back(std::move(tree_stage.report));
            report.stages.push_back(std::move(token_stage.report));
            break;
        }
    }

    report.kept = static_cast<std::int64_t>(current.instances.size());
    report.removed = static_cast<std::int64_t>(report.removed_ids.size());
    return {std::move(current), std::move(report)};
}

std::string explain_flags(const FilterReport& report) {
    std::vector<std::pair<std::string, const FlaggedFeatureReport*>> rows;
    for (const auto& stage : report.stages) {
        for (const auto& f : stage.flagged) {
            rows.emplace_back(feature_kind_name(stage.kind), &f);
        }
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second->stats.z != b.second->stats.z) {
            return a.second->stats.z > b.second->stats.z;
        }
        return a.second->stats.key < b.second->stats.key;
    });

    std::string out =
        "kind               key                              label        "
        "n       p_hat    z        removed\n";
    char buf[256];
    for (const auto& [kind, f] : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%-18s %-32s %-12s %-7lld %-8.4f %-8.3f %lld\n",
                      kind.c_str(), f->stats.key.c_str(),
                      f->stats.label.c_str(),
                      static_cast<long long>(f->stats.n), f->stats.p_hat,
                      f->stats.z, static_cast<long long>(f->removed_count));
        out += buf;
    }
    return out;
}

std::string filter_report_json(const FilterReport& report) {
    nlohmann::json j;
    j["strategy"] = strategy_name(report.strategy);
    j["stage_order"] = report.stage_order;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : report.stages) {
        nlohmann::json flagged = nlohmann::json::array();
        for (const auto& f : s.flagged) {
            flagged.push_back({{"key", f.stats.key},
                               {"label", f.stats.label},
                               {"n", f.stats.n},
                               {"p_hat", f.stats.p_hat},
                               {"z", f.stats.z},
                               {"removed", f.removed_count}});
        }
        stages.push_back({{"name", s.name},
                          {"kind", feature_kind_name(s.kind)},
                          {"z_mean", s.z_mean},
                          {"z_std", s.z_std},
                          {"threshold", s.threshold},
                          {"input_size", s.input_size},
                          {"removed", s.removed},
                          {"skipped_no_trees", s.skipped_no_trees},
                          {"flagged", flagged}});
    }
    j["stages"] = stages;
    j["removed_ids"] = report.removed_ids;
    j["kept"] = report.kept;
    j["removed"] = report.removed;
    j["keep_rate"] = report.keep_rate();
    return j.dump(2) + "\n";
}

}  // namespace zdefence
