#include "zdefence/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "zdefence/errors.hpp"
#include <json.hpp>

namespace zdefence {

DetectionMetrics detection_metrics(const Dataset& ground_truth,
                                   const std::set<std::string>& removed_ids) {
    DetectionMetrics m;
    for (const auto& inst : ground_truth.instances) {
        if (!inst.poisoned.has_value()) {
            throw DataError("instance '" + inst.id +
                            "' lacks a poisoned flag; detection metrics need "
                            "labelled ground truth");
        }
        bool removed = removed_ids.count(inst.id) > 0;
        if (*inst.poisoned) {
            ++m.poison_total;
            if (!removed) ++m.poison_kept;
        } else {
            ++m.clean_total;
            if (removed) ++m.clean_removed;
        }
        if (removed) {
            ++m.removed;
        } else {
            ++m.kept;
        }
    }
    return m;
}

SurrogateModel train_surrogate(const Dataset& d) {
    const auto& labels = d.label_space;
    if (labels.size() < 2) {
        throw DataError("surrogate training requires at least 2 labels");
    }
    if (d.instances.empty()) {
        throw DataError("surrogate training requires a non-empty dataset");
    }

    std::size_t num_labels = labels.size();
    std::vector<std::int64_t> instance_counts(num_labels, 0);
    std::vector<std::int64_t> token_totals(num_labels, 0);
    std::unordered_map<std::string, std::vector<std::int64_t>> token_counts;

    for (const auto& inst : d.instances) {
        auto y_opt = labels.index_of(inst.label);
        if (!y_opt) {
            throw DataError("label '" + inst.label +
                            "' outside the dataset label space");
        }
        std::size_t y = *y_opt;
        ++instance_counts[y];
        for (const auto& tok : inst.tokens) {
            auto [it, inserted] = token_counts.try_emplace(
                tok, std::vector<std::int64_t>(num_labels, 0));
            ++it->second[y];
            ++token_totals[y];
        }
    }
    for (std::size_t y = 0; y < num_labels; ++y) {
        if (instance_counts[y] == 0) {
            throw DataError("label '" + labels.at(y) +
                            "' has no training instances");
        }
    }

    SurrogateModel model;
    model.label_space = labels;
    model.log_prior.resize(num_labels);
    for (std::size_t y = 0; y < num_labels; ++y) {
        model.log_prior[y] =
            std::log(static_cast<double>(instance_counts[y]) /
                     static_cast<double>(d.instances.size()));
    }
    double vocab = static_cast<double>(token_counts.size());
    for (const auto& [tok, counts] : token_counts) {
        std::vector<double> ll(num_labels);
        for (std::size_t y = 0; y < num_labels; ++y) {
            ll[y] = std::log((static_cast<double>(counts[y]) + 1.0) /
                             (static_cast<double>(token_totals[y]) + vocab));
        }
        model.log_likelihood.emplace(tok, std::move(ll));
    }
    return model;
}

std::string SurrogateModel::predict(
    const std::vector<std::string>& tokens) const {
    std::vector<double> score = log_prior;
    for (const auto& tok : tokens) {
        auto it = log_likelihood.find(tok);
        if (it == log_likelihood.end()) continue;
        for (std::size_t y = 0; y < score.size(); ++y) {
            score[y] += it->second[y];
        }
    }
    std::size_t best = 0;
    for (std::size_t y = 1; y < score.size(); ++y) {
        if (score[y] > score[best]) best = y;
    }
    return label_space.at(best);
}

AttackMetrics attack_metrics(const SurrogateModel& m, const Dataset& clean_test,
                             const Dataset& poisoned_test) {
    if (clean_test.instances.empty()) {
        throw DataError("attack metrics require a non-empty clean test set");
    }
    if (poisoned_test.instances.empty()) {
        throw DataError("attack metrics require a non-empty poisoned test set");
    }
    const std::string& target = poisoned_test.instances.front().label;
    for (const auto& inst : poisoned_test.instances) {
        if (inst.label != target) {
            throw DataError(
                "poisoned test set mixes labels; expected a uniform target");
        }
    }

    AttackMetrics out;
    std::int64_t correct = 0;
    for (const auto& inst : clean_test.instances) {
        if (m.predict(inst.tokens) == inst.label) ++correct;
    }
    out.cacc = 100.0 * static_cast<double>(correct) /
               static_cast<double>(clean_test.instances.size());

    std::int64_t hits = 0;
    for (const auto& inst : poisoned_test.instances) {
        if (m.predict(inst.tokens) == target) ++hits;
    }
    out.asr = 100.0 * static_cast<double>(hits) /
              static_cast<double>(poisoned_test.instances.size());
    return out;
}

std::string format_percent(double value, bool defined) {
    if (!defined) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

std::string metrics_json(const MetricsBundle& m) {
    nlohmann::ordered_json j;
    const auto& d = m.detection;
    j["detection"] = {
        {"clean_total", d.clean_total},
        {"poison_total", d.poison_total},
        {"clean_removed", d.clean_removed},
        {"poison_kept", d.poison_kept},
        {"kept", d.kept},
        {"removed", d.removed},
        {"frr", d.frr()},
        {"keep_rate", d.keep_rate()},
    };
    if (d.far_defined()) {
        j["detection"]["far"] = d.far();
    } else {
        j["detection"]["far"] = nullptr;
    }
    if (m.attack.has_value()) {
        j["attack"] = {
            {"asr", m.attack->asr},
            {"cacc", m.attack->cacc},
        };
        if (m.attack->basr.has_value()) {
            j["attack"]["basr"] = *m.attack->basr;
        }
    }
    return j.dump(2) + "\n";
}

std::string metrics_csv_header() {
    return "run_id,frr,far,keep_rate,asr,cacc,basr\n";
}

std::string metrics_csv_row(const std::string& run_id,
                            const MetricsBundle& m) {
    const auto& d = m.detection;
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.6f", d.keep_rate());
    std::string row = run_id;
    row += ',' + format_percent(d.frr());
    row += ',' + format_percent(d.far(), d.far_defined());
    row += ',';
    row += rate;
    if (m.attack.has_value()) {
        row += ',' + format_percent(m.attack->asr);
        row += ',' + format_percent(m.attack->cacc);
        row += ',' + format_percent(m.attack->basr.value_or(0.0),
                                    m.attack->basr.has_value());
    } else {
        row += ",n/a,n/a,n/a";
    }
    row += '\n';
    return row;
}

}  // namespace zdefence
