#include "zdefence/zscore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

namespace zdefence {

Sidedness parse_sidedness(std::string_view name) {
    if (name == "positive_only") return Sidedness::positive_only;
    if (name == "two_sided") return Sidedness::two_sided;
    throw ConfigError("unknown sidedness '" + std::string(name) + "'");
}

SummaryOver parse_summary_over(std::string_view name) {
    if (name == "max_per_feature") return SummaryOver::max_per_feature;
    if (name == "all_pairs") return SummaryOver::all_pairs;
    throw ConfigError("unknown summary mode '" + std::string(name) + "'");
}

std::string sidedness_name(Sidedness s) {
    return s == Sidedness::positive_only ? "positive_only" : "two_sided";
}

std::string summary_over_name(SummaryOver s) {
    return s == SummaryOver::max_per_feature ? "max_per_feature" : "all_pairs";
}

void ZConfig::validate(std::size_t num_labels) const {
    if (num_labels < 2) {
        throw DataError("z-scores require at least 2 labels");
    }
    if (!(k_sigma >= 0.0)) throw ConfigError("k_sigma must be >= 0");
    if (min_n < 1) throw ConfigError("min_n must be >= 1");
    if (!prior.empty()) {
        if (prior.size() != num_labels) {
            throw ConfigError("prior has " + std::to_string(prior.size()) +
                              " entries for " + std::to_string(num_labels) +
                              " labels");
        }
        double sum = 0.0;
        for (double p : prior) {
            if (!(p > 0.0 && p < 1.0)) {
                throw ConfigError("prior entries must lie in (0,1)");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("prior must sum to 1");
        }
    }
}

double z_score(double p_hat, double prior_p, std::int64_t n) {
    if (!(prior_p > 0.0 && prior_p < 1.0)) {
        throw ConfigError("prior probability must lie in (0,1)");
    }
    if (n < 1) throw ConfigError("z_score requires n >= 1");
    return (p_hat - prior_p) /
           std::sqrt(prior_p * (1.0 - prior_p) / static_cast<double>(n));
}

namespace {

void sort_stats(std::vector<FeatureStats>& stats) {
    std::sort(stats.begin(), stats.end(),
              [](const FeatureStats& a, const FeatureStats& b) {
                  if (a.z != b.z) return a.z > b.z;
                  if (a.key != b.key) return a.key < b.key;
                  return a.label < b.label;
              });
}

}  // namespace

ZTable build_z_table(const OccurrenceTable& table, const ZConfig& cfg) {
    const std::size_t num_labels = table.label_space.size();
    cfg.validate(num_labels);

    std::vector<double> prior = cfg.prior;
    if (prior.empty()) {
        prior.assign(num_labels, 1.0 / static_cast<double>(num_labels));
    }

    ZTable zt;
    zt.kind = table.kind;
    zt.stats.reserve(table.counts.size() * num_labels);

    double sum = 0.0, sumsq = 0.0;
    for (const auto& [key, counts] : table.counts) {
        std::int64_t n = 0;
        for (std::int64_t c : counts) n += c;
        double max_z = -std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < num_labels; ++y) {
            FeatureStats fs;
            fs.key = key;
            fs.label = table.label_space.at(y);
            fs.n = n;
            fs.p_hat = static_cast<double>(counts[y]) / static_cast<double>(n);
            fs.prior_p = prior[y];
            fs.z = z_score(fs.p_hat, fs.prior_p, n);
            max_z = std::max(max_z, fs.z);
            if (cfg.summary_over == SummaryOver::all_pairs) {
                sum += fs.z;
                sumsq += fs.z * fs.z;
                ++zt.summary_count;
            }
            zt.stats.push_back(std::move(fs));
        }
        if (cfg.summary_over == SummaryOver::max_per_feature) {
            sum += max_z;
            sumsq += max_z * max_z;
            ++zt.summary_count;
        }
    }
    if (zt.summary_count > 0) {
        double cnt = static_cast<double>(zt.summary_count);
        zt.mean = sum / cnt;
        double var = sumsq / cnt - zt.mean * zt.mean;
        zt.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    sort_stats(zt.stats);
    return zt;
}

bool FlagSet::contains(const std::string& key,
                       const std::string& label) const {
    for (const auto& fs : flagged) {
        if (fs.key == key && fs.label == label) return true;
    }
    return false;
}

FlagSet flag_outliers(const ZTable& table, const ZConfig& cfg) {
    FlagSet out;
    out.kind = table.kind;
    out.threshold = table.mean + cfg.k_sigma * table.stddev;
    if (table.stddev == 0.0) {
        // Every z equal (or a single row): no outliers by definition.
        out.degenerate = true;
        return out;
    }
    for (const auto& fs : table.stats) {
        if (fs.n < cfg.min_n) continue;
        bool hit = cfg.sidedness == Sidedness::positive_only
                       ? fs.z >= out.threshold
                       : std::abs(fs.z - table.mean) >=
                             cfg.k_sigma * table.stddev;
        if (hit) out.flagged.push_back(fs);
    }
    return out;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string z_table_csv(const ZTable& table) {
    std::string out = "kind,key,label,n,p_hat,z\n";
    const std::string kind = feature_kind_name(table.kind);
    for (const auto& fs : table.stats) {
        out += kind + "," + csv_field(fs.key) + "," + csv_field(fs.label) +
               "," + std::to_string(fs.n) + "," + fmt_double(fs.p_hat) + "," +
               fmt_double(fs.z) + "\n";
    }
    return out;
}

std::string z_table_summary_json(const ZTable& table, std::size_t top_k) {
    nlohmann::json j;
    j["kind"] = feature_kind_name(table.kind);
    j["mean"] = table.mean;
    j["std"] = table.stddev;
    j["count"] = table.summary_count;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < table.stats.size() && i < top_k; ++i) {
        const FeatureStats& fs = table.stats[i];
        rows.push_back({{"key", fs.key},
                        {"label", fs.label},
                        {"n", fs.n},
                        {"p_hat", fs.p_hat},
                        {"z", fs.z}});
    }
    j["top_outliers"] = rows;
    return j.dump(2) + "\n";
}

}  // namespace zdefence
