#include "zdefence/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "zdefence/io.hpp"
#include "zdefence/rng.hpp"

namespace zdefence {

using nlohmann::json;

LabelSpace::LabelSpace(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (l.empty()) throw DataError("empty label in label space");
        if (!seen.insert(l).second) {
            throw DataError("duplicate label in label space: " + l);
        }
    }
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) return i;
    }
    return std::nullopt;
}

void Dataset::validate() const {
    std::set<std::string> ids;
    for (const auto& inst : instances) {
        if (!ids.insert(inst.id).second) {
            throw DataError("duplicate instance id: " + inst.id);
        }
        if (!label_space.contains(inst.label)) {
            throw DataError("instance " + inst.id + " has label '" +
                            inst.label + "' outside the label space");
        }
        if (inst.poisoned.value_or(false) && !inst.meta.count("attack")) {
            throw DataError("instance " + inst.id +
                            " is poisoned but records no attack kind");
        }
    }
}

Format parse_format(std::string_view name) {
    if (name == "jsonl") return Format::jsonl;
    if (name == "tsv") return Format::tsv;
    throw ConfigError("unknown format '" + std::string(name) +
                      "' (expected jsonl or tsv)");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            flush();
            out.push_back(std::string(1, static_cast<char>(c)));
        } else {
            cur += static_cast<char>(std::tolower(c));
        }
    }
    flush();
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) s += ' ';
        s += tokens[i];
    }
    return s;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::string blob = read_file(path);
    std::vector<std::string> lines;
    std::string cur;
    for (char c : blob) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isspace(c);
    });
}

LabeledInstance parse_jsonl_record(const std::string& line, std::size_t ln) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError("line " + std::to_string(ln) + ": bad JSON: " +
                        e.what());
    }
    if (!j.is_object()) {
        throw DataError("line " + std::to_string(ln) + ": record is not an object");
    }
    auto need_string = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string()) {
            throw DataError("line " + std::to_string(ln) +
                            ": missing or non-string '" + key + "'");
        }
        return j[key].get<std::string>();
    };
    LabeledInstance inst;
    inst.id = need_string("id");
    inst.text = need_string("text");
    inst.label = need_string("label");
    inst.tokens = tokenize(inst.text);
    if (j.contains("tree")) {
        const json& t = j["tree"];
        auto add_tree = [&](const json& v) {
            if (!v.is_string()) {
                throw DataError("line " + std::to_string(ln) +
                                ": tree entries must be strings");
            }
            try {
                inst.trees.push_back(parse_tree(v.get<std::string>()));
            } catch (const DataError& e) {
                throw DataError("line " + std::to_string(ln) + ": " + e.what());
            }
        };
        if (t.is_array()) {
            for (const json& v : t) add_tree(v);
        } else {
            add_tree(t);
        }
    }
    if (j.contains("poisoned")) {
        if (!j["poisoned"].is_boolean()) {
            throw DataError("line " + std::to_string(ln) +
                            ": 'poisoned' must be a boolean");
        }
        inst.poisoned = j["poisoned"].get<bool>();
    }
    if (j.contains("meta")) {
        if (!j["meta"].is_object()) {
            throw DataError("line " + std::to_string(ln) +
                            ": 'meta' must be an object");
        }
        for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it) {
            if (!it.value().is_string()) {
                throw DataError("line " + std::to_string(ln) +
                                ": meta values must be strings");
            }
            inst.meta[it.key()] = it.value().get<std::string>();
        }
    }
    return inst;
}

LabeledInstance parse_tsv_record(const std::string& line, std::size_t ln) {
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            cols.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cols.push_back(cur);
    if (cols.size() != 3) {
        throw DataError("line " + std::to_string(ln) + ": expected 3 "
                        "tab-separated columns (id, label, text), got " +
                        std::to_string(cols.size()));
    }
    if (cols[0].empty()) {
        throw DataError("line " + std::to_string(ln) + ": empty id");
    }
    if (cols[1].empty()) {
        throw DataError("line " + std::to_string(ln) + ": empty label");
    }
    LabeledInstance inst;
    inst.id = cols[0];
    inst.label = cols[1];
    inst.text = cols[2];
    inst.tokens = tokenize(inst.text);
    return inst;
}

}  // namespace

Dataset load_dataset(const std::string& path, Format format,
                     const std::string& labels_path) {
    Dataset d;
    bool explicit_labels = !labels_path.empty();
    if (explicit_labels) {
        std::vector<std::string> labels;
        for (const std::string& line : read_lines(labels_path)) {
            if (!blank(line)) labels.push_back(line);
        }
        d.label_space = LabelSpace(std::move(labels));
    }

    std::vector<std::string> inferred;
    std::set<std::string> inferred_seen;
    std::size_t ln = 0;
    for (const std::string& line : read_lines(path)) {
        ++ln;
        if (blank(line)) continue;
        LabeledInstance inst = format == Format::jsonl
                                   ? parse_jsonl_record(line, ln)
                                   : parse_tsv_record(line, ln);
        if (explicit_labels && !d.label_space.contains(inst.label)) {
            throw DataError("line " + std::to_string(ln) + ": unknown label '" +
                            inst.label + "'");
        }
        if (!explicit_labels && inferred_seen.insert(inst.label).second) {
            inferred.push_back(inst.label);
        }
        d.instances.push_back(std::move(inst));
    }
    if (d.instances.empty()) throw DataError("empty dataset: " + path);
    if (!explicit_labels) d.label_space = LabelSpace(std::move(inferred));
    d.validate();
    return d;
}

namespace {

std::string jsonl_record(const LabeledInstance& inst) {
    json j;
    j["id"] = inst.id;
    j["text"] = inst.text;
    j["label"] = inst.label;
    if (inst.trees.size() == 1) {
        j["tree"] = serialize_tree(inst.trees[0]);
    } else if (inst.trees.size() > 1) {
        json arr = json::array();
        for (const auto& t : inst.trees) arr.push_back(serialize_tree(t));
        j["tree"] = arr;
    }
    if (inst.poisoned.has_value()) j["poisoned"] = *inst.poisoned;
    if (!inst.meta.empty()) {
        json m = json::object();
        for (const auto& [k, v] : inst.meta) m[k] = v;
        j["meta"] = m;
    }
    return j.dump();
}

std::string tsv_record(const LabeledInstance& inst) {
    if (!inst.trees.empty() || inst.poisoned.has_value() ||
        !inst.meta.empty()) {
        throw DataError("instance " + inst.id +
                        " carries trees/poisoned/meta, not representable "
                        "in tsv");
    }
    for (const std::string* f : {&inst.id, &inst.label, &inst.text}) {
        if (f->find('\t') != std::string::npos ||
            f->find('\n') != std::string::npos) {
            throw DataError("instance " + inst.id +
                            " contains a tab or newline, not representable "
                            "in tsv");
        }
    }
    return inst.id + "\t" + inst.label + "\t" + inst.text;
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path, Format format,
                  const std::string& labels_path) {
    std::string out;
    for (const auto& inst : d.instances) {
        out += format == Format::jsonl ? jsonl_record(inst) : tsv_record(inst);
        out += '\n';
    }
    write_file_atomic(path, out);
    if (!labels_path.empty()) {
        std::string labels;
        for (const auto& l : d.label_space.labels()) {
            labels += l;
            labels += '\n';
        }
        write_file_atomic(labels_path, labels);
    }
}

void SynthConfig::validate() const {
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (num_instances < 1) throw ConfigError("num_instances must be >= 1");
    if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
    if (zipf_exponent <= 0.0) throw ConfigError("zipf_exponent must be > 0");
    if (class_signal_words < 0) {
        throw ConfigError("class_signal_words must be >= 0");
    }
    if (min_len < 1 || min_len > max_len) {
        throw ConfigError("length range must satisfy 1 <= min_len <= max_len");
    }
    if (static_cast<long>(class_signal_words) * num_classes >= vocab_size) {
        throw ConfigError(
            "class_signal_words * num_classes must be < vocab_size");
    }
}

const std::vector<std::pair<std::string, double>>& benign_tree_templates() {
    static const std::vector<std::pair<std::string, double>> kTemplates = {
        {"S (NP) (VP) (.)", 0.4},
        {"S (NP) (ADJP) (.)", 0.3},
        {"S (VP) (PP) (.)", 0.2},
        {"FRAG (NP) (ADJP)", 0.1},
    };
    return kTemplates;
}

namespace {

// How strongly a signal word may separate its class, measured as the
// z-statistic it would reach in a clean corpus of this size. Kept mild so the
// correlations resemble ordinary topical skew rather than planted triggers.
constexpr double kSignalTargetZ = 2.6;
constexpr int kSignalRankOffset = 40;  // keep the most common words neutral

std::string pad_number(std::size_t value, std::size_t width) {
    std::string s = std::to_string(value);
    return std::string(width < s.size() ? 0 : width - s.size(), '0') + s;
}

// Containment probability a word with per-token rate r reaches in an
// instance of expected length len.
double containment(double rate, double len) {
    return 1.0 - std::exp(-len * rate);
}

// Smallest own-class containment c0 giving the target z, by bisection.
double solve_containment(double z_target, double c_other, int num_classes,
                         double per_class, double prior) {
    auto z_of = [&](double c0) {
        double denom = c0 + (num_classes - 1) * c_other;
        double p_hat = c0 / denom;
        double n = per_class * denom;
        if (n < 1.0) n = 1.0;
        return (p_hat - prior) / std::sqrt(prior * (1.0 - prior) / n);
    };
    double lo = c_other, hi = 0.999;
    if (z_of(hi) < z_target) return hi;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (z_of(mid) < z_target ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();

    const int C = cfg.num_classes;
    const int V = cfg.vocab_size;
    const int K = cfg.class_signal_words;
    const double mean_len = 0.5 * (cfg.min_len + cfg.max_len);
    const double per_class = static_cast<double>(cfg.num_instances) / C;
    const double prior = 1.0 / C;

    // Zipfian base distribution over ranks 0..V-1.
    std::vector<double> zipf(V);
    double norm = 0.0;
    for (int r = 0; r < V; ++r) {
        zipf[r] = std::pow(r + 1, -cfg.zipf_exponent);
        norm += zipf[r];
    }
    for (double& p : zipf) p /= norm;
    std::vector<double> zipf_cdf(V);
    double acc = 0.0;
    for (int r = 0; r < V; ++r) zipf_cdf[r] = (acc += zipf[r]);

    // Interleaved band of signal ranks, away from the head of the vocabulary.
    const int offset = std::min(kSignalRankOffset, V - C * K);
    std::vector<std::vector<int>> signal_ranks(C);
    for (int c = 0; c < C; ++c) {
        for (int j = 0; j < K; ++j) signal_ranks[c].push_back(offset + j * C + c);
    }

    // Per-word boost rates solved so each signal word lands near the target
    // z in expectation. Two rounds: the second accounts for the share of
    // tokens diverted away from the background distribution.
    std::vector<std::vector<double>> boost(C);
    std::vector<double> pi(C, 0.0);
    double bg_mult = 1.0;
    for (int round = 0; round < 2 && K > 0; ++round) {
        double pi_sum = 0.0;
        for (int c = 0; c < C; ++c) {
            boost[c].assign(K, 0.0);
            double total = 0.0;
            for (int j = 0; j < K; ++j) {
                double base_rate = bg_mult * zipf[signal_ranks[c][j]];
                double c_other = containment(base_rate, mean_len);
                double c_own = solve_containment(kSignalTargetZ, c_other, C,
                                                 per_class, prior);
                double rate_own = -std::log(1.0 - c_own) / mean_len;
                boost[c][j] = std::max(0.0, rate_own - base_rate);
                total += boost[c][j];
            }
            // A class never spends more than half its tokens on signal words.
            if (total > 0.5) {
                for (double& b : boost[c]) b *= 0.5 / total;
                total = 0.5;
            }
            pi[c] = total;
            pi_sum += total;
        }
        bg_mult = 1.0 - pi_sum / C;
    }
    std::vector<std::vector<double>> signal_cdf(C);
    for (int c = 0; c < C; ++c) {
        if (pi[c] <= 0.0) continue;
        signal_cdf[c].resize(K);
        double a = 0.0;
        for (int j = 0; j < K; ++j) {
            signal_cdf[c][j] = (a += boost[c][j] / pi[c]);
        }
    }

    std::vector<TreeTemplate> templates;
    std::vector<double> template_cdf;
    if (cfg.emit_trees) {
        double a = 0.0;
        for (const auto& [skeleton, weight] : benign_tree_templates()) {
            templates.push_back(parse_template(skeleton));
            template_cdf.push_back(a += weight);
        }
        template_cdf.back() = 1.0;
    }

    const std::size_t id_width = std::to_string(cfg.num_instances).size();
    const std::size_t word_width = std::to_string(V - 1).size();

    Rng rng(cfg.seed);
    Dataset d;
    std::vector<std::string> labels;
    for (int c = 0; c < C; ++c) labels.push_back("class" + std::to_string(c));
    d.label_space = LabelSpace(labels);

    for (int i = 0; i < cfg.num_instances; ++i) {
        const int c = i % C;
        LabeledInstance inst;
        inst.id = "i" + pad_number(i, id_width);
        inst.label = labels[c];
        const std::int64_t len = rng.range(cfg.min_len, cfg.max_len);
        inst.tokens.reserve(len);
        for (std::int64_t p = 0; p < len; ++p) {
            int rank;
            if (pi[c] > 0.0 && rng.real01() < pi[c]) {
                rank = signal_ranks[c][rng.pick_cdf(signal_cdf[c])];
            } else {
                rank = static_cast<int>(rng.pick_cdf(zipf_cdf));
            }
            inst.tokens.push_back("w" + pad_number(rank, word_width));
        }
        inst.text = join_tokens(inst.tokens);
        if (cfg.emit_trees) {
            std::size_t which = rng.pick_cdf(template_cdf);
            inst.trees.push_back(
                build_template_tree(templates[which], inst.tokens));
        }
        d.instances.push_back(std::move(inst));
    }
    return d;
}

}  // namespace zdefence
