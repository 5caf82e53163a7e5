#include "zdefence/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "zdefence/errors.hpp"
#include "zdefence/io.hpp"
#include "zdefence/rng.hpp"
#include <json.hpp>

namespace zdefence {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Config parsing is strict: unknown keys are rejected so a typo fails the run
// instead of silently falling back to a default.
void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const auto& k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("config: unknown key '" + where + key + "'");
        }
    }
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

std::int64_t as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw ConfigError("config: " + where + " must be an integer");
    }
    return v.get<std::int64_t>();
}

std::uint64_t as_seed(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() &&
        !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ConfigError("config: " + where +
                          " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw ConfigError("config: " + where + " must be a number");
    }
    return v.get<double>();
}

bool as_bool(const json& v, const std::string& where) {
    if (!v.is_boolean()) {
        throw ConfigError("config: " + where + " must be a boolean");
    }
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) {
        throw ConfigError("config: " + where + " must be a string");
    }
    return v.get<std::string>();
}

std::vector<std::string> as_string_array(const json& v,
                                         const std::string& where) {
    if (!v.is_array()) {
        throw ConfigError("config: " + where + " must be an array of strings");
    }
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(as_string(e, where + "[]"));
    return out;
}

std::vector<double> as_double_array(const json& v, const std::string& where) {
    if (!v.is_array()) {
        throw ConfigError("config: " + where + " must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_double(e, where + "[]"));
    return out;
}

void parse_gen(const json& g, RunConfig& cfg) {
    reject_unknown(g,
                   {"classes", "train_instances", "test_instances",
                    "vocab_size", "zipf_exponent", "class_signal_words",
                    "min_len", "max_len", "emit_trees"},
                   "gen.");
    if (const json* v = find(g, "classes"))
        cfg.gen.num_classes = static_cast<int>(as_int(*v, "gen.classes"));
    if (const json* v = find(g, "train_instances"))
        cfg.gen.num_instances =
            static_cast<int>(as_int(*v, "gen.train_instances"));
    if (const json* v = find(g, "test_instances"))
        cfg.test_instances = as_int(*v, "gen.test_instances");
    if (const json* v = find(g, "vocab_size"))
        cfg.gen.vocab_size = static_cast<int>(as_int(*v, "gen.vocab_size"));
    if (const json* v = find(g, "zipf_exponent"))
        cfg.gen.zipf_exponent = as_double(*v, "gen.zipf_exponent");
    if (const json* v = find(g, "class_signal_words"))
        cfg.gen.class_signal_words =
            static_cast<int>(as_int(*v, "gen.class_signal_words"));
    if (const json* v = find(g, "min_len"))
        cfg.gen.min_len = static_cast<int>(as_int(*v, "gen.min_len"));
    if (const json* v = find(g, "max_len"))
        cfg.gen.max_len = static_cast<int>(as_int(*v, "gen.max_len"));
    if (const json* v = find(g, "emit_trees"))
        cfg.gen.emit_trees = as_bool(*v, "gen.emit_trees");
}

void parse_attack(const json& a, RunConfig& cfg) {
    reject_unknown(a,
                   {"kind", "rate", "target_label", "triggers", "sentence",
                    "template", "victim_pool"},
                   "attack.");
    if (const json* v = find(a, "kind"))
        cfg.attack.kind = parse_attack_kind(as_string(*v, "attack.kind"));
    if (const json* v = find(a, "rate"))
        cfg.attack.rate = as_double(*v, "attack.rate");
    if (const json* v = find(a, "target_label"))
        cfg.attack.target_label = as_string(*v, "attack.target_label");
    if (const json* v = find(a, "triggers"))
        cfg.attack.badnet_triggers = as_string_array(*v, "attack.triggers");
    if (const json* v = find(a, "sentence"))
        cfg.attack.insert_sentence = as_string(*v, "attack.sentence");
    if (const json* v = find(a, "template"))
        cfg.attack.tree_template = as_string(*v, "attack.template");
    if (const json* v = find(a, "victim_pool"))
        cfg.attack.victim_pool =
            parse_victim_pool(as_string(*v, "attack.victim_pool"));
}

void parse_defence(const json& d, RunConfig& cfg) {
    reject_unknown(d,
                   {"strategy", "lexical_kind", "tree_kind", "k_sigma",
                    "min_n", "sidedness", "summary_over",
                    "label_conditioned_removal", "prior"},
                   "defence.");
    if (const json* v = find(d, "strategy"))
        cfg.defence.strategy = parse_strategy(as_string(*v, "defence.strategy"));
    if (const json* v = find(d, "lexical_kind"))
        cfg.defence.lexical_kind =
            parse_feature_kind(as_string(*v, "defence.lexical_kind"));
    if (const json* v = find(d, "tree_kind"))
        cfg.defence.tree_kind =
            parse_feature_kind(as_string(*v, "defence.tree_kind"));
    if (const json* v = find(d, "k_sigma"))
        cfg.defence.zconfig.k_sigma = as_double(*v, "defence.k_sigma");
    if (const json* v = find(d, "min_n"))
        cfg.defence.zconfig.min_n = as_int(*v, "defence.min_n");
    if (const json* v = find(d, "sidedness"))
        cfg.defence.zconfig.sidedness =
            parse_sidedness(as_string(*v, "defence.sidedness"));
    if (const json* v = find(d, "summary_over"))
        cfg.defence.zconfig.summary_over =
            parse_summary_over(as_string(*v, "defence.summary_over"));
    if (const json* v = find(d, "label_conditioned_removal"))
        cfg.defence.label_conditioned_removal =
            as_bool(*v, "defence.label_conditioned_removal");
    if (const json* v = find(d, "prior"))
        cfg.defence.zconfig.prior = as_double_array(*v, "defence.prior");
}

std::string hash_hex(std::string_view bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

ordered_json detection_to_json(const DetectionMetrics& d) {
    ordered_json j = {
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
        j["far"] = d.far();
    } else {
        j["far"] = nullptr;
    }
    return j;
}

}  // namespace

void RunConfig::validate() const {
    gen.validate();
    if (test_instances < 1) {
        throw ConfigError("config: gen.test_instances must be >= 1");
    }
    attack.validate();
    defence.validate();
    defence.zconfig.validate(static_cast<std::size_t>(gen.num_classes));
    if (strategy_uses_trees(defence.strategy) && !gen.emit_trees) {
        throw ConfigError("config: strategy '" +
                          strategy_name(defence.strategy) +
                          "' needs tree features; set gen.emit_trees");
    }
    // Generated labels are class0..classN-1; the target must be one of them.
    bool known_target = false;
    for (int c = 0; c < gen.num_classes; ++c) {
        if (attack.target_label == "class" + std::to_string(c)) {
            known_target = true;
            break;
        }
    }
    if (!known_target) {
        throw ConfigError("config: attack.target_label '" +
                          attack.target_label +
                          "' is not a generated class label");
    }
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: root must be an object");
    reject_unknown(j, {"schema_version", "seed", "gen", "attack", "defence"},
                   "");

    const json* version = find(j, "schema_version");
    if (!version) throw ConfigError("config: schema_version is required");
    if (as_int(*version, "schema_version") != RunConfig::kSchemaVersion) {
        throw ConfigError("config: unsupported schema_version (expected " +
                          std::to_string(RunConfig::kSchemaVersion) + ")");
    }

    RunConfig cfg;
    if (const json* v = find(j, "seed")) cfg.seed = as_seed(*v, "seed");
    if (const json* v = find(j, "gen")) {
        if (!v->is_object()) throw ConfigError("config: gen must be an object");
        parse_gen(*v, cfg);
    }
    if (const json* v = find(j, "attack")) {
        if (!v->is_object())
            throw ConfigError("config: attack must be an object");
        parse_attack(*v, cfg);
    }
    if (const json* v = find(j, "defence")) {
        if (!v->is_object())
            throw ConfigError("config: defence must be an object");
        parse_defence(*v, cfg);
    }
    if (cfg.attack.target_label.empty()) cfg.attack.target_label = "class0";
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_file(path));
}

std::string run_config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["schema_version"] = RunConfig::kSchemaVersion;
    j["seed"] = cfg.seed;
    j["gen"] = {
        {"classes", cfg.gen.num_classes},
        {"train_instances", cfg.gen.num_instances},
        {"test_instances", cfg.test_instances},
        {"vocab_size", cfg.gen.vocab_size},
        {"zipf_exponent", cfg.gen.zipf_exponent},
        {"class_signal_words", cfg.gen.class_signal_words},
        {"min_len", cfg.gen.min_len},
        {"max_len", cfg.gen.max_len},
        {"emit_trees", cfg.gen.emit_trees},
    };
    j["attack"] = {
        {"kind", attack_kind_name(cfg.attack.kind)},
        {"rate", cfg.attack.rate},
        {"target_label", cfg.attack.target_label},
        {"triggers", cfg.attack.badnet_triggers},
        {"sentence", cfg.attack.insert_sentence},
        {"template", cfg.attack.tree_template},
        {"victim_pool", victim_pool_name(cfg.attack.victim_pool)},
    };
    j["defence"] = {
        {"strategy", strategy_name(cfg.defence.strategy)},
        {"lexical_kind", feature_kind_name(cfg.defence.lexical_kind)},
        {"tree_kind", feature_kind_name(cfg.defence.tree_kind)},
        {"k_sigma", cfg.defence.zconfig.k_sigma},
        {"min_n", cfg.defence.zconfig.min_n},
        {"sidedness", sidedness_name(cfg.defence.zconfig.sidedness)},
        {"summary_over", summary_over_name(cfg.defence.zconfig.summary_over)},
        {"label_conditioned_removal", cfg.defence.label_conditioned_removal},
        {"prior", cfg.defence.zconfig.prior},
    };
    return j.dump(2) + "\n";
}

void apply_overrides(RunConfig& cfg, const RunOverrides& ov) {
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.rate) cfg.attack.rate = *ov.rate;
    if (ov.attack) cfg.attack.kind = parse_attack_kind(*ov.attack);
    if (ov.strategy) cfg.defence.strategy = parse_strategy(*ov.strategy);
    if (ov.k_sigma) cfg.defence.zconfig.k_sigma = *ov.k_sigma;
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::string& outdir) {
    cfg.validate();  // nothing is written until the whole config checks out

    SynthConfig gen_train = cfg.gen;
    gen_train.seed = derive_seed(cfg.seed, "gen.train");
    SynthConfig gen_test = cfg.gen;
    gen_test.num_instances = static_cast<int>(cfg.test_instances);
    gen_test.seed = derive_seed(cfg.seed, "gen.test");
    AttackSpec attack = cfg.attack;
    attack.seed = derive_seed(cfg.seed, "attack");

    Dataset clean_train = generate_synthetic(gen_train);
    Dataset clean_test = generate_synthetic(gen_test);
    auto [poisoned_train, poison_report] = apply_attack(clean_train, attack);
    Dataset poisoned_test = build_poisoned_testset(clean_test, attack);
    auto [filtered_train, filter_report] =
        filter_dataset(poisoned_train, cfg.defence);

    PipelineResult res;
    res.detection = detection_metrics(poisoned_train, filter_report.removed_ids);

    AttackMetrics before = attack_metrics(train_surrogate(poisoned_train),
                                          clean_test, poisoned_test);
    AttackMetrics after = attack_metrics(train_surrogate(filtered_train),
                                         clean_test, poisoned_test);
    AttackMetrics clean_base = attack_metrics(train_surrogate(clean_train),
                                              clean_test, poisoned_test);
    res.asr_before = before.asr;
    res.cacc_before = before.cacc;
    res.asr_after = after.asr;
    res.cacc_after = after.cacc;
    res.basr = clean_base.asr;  // attack success with no poison seen at all
    res.cacc_clean = clean_base.cacc;

    fs::path dir(outdir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + outdir +
                      "': " + ec.message());
    }

    write_file_atomic((dir / "config.json").string(),
                      run_config_to_json(cfg));
    save_dataset(clean_train, (dir / "clean_train.jsonl").string(),
                 Format::jsonl);
    save_dataset(clean_test, (dir / "clean_test.jsonl").string(),
                 Format::jsonl);
    save_dataset(poisoned_train, (dir / "poisoned_train.jsonl").string(),
                 Format::jsonl);
    write_file_atomic((dir / "poison_report.json").string(),
                      poison_report_json(poison_report));
    save_dataset(poisoned_test, (dir / "poisoned_test.jsonl").string(),
                 Format::jsonl);
    save_dataset(filtered_train, (dir / "filtered_train.jsonl").string(),
                 Format::jsonl);
    write_file_atomic((dir / "filter_report.json").string(),
                      filter_report_json(filter_report));

    ordered_json metrics;
    metrics["detection"] = detection_to_json(res.detection);
    metrics["attack"] = {
        {"before_filter", {{"asr", res.asr_before}, {"cacc", res.cacc_before}}},
        {"after_filter", {{"asr", res.asr_after}, {"cacc", res.cacc_after}}},
        {"clean_baseline", {{"basr", res.basr}, {"cacc", res.cacc_clean}}},
    };
    write_file_atomic((dir / "metrics.json").string(), metrics.dump(2) + "\n");

    // The manifest carries content hashes only. No timestamps, so a rerun of
    // the same config produces a byte-identical directory.
    static const char* kArtifacts[] = {
        "config.json",        "clean_train.jsonl",    "clean_test.jsonl",
        "poisoned_train.jsonl", "poison_report.json", "poisoned_test.jsonl",
        "filtered_train.jsonl", "filter_report.json", "metrics.json",
    };
    ordered_json manifest;
    manifest["schema_version"] = RunConfig::kSchemaVersion;
    manifest["seed"] = cfg.seed;
    manifest["config_hash"] = hash_hex(run_config_to_json(cfg));
    ordered_json artifacts;
    for (const char* name : kArtifacts) {
        artifacts[name] = hash_hex(read_file((dir / name).string()));
    }
    manifest["artifacts"] = artifacts;
    write_file_atomic((dir / "manifest.json").string(),
                      manifest.dump(2) + "\n");
    return res;
}

}  // namespace zdefence
