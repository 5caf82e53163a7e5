// zdefence: spurious-correlation z-score defence against dirty-label
// poisoning of text classifiers. Subcommands cover each pipeline stage plus
// an end-to-end run driven by a JSON config.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include "zdefence/attacks.hpp"
#include "zdefence/corpus.hpp"
#include "zdefence/defence.hpp"
#include "zdefence/errors.hpp"
#include "zdefence/eval.hpp"
#include "zdefence/features.hpp"
#include "zdefence/io.hpp"
#include "zdefence/pipeline.hpp"
#include "zdefence/zscore.hpp"

namespace {

using namespace zdefence;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

Format format_from_flag(const std::string& name) {
    return parse_format(name);  // ConfigError on anything but jsonl/tsv
}

Dataset load_input(const std::string& path, const std::string& format,
                   const std::string& labels_path = "") {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("input file not found: " + path);
    }
    return load_dataset(path, format_from_flag(format), labels_path);
}

struct GenArgs {
    std::string output;
    std::string format = "jsonl";
    std::string labels_out;
    SynthConfig cfg;
};

void add_gen(CLI::App& app, GenArgs& args) {
    CLI::App* cmd = app.add_subcommand("gen", "Generate a synthetic corpus");
    cmd->add_option("--output", args.output, "Output dataset path")
        ->required();
    cmd->add_option("--format", args.format, "jsonl or tsv");
    cmd->add_option("--labels-out", args.labels_out,
                    "Also write the label space, one label per line");
    cmd->add_option("--classes", args.cfg.num_classes, "Number of labels");
    cmd->add_option("--instances", args.cfg.num_instances, "Instance count");
    cmd->add_option("--vocab-size", args.cfg.vocab_size, "Vocabulary size");
    cmd->add_option("--zipf-exponent", args.cfg.zipf_exponent,
                    "Skew of the token frequency distribution");
    cmd->add_option("--signal-words", args.cfg.class_signal_words,
                    "Label-correlated words per class");
    cmd->add_option("--min-len", args.cfg.min_len, "Minimum token count");
    cmd->add_option("--max-len", args.cfg.max_len, "Maximum token count");
    cmd->add_option("--seed", args.cfg.seed, "RNG seed");
    cmd->add_flag("--trees", args.cfg.emit_trees,
                  "Attach a constituency tree to every instance");
    cmd->callback([&args] {
        Dataset d = generate_synthetic(args.cfg);
        save_dataset(d, args.output, format_from_flag(args.format),
                     args.labels_out);
    });
}

struct PoisonArgs {
    std::string input;
    std::string output;
    std::string format = "jsonl";
    std::string report;
    std::string triggers;
    std::string kind = "badnet";
    std::string pool = "non_target_only";
    bool testset = false;
    AttackSpec spec;
};

void add_poison(CLI::App& app, PoisonArgs& args) {
    CLI::App* cmd =
        app.add_subcommand("poison", "Apply a dirty-label poisoning attack");
    cmd->add_option("--input", args.input, "Input dataset")->required();
    cmd->add_option("--output", args.output, "Poisoned dataset path")
        ->required();
    cmd->add_option("--format", args.format, "jsonl or tsv");
    cmd->add_option("--report", args.report, "Write a poison report JSON");
    cmd->add_option("--attack", args.kind,
                    "badnet, insertsent, or syntactic_template");
    cmd->add_option("--rate", args.spec.rate, "Fraction of the victim pool");
    cmd->add_option("--target", args.spec.target_label, "Target label")
        ->required();
    cmd->add_option("--seed", args.spec.seed, "RNG seed");
    cmd->add_option("--triggers", args.triggers,
                    "Comma-separated trigger tokens (badnet)");
    cmd->add_option("--sentence", args.spec.insert_sentence,
                    "Sentence to insert (insertsent)");
    cmd->add_option("--template", args.spec.tree_template,
                    "Bracketed tree skeleton (syntactic_template)");
    cmd->add_option("--victim-pool", args.pool, "non_target_only or all");
    cmd->add_flag("--testset", args.testset,
                  "Transform every non-target instance and drop the target "
                  "label (evaluation set)");
    cmd->callback([&args] {
        args.spec.kind = parse_attack_kind(args.kind);
        args.spec.victim_pool = parse_victim_pool(args.pool);
        if (!args.triggers.empty()) {
            args.spec.badnet_triggers.clear();
            std::size_t start = 0;
            while (start <= args.triggers.size()) {
                std::size_t comma = args.triggers.find(',', start);
                if (comma == std::string::npos) comma = args.triggers.size();
                std::string t = args.triggers.substr(start, comma - start);
                if (!t.empty()) args.spec.badnet_triggers.push_back(t);
                start = comma + 1;
            }
        }
        Dataset d = load_input(args.input, args.format);
        Format out_format = format_from_flag(args.format);
        if (args.testset) {
            Dataset out = build_poisoned_testset(d, args.spec);
            save_dataset(out, args.output, out_format);
            return;
        }
        auto [out, report] = apply_attack(d, args.spec);
        save_dataset(out, args.output, out_format);
        if (!args.report.empty()) {
            write_file_atomic(args.report, poison_report_json(report));
        }
    });
}

struct AnalyzeArgs {
    std::string input;
    std::string format = "jsonl";
    std::string kind = "unigram";
    std::string output;
    std::string summary;
    std::string counts;
    std::size_t top = 50;
    ZConfig zconfig;
};

void add_analyze(CLI::App& app, AnalyzeArgs& args) {
    CLI::App* cmd = app.add_subcommand(
        "analyze", "Score feature-label correlations on a dataset");
    cmd->add_option("--input", args.input, "Input dataset")->required();
    cmd->add_option("--format", args.format, "jsonl or tsv");
    cmd->add_option("--kind", args.kind,
                    "unigram, bigram, ancestor_path, or root_to_leaf_path");
    cmd->add_option("--output", args.output, "Write the z-table CSV here");
    cmd->add_option("--summary", args.summary, "Write a summary JSON here");
    cmd->add_option("--counts", args.counts,
                    "Write the raw occurrence-count CSV here");
    cmd->add_option("--top", args.top, "Outliers listed in the summary");
    cmd->add_option("--k-sigma", args.zconfig.k_sigma, "Outlier threshold");
    cmd->add_option("--min-n", args.zconfig.min_n,
                    "Minimum occurrences for an outlier");
    cmd->callback([&args] {
        Dataset d = load_input(args.input, args.format);
        FeatureKind kind = parse_feature_kind(args.kind);
        args.zconfig.validate(d.label_space.size());
        OccurrenceTable table = build_occurrence_table(d, kind);
        ZTable z = build_z_table(table, args.zconfig);
        std::string csv = z_table_csv(z);
        if (args.output.empty()) {
            std::fputs(csv.c_str(), stdout);
        } else {
            write_file_atomic(args.output, csv);
        }
        if (!args.summary.empty()) {
            write_file_atomic(args.summary, z_table_summary_json(z, args.top));
        }
        if (!args.counts.empty()) {
            write_file_atomic(args.counts, occurrence_table_csv(table));
        }
    });
}

struct FilterArgs {
    std::string input;
    std::string output;
    std::string format = "jsonl";
    std::string report;
    std::string flags_csv;
    std::string strategy = "z_token";
    std::string lexical_kind = "unigram";
    std::string tree_kind = "ancestor_path";
    bool unconditional = false;
    bool explain = false;
    DefenceSpec spec;
};

void add_filter(CLI::App& app, FilterArgs& args) {
    CLI::App* cmd =
        app.add_subcommand("filter", "Remove suspected poisoned instances");
    cmd->add_option("--input", args.input, "Input dataset")->required();
    cmd->add_option("--output", args.output, "Filtered dataset path")
        ->required();
    cmd->add_option("--format", args.format, "jsonl or tsv");
    cmd->add_option("--report", args.report, "Write a filter report JSON");
    cmd->add_option("--strategy", args.strategy,
                    "z_token, z_tree, z_seq_tree_first, z_seq_token_first, "
                    "or z_union");
    cmd->add_option("--lexical-kind", args.lexical_kind, "unigram or bigram");
    cmd->add_option("--tree-kind", args.tree_kind,
                    "ancestor_path or root_to_leaf_path");
    cmd->add_option("--k-sigma", args.spec.zconfig.k_sigma,
                    "Outlier threshold");
    cmd->add_option("--min-n", args.spec.zconfig.min_n,
                    "Minimum occurrences for an outlier");
    cmd->add_flag("--unconditional", args.unconditional,
                  "Remove on a flagged feature regardless of instance label");
    cmd->add_option("--flags-csv", args.flags_csv,
                    "Write the flagged-feature table here");
    cmd->add_flag("--explain", args.explain,
                  "Print the flagged-feature table");
    cmd->callback([&args] {
        args.spec.strategy = parse_strategy(args.strategy);
        args.spec.lexical_kind = parse_feature_kind(args.lexical_kind);
        args.spec.tree_kind = parse_feature_kind(args.tree_kind);
        args.spec.label_conditioned_removal = !args.unconditional;
        args.spec.validate();
        Dataset d = load_input(args.input, args.format);
        args.spec.zconfig.validate(d.label_space.size());
        auto [filtered, report] = filter_dataset(d, args.spec);
        save_dataset(filtered, args.output, format_from_flag(args.format));
        if (!args.report.empty()) {
            write_file_atomic(args.report, filter_report_json(report));
        }
        if (!args.flags_csv.empty() || args.explain) {
            std::string table = explain_flags(report);
            if (!args.flags_csv.empty())
                write_file_atomic(args.flags_csv, table);
            if (args.explain) std::fputs(table.c_str(), stdout);
        }
    });
}

struct EvaluateArgs {
    std::string ground_truth;
    std::string filtered;
    std::string clean_test;
    std::string poisoned_test;
    std::string clean_train;
    std::string format = "jsonl";
    std::string output;
    std::string csv;
    std::string run_id = "run";
};

void add_evaluate(CLI::App& app, EvaluateArgs& args) {
    CLI::App* cmd = app.add_subcommand(
        "evaluate", "Score a filtered dataset against ground truth");
    cmd->add_option("--ground-truth", args.ground_truth,
                    "Poisoned dataset the filter ran on")
        ->required();
    cmd->add_option("--filtered", args.filtered, "Filter output dataset")
        ->required();
    cmd->add_option("--clean-test", args.clean_test,
                    "Clean test set (enables surrogate metrics)");
    cmd->add_option("--poisoned-test", args.poisoned_test,
                    "Poisoned test set (enables surrogate metrics)");
    cmd->add_option("--clean-train", args.clean_train,
                    "Clean training set (enables the BASR baseline)");
    cmd->add_option("--format", args.format, "jsonl or tsv");
    cmd->add_option("--output", args.output, "Write metrics JSON here");
    cmd->add_option("--csv", args.csv, "Append a one-row CSV here");
    cmd->add_option("--run-id", args.run_id, "Row identifier for --csv");
    cmd->callback([&args] {
        Dataset truth = load_input(args.ground_truth, args.format);
        Dataset filtered = load_input(args.filtered, args.format);
        std::set<std::string> removed;
        std::set<std::string> kept_ids;
        for (const auto& inst : filtered.instances) kept_ids.insert(inst.id);
        for (const auto& inst : truth.instances) {
            if (!kept_ids.count(inst.id)) removed.insert(inst.id);
        }
        MetricsBundle bundle;
        bundle.detection = detection_metrics(truth, removed);
        if (!args.clean_test.empty() != !args.poisoned_test.empty()) {
            throw ConfigError(
                "--clean-test and --poisoned-test must be given together");
        }
        if (!args.clean_test.empty()) {
            Dataset clean_test = load_input(args.clean_test, args.format);
            Dataset poisoned_test =
                load_input(args.poisoned_test, args.format);
            AttackMetrics m = attack_metrics(train_surrogate(filtered),
                                             clean_test, poisoned_test);
            if (!args.clean_train.empty()) {
                Dataset clean_train = load_input(args.clean_train, args.format);
                m.basr = attack_metrics(train_surrogate(clean_train),
                                        clean_test, poisoned_test)
                             .asr;
            }
            bundle.attack = m;
        }
        std::string body = metrics_json(bundle);
        if (args.output.empty()) {
            std::fputs(body.c_str(), stdout);
        } else {
            write_file_atomic(args.output, body);
        }
        if (!args.csv.empty()) {
            std::string row = metrics_csv_row(args.run_id, bundle);
            if (!std::filesystem::exists(args.csv)) {
                write_file_atomic(args.csv, metrics_csv_header() + row);
            } else {
                write_file_atomic(args.csv, read_file(args.csv) + row);
            }
        }
    });
}

struct RunArgs {
    std::string config;
    std::string outdir;
    RunOverrides overrides;
};

void add_run(CLI::App& app, RunArgs& args) {
    CLI::App* cmd = app.add_subcommand(
        "run", "Full pipeline: generate, poison, filter, evaluate");
    cmd->add_option("--config", args.config, "Run config JSON")->required();
    cmd->add_option("--outdir", args.outdir, "Artifact directory")
        ->required();
    cmd->add_option("--seed", args.overrides.seed, "Override config seed");
    cmd->add_option("--rate", args.overrides.rate, "Override poison rate");
    cmd->add_option("--attack", args.overrides.attack,
                    "Override attack kind");
    cmd->add_option("--strategy", args.overrides.strategy,
                    "Override defence strategy");
    cmd->add_option("--k-sigma", args.overrides.k_sigma,
                    "Override outlier threshold");
    cmd->callback([&args] {
        if (!std::filesystem::exists(args.config)) {
            throw ConfigError("config file not found: " + args.config);
        }
        RunConfig cfg = load_run_config(args.config);
        apply_overrides(cfg, args.overrides);
        PipelineResult res = run_pipeline(cfg, args.outdir);
        std::printf("frr=%s far=%s asr_before=%s asr_after=%s basr=%s\n",
                    format_percent(res.detection.frr()).c_str(),
                    format_percent(res.detection.far(),
                                   res.detection.far_defined())
                        .c_str(),
                    format_percent(res.asr_before).c_str(),
                    format_percent(res.asr_after).c_str(),
                    format_percent(res.basr).c_str());
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Detects and removes dirty-label poisoning from text classification "
        "corpora via feature-label z-score outliers"};
    app.require_subcommand(1);

    GenArgs gen_args;
    PoisonArgs poison_args;
    AnalyzeArgs analyze_args;
    FilterArgs filter_args;
    EvaluateArgs evaluate_args;
    RunArgs run_args;
    add_gen(app, gen_args);
    add_poison(app, poison_args);
    add_analyze(app, analyze_args);
    add_filter(app, filter_args);
    add_evaluate(app, evaluate_args);
    add_run(app, run_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        // CLI11 returns 0 for --help/--version; anything else is usage error.
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitData;
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitOk;
}
