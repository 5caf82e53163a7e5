// Python bindings for the core operations: corpus generation, attacks,
// z-score analysis, filtering, and evaluation. Datasets cross the boundary
// as opaque handles; reports cross as plain dicts/JSON strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zdefence/attacks.hpp"
#include "zdefence/corpus.hpp"
#include "zdefence/defence.hpp"
#include "zdefence/errors.hpp"
#include "zdefence/eval.hpp"
#include "zdefence/features.hpp"
#include "zdefence/pipeline.hpp"
#include "zdefence/treebank.hpp"
#include "zdefence/zscore.hpp"

namespace py = pybind11;
using namespace zdefence;

namespace {

py::dict detection_dict(const DetectionMetrics& m) {
    py::dict d;
    d["clean_total"] = m.clean_total;
    d["poison_total"] = m.poison_total;
    d["clean_removed"] = m.clean_removed;
    d["poison_kept"] = m.poison_kept;
    d["kept"] = m.kept;
    d["removed"] = m.removed;
    d["frr"] = m.frr();
    d["far"] = m.far_defined() ? py::cast(m.far()) : py::none();
    d["keep_rate"] = m.keep_rate();
    return d;
}

ZConfig make_zconfig(double k_sigma, std::int64_t min_n,
                     const std::string& sidedness,
                     const std::string& summary_over,
                     const std::vector<double>& prior) {
    ZConfig z;
    z.k_sigma = k_sigma;
    z.min_n = min_n;
    z.sidedness = parse_sidedness(sidedness);
    z.summary_over = parse_summary_over(summary_over);
    z.prior = prior;
    return z;
}

}  // namespace

PYBIND11_MODULE(_zdefence, m) {
    m.doc() = "z-score defence against dirty-label text poisoning";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("tokenize", &tokenize, py::arg("text"));

    py::class_<ConstituencyTree>(m, "Tree")
        .def(py::init([](const std::string& text) {
                 return parse_tree(text);
             }),
             py::arg("text"))
        .def("__str__",
             [](const ConstituencyTree& t) { return serialize_tree(t); })
        .def("serialize",
             [](const ConstituencyTree& t) { return serialize_tree(t); })
        .def("node_count",
             [](const ConstituencyTree& t) { return node_count(t); })
        .def("terminals",
             [](const ConstituencyTree& t) { return tree_terminals(t); })
        .def("ancestor_paths",
             [](const ConstituencyTree& t) { return ancestor_paths(t); })
        .def("root_to_leaf_paths",
             [](const ConstituencyTree& t) { return root_to_leaf_paths(t); })
        .def("preterminal_count",
             [](const ConstituencyTree& t) { return preterminal_count(t); });

    py::class_<LabeledInstance>(m, "Instance")
        .def_readonly("id", &LabeledInstance::id)
        .def_readonly("text", &LabeledInstance::text)
        .def_readonly("tokens", &LabeledInstance::tokens)
        .def_readonly("label", &LabeledInstance::label)
        .def_property_readonly("poisoned",
                               [](const LabeledInstance& i) -> py::object {
                                   if (!i.poisoned.has_value())
                                       return py::none();
                                   return py::cast(*i.poisoned);
                               })
        .def_property_readonly("trees", [](const LabeledInstance& i) {
            std::vector<std::string> out;
            for (const auto& t : i.trees) out.push_back(serialize_tree(t));
            return out;
        });

    py::class_<Dataset>(m, "Dataset")
        .def("__len__", [](const Dataset& d) { return d.size(); })
        .def("__getitem__",
             [](const Dataset& d, std::size_t i) -> const LabeledInstance& {
                 if (i >= d.size()) throw py::index_error();
                 return d.instances[i];
             },
             py::return_value_policy::reference_internal)
        .def_property_readonly("labels", [](const Dataset& d) {
            return d.label_space.labels();
        });

    m.def(
        "generate_synthetic",
        [](int classes, int instances, int vocab_size, double zipf_exponent,
           int class_signal_words, int min_len, int max_len,
           std::uint64_t seed, bool emit_trees) {
            SynthConfig cfg;
            cfg.num_classes = classes;
            cfg.num_instances = instances;
            cfg.vocab_size = vocab_size;
            cfg.zipf_exponent = zipf_exponent;
            cfg.class_signal_words = class_signal_words;
            cfg.min_len = min_len;
            cfg.max_len = max_len;
            cfg.seed = seed;
            cfg.emit_trees = emit_trees;
            return generate_synthetic(cfg);
        },
        py::arg("classes") = 2, py::arg("instances") = 1000,
        py::arg("vocab_size") = 1000, py::arg("zipf_exponent") = 1.0,
        py::arg("class_signal_words") = 50, py::arg("min_len") = 6,
        py::arg("max_len") = 18, py::arg("seed") = 1,
        py::arg("emit_trees") = false);

    m.def(
        "load_dataset",
        [](const std::string& path, const std::string& format,
           const std::string& labels_path) {
            return load_dataset(path, parse_format(format), labels_path);
        },
        py::arg("path"), py::arg("format") = "jsonl",
        py::arg("labels_path") = "");
    m.def(
        "save_dataset",
        [](const Dataset& d, const std::string& path,
           const std::string& format) {
            save_dataset(d, path, parse_format(format));
        },
        py::arg("dataset"), py::arg("path"), py::arg("format") = "jsonl");

    m.def("z_score", &z_score, py::arg("p_hat"), py::arg("prior_p"),
          py::arg("n"));

    m.def(
        "z_table",
        [](const Dataset& d, const std::string& kind, double k_sigma,
           std::int64_t min_n, const std::string& sidedness,
           const std::string& summary_over, const std::vector<double>& prior) {
            ZConfig z = make_zconfig(k_sigma, min_n, sidedness, summary_over,
                                     prior);
            z.validate(d.label_space.size());
            OccurrenceTable table =
                build_occurrence_table(d, parse_feature_kind(kind));
            ZTable zt = build_z_table(table, z);
            py::list rows;
            for (const auto& s : zt.stats) {
                rows.append(py::make_tuple(s.key, s.label, s.n, s.p_hat, s.z));
            }
            py::dict out;
            out["kind"] = kind;
            out["mean"] = zt.mean;
            out["std"] = zt.stddev;
            out["rows"] = rows;
            return out;
        },
        py::arg("dataset"), py::arg("kind") = "unigram",
        py::arg("k_sigma") = 18.0, py::arg("min_n") = 3,
        py::arg("sidedness") = "positive_only",
        py::arg("summary_over") = "max_per_feature",
        py::arg("prior") = std::vector<double>{});

    m.def(
        "apply_attack",
        [](const Dataset& d, const std::string& kind, double rate,
           const std::string& target_label, std::uint64_t seed,
           const std::vector<std::string>& triggers,
           const std::string& sentence, const std::string& tree_template,
           const std::string& victim_pool) {
            AttackSpec spec;
            spec.kind = parse_attack_kind(kind);
            spec.rate = rate;
            spec.target_label = target_label;
            spec.seed = seed;
            if (!triggers.empty()) spec.badnet_triggers = triggers;
            if (!sentence.empty()) spec.insert_sentence = sentence;
            if (!tree_template.empty()) spec.tree_template = tree_template;
            spec.victim_pool = parse_victim_pool(victim_pool);
            auto [out, report] = apply_attack(d, spec);
            return py::make_tuple(out, poison_report_json(report));
        },
        py::arg("dataset"), py::arg("kind") = "badnet", py::arg("rate") = 0.2,
        py::arg("target_label") = std::string(), py::arg("seed") = 1,
        py::arg("triggers") = std::vector<std::string>{},
        py::arg("sentence") = std::string(),
        py::arg("tree_template") = std::string(),
        py::arg("victim_pool") = "non_target_only");

    m.def(
        "build_poisoned_testset",
        [](const Dataset& d, const std::string& kind,
           const std::string& target_label, std::uint64_t seed) {
            AttackSpec spec;
            spec.kind = parse_attack_kind(kind);
            spec.target_label = target_label;
            spec.seed = seed;
            return build_poisoned_testset(d, spec);
        },
        py::arg("dataset"), py::arg("kind") = "badnet",
        py::arg("target_label") = std::string(), py::arg("seed") = 1);

    m.def(
        "filter_dataset",
        [](const Dataset& d, const std::string& strategy,
           const std::string& lexical_kind, const std::string& tree_kind,
           double k_sigma, std::int64_t min_n, bool label_conditioned,
           const std::string& sidedness, const std::string& summary_over,
           const std::vector<double>& prior) {
            DefenceSpec spec;
            spec.strategy = parse_strategy(strategy);
            spec.lexical_kind = parse_feature_kind(lexical_kind);
            spec.tree_kind = parse_feature_kind(tree_kind);
            spec.zconfig = make_zconfig(k_sigma, min_n, sidedness,
                                        summary_over, prior);
            spec.label_conditioned_removal = label_conditioned;
            spec.validate();
            spec.zconfig.validate(d.label_space.size());
            auto [filtered, report] = filter_dataset(d, spec);
            py::dict rep;
            rep["strategy"] = strategy_name(report.strategy);
            rep["removed_ids"] = report.removed_ids;
            rep["kept"] = report.kept;
            rep["removed"] = report.removed;
            rep["keep_rate"] = report.keep_rate();
            rep["json"] = filter_report_json(report);
            return py::make_tuple(filtered, rep);
        },
        py::arg("dataset"), py::arg("strategy") = "z_token",
        py::arg("lexical_kind") = "unigram",
        py::arg("tree_kind") = "ancestor_path", py::arg("k_sigma") = 18.0,
        py::arg("min_n") = 3, py::arg("label_conditioned") = true,
        py::arg("sidedness") = "positive_only",
        py::arg("summary_over") = "max_per_feature",
        py::arg("prior") = std::vector<double>{});

    m.def(
        "detection_metrics",
        [](const Dataset& ground_truth,
           const std::set<std::string>& removed_ids) {
            return detection_dict(detection_metrics(ground_truth, removed_ids));
        },
        py::arg("ground_truth"), py::arg("removed_ids"));

    py::class_<SurrogateModel>(m, "SurrogateModel")
        .def("predict", [](const SurrogateModel& model,
                           const std::vector<std::string>& tokens) {
            return model.predict(tokens);
        });
    m.def("train_surrogate", &train_surrogate, py::arg("dataset"));
    m.def(
        "attack_metrics",
        [](const SurrogateModel& model, const Dataset& clean_test,
           const Dataset& poisoned_test) {
            AttackMetrics am = attack_metrics(model, clean_test, poisoned_test);
            py::dict d;
            d["asr"] = am.asr;
            d["cacc"] = am.cacc;
            return d;
        },
        py::arg("model"), py::arg("clean_test"), py::arg("poisoned_test"));

    m.def(
        "run_pipeline",
        [](const std::string& config_json, const std::string& outdir) {
            RunConfig cfg = run_config_from_json(config_json);
            PipelineResult res = run_pipeline(cfg, outdir);
            py::dict d;
            d["detection"] = detection_dict(res.detection);
            d["asr_before"] = res.asr_before;
            d["cacc_before"] = res.cacc_before;
            d["asr_after"] = res.asr_after;
            d["cacc_after"] = res.cacc_after;
            d["basr"] = res.basr;
            d["cacc_clean"] = res.cacc_clean;
            return d;
        },
        py::arg("config_json"), py::arg("outdir"));
}
