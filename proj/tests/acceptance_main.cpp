// Acceptance checks for the end-to-end toolkit. Each check prints one
// pass/fail line; the exit code is the number of failures. Scenario corpora
// are fixed (seed 11) so the expected numbers are stable across runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zdefence/attacks.hpp"
#include "zdefence/defence.hpp"
#include "zdefence/eval.hpp"
#include "zdefence/pipeline.hpp"
#include "zdefence/rng.hpp"

using namespace zdefence;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const std::string& id, const std::string& what, bool ok,
            const std::string& detail) {
    std::printf("%-4s %-58s %s%s%s\n", id.c_str(), what.c_str(),
                ok ? "pass" : "FAIL", detail.empty() ? "" : "  ",
                detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0,
                double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

SynthConfig base_gen(int instances, bool trees) {
    SynthConfig cfg;
    cfg.num_classes = 2;
    cfg.num_instances = instances;
    cfg.vocab_size = 1000;
    cfg.zipf_exponent = 0.7;
    cfg.class_signal_words = 150;
    cfg.min_len = 5;
    cfg.max_len = 9;
    cfg.emit_trees = trees;
    return cfg;
}

struct ScenarioResult {
    DetectionMetrics detection;
    FilterReport report;
    double asr_before = 0.0;
    double cacc_before = 0.0;
    double asr_after = 0.0;
    double cacc_after = 0.0;
    double basr = 0.0;
};

// gen -> poison -> filter -> evaluate, with the same per-stage seed
// derivation the pipeline uses.
ScenarioResult run_scenario(std::uint64_t seed, int train_n, int test_n,
                            bool trees, AttackSpec attack,
                            const DefenceSpec& defence) {
    SynthConfig gen_train = base_gen(train_n, trees);
    gen_train.seed = derive_seed(seed, "gen.train");
    SynthConfig gen_test = base_gen(test_n, trees);
    gen_test.seed = derive_seed(seed, "gen.test");
    attack.seed = derive_seed(seed, "attack");

    Dataset clean_train = generate_synthetic(gen_train);
    Dataset clean_test = generate_synthetic(gen_test);
    auto [poisoned_train, poison_report] = apply_attack(clean_train, attack);
    Dataset poisoned_test = build_poisoned_testset(clean_test, attack);
    auto [filtered_train, filter_report] =
        filter_dataset(poisoned_train, defence);

    ScenarioResult res;
    res.detection =
        detection_metrics(poisoned_train, filter_report.removed_ids);
    res.report = std::move(filter_report);

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
    res.basr = clean_base.asr;
    return res;
}

AttackSpec badnet_attack(double rate) {
    AttackSpec spec;
    spec.kind = AttackKind::badnet;
    spec.rate = rate;
    spec.target_label = "class0";
    return spec;
}

DefenceSpec defence_for(Strategy strategy, double k_sigma) {
    DefenceSpec spec;
    spec.strategy = strategy;
    spec.zconfig.k_sigma = k_sigma;
    return spec;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path.string() + ">";
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---- individual criteria ----

ScenarioResult check_a1() {
    auto start = std::chrono::steady_clock::now();
    ScenarioResult r = run_scenario(11, 2000, 400, false, badnet_attack(0.2),
                                    defence_for(Strategy::z_token, 4.0));
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    bool ok = r.detection.far() == 0.0 && r.detection.frr() <= 5.0 &&
              secs < 5.0;
    report("A1", "rare-token attack: lexical filter catches all victims", ok,
           fmt("far=%.1f frr=%.1f runtime=%.2fs", r.detection.far(),
               r.detection.frr(), secs));
    return r;
}

void check_a2() {
    AttackSpec attack;
    attack.kind = AttackKind::insertsent;
    attack.rate = 0.2;
    attack.target_label = "class0";
    // All four sentence tokens live inside the benign vocabulary, above the
    // class-signal band, so clean carriers exist and a small FRR is expected.
    attack.insert_sentence = "w350 w420 w500 w610";
    ScenarioResult r = run_scenario(11, 2000, 400, false, attack,
                                    defence_for(Strategy::z_token, 4.0));
    bool ok = r.detection.far() == 0.0 && r.detection.frr() <= 10.0;
    report("A2", "fixed-sentence attack: in-vocabulary tokens still flagged",
           ok, fmt("far=%.1f frr=%.1f", r.detection.far(), r.detection.frr()));
}

void check_a3() {
    AttackSpec attack;
    attack.kind = AttackKind::syntactic_template;
    attack.rate = 0.2;
    attack.target_label = "class0";
    ScenarioResult r = run_scenario(11, 2000, 400, true, attack,
                                    defence_for(Strategy::z_tree, 0.7));
    bool ok = r.detection.far() <= 5.0 && r.detection.frr() <= 30.0;
    report("A3", "template attack: tree-path filter flags the clause shape",
           ok, fmt("far=%.1f frr=%.1f", r.detection.far(), r.detection.frr()));
}

void check_a4() {
    double far_at_1pct = 0.0;
    bool ok = true;
    std::string detail;
    for (double rate : {0.01, 0.05, 0.10, 0.20}) {
        ScenarioResult r =
            run_scenario(11, 4000, 400, false, badnet_attack(rate),
                         defence_for(Strategy::z_token, 4.0));
        if (rate >= 0.05) {
            if (r.detection.far() > 1.0) ok = false;
        } else {
            far_at_1pct = r.detection.far();  // reported, not bounded
        }
        detail += fmt("%.0f%%:far=%.1f ", 100.0 * rate, r.detection.far());
    }
    detail += fmt("(1%% unbounded, far=%.1f)", far_at_1pct);
    report("A4", "rate sweep: FAR <= 1 at every rate of 5% and above", ok,
           detail);
}

void check_a5() {
    ScenarioResult r =
        run_scenario(11, 4000, 400, true, badnet_attack(0.2),
                     defence_for(Strategy::z_seq_tree_first, 4.0));
    bool trained = r.asr_before >= 95.0;
    bool defused = r.asr_after - r.basr <= 10.0;
    bool accuracy_kept = r.cacc_before - r.cacc_after <= 2.0;
    report("A5", "surrogate trend: filtering collapses attack success",
           trained && defused && accuracy_kept,
           fmt("asr_before=%.1f asr_after=%.1f basr=%.1f", r.asr_before,
               r.asr_after, r.basr) +
               fmt(" cacc_before=%.1f cacc_after=%.1f", r.cacc_before,
                   r.cacc_after));
}

void check_a6() {
    Rng rng(606);
    bool counts_ok = true;
    bool z_ok = true;
    for (int iter = 0; iter < 200; ++iter) {
        SynthConfig cfg;
        cfg.num_classes = 2 + static_cast<int>(rng.below(2));
        cfg.num_instances =
            static_cast<int>(rng.range(cfg.num_classes * 2, 50));
        cfg.vocab_size = 50;
        cfg.zipf_exponent = 0.8;
        cfg.class_signal_words = 5;
        cfg.min_len = 2;
        cfg.max_len = 7;
        cfg.seed = rng.next();
        Dataset d = generate_synthetic(cfg);

        OccurrenceTable table =
            build_occurrence_table(d, FeatureKind::unigram);
        ZTable zt = build_z_table(table, ZConfig{});

        // Brute force: recount every (feature, label) pair by scanning the
        // corpus, then recompute z from the closed form.
        std::map<std::pair<std::string, std::string>, const FeatureStats*>
            rows;
        for (const auto& fs : zt.stats) rows[{fs.key, fs.label}] = &fs;

        std::set<std::string> universe;
        for (const auto& inst : d.instances) {
            for (const auto& k : instance_features(inst, FeatureKind::unigram))
                universe.insert(k);
        }
        double prior = 1.0 / static_cast<double>(d.label_space.size());
        for (const std::string& key : universe) {
            std::int64_t n = 0;
            std::map<std::string, std::int64_t> per_label;
            for (const auto& inst : d.instances) {
                auto feats = instance_features(inst, FeatureKind::unigram);
                bool has = false;
                for (const auto& f : feats) has = has || f == key;
                if (has) {
                    ++n;
                    ++per_label[inst.label];
                }
            }
            for (const auto& label : d.label_space.labels()) {
                auto it = rows.find({key, label});
                if (it == rows.end()) {
                    counts_ok = false;
                    continue;
                }
                const FeatureStats& fs = *it->second;
                std::int64_t count = per_label.count(label)
                                         ? per_label[label]
                                         : 0;
                if (fs.n != n) counts_ok = false;
                double p_hat =
                    static_cast<double>(count) / static_cast<double>(n);
                if (fs.p_hat != p_hat) counts_ok = false;
                double z = (p_hat - prior) /
                           std::sqrt(prior * (1.0 - prior) /
                                     static_cast<double>(n));
                double tol = 1e-12 * std::max(1.0, std::abs(z));
                if (std::abs(fs.z - z) > tol) z_ok = false;
            }
        }
    }
    report("A6", "z-tables equal a brute-force recount on 200 random corpora",
           counts_ok && z_ok,
           counts_ok ? (z_ok ? "" : "z mismatch") : "count mismatch");
}

void check_a7() {
    bool ok = std::abs(z_score(1.0, 0.5, 100) - 10.0) < 1e-9;
    for (std::int64_t n : {std::int64_t{1}, std::int64_t{10},
                           std::int64_t{1000}}) {
        if (z_score(0.5, 0.5, n) != 0.0) ok = false;
    }
    report("A7", "closed-form spot checks: z(1,.5,100)=10, z(.5,.5,n)=0", ok,
           "");
}

void check_a8() {
    std::vector<TreeTemplate> templates;
    for (const auto& [skeleton, weight] : benign_tree_templates()) {
        templates.push_back(parse_template(skeleton));
    }
    templates.push_back(parse_template("S (SBAR) (,) (NP) (VP) (.)"));

    Rng rng(808);
    bool ok = true;
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<std::string> tokens;
        std::int64_t len = rng.range(1, 16);
        for (std::int64_t i = 0; i < len; ++i) {
            tokens.push_back("w" + std::to_string(rng.below(40)));
        }
        const TreeTemplate& tmpl = templates[rng.below(templates.size())];
        ConstituencyTree t = build_template_tree(tmpl, tokens);
        if (!(parse_tree(serialize_tree(t)) == t)) ok = false;
        if (ancestor_paths(t).size() != preterminal_count(t)) ok = false;
        if (tree_terminals(t) != tokens) ok = false;
    }
    report("A8", "1000 random template trees round-trip through the parser",
           ok, "");
}

void check_a9() {
    RunConfig cfg = run_config_from_json(R"({
      "schema_version": 1,
      "seed": 11,
      "gen": {"train_instances": 400, "test_instances": 120,
              "vocab_size": 300, "zipf_exponent": 0.7,
              "class_signal_words": 40, "min_len": 5, "max_len": 9},
      "attack": {"kind": "badnet", "rate": 0.2, "target_label": "class0"},
      "defence": {"strategy": "z_token", "k_sigma": 4.0}
    })");

    fs::path dir_a = fs::path("test_tmp") / "acceptance_run_a";
    fs::path dir_b = fs::path("test_tmp") / "acceptance_run_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    run_pipeline(cfg, dir_a.string());
    run_pipeline(cfg, dir_b.string());

    bool ok = true;
    std::string bad;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const std::string name = entry.path().filename().string();
        if (read_bytes(entry.path()) != read_bytes(dir_b / name)) {
            ok = false;
            bad += name + " ";
        }
    }
    std::size_t count_a = std::distance(fs::directory_iterator(dir_a),
                                        fs::directory_iterator{});
    std::size_t count_b = std::distance(fs::directory_iterator(dir_b),
                                        fs::directory_iterator{});
    if (count_a != count_b || count_a == 0) ok = false;
    report("A9", "identical configs produce bit-identical run directories",
           ok, bad.empty() ? "" : "differs: " + bad);
}

void check_a10(const ScenarioResult& a1) {
    const FilterReport& rep = a1.report;
    double expected = static_cast<double>(rep.kept) /
                      static_cast<double>(rep.kept + rep.removed);
    bool rate_ok = rep.keep_rate() == expected;

    std::int64_t poison_removed =
        a1.detection.poison_total - a1.detection.poison_kept;
    std::int64_t accounted = poison_removed + a1.detection.clean_removed;
    bool count_ok = std::llabs(rep.removed - accounted) <= 1;
    report("A10", "keep-rate accounting matches the removal ledger",
           rate_ok && count_ok,
           fmt("keep_rate=%.6f removed=%.0f accounted=%.0f",
               rep.keep_rate(), static_cast<double>(rep.removed),
               static_cast<double>(accounted)));
}

}  // namespace

int main() {
    ScenarioResult a1 = check_a1();
    check_a2();
    check_a3();
    check_a4();
    check_a5();
    check_a6();
    check_a7();
    check_a8();
    check_a9();
    check_a10(a1);

    if (failures == 0) {
        std::printf("all acceptance checks passed\n");
    } else {
        std::printf("%d acceptance check(s) failed\n", failures);
    }
    return failures;
}
