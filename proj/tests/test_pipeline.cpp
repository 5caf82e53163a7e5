#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "zdefence/pipeline.hpp"

using namespace zdefence;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// Small but non-trivial: enough signal for the filter to catch the triggers.
std::string mini_config() {
    return R"({
      "schema_version": 1,
      "seed": 11,
      "gen": {
        "classes": 2,
        "train_instances": 800,
        "test_instances": 120,
        "vocab_size": 300,
        "zipf_exponent": 0.7,
        "class_signal_words": 40,
        "min_len": 5,
        "max_len": 9
      },
      "attack": {"kind": "badnet", "rate": 0.2, "target_label": "class0"},
      "defence": {"strategy": "z_token", "k_sigma": 4.0}
    })";
}

}  // namespace

TEST_CASE("config parsing fills defaults and round-trips") {
    RunConfig cfg = run_config_from_json(R"({"schema_version": 1})");
    CHECK(cfg.seed == 1);
    CHECK(cfg.gen.num_classes == 2);
    CHECK(cfg.gen.num_instances == 1000);
    CHECK(cfg.test_instances == 400);
    CHECK(cfg.attack.kind == AttackKind::badnet);
    CHECK(cfg.attack.target_label == "class0");
    CHECK(cfg.defence.strategy == Strategy::z_token);
    CHECK(cfg.defence.zconfig.k_sigma == 18.0);
    CHECK(cfg.defence.label_conditioned_removal);
    cfg.validate();

    RunConfig parsed = run_config_from_json(mini_config());
    CHECK(parsed.seed == 11);
    CHECK(parsed.gen.num_instances == 800);
    CHECK(parsed.test_instances == 120);
    CHECK(parsed.attack.rate == 0.2);
    CHECK(parsed.defence.zconfig.k_sigma == 4.0);

    // Serialize and reparse: identical resolved configs.
    std::string dumped = run_config_to_json(parsed);
    RunConfig again = run_config_from_json(dumped);
    CHECK(run_config_to_json(again) == dumped);
}

TEST_CASE("config parsing is strict") {
    CHECK_THROWS_AS(run_config_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json("{}"), ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"schema_version": 2})"), ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"schema_version": 1, "bogus": true})"),
        ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(
            R"({"schema_version": 1, "gen": {"vocabulary": 10}})"),
        ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(
            R"({"schema_version": 1, "gen": {"vocab_size": "big"}})"),
        ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(
            R"({"schema_version": 1, "attack": {"rate": "high"}})"),
        ConfigError);

    try {
        run_config_from_json(
            R"({"schema_version": 1, "gen": {"vocabulary": 10}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("gen.vocabulary") !=
              std::string::npos);
    }
}

TEST_CASE("validation rejects inconsistent configs") {
    RunConfig cfg = run_config_from_json(mini_config());

    SUBCASE("tree strategy without trees") {
        cfg.defence.strategy = Strategy::z_tree;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.gen.emit_trees = true;
        cfg.validate();
    }
    SUBCASE("target outside the generated labels") {
        cfg.attack.target_label = "class7";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("zero test instances") {
        cfg.test_instances = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("overrides replace config fields before validation") {
    RunConfig cfg = run_config_from_json(mini_config());
    RunOverrides ov;
    ov.seed = 99;
    ov.rate = 0.05;
    ov.attack = "insertsent";
    ov.strategy = "z_token";
    ov.k_sigma = 6.5;
    apply_overrides(cfg, ov);
    CHECK(cfg.seed == 99);
    CHECK(cfg.attack.rate == 0.05);
    CHECK(cfg.attack.kind == AttackKind::insertsent);
    CHECK(cfg.defence.strategy == Strategy::z_token);
    CHECK(cfg.defence.zconfig.k_sigma == 6.5);

    RunOverrides none;
    RunConfig before = cfg;
    apply_overrides(cfg, none);
    CHECK(run_config_to_json(cfg) == run_config_to_json(before));
}

TEST_CASE("invalid configs fail before anything is written") {
    RunConfig cfg = run_config_from_json(mini_config());
    cfg.defence.strategy = Strategy::z_tree;  // emit_trees is off

    fs::path dir = fs::path("test_tmp") / "pipeline_nowrite";
    fs::remove_all(dir);
    CHECK_THROWS_AS(run_pipeline(cfg, dir.string()), ConfigError);
    CHECK(!fs::exists(dir));
}

TEST_CASE("pipeline runs are bit-identical and fully manifested") {
    RunConfig cfg = run_config_from_json(mini_config());

    fs::path dir_a = fs::path("test_tmp") / "pipeline_a";
    fs::path dir_b = fs::path("test_tmp") / "pipeline_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    PipelineResult ra = run_pipeline(cfg, dir_a.string());
    PipelineResult rb = run_pipeline(cfg, dir_b.string());

    std::vector<std::string> artifacts = {
        "config.json",          "clean_train.jsonl",  "clean_test.jsonl",
        "poisoned_train.jsonl", "poison_report.json", "poisoned_test.jsonl",
        "filtered_train.jsonl", "filter_report.json", "metrics.json",
        "manifest.json",
    };
    for (const std::string& name : artifacts) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir_a / name));
        REQUIRE(fs::exists(dir_b / name));
        CHECK(read_bytes(dir_a / name) == read_bytes(dir_b / name));
    }

    CHECK(ra.detection.kept == rb.detection.kept);
    CHECK(ra.asr_before == rb.asr_before);
    CHECK(ra.asr_after == rb.asr_after);

    // The manifest names every other artifact with a content hash.
    std::string manifest = read_bytes(dir_a / "manifest.json");
    for (const std::string& name : artifacts) {
        if (name == "manifest.json") continue;
        CAPTURE(name);
        CHECK(manifest.find("\"" + name + "\"") != std::string::npos);
    }
    CHECK(manifest.find("fnv1a64:") != std::string::npos);
    CHECK(manifest.find("config_hash") != std::string::npos);

    // Planted triggers are easy prey at this scale: the filter catches all
    // of them without touching clean data, and filtering defuses the attack.
    CHECK(ra.detection.frr() <= 5.0);
    CHECK(ra.detection.far() <= 10.0);
    CHECK(ra.asr_before >= 80.0);
    CHECK(ra.asr_after <= 25.0);
    CHECK(ra.cacc_before >= 80.0);
    CHECK(ra.cacc_clean >= 80.0);
}

TEST_CASE("changing the seed changes the generated data") {
    RunConfig a = run_config_from_json(mini_config());
    RunConfig b = a;
    b.seed = 12;

    fs::path dir_a = fs::path("test_tmp") / "pipeline_seed_a";
    fs::path dir_b = fs::path("test_tmp") / "pipeline_seed_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    run_pipeline(a, dir_a.string());
    run_pipeline(b, dir_b.string());
    CHECK(read_bytes(dir_a / "clean_train.jsonl") !=
          read_bytes(dir_b / "clean_train.jsonl"));
}

TEST_CASE("load_run_config reports missing files as io trouble") {
    CHECK_THROWS_AS(load_run_config("test_tmp/definitely_missing.json"),
                    IoError);
}
