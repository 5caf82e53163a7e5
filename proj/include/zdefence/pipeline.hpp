#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "zdefence/attacks.hpp"
#include "zdefence/corpus.hpp"
#include "zdefence/defence.hpp"
#include "zdefence/eval.hpp"

namespace zdefence {

// Everything a full experiment needs, loadable from a JSON config file.
// A run is a pure function of this struct: all randomness derives from the
// top-level seed via per-stage tags.
struct RunConfig {
    static constexpr int kSchemaVersion = 1;

    std::uint64_t seed = 1;

    // Corpus generation. train/test share every distributional knob and
    // differ only in size and derived seed.
    SynthConfig gen;
    std::int64_t test_instances = 400;

    AttackSpec attack;
    DefenceSpec defence;

    void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

// CLI flags that may override config fields before validation.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> rate;
    std::optional<std::string> attack;
    std::optional<std::string> strategy;
    std::optional<double> k_sigma;
};

void apply_overrides(RunConfig& cfg, const RunOverrides& ov);

struct PipelineResult {
    DetectionMetrics detection;
    double asr_before = 0.0;
    double cacc_before = 0.0;
    double asr_after = 0.0;
    double cacc_after = 0.0;
    double basr = 0.0;
    double cacc_clean = 0.0;
};

// gen -> poison -> filter -> evaluate. Writes clean/poisoned/filtered
// datasets, the poison/filter reports, metrics.json, the resolved config,
// and a manifest of content hashes. Reruns with the same config are
// bit-identical.
PipelineResult run_pipeline(const RunConfig& cfg, const std::string& outdir);

}  // namespace zdefence
