#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "detnest/circuit.hpp"
#include "detnest/extract.hpp"
#include "detnest/invert.hpp"

namespace detnest {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& what)
        : std::runtime_error("stage " + stage_name + ": " + what), stage(std::move(stage_name)) {}
};

struct PipelineConfig {
    int distance = 3;
    std::uint64_t rounds = 1000000;
    std::uint64_t seed = 1;
    int shards = 1;
    int threads = 1;
    bool include_square = true;
    ClusterPolicy policy;
    Parameterization parameterization = Parameterization::PerKindDepolarizing;
    ErrorModelSet truth_models;
    std::uint64_t trials = 20000;
    std::uint64_t rounds_per_trial = 10;
    long long correlation_window = 2;
    std::string output_dir = "detnest-out";

    /// Fail-fast validation; throws ConfigError before any compute runs.
    void validate() const;

    static PipelineConfig from_json(const std::string& text);
    static PipelineConfig from_file(const std::string& path);
    std::string to_json() const;
};

struct PipelineOutcome {
    int exit_code = 0;  // 0 ok, 4 statistical acceptance failure
    bool recovery_ok = true;
    std::string verdict;
    std::string report_path;
    std::string report_json;
};

/// build nests -> simulate -> extract -> invert -> validate -> correlate,
/// materializing every intermediate artifact under `output_dir`. The
/// report's `result` block is byte-reproducible for a fixed config; wall
/// clock data lives in the separate `meta` block.
PipelineOutcome run_pipeline(const PipelineConfig& config);

}  // namespace detnest
