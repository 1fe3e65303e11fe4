#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detnest/extract.hpp"
#include "detnest/nest.hpp"
#include "detnest/simulate.hpp"

namespace detnest {

/// A matched interpretation of one record's detection events: per-event
/// pairings plus the implied data-qubit X corrections.
struct Decoding {
    // Pairs of event indices, or (index, -1) for an edge match.
    std::vector<std::pair<int, int>> matches;
    std::vector<std::uint8_t> data_flips;  // parity of corrections per data qubit
    double total_weight = 0;
};

/// Matching weights in space/time steps, taken from nest class
/// probabilities as -log p.
struct DecoderWeights {
    double space_step = 1;
    double time_step = 1;
    double edge = 1;

    static DecoderWeights from_nest(const Nest& nest);
};

/// Greedy nearest-neighbor matching of detection events to each other or
/// to the nearest spatial edge, then conversion of matched segments into
/// data-qubit flip corrections.
Decoding decode(const std::vector<DetectionEvent>& events, const Circuit& circuit,
                const DecoderWeights& weights);

Decoding decode_record(const MeasurementRecord& record, const Circuit& circuit,
                       const DecoderWeights& weights);

/// Exhaustive minimum-weight matching over all pairings (edges allowed).
/// Exponential; the test oracle for small instances.
Decoding decode_exact(const std::vector<DetectionEvent>& events, const Circuit& circuit,
                      const DecoderWeights& weights, size_t max_events = 12);

struct LogicalTrialResult {
    std::uint64_t trials = 0;
    std::uint64_t logical_failures = 0;
    std::uint64_t rounds_per_trial = 0;
    double rate = 0;
    double ci_low = 0;   // 95% Wilson interval
    double ci_high = 0;
};

LogicalTrialResult make_trial_result(std::uint64_t failures, std::uint64_t trials,
                                     std::uint64_t rounds_per_trial);

/// Fresh-start windows: simulate, decode, and compare the correction
/// parity on the reference data qubit (worldline of data qubit 0) against
/// the true residual frame. Failure when they disagree.
LogicalTrialResult logical_error_rate(const Circuit& circuit, std::uint64_t trials,
                                      std::uint64_t rounds_per_trial, std::uint64_t seed,
                                      const SimOptions& options = {});

enum class Verdict { Consistent, ObservedWorse, ObservedBetter };

std::string verdict_name(Verdict v);

struct ComparisonReport {
    Verdict verdict = Verdict::Consistent;
    double z = 0;
    double p_value = 1;  // two-sided
    LogicalTrialResult observed;
    LogicalTrialResult predicted;
};

/// Two-proportion z-test on observed vs model-predicted logical failure
/// rates. Significantly worse observations flag unmodeled (correlated)
/// errors; significantly better ones flag model overestimates.
ComparisonReport compare_predicted_vs_observed(const LogicalTrialResult& observed,
                                               const LogicalTrialResult& predicted,
                                               double alpha = 0.01);

std::string comparison_report_json(const ComparisonReport& r);

}  // namespace detnest
