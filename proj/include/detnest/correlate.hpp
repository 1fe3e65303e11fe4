#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detnest/extract.hpp"

namespace detnest {

struct JointEntry {
    std::string z_pattern;  // canonical pattern key in the Z nest
    std::string x_pattern;  // canonical pattern key in the X nest
    long long offset = 0;   // x anchor round minus z anchor round
    std::uint64_t count = 0;
    double expected = 0;     // product-of-marginals baseline
    double conditional = 0;  // P(x pattern at offset | z pattern)
    double baseline = 0;     // marginal x rate per round
    double excess = 0;       // conditional - baseline
    double sigma = 0;        // Gaussian scale of `excess` under independence
    double z_score = 0;      // (count - expected) / sqrt(expected)
};

struct CrossCorrelationReport {
    std::uint64_t rounds = 0;
    long long window = 0;
    std::map<std::string, std::uint64_t> z_marginals;  // cluster pattern -> count
    std::map<std::string, std::uint64_t> x_marginals;
    std::vector<JointEntry> entries;

    const JointEntry* find(const std::string& z_pattern, const std::string& x_pattern,
                           long long offset) const;
};

/// Coincidence tally between the two stabilizer nests of one record:
/// every isolated cluster in the Z nest is paired with the X-nest
/// clusters whose anchor lands within `window` rounds. Conditionals are
/// then compared against the product-of-marginals independence baseline.
CrossCorrelationReport cross_correlate(const MeasurementRecord& record,
                                       const Circuit& circuit, long long window,
                                       const ClusterPolicy& policy = {});

struct AutocorrelationLag {
    int lag = 0;
    std::uint64_t coincidences = 0;
    double conditional = 0;
    double baseline = 0;
    double excess = 0;
    double z_score = 0;
};

struct QubitAutocorrelation {
    int qubit = 0;
    std::uint64_t events = 0;
    bool defined = false;  // false when the qubit saw no events
    std::vector<AutocorrelationLag> lags;
};

struct AutocorrelationReport {
    std::uint64_t rounds = 0;
    int max_lag = 0;
    std::vector<QubitAutocorrelation> per_qubit;
};

/// P(event at t+k | event at t) per measure qubit for k = 1..max_lag,
/// against the memoryless baseline. Qubits with zero events report
/// undefined conditionals rather than zeros.
AutocorrelationReport temporal_autocorrelate(const MeasurementRecord& record, int max_lag);

std::string cross_correlation_json(const CrossCorrelationReport& r);
std::string autocorrelation_json(const AutocorrelationReport& r);

}  // namespace detnest
