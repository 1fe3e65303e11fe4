#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "detnest/nest.hpp"
#include "detnest/simulate.hpp"

namespace detnest {

struct ClusterPolicy {
    int space_cells = 2;   // isolation radius, measure-qubit cells
    int time_rounds = 3;   // isolation radius, rounds
    int max_cluster_size = 2;

    void validate() const;
};

using Cluster = std::vector<DetectionEvent>;

/// Event at round r iff bit(r) != bit(r-1), with bit(-1) := 0. Sorted by
/// (round, qubit).
std::vector<DetectionEvent> detect_events(const MeasurementRecord& record);

struct ClusterResult {
    std::vector<Cluster> clusters;       // size <= max_cluster_size, isolated
    std::uint64_t ignored_clusters = 0;  // components that grew too large
};

/// Connected components under the isolation-radius adjacency. `cell_of`
/// maps measure qubit index to its spatial cell within one stabilizer
/// type; events must be time-sorted.
ClusterResult cluster_events(const std::vector<DetectionEvent>& events,
                             const ClusterPolicy& policy,
                             const std::map<int, int>& cell_of);

enum class ClusterVerdict { Matched, TimeEdge, Unmatched };

struct Classification {
    ClusterVerdict verdict = ClusterVerdict::Unmatched;
    DetectionPattern pattern;  // canonical; valid when Matched
};

/// Size-2 clusters map to the canonical pattern joining the pair. Size-1
/// clusters map to the boundary class of an edge-adjacent measure qubit,
/// and otherwise to a time-edge pseudo-class kept out of inversion.
Classification classify_cluster(const Cluster& cluster, const Nest& nest);

struct EstimatedNest {
    std::string circuit_name;
    std::uint64_t circuit_hash = 0;
    StabilizerType stabilizer_type = StabilizerType::Z;
    std::uint64_t rounds_observed = 0;
    std::map<std::vector<DetectionEvent>, std::uint64_t> counts;  // canonical pattern -> count
    std::uint64_t ignored_clusters = 0;
    std::uint64_t unmatched = 0;
    std::uint64_t time_edge = 0;

    double probability(const DetectionPattern& pattern) const;
    std::uint64_t count(const DetectionPattern& pattern) const;
    std::uint64_t total_clusters() const;
};

/// Single-pass composition of detect / cluster / classify over the events
/// of the nest's stabilizer type; probabilities are counts divided by
/// rounds observed. Throws if the record is from a different circuit.
EstimatedNest estimate_nest(const MeasurementRecord& record, const Nest& nest,
                            const ClusterPolicy& policy);

/// Merge shard estimates by adding counts (records must share a circuit).
EstimatedNest merge_estimates(const std::vector<EstimatedNest>& parts);

std::string estimate_to_json(const EstimatedNest& e);
EstimatedNest estimate_from_json(const std::string& text);
EstimatedNest load_estimate(const std::string& path);
void save_estimate(const EstimatedNest& e, const std::string& path);

}  // namespace detnest
