#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detnest/circuit.hpp"
#include "detnest/propagate.hpp"

namespace detnest {

struct Contributor {
    std::string gate_id;
    std::string pauli;
    double probability = 0;
    int slots = 1;  // primitive slots folded into the gate (idles)
    GateKind kind = GateKind::IdleMemory;

    bool operator==(const Contributor&) const = default;
};

/// All single gate errors sharing one canonical detection pattern, with
/// their summed probability.
struct ErrorClass {
    DetectionPattern pattern;  // canonical: earliest event at round 0
    std::vector<Contributor> contributors;
    double probability = 0;

    bool operator==(const ErrorClass&) const = default;
};

/// The periodic collection of error classes of one circuit for one
/// stabilizer type; one period is the repeating unit.
struct Nest {
    std::string circuit_name;
    std::uint64_t circuit_hash = 0;
    StabilizerType stabilizer_type = StabilizerType::Z;
    std::vector<ErrorClass> classes;       // pairwise-distinct canonical patterns
    std::vector<Contributor> undetectable; // nonzero probability, empty pattern

    /// Geometry carried along so downstream stages need only the nest:
    /// measure qubits of this type in cell order, with boundary flags.
    std::vector<int> cells;          // cell -> circuit qubit index
    std::vector<bool> cell_boundary; // cell -> spatial-edge flag

    double total_class_probability() const;
    double total_undetectable_probability() const;

    bool operator==(const Nest&) const = default;
};

/// Enumerate every (gate, Pauli) term with probability > 0, propagate it,
/// canonicalize by time translation, group by pattern, and sum. Events on
/// measure qubits of the other stabilizer type are projected out; terms
/// invisible to this type land in `undetectable`.
Nest build_nest(const Circuit& circuit, StabilizerType type);

const ErrorClass* class_lookup(const Nest& nest, const DetectionPattern& pattern);

std::string nest_to_json(const Nest& n);
Nest nest_from_json(const std::string& text);
Nest load_nest(const std::string& path);
void save_nest(const Nest& n, const std::string& path);

/// Plot-ready cylinder list: endpoints in (space cell, time round)
/// coordinates with diameters proportional to class probability.
/// Single-event classes extend to the nearest spatial edge.
std::string nest_plot_json(const Nest& n);

}  // namespace detnest
