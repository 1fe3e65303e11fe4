#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "detnest/pauli.hpp"

namespace detnest {

enum class GateKind { Init0, Hadamard, CZ, IdleMemory, MeasureZ };

std::string gate_kind_name(GateKind k);
GateKind gate_kind_from_name(const std::string& name);

/// Legal error labels for a gate kind. One-qubit kinds use {X, Y, Z};
/// CZ uses the 15 two-qubit labels; MeasureZ uses {X} (classical result
/// flip); Init0 uses {X} (wrong prepared state).
const std::vector<std::string>& legal_labels(GateKind k);

/// Stochastic Pauli channel attached to one gate. At most one term fires
/// per gate per round; terms are mutually exclusive alternatives.
struct GateErrorModel {
    GateKind kind = GateKind::IdleMemory;
    std::vector<std::pair<std::string, double>> terms;  // sorted by label

    double total() const;
    double term(const std::string& label) const;  // 0 if absent
    void set_term(const std::string& label, double p);
    void validate() const;  // throws on bad labels / probabilities

    static GateErrorModel depolarizing(GateKind kind, double rate);
    static GateErrorModel zero(GateKind kind);
};

struct GateInstance {
    std::string id;
    GateKind kind = GateKind::IdleMemory;
    std::vector<int> qubits;  // ascending index order; labels read in this order
    int layer = 0;
    int slots = 1;  // primitive idle slots folded into this gate
};

enum class StabilizerType { Z, X };

std::string stabilizer_name(StabilizerType t);
StabilizerType stabilizer_from_name(const std::string& s);

struct QubitInfo {
    int index = 0;
    bool is_measure = false;
    StabilizerType stabilizer = StabilizerType::Z;  // measure qubits only
    bool boundary = false;                          // measure qubits only
};

/// One period of a cyclic error-detection schedule. Immutable once built;
/// safe to share read-only across threads.
struct Circuit {
    std::string name;
    std::string description;
    int num_data = 0;
    int num_measure = 0;
    int layers_per_period = 0;
    std::vector<QubitInfo> qubits;
    std::vector<GateInstance> gates;  // ordered by (layer, construction order)
    std::map<GateKind, GateErrorModel> default_models;
    std::map<std::string, GateErrorModel> override_models;  // keyed by gate id

    const GateInstance& gate(const std::string& id) const;
    bool has_gate(const std::string& id) const;
    const GateErrorModel& model_for(const GateInstance& g) const;

    /// Measure qubit indices for one stabilizer type, in spatial order.
    /// Position in the returned list is the qubit's "cell" coordinate.
    std::vector<int> measure_qubits_of(StabilizerType t) const;

    /// Cell coordinate of a measure qubit within its stabilizer type,
    /// or -1 for non-measure qubits.
    int cell_of(int qubit_index) const;

    StabilizerType stabilizer_of(int qubit_index) const;
    bool is_boundary(int qubit_index) const;
    int total_qubits() const { return num_data + num_measure; }
};

/// Schedule validity: no qubit in two gates of one layer, unique ids,
/// one MeasureZ + one Init0 per measure qubit per period, legal models.
void validate_circuit(const Circuit& c);

/// Interleaved d-data, (d-1)-measure ZZ-check circuit. Six layers per
/// period: CZ(left data), CZ(right data), pre-measure Hadamards with the
/// consolidated data idles, measurement, re-initialization, post-init
/// Hadamards. For distance 3 the gate ids are CZ1-CZ4, I1-I3, H1-H4,
/// M1, M2, |0>1, |0>2.
Circuit build_repetition_circuit(int distance,
                                 const std::map<GateKind, GateErrorModel>& models);

/// Four-qubit square: one ZZ check and one XX check on the same data
/// pair, run back to back within a nine-layer period. The XX gadget is
/// the ZZ gadget conjugated by explicit data Hadamards (HD* gates).
Circuit build_parity_square_circuit(const std::map<GateKind, GateErrorModel>& models);

/// Structure hash (qubits, gates, layers; not error models).
std::uint64_t circuit_hash(const Circuit& c);

/// Hash of the resolved per-instance error models.
std::uint64_t model_fingerprint(const Circuit& c);

std::string circuit_to_json(const Circuit& c);
Circuit circuit_from_json(const std::string& text);
Circuit load_circuit(const std::string& path);
void save_circuit(const Circuit& c, const std::string& path);

/// errormodel.v1 documents: per-kind defaults plus per-gate-id overrides.
struct ErrorModelSet {
    std::map<GateKind, GateErrorModel> defaults;
    std::map<std::string, GateErrorModel> overrides;
};

std::string error_models_to_json(const ErrorModelSet& m);
ErrorModelSet error_models_from_json(const std::string& text);
ErrorModelSet load_error_models(const std::string& path);
void save_error_models(const ErrorModelSet& m, const std::string& path);

/// Replace a circuit's models with the given set (missing kinds keep zero
/// models). Used to re-simulate a circuit under fitted models.
Circuit with_models(const Circuit& c, const ErrorModelSet& m);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace detnest
