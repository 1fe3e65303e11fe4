#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detnest/circuit.hpp"

namespace detnest {

/// Accumulated X/Z flips per qubit, one bit each, enough to push Pauli
/// noise through Clifford layers without amplitudes. Limited to 64 qubits.
struct PauliFrame {
    std::uint64_t x = 0;
    std::uint64_t z = 0;

    void clear_qubit(int q) {
        std::uint64_t m = ~(1ULL << q);
        x &= m;
        z &= m;
    }
    bool x_bit(int q) const { return (x >> q) & 1; }

    void apply_hadamard(int q) {
        std::uint64_t diff = ((x ^ z) >> q) & 1;
        x ^= diff << q;
        z ^= diff << q;
    }
    // CZ conjugation: X on either side deposits Z on the other.
    void apply_cz(int a, int b) {
        z ^= ((x >> b) & 1ULL) << a;
        z ^= ((x >> a) & 1ULL) << b;
    }
    void inject(int q, PauliBits p) {
        if (p.x) x ^= 1ULL << q;
        if (p.z) z ^= 1ULL << q;
    }
};

struct ErrorLocation {
    std::string gate_id;
    std::string pauli;
    long long period_offset = 0;  // round index t at which the error fires
};

struct DetectionEvent {
    int measure_qubit = 0;  // circuit qubit index
    long long round = 0;

    auto operator<=>(const DetectionEvent&) const = default;
};

/// Deduplicated, sorted event set. XOR composition: an even number of
/// flips of the same (qubit, round) measurement cancels.
struct DetectionPattern {
    std::vector<DetectionEvent> events;  // sorted by (round, qubit)

    bool empty() const { return events.empty(); }
    size_t size() const { return events.size(); }
    bool operator==(const DetectionPattern&) const = default;
};

DetectionPattern pattern_xor(const DetectionPattern& a, const DetectionPattern& b);

/// Translate so the earliest event sits at round 0. Spatial position is
/// left alone; the nest is periodic in time only.
DetectionPattern canonicalize(const DetectionPattern& p);

/// Compact text form "q<qubit>@r<round>" joined with '+', empty pattern "-".
std::string pattern_key(const DetectionPattern& p);

/// Exact detection pattern of one Pauli error in an otherwise perfect
/// cyclic circuit. The error fires after the ideal gate, except Init0(X)
/// (wrong prepared state, applied after the reset) and MeasureZ(X) (flip
/// of the reported bit only). A flipped outcome at round t produces
/// detection events at rounds t and t+1.
DetectionPattern propagate_single(const Circuit& circuit, const ErrorLocation& loc);

/// Symmetric difference of the single-error patterns; propagation is
/// linear over flips.
DetectionPattern propagate_composite(const Circuit& circuit,
                                     const std::vector<ErrorLocation>& locs);

}  // namespace detnest
