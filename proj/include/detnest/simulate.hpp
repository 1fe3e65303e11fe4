#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detnest/circuit.hpp"
#include "detnest/propagate.hpp"

namespace detnest {

/// Raw measurement bit stream of one run. Bits are relative to the
/// noiseless reference frame: with all-zero error models every bit is 0.
/// Identical (circuit, models, seed, rounds) yields an identical record.
struct MeasurementRecord {
    std::string circuit_name;
    std::uint64_t circuit_hash = 0;
    std::uint64_t model_fingerprint = 0;
    std::uint64_t seed = 0;
    std::uint64_t rounds = 0;
    std::string rng_name;
    std::vector<int> measure_qubits;        // circuit qubit indices, ascending
    std::vector<std::vector<std::uint64_t>> bits;  // per measure qubit, packed 64/word

    bool bit(size_t measure_ordinal, std::uint64_t round) const {
        return (bits[measure_ordinal][round >> 6] >> (round & 63)) & 1;
    }
};

/// Extra stochastic channel fired once per round after the last layer.
/// Test and adversarial instrumentation: lets a validation run inject
/// error processes the per-gate models cannot express.
struct CorrelatedChannel {
    double probability = 0;
    std::vector<std::pair<int, char>> paulis;  // (qubit, 'X'|'Y'|'Z')
};

/// Deterministic single-shot injection: fire `pauli` on `gate_id` right
/// after the gate in round `round`. Used to condition a simulation on an
/// exact error for oracle cross-checks.
struct ForcedError {
    std::uint64_t round = 0;
    std::string gate_id;
    std::string pauli;
};

/// With probability `start_probability` per round, flip the reported bits
/// of `qubit` for the next `length` rounds, each with `flip_probability`.
/// Produces temporally correlated detection strings.
struct BurstChannel {
    int qubit = 0;
    double start_probability = 0;
    int length = 0;
    double flip_probability = 1.0;
};

struct SimOptions {
    std::vector<CorrelatedChannel> extra_channels;
    std::vector<ForcedError> forced_errors;
    std::vector<BurstChannel> bursts;
};

struct SimResult {
    MeasurementRecord record;
    PauliFrame final_frame;  // residual frame after the last round
};

/// Single-threaded seeded run. Per round, in layer order: ideal Clifford
/// action on the Pauli frame, then one multinomial draw over the gate's
/// error terms (at most one fires). MeasureZ reports the frame X bit XOR
/// a sampled flip; Init0 resets the qubit's frame.
SimResult simulate_full(const Circuit& circuit, std::uint64_t rounds, std::uint64_t seed,
                        const SimOptions& options = {});

MeasurementRecord simulate(const Circuit& circuit, std::uint64_t rounds, std::uint64_t seed);

/// Independent records with seeds derived from `base_seed`. Shards share
/// nothing and may run concurrently; each is a fresh start.
std::vector<MeasurementRecord> simulate_sharded(const Circuit& circuit, std::uint64_t rounds,
                                                std::uint64_t base_seed, int shards,
                                                int threads = 1);

/// mrec.v1: fixed little-endian header, then round-major bit-packed
/// measurement bits (bit index r * num_measure + ordinal, LSB first).
void save_record(const MeasurementRecord& r, const std::string& path);
MeasurementRecord load_record(const std::string& path);

/// JSON sidecar mirroring the binary header.
std::string record_sidecar_json(const MeasurementRecord& r);

}  // namespace detnest
