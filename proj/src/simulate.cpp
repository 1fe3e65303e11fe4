#include "detnest/simulate.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "detnest/rng.hpp"

namespace detnest {

using nlohmann::json;

namespace {

enum class OpCode : std::uint8_t { Hadamard, CZ, Idle, Init, Measure };

struct CompiledOp {
    OpCode code;
    int q0 = 0, q1 = 0;
    int measure_ordinal = -1;
    double total_p = 0;
    // Cumulative probability thresholds and frame masks per term.
    std::vector<double> cum;
    std::vector<std::uint64_t> xmask, zmask;
    std::vector<bool> report_flip;
    int gate_index = 0;  // position in circuit.gates, for forced errors
};

struct CompiledCircuit {
    std::vector<CompiledOp> ops;  // in (layer, construction) order
    int num_measure = 0;
};

CompiledCircuit compile(const Circuit& circuit) {
    if (circuit.total_qubits() > 64)
        throw std::invalid_argument("simulation frame limited to 64 qubits");

    std::vector<int> order(circuit.gates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return circuit.gates[a].layer < circuit.gates[b].layer;
    });

    std::vector<int> measure_qubits;
    for (const auto& q : circuit.qubits)
        if (q.is_measure) measure_qubits.push_back(q.index);
    std::sort(measure_qubits.begin(), measure_qubits.end());

    CompiledCircuit cc;
    cc.num_measure = static_cast<int>(measure_qubits.size());
    for (int gi : order) {
        const GateInstance& g = circuit.gates[gi];
        CompiledOp op;
        op.gate_index = gi;
        op.q0 = g.qubits[0];
        if (g.qubits.size() > 1) op.q1 = g.qubits[1];
        switch (g.kind) {
            case GateKind::Hadamard: op.code = OpCode::Hadamard; break;
            case GateKind::CZ: op.code = OpCode::CZ; break;
            case GateKind::IdleMemory: op.code = OpCode::Idle; break;
            case GateKind::Init0: op.code = OpCode::Init; break;
            case GateKind::MeasureZ:
                op.code = OpCode::Measure;
                op.measure_ordinal = static_cast<int>(
                    std::find(measure_qubits.begin(), measure_qubits.end(), op.q0) -
                    measure_qubits.begin());
                break;
        }

        const GateErrorModel& model = circuit.model_for(g);
        double acc = 0;
        for (const auto& [label, p] : model.terms) {
            if (p <= 0) continue;
            acc += p;
            op.cum.push_back(acc);
            std::uint64_t xm = 0, zm = 0;
            bool flip = false;
            if (g.kind == GateKind::MeasureZ) {
                flip = true;
            } else {
                for (size_t i = 0; i < label.size(); ++i) {
                    PauliBits b = pauli_bits(label[i]);
                    if (b.x) xm ^= 1ULL << g.qubits[i];
                    if (b.z) zm ^= 1ULL << g.qubits[i];
                }
            }
            op.xmask.push_back(xm);
            op.zmask.push_back(zm);
            op.report_flip.push_back(flip);
        }
        op.total_p = acc;
        cc.ops.push_back(op);
    }
    return cc;
}

std::pair<std::uint64_t, std::uint64_t> masks_for(const Circuit& circuit,
                                                  const std::string& gate_id,
                                                  const std::string& pauli) {
    const GateInstance& g = circuit.gate(gate_id);
    const auto& legal = legal_labels(g.kind);
    if (std::find(legal.begin(), legal.end(), pauli) == legal.end())
        throw std::invalid_argument("pauli " + pauli + " not legal for gate " + gate_id);
    if (g.kind == GateKind::MeasureZ) return {~0ULL, 0};  // sentinel: report flip
    std::uint64_t xm = 0, zm = 0;
    for (size_t i = 0; i < pauli.size(); ++i) {
        PauliBits b = pauli_bits(pauli[i]);
        if (b.x) xm ^= 1ULL << g.qubits[i];
        if (b.z) zm ^= 1ULL << g.qubits[i];
    }
    return {xm, zm};
}

}  // namespace

SimResult simulate_full(const Circuit& circuit, std::uint64_t rounds, std::uint64_t seed,
                        const SimOptions& options) {
    if (rounds == 0) throw std::invalid_argument("rounds must be at least 1");
    validate_circuit(circuit);
    CompiledCircuit cc = compile(circuit);

    SimResult result;
    MeasurementRecord& rec = result.record;
    rec.circuit_name = circuit.name;
    rec.circuit_hash = circuit_hash(circuit);
    rec.model_fingerprint = model_fingerprint(circuit);
    rec.seed = seed;
    rec.rounds = rounds;
    rec.rng_name = kRngName;
    for (const auto& q : circuit.qubits)
        if (q.is_measure) rec.measure_qubits.push_back(q.index);
    std::sort(rec.measure_qubits.begin(), rec.measure_qubits.end());

    std::uint64_t words = (rounds + 63) / 64;
    rec.bits.assign(rec.measure_qubits.size(), std::vector<std::uint64_t>(words, 0));

    // Forced errors indexed by (round, gate index).
    std::map<std::pair<std::uint64_t, int>, std::pair<std::uint64_t, std::uint64_t>> forced;
    for (const auto& fe : options.forced_errors) {
        int gi = -1;
        for (size_t i = 0; i < circuit.gates.size(); ++i)
            if (circuit.gates[i].id == fe.gate_id) gi = static_cast<int>(i);
        if (gi < 0) throw std::out_of_range("forced error on unknown gate " + fe.gate_id);
        auto masks = masks_for(circuit, fe.gate_id, fe.pauli);
        forced[{fe.round, gi}] = masks;
    }

    // Pending report flips from burst channels: qubit ordinal -> rounds left.
    std::map<int, std::pair<std::uint64_t, double>> active_bursts;  // ordinal -> (until, p)
    std::map<int, int> ordinal_of;
    for (size_t i = 0; i < rec.measure_qubits.size(); ++i)
        ordinal_of[rec.measure_qubits[i]] = static_cast<int>(i);

    SplitMix64 rng(seed);
    PauliFrame frame;

    for (std::uint64_t r = 0; r < rounds; ++r) {
        for (const auto& op : cc.ops) {
            bool report_bit = false;
            switch (op.code) {
                case OpCode::Hadamard: frame.apply_hadamard(op.q0); break;
                case OpCode::CZ: frame.apply_cz(op.q0, op.q1); break;
                case OpCode::Idle: break;
                case OpCode::Init: frame.clear_qubit(op.q0); break;
                case OpCode::Measure: report_bit = frame.x_bit(op.q0); break;
            }

            if (op.total_p > 0) {
                double u = rng.uniform();
                if (u < op.total_p) {
                    size_t t = 0;
                    while (u >= op.cum[t]) ++t;
                    if (op.report_flip[t])
                        report_bit = !report_bit;
                    else {
                        frame.x ^= op.xmask[t];
                        frame.z ^= op.zmask[t];
                    }
                }
            }

            if (!forced.empty()) {
                auto it = forced.find({r, op.gate_index});
                if (it != forced.end()) {
                    if (it->second.first == ~0ULL)
                        report_bit = !report_bit;
                    else {
                        frame.x ^= it->second.first;
                        frame.z ^= it->second.second;
                    }
                }
            }

            if (op.code == OpCode::Measure) {
                if (!active_bursts.empty()) {
                    auto it = active_bursts.find(op.measure_ordinal);
                    if (it != active_bursts.end()) {
                        if (r < it->second.first) {
                            if (rng.uniform() < it->second.second) report_bit = !report_bit;
                        } else {
                            active_bursts.erase(it);
                        }
                    }
                }
                if (report_bit)
                    rec.bits[op.measure_ordinal][r >> 6] |= 1ULL << (r & 63);
            }
        }

        for (const auto& ch : options.extra_channels) {
            if (rng.uniform() < ch.probability) {
                for (const auto& [q, p] : ch.paulis) frame.inject(q, pauli_bits(p));
            }
        }
        for (const auto& b : options.bursts) {
            if (rng.uniform() < b.start_probability)
                active_bursts[ordinal_of.at(b.qubit)] = {r + 1 + b.length, b.flip_probability};
        }
    }

    result.final_frame = frame;
    return result;
}

MeasurementRecord simulate(const Circuit& circuit, std::uint64_t rounds, std::uint64_t seed) {
    return simulate_full(circuit, rounds, seed).record;
}

std::vector<MeasurementRecord> simulate_sharded(const Circuit& circuit, std::uint64_t rounds,
                                                std::uint64_t base_seed, int shards,
                                                int threads) {
    if (shards < 1) throw std::invalid_argument("shards must be at least 1");
    std::vector<MeasurementRecord> out(shards);
    if (threads <= 1) {
        for (int s = 0; s < shards; ++s)
            out[s] = simulate(circuit, rounds, derive_seed(base_seed, s));
        return out;
    }
    std::vector<std::future<MeasurementRecord>> futures;
    for (int s = 0; s < shards; ++s)
        futures.push_back(std::async(std::launch::async, [&, s] {
            return simulate(circuit, rounds, derive_seed(base_seed, s));
        }));
    for (int s = 0; s < shards; ++s) out[s] = futures[s].get();
    return out;
}

namespace {

constexpr char kMagic[4] = {'M', 'R', 'C', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr size_t kRngField = 16;

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_record(const MeasurementRecord& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(kMagic, 4);
    put(f, kVersion);
    put(f, r.circuit_hash);
    put(f, r.model_fingerprint);
    put(f, r.seed);
    put(f, r.rounds);
    put(f, static_cast<std::uint32_t>(r.measure_qubits.size()));
    char rng[kRngField] = {};
    std::strncpy(rng, r.rng_name.c_str(), kRngField - 1);
    f.write(rng, kRngField);
    put(f, static_cast<std::uint32_t>(r.circuit_name.size()));
    f.write(r.circuit_name.data(), r.circuit_name.size());
    for (int q : r.measure_qubits) put(f, static_cast<std::int32_t>(q));

    // Payload: bit index r * num_measure + ordinal, LSB-first within bytes.
    std::uint64_t nm = r.measure_qubits.size();
    std::uint64_t total_bits = r.rounds * nm;
    std::vector<std::uint8_t> payload((total_bits + 7) / 8, 0);
    for (std::uint64_t round = 0; round < r.rounds; ++round)
        for (std::uint64_t m = 0; m < nm; ++m)
            if (r.bit(m, round)) {
                std::uint64_t b = round * nm + m;
                payload[b >> 3] |= static_cast<std::uint8_t>(1u << (b & 7));
            }
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
}

MeasurementRecord load_record(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad mrec magic");
    if (get<std::uint32_t>(f) != kVersion) throw std::runtime_error("bad mrec version");

    MeasurementRecord r;
    r.circuit_hash = get<std::uint64_t>(f);
    r.model_fingerprint = get<std::uint64_t>(f);
    r.seed = get<std::uint64_t>(f);
    r.rounds = get<std::uint64_t>(f);
    std::uint32_t nm = get<std::uint32_t>(f);
    char rng[kRngField];
    f.read(rng, kRngField);
    r.rng_name = std::string(rng);
    std::uint32_t name_len = get<std::uint32_t>(f);
    r.circuit_name.resize(name_len);
    f.read(r.circuit_name.data(), name_len);
    for (std::uint32_t i = 0; i < nm; ++i) r.measure_qubits.push_back(get<std::int32_t>(f));

    std::uint64_t total_bits = r.rounds * nm;
    std::vector<std::uint8_t> payload((total_bits + 7) / 8);
    f.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!f) throw std::runtime_error("truncated mrec payload");

    std::uint64_t words = (r.rounds + 63) / 64;
    r.bits.assign(nm, std::vector<std::uint64_t>(words, 0));
    for (std::uint64_t round = 0; round < r.rounds; ++round)
        for (std::uint64_t m = 0; m < nm; ++m) {
            std::uint64_t b = round * nm + m;
            if ((payload[b >> 3] >> (b & 7)) & 1)
                r.bits[m][round >> 6] |= 1ULL << (round & 63);
        }
    return r;
}

std::string record_sidecar_json(const MeasurementRecord& r) {
    json j;
    j["schema"] = "mrec.v1";
    j["circuit_name"] = r.circuit_name;
    j["circuit_hash"] = r.circuit_hash;
    j["model_fingerprint"] = r.model_fingerprint;
    j["seed"] = r.seed;
    j["rounds"] = r.rounds;
    j["rng"] = r.rng_name;
    j["measure_qubits"] = r.measure_qubits;
    j["bit_order"] = "round-major, bit index = round * num_measure + ordinal, LSB first";
    return j.dump(2);
}

}  // namespace detnest
