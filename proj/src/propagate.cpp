#include "detnest/propagate.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace detnest {

DetectionPattern pattern_xor(const DetectionPattern& a, const DetectionPattern& b) {
    std::set<std::pair<long long, int>> acc;
    auto flip = [&](const DetectionEvent& e) {
        auto key = std::make_pair(e.round, e.measure_qubit);
        auto it = acc.find(key);
        if (it == acc.end())
            acc.insert(key);
        else
            acc.erase(it);
    };
    for (const auto& e : a.events) flip(e);
    for (const auto& e : b.events) flip(e);
    DetectionPattern out;
    for (const auto& [round, qubit] : acc) out.events.push_back({qubit, round});
    return out;
}

DetectionPattern canonicalize(const DetectionPattern& p) {
    if (p.events.empty()) return p;
    long long min_round = p.events.front().round;
    for (const auto& e : p.events) min_round = std::min(min_round, e.round);
    DetectionPattern out;
    for (const auto& e : p.events) out.events.push_back({e.measure_qubit, e.round - min_round});
    std::sort(out.events.begin(), out.events.end(),
              [](const DetectionEvent& a, const DetectionEvent& b) {
                  return std::tie(a.round, a.measure_qubit) < std::tie(b.round, b.measure_qubit);
              });
    return out;
}

std::string pattern_key(const DetectionPattern& p) {
    if (p.events.empty()) return "-";
    std::ostringstream s;
    bool first = true;
    for (const auto& e : p.events) {
        if (!first) s << '+';
        s << 'q' << e.measure_qubit << "@r" << e.round;
        first = false;
    }
    return s.str();
}

namespace {

struct InjectionTarget {
    // X/Z masks to fold into the frame, and whether the reported bit of a
    // MeasureZ should be flipped instead.
    std::uint64_t x_mask = 0;
    std::uint64_t z_mask = 0;
    bool report_flip = false;
};

InjectionTarget resolve_injection(const Circuit& circuit, const ErrorLocation& loc) {
    const GateInstance& g = circuit.gate(loc.gate_id);
    const auto& legal = legal_labels(g.kind);
    if (std::find(legal.begin(), legal.end(), loc.pauli) == legal.end())
        throw std::invalid_argument("pauli " + loc.pauli + " not legal for gate " + g.id);

    InjectionTarget t;
    if (g.kind == GateKind::MeasureZ) {
        t.report_flip = true;
        return t;
    }
    for (size_t i = 0; i < loc.pauli.size(); ++i) {
        PauliBits b = pauli_bits(loc.pauli[i]);
        int q = g.qubits[i];
        if (b.x) t.x_mask ^= 1ULL << q;
        if (b.z) t.z_mask ^= 1ULL << q;
    }
    return t;
}

}  // namespace

DetectionPattern propagate_single(const Circuit& circuit, const ErrorLocation& loc) {
    const GateInstance& target = circuit.gate(loc.gate_id);
    InjectionTarget inj = resolve_injection(circuit, loc);

    if (circuit.total_qubits() > 64)
        throw std::invalid_argument("propagation frame limited to 64 qubits");

    // Simulate forward from the injection period. Nothing before the error
    // deviates from the reference, so earlier rounds contribute no flips.
    PauliFrame frame;
    std::map<int, std::vector<bool>> flips;  // measure qubit -> flip per simulated round
    for (const auto& q : circuit.qubits)
        if (q.is_measure) flips[q.index] = {};

    DetectionPattern out;
    const int max_periods = 64;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> seen_frames;

    for (int period = 0; period < max_periods; ++period) {
        for (int layer = 0; layer < circuit.layers_per_period; ++layer) {
            for (const auto& g : circuit.gates) {
                if (g.layer != layer) continue;
                bool fires_here = (period == 0) && (g.id == target.id);
                switch (g.kind) {
                    case GateKind::Hadamard:
                        frame.apply_hadamard(g.qubits[0]);
                        break;
                    case GateKind::CZ:
                        frame.apply_cz(g.qubits[0], g.qubits[1]);
                        break;
                    case GateKind::IdleMemory:
                        break;
                    case GateKind::Init0:
                        frame.clear_qubit(g.qubits[0]);
                        break;
                    case GateKind::MeasureZ: {
                        bool flip = frame.x_bit(g.qubits[0]);
                        if (fires_here && inj.report_flip) flip = !flip;
                        flips[g.qubits[0]].push_back(flip);
                        break;
                    }
                }
                if (fires_here && !inj.report_flip) {
                    frame.x ^= inj.x_mask;
                    frame.z ^= inj.z_mask;
                }
            }
        }

        // Stop once the frame orbit recurs and the last full period produced
        // constant flip values (no further detection events possible).
        auto state = std::make_pair(frame.x, frame.z);
        bool recurred = std::find(seen_frames.begin(), seen_frames.end(), state) !=
                        seen_frames.end();
        seen_frames.push_back(state);
        if (recurred && period >= 2) {
            bool settled = true;
            for (const auto& [q, fs] : flips)
                if (fs.size() >= 2 && fs[fs.size() - 1] != fs[fs.size() - 2]) settled = false;
            if (settled) break;
        }
    }

    // Detection events are the time derivative of the flip stream, offset
    // to the requested injection round.
    for (const auto& [q, fs] : flips) {
        bool prev = false;
        for (size_t r = 0; r < fs.size(); ++r) {
            if (fs[r] != prev) out.events.push_back({q, static_cast<long long>(r) + loc.period_offset});
            prev = fs[r];
        }
    }
    std::sort(out.events.begin(), out.events.end(),
              [](const DetectionEvent& a, const DetectionEvent& b) {
                  return std::tie(a.round, a.measure_qubit) < std::tie(b.round, b.measure_qubit);
              });
    return out;
}

DetectionPattern propagate_composite(const Circuit& circuit,
                                     const std::vector<ErrorLocation>& locs) {
    DetectionPattern acc;
    for (const auto& loc : locs) acc = pattern_xor(acc, propagate_single(circuit, loc));
    return acc;
}

}  // namespace detnest
