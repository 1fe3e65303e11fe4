#include "detnest/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace detnest {

using nlohmann::json;

namespace {

struct AnchoredCluster {
    long long anchor = 0;  // earliest event round
    std::string key;       // canonical pattern key
};

std::vector<AnchoredCluster> clusters_of_type(const MeasurementRecord& record,
                                              const Circuit& circuit, StabilizerType type,
                                              const ClusterPolicy& policy) {
    std::vector<int> qubits = circuit.measure_qubits_of(type);
    std::map<int, int> cell_of;
    std::map<int, size_t> ordinal_of;
    for (size_t i = 0; i < qubits.size(); ++i) {
        cell_of[qubits[i]] = static_cast<int>(i);
        auto it = std::find(record.measure_qubits.begin(), record.measure_qubits.end(),
                            qubits[i]);
        if (it == record.measure_qubits.end())
            throw std::invalid_argument("record lacks a measure qubit of the circuit");
        ordinal_of[qubits[i]] = static_cast<size_t>(it - record.measure_qubits.begin());
    }

    std::vector<DetectionEvent> events;
    for (int q : qubits) {
        bool prev = false;
        for (std::uint64_t r = 0; r < record.rounds; ++r) {
            bool b = record.bit(ordinal_of[q], r);
            if (b != prev) events.push_back({q, static_cast<long long>(r)});
            prev = b;
        }
    }
    std::sort(events.begin(), events.end(),
              [](const DetectionEvent& a, const DetectionEvent& b) {
                  return std::tie(a.round, a.measure_qubit) <
                         std::tie(b.round, b.measure_qubit);
              });

    auto result = cluster_events(events, policy, cell_of);
    std::vector<AnchoredCluster> out;
    out.reserve(result.clusters.size());
    for (const auto& cl : result.clusters) {
        DetectionPattern p;
        p.events = cl;
        AnchoredCluster a;
        a.anchor = cl.front().round;
        for (const auto& e : cl) a.anchor = std::min(a.anchor, e.round);
        a.key = pattern_key(canonicalize(p));
        out.push_back(a);
    }
    std::sort(out.begin(), out.end(), [](const AnchoredCluster& a, const AnchoredCluster& b) {
        return a.anchor < b.anchor;
    });
    return out;
}

}  // namespace

const JointEntry* CrossCorrelationReport::find(const std::string& z_pattern,
                                               const std::string& x_pattern,
                                               long long offset) const {
    for (const auto& e : entries)
        if (e.z_pattern == z_pattern && e.x_pattern == x_pattern && e.offset == offset)
            return &e;
    return nullptr;
}

CrossCorrelationReport cross_correlate(const MeasurementRecord& record,
                                       const Circuit& circuit, long long window,
                                       const ClusterPolicy& policy) {
    if (record.circuit_hash != circuit_hash(circuit))
        throw std::invalid_argument("record and circuit do not match");
    if (circuit.measure_qubits_of(StabilizerType::X).empty())
        throw std::invalid_argument("circuit has no X-type measure qubits");
    if (window < 0) throw std::invalid_argument("window must be non-negative");

    auto z_clusters = clusters_of_type(record, circuit, StabilizerType::Z, policy);
    auto x_clusters = clusters_of_type(record, circuit, StabilizerType::X, policy);

    CrossCorrelationReport rep;
    rep.rounds = record.rounds;
    rep.window = window;
    for (const auto& c : z_clusters) rep.z_marginals[c.key]++;
    for (const auto& c : x_clusters) rep.x_marginals[c.key]++;

    std::map<std::tuple<std::string, std::string, long long>, std::uint64_t> joint;
    size_t lo = 0;
    for (const auto& zc : z_clusters) {
        while (lo < x_clusters.size() && x_clusters[lo].anchor < zc.anchor - window) ++lo;
        for (size_t i = lo; i < x_clusters.size(); ++i) {
            long long delta = x_clusters[i].anchor - zc.anchor;
            if (delta > window) break;
            joint[{zc.key, x_clusters[i].key, delta}]++;
        }
    }

    double rounds = static_cast<double>(record.rounds);
    for (const auto& [key, count] : joint) {
        const auto& [zk, xk, delta] = key;
        JointEntry e;
        e.z_pattern = zk;
        e.x_pattern = xk;
        e.offset = delta;
        e.count = count;
        double nz = static_cast<double>(rep.z_marginals.at(zk));
        double nx = static_cast<double>(rep.x_marginals.at(xk));
        e.expected = nz * nx / rounds;
        e.conditional = static_cast<double>(count) / nz;
        e.baseline = nx / rounds;
        e.excess = e.conditional - e.baseline;
        e.sigma = std::sqrt(std::max(e.expected, 1.0)) / nz;
        e.z_score = (static_cast<double>(count) - e.expected) / std::sqrt(std::max(e.expected, 1e-12));
        rep.entries.push_back(e);
    }
    std::sort(rep.entries.begin(), rep.entries.end(), [](const JointEntry& a, const JointEntry& b) {
        return std::tie(a.z_pattern, a.x_pattern, a.offset) <
               std::tie(b.z_pattern, b.x_pattern, b.offset);
    });
    return rep;
}

AutocorrelationReport temporal_autocorrelate(const MeasurementRecord& record, int max_lag) {
    if (max_lag < 1) throw std::invalid_argument("max_lag must be at least 1");
    AutocorrelationReport rep;
    rep.rounds = record.rounds;
    rep.max_lag = max_lag;

    for (size_t m = 0; m < record.measure_qubits.size(); ++m) {
        QubitAutocorrelation qa;
        qa.qubit = record.measure_qubits[m];

        std::vector<std::uint8_t> ev(record.rounds, 0);
        std::uint64_t n = 0;
        bool prev = false;
        for (std::uint64_t r = 0; r < record.rounds; ++r) {
            bool b = record.bit(m, r);
            if (b != prev) {
                ev[r] = 1;
                ++n;
            }
            prev = b;
        }
        qa.events = n;
        qa.defined = n > 0;
        if (qa.defined) {
            double baseline = static_cast<double>(n) / static_cast<double>(record.rounds);
            for (int k = 1; k <= max_lag; ++k) {
                AutocorrelationLag lag;
                lag.lag = k;
                std::uint64_t c = 0;
                for (std::uint64_t r = 0; r + k < record.rounds; ++r)
                    if (ev[r] && ev[r + k]) ++c;
                lag.coincidences = c;
                lag.conditional = static_cast<double>(c) / static_cast<double>(n);
                lag.baseline = baseline;
                lag.excess = lag.conditional - lag.baseline;
                double expected = baseline * static_cast<double>(n);
                lag.z_score = (static_cast<double>(c) - expected) /
                              std::sqrt(std::max(expected, 1e-12));
                qa.lags.push_back(lag);
            }
        }
        rep.per_qubit.push_back(qa);
    }
    return rep;
}

std::string cross_correlation_json(const CrossCorrelationReport& r) {
    json j;
    j["schema"] = "crosscorr.v1";
    j["rounds"] = r.rounds;
    j["window"] = r.window;
    j["z_marginals"] = r.z_marginals;
    j["x_marginals"] = r.x_marginals;
    j["entries"] = json::array();
    for (const auto& e : r.entries) {
        json ej;
        ej["z_pattern"] = e.z_pattern;
        ej["x_pattern"] = e.x_pattern;
        ej["offset"] = e.offset;
        ej["count"] = e.count;
        ej["expected"] = e.expected;
        ej["conditional"] = e.conditional;
        ej["baseline"] = e.baseline;
        ej["excess"] = e.excess;
        ej["sigma"] = e.sigma;
        ej["z_score"] = e.z_score;
        j["entries"].push_back(ej);
    }
    return j.dump(2);
}

std::string autocorrelation_json(const AutocorrelationReport& r) {
    json j;
    j["schema"] = "autocorr.v1";
    j["rounds"] = r.rounds;
    j["max_lag"] = r.max_lag;
    j["per_qubit"] = json::array();
    for (const auto& qa : r.per_qubit) {
        json qj;
        qj["qubit"] = qa.qubit;
        qj["events"] = qa.events;
        qj["defined"] = qa.defined;
        if (qa.defined) {
            qj["lags"] = json::array();
            for (const auto& lag : qa.lags) {
                json lj;
                lj["lag"] = lag.lag;
                lj["coincidences"] = lag.coincidences;
                lj["conditional"] = lag.conditional;
                lj["baseline"] = lag.baseline;
                lj["excess"] = lag.excess;
                lj["z_score"] = lag.z_score;
                qj["lags"].push_back(lj);
            }
        }
        j["per_qubit"].push_back(qj);
    }
    return j.dump(2);
}

}  // namespace detnest
