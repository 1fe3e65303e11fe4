#include "detnest/extract.hpp"

#include <algorithm>
#include <fstream>
#include <list>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace detnest {

using nlohmann::json;

void ClusterPolicy::validate() const {
    if (space_cells < 1 || time_rounds < 1)
        throw std::invalid_argument("isolation radius components must be at least 1");
    if (max_cluster_size < 1) throw std::invalid_argument("max_cluster_size must be at least 1");
}

std::vector<DetectionEvent> detect_events(const MeasurementRecord& record) {
    if (record.rounds == 0) throw std::invalid_argument("empty record");
    std::vector<DetectionEvent> events;
    for (size_t m = 0; m < record.measure_qubits.size(); ++m) {
        bool prev = false;
        for (std::uint64_t r = 0; r < record.rounds; ++r) {
            bool b = record.bit(m, r);
            if (b != prev)
                events.push_back({record.measure_qubits[m], static_cast<long long>(r)});
            prev = b;
        }
    }
    std::sort(events.begin(), events.end(),
              [](const DetectionEvent& a, const DetectionEvent& b) {
                  return std::tie(a.round, a.measure_qubit) <
                         std::tie(b.round, b.measure_qubit);
              });
    return events;
}

namespace {

/// Sliding-window connected components. Memory stays proportional to the
/// number of events inside the time radius, so arbitrarily long records
/// stream through in one pass.
class StreamClusterer {
  public:
    StreamClusterer(const ClusterPolicy& policy, const std::map<int, int>& cell_of)
        : policy_(policy), cell_of_(cell_of) {}

    void push(const DetectionEvent& e) {
        flush_before(e.round - policy_.time_rounds);
        int cell = cell_of_.at(e.measure_qubit);
        std::vector<std::list<Open>::iterator> touching;
        for (auto it = open_.begin(); it != open_.end(); ++it) {
            for (const auto& [c, r] : it->events) {
                if (std::abs(c - cell) <= policy_.space_cells &&
                    std::abs(r - e.round) <= policy_.time_rounds) {
                    touching.push_back(it);
                    break;
                }
            }
        }
        if (touching.empty()) {
            open_.push_back({{{cell, e.round}}, {e}});
            return;
        }
        auto dst = touching.front();
        for (size_t i = 1; i < touching.size(); ++i) {
            dst->events.insert(dst->events.end(), touching[i]->events.begin(),
                               touching[i]->events.end());
            dst->members.insert(dst->members.end(), touching[i]->members.begin(),
                                touching[i]->members.end());
            open_.erase(touching[i]);
        }
        dst->events.push_back({cell, e.round});
        dst->members.push_back(e);
    }

    void finish() { flush_before(std::numeric_limits<long long>::max()); }

    std::vector<Cluster> take_completed() { return std::move(completed_); }
    std::uint64_t ignored() const { return ignored_; }

  private:
    struct Open {
        std::vector<std::pair<int, long long>> events;  // (cell, round)
        Cluster members;
    };

    void flush_before(long long round) {
        for (auto it = open_.begin(); it != open_.end();) {
            long long max_round = 0;
            for (const auto& [c, r] : it->events) max_round = std::max(max_round, r);
            if (max_round < round) {
                if (static_cast<int>(it->members.size()) > policy_.max_cluster_size) {
                    ++ignored_;
                } else {
                    std::sort(it->members.begin(), it->members.end(),
                              [](const DetectionEvent& a, const DetectionEvent& b) {
                                  return std::tie(a.round, a.measure_qubit) <
                                         std::tie(b.round, b.measure_qubit);
                              });
                    completed_.push_back(std::move(it->members));
                }
                it = open_.erase(it);
            } else {
                ++it;
            }
        }
    }

    ClusterPolicy policy_;
    const std::map<int, int>& cell_of_;
    std::list<Open> open_;
    std::vector<Cluster> completed_;
    std::uint64_t ignored_ = 0;
};

}  // namespace

ClusterResult cluster_events(const std::vector<DetectionEvent>& events,
                             const ClusterPolicy& policy,
                             const std::map<int, int>& cell_of) {
    policy.validate();
    StreamClusterer sc(policy, cell_of);
    for (const auto& e : events) sc.push(e);
    sc.finish();
    ClusterResult out;
    out.clusters = sc.take_completed();
    out.ignored_clusters = sc.ignored();
    return out;
}

Classification classify_cluster(const Cluster& cluster, const Nest& nest) {
    if (cluster.empty() || cluster.size() > 2)
        throw std::invalid_argument("classify_cluster handles clusters of size 1 or 2");

    Classification out;
    if (cluster.size() == 1) {
        int q = cluster.front().measure_qubit;
        auto it = std::find(nest.cells.begin(), nest.cells.end(), q);
        if (it == nest.cells.end()) throw std::invalid_argument("event off this nest's cells");
        bool boundary = nest.cell_boundary[it - nest.cells.begin()];
        if (!boundary) {
            out.verdict = ClusterVerdict::TimeEdge;
            return out;
        }
    }
    DetectionPattern p;
    p.events = cluster;
    DetectionPattern canon = canonicalize(p);
    if (class_lookup(nest, canon) != nullptr) {
        out.verdict = ClusterVerdict::Matched;
        out.pattern = canon;
    } else {
        out.verdict = ClusterVerdict::Unmatched;
    }
    return out;
}

double EstimatedNest::probability(const DetectionPattern& pattern) const {
    return static_cast<double>(count(pattern)) / static_cast<double>(rounds_observed);
}

std::uint64_t EstimatedNest::count(const DetectionPattern& pattern) const {
    auto it = counts.find(canonicalize(pattern).events);
    return it == counts.end() ? 0 : it->second;
}

std::uint64_t EstimatedNest::total_clusters() const {
    std::uint64_t t = ignored_clusters + unmatched + time_edge;
    for (const auto& [p, c] : counts) t += c;
    return t;
}

EstimatedNest estimate_nest(const MeasurementRecord& record, const Nest& nest,
                            const ClusterPolicy& policy) {
    policy.validate();
    if (record.circuit_hash != nest.circuit_hash)
        throw std::invalid_argument("record and nest come from different circuits");
    if (record.rounds == 0) throw std::invalid_argument("empty record");

    EstimatedNest est;
    est.circuit_name = record.circuit_name;
    est.circuit_hash = record.circuit_hash;
    est.stabilizer_type = nest.stabilizer_type;
    est.rounds_observed = record.rounds;

    std::map<int, int> cell_of;
    std::vector<size_t> ordinals;  // record columns belonging to this nest
    for (size_t i = 0; i < nest.cells.size(); ++i) {
        cell_of[nest.cells[i]] = static_cast<int>(i);
        auto it = std::find(record.measure_qubits.begin(), record.measure_qubits.end(),
                            nest.cells[i]);
        if (it == record.measure_qubits.end())
            throw std::invalid_argument("record lacks measure qubit " +
                                        std::to_string(nest.cells[i]));
        ordinals.push_back(static_cast<size_t>(it - record.measure_qubits.begin()));
    }

    StreamClusterer sc(policy, cell_of);
    auto classify_batch = [&](std::vector<Cluster>&& batch) {
        for (const auto& cl : batch) {
            Classification c = classify_cluster(cl, nest);
            switch (c.verdict) {
                case ClusterVerdict::Matched: est.counts[c.pattern.events]++; break;
                case ClusterVerdict::TimeEdge: est.time_edge++; break;
                case ClusterVerdict::Unmatched: est.unmatched++; break;
            }
        }
    };

    std::vector<bool> prev(ordinals.size(), false);
    for (std::uint64_t r = 0; r < record.rounds; ++r) {
        for (size_t i = 0; i < ordinals.size(); ++i) {
            bool b = record.bit(ordinals[i], r);
            if (b != prev[i]) sc.push({nest.cells[i], static_cast<long long>(r)});
            prev[i] = b;
        }
        if ((r & 1023) == 0) classify_batch(sc.take_completed());
    }
    sc.finish();
    classify_batch(sc.take_completed());
    est.ignored_clusters = sc.ignored();
    return est;
}

EstimatedNest merge_estimates(const std::vector<EstimatedNest>& parts) {
    if (parts.empty()) throw std::invalid_argument("nothing to merge");
    EstimatedNest out = parts.front();
    for (size_t i = 1; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.circuit_hash != out.circuit_hash)
            throw std::invalid_argument("cannot merge estimates from different circuits");
        out.rounds_observed += p.rounds_observed;
        out.ignored_clusters += p.ignored_clusters;
        out.unmatched += p.unmatched;
        out.time_edge += p.time_edge;
        for (const auto& [pattern, count] : p.counts) out.counts[pattern] += count;
    }
    return out;
}

std::string estimate_to_json(const EstimatedNest& e) {
    json j;
    j["schema"] = "estnest.v1";
    j["circuit_name"] = e.circuit_name;
    j["circuit_hash"] = e.circuit_hash;
    j["stabilizer_type"] = stabilizer_name(e.stabilizer_type);
    j["rounds_observed"] = e.rounds_observed;
    j["ignored_clusters"] = e.ignored_clusters;
    j["unmatched"] = e.unmatched;
    j["time_edge"] = e.time_edge;
    j["counts"] = json::array();
    for (const auto& [pattern, count] : e.counts) {
        json cj;
        cj["pattern"] = json::array();
        for (const auto& ev : pattern)
            cj["pattern"].push_back({{"qubit", ev.measure_qubit}, {"round", ev.round}});
        cj["count"] = count;
        cj["probability"] =
            static_cast<double>(count) / static_cast<double>(e.rounds_observed);
        j["counts"].push_back(cj);
    }
    return j.dump(2);
}

EstimatedNest estimate_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "estnest.v1")
        throw std::invalid_argument("expected schema estnest.v1");
    EstimatedNest e;
    e.circuit_name = j.at("circuit_name").get<std::string>();
    e.circuit_hash = j.at("circuit_hash").get<std::uint64_t>();
    e.stabilizer_type = stabilizer_from_name(j.at("stabilizer_type").get<std::string>());
    e.rounds_observed = j.at("rounds_observed").get<std::uint64_t>();
    e.ignored_clusters = j.at("ignored_clusters").get<std::uint64_t>();
    e.unmatched = j.at("unmatched").get<std::uint64_t>();
    e.time_edge = j.at("time_edge").get<std::uint64_t>();
    for (const auto& cj : j.at("counts")) {
        std::vector<DetectionEvent> pattern;
        for (const auto& ej : cj.at("pattern"))
            pattern.push_back({ej.at("qubit").get<int>(), ej.at("round").get<long long>()});
        e.counts[pattern] = cj.at("count").get<std::uint64_t>();
    }
    return e;
}

EstimatedNest load_estimate(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return estimate_from_json(ss.str());
}

void save_estimate(const EstimatedNest& e, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << estimate_to_json(e) << '\n';
}

}  // namespace detnest
