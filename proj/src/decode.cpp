#include "detnest/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "detnest/rng.hpp"

namespace detnest {

using nlohmann::json;

namespace {

double safe_neg_log(double p) {
    return -std::log(std::clamp(p, 1e-12, 0.999999));
}

}  // namespace

DecoderWeights DecoderWeights::from_nest(const Nest& nest) {
    std::map<int, int> cell_of;
    for (size_t i = 0; i < nest.cells.size(); ++i) cell_of[nest.cells[i]] = static_cast<int>(i);

    double vertical = 0, horizontal = 0, single = 0;
    int nv = 0, nh = 0, ns = 0;
    for (const auto& c : nest.classes) {
        if (c.pattern.size() == 1) {
            single += c.probability;
            ++ns;
        } else {
            const auto& a = c.pattern.events[0];
            const auto& b = c.pattern.events[1];
            int dc = std::abs(cell_of.at(a.measure_qubit) - cell_of.at(b.measure_qubit));
            if (dc == 0) {
                vertical += c.probability;
                ++nv;
            } else if (a.round == b.round) {
                horizontal += c.probability;
                ++nh;
            }
        }
    }
    DecoderWeights w;
    w.time_step = safe_neg_log(nv ? vertical / nv : 1e-3);
    w.space_step = safe_neg_log(nh ? horizontal / nh : 1e-3);
    w.edge = safe_neg_log(ns ? single / ns : 1e-3);
    return w;
}

namespace {

struct Candidate {
    double cost;
    int i, j;  // j = -1 for edge
    bool operator<(const Candidate& o) const {
        return std::tie(cost, i, j) < std::tie(o.cost, o.i, o.j);
    }
};

double edge_cost(int cell, int num_cells, const DecoderWeights& w) {
    double left = w.edge + cell * w.space_step;
    double right = w.edge + (num_cells - 1 - cell) * w.space_step;
    return std::min(left, right);
}

void apply_correction(std::vector<std::uint8_t>& flips, int cell_a, int cell_b) {
    // Chain between two cells flips the data qubits strictly between them.
    int lo = std::min(cell_a, cell_b), hi = std::max(cell_a, cell_b);
    for (int d = lo + 1; d <= hi; ++d) flips[d] ^= 1;
}

void apply_edge_correction(std::vector<std::uint8_t>& flips, int cell, int num_cells) {
    int num_data = num_cells + 1;
    bool left = cell <= num_cells - 1 - cell;
    if (left)
        for (int d = 0; d <= cell; ++d) flips[d] ^= 1;
    else
        for (int d = cell + 1; d < num_data; ++d) flips[d] ^= 1;
}

std::vector<int> event_cells(const std::vector<DetectionEvent>& events, const Circuit& c) {
    for (const auto& q : c.qubits)
        if (q.is_measure && q.stabilizer != StabilizerType::Z)
            throw std::invalid_argument("decoder expects a repetition (Z-check) circuit");
    std::vector<int> cells;
    cells.reserve(events.size());
    for (const auto& e : events) {
        int cell = c.cell_of(e.measure_qubit);
        if (cell < 0) throw std::invalid_argument("event on a non-measure qubit");
        cells.push_back(cell);
    }
    return cells;
}

}  // namespace

Decoding decode(const std::vector<DetectionEvent>& events, const Circuit& circuit,
                const DecoderWeights& weights) {
    std::vector<int> cells = event_cells(events, circuit);
    int num_cells = circuit.num_measure;

    Decoding out;
    out.data_flips.assign(circuit.num_data, 0);
    if (events.empty()) return out;

    std::vector<Candidate> candidates;
    for (size_t i = 0; i < events.size(); ++i) {
        candidates.push_back(
            {edge_cost(cells[i], num_cells, weights), static_cast<int>(i), -1});
        for (size_t j = i + 1; j < events.size(); ++j) {
            double cost =
                std::abs(cells[i] - cells[j]) * weights.space_step +
                static_cast<double>(std::llabs(events[i].round - events[j].round)) *
                    weights.time_step;
            candidates.push_back({cost, static_cast<int>(i), static_cast<int>(j)});
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<bool> used(events.size(), false);
    for (const auto& cand : candidates) {
        if (used[cand.i]) continue;
        if (cand.j >= 0 && used[cand.j]) continue;
        used[cand.i] = true;
        if (cand.j >= 0) used[cand.j] = true;
        out.matches.push_back({cand.i, cand.j});
        out.total_weight += cand.cost;
        if (cand.j >= 0)
            apply_correction(out.data_flips, cells[cand.i], cells[cand.j]);
        else
            apply_edge_correction(out.data_flips, cells[cand.i], num_cells);
    }
    return out;
}

Decoding decode_record(const MeasurementRecord& record, const Circuit& circuit,
                       const DecoderWeights& weights) {
    return decode(detect_events(record), circuit, weights);
}

namespace {

void exact_search(const std::vector<DetectionEvent>& events, const std::vector<int>& cells,
                  int num_cells, const DecoderWeights& w, std::vector<int>& partner,
                  std::vector<bool>& used, size_t depth, double cost, double& best_cost,
                  std::vector<int>& best_partner) {
    if (cost >= best_cost) return;
    size_t i = depth;
    while (i < events.size() && used[i]) ++i;
    if (i == events.size()) {
        best_cost = cost;
        best_partner = partner;
        return;
    }
    used[i] = true;

    partner[i] = -1;
    exact_search(events, cells, num_cells, w, partner, used, i + 1,
                 cost + edge_cost(cells[i], num_cells, w), best_cost, best_partner);

    for (size_t j = i + 1; j < events.size(); ++j) {
        if (used[j]) continue;
        used[j] = true;
        partner[i] = static_cast<int>(j);
        partner[j] = static_cast<int>(i);
        double pair_cost =
            std::abs(cells[i] - cells[j]) * w.space_step +
            static_cast<double>(std::llabs(events[i].round - events[j].round)) * w.time_step;
        exact_search(events, cells, num_cells, w, partner, used, i + 1, cost + pair_cost,
                     best_cost, best_partner);
        partner[j] = -2;
        used[j] = false;
    }
    partner[i] = -2;
    used[i] = false;
}

}  // namespace

Decoding decode_exact(const std::vector<DetectionEvent>& events, const Circuit& circuit,
                      const DecoderWeights& weights, size_t max_events) {
    if (events.size() > max_events)
        throw std::invalid_argument("exact matcher limited to " + std::to_string(max_events) +
                                    " events");
    std::vector<int> cells = event_cells(events, circuit);
    int num_cells = circuit.num_measure;

    std::vector<int> partner(events.size(), -2), best_partner(events.size(), -2);
    std::vector<bool> used(events.size(), false);
    double best_cost = std::numeric_limits<double>::infinity();
    if (events.empty()) best_cost = 0;
    exact_search(events, cells, num_cells, weights, partner, used, 0, 0, best_cost,
                 best_partner);

    Decoding out;
    out.data_flips.assign(circuit.num_data, 0);
    out.total_weight = best_cost;
    for (size_t i = 0; i < events.size(); ++i) {
        if (best_partner[i] == -1) {
            out.matches.push_back({static_cast<int>(i), -1});
            apply_edge_correction(out.data_flips, cells[i], num_cells);
        } else if (best_partner[i] > static_cast<int>(i)) {
            out.matches.push_back({static_cast<int>(i), best_partner[i]});
            apply_correction(out.data_flips, cells[i], cells[best_partner[i]]);
        }
    }
    return out;
}

LogicalTrialResult make_trial_result(std::uint64_t failures, std::uint64_t trials,
                                     std::uint64_t rounds_per_trial) {
    LogicalTrialResult r;
    r.trials = trials;
    r.logical_failures = failures;
    r.rounds_per_trial = rounds_per_trial;
    r.rate = trials ? static_cast<double>(failures) / static_cast<double>(trials) : 0.0;
    if (trials) {
        // Wilson interval at 95%.
        double z = 1.959963984540054;
        double n = static_cast<double>(trials);
        double p = r.rate;
        double denom = 1.0 + z * z / n;
        double center = (p + z * z / (2 * n)) / denom;
        double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
        r.ci_low = std::max(0.0, center - half);
        r.ci_high = std::min(1.0, center + half);
    }
    return r;
}

LogicalTrialResult logical_error_rate(const Circuit& circuit, std::uint64_t trials,
                                      std::uint64_t rounds_per_trial, std::uint64_t seed,
                                      const SimOptions& options) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    Nest nest = build_nest(circuit, StabilizerType::Z);
    DecoderWeights weights = DecoderWeights::from_nest(nest);

    std::uint64_t failures = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        SimResult sr = simulate_full(circuit, rounds_per_trial, derive_seed(seed, t), options);
        Decoding dec = decode_record(sr.record, circuit, weights);
        bool true_flip = sr.final_frame.x_bit(0);  // reference data qubit worldline
        bool corrected_flip = dec.data_flips[0] != 0;
        if (true_flip != corrected_flip) ++failures;
    }
    return make_trial_result(failures, trials, rounds_per_trial);
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "consistent";
        case Verdict::ObservedWorse: return "observed-worse";
        case Verdict::ObservedBetter: return "observed-better";
    }
    throw std::logic_error("bad verdict");
}

ComparisonReport compare_predicted_vs_observed(const LogicalTrialResult& observed,
                                               const LogicalTrialResult& predicted,
                                               double alpha) {
    if (observed.trials == 0 || predicted.trials == 0)
        throw std::invalid_argument("zero-trial inputs");
    if (observed.rounds_per_trial != predicted.rounds_per_trial)
        throw std::invalid_argument("trial windows differ");

    ComparisonReport rep;
    rep.observed = observed;
    rep.predicted = predicted;

    double n1 = static_cast<double>(observed.trials);
    double n2 = static_cast<double>(predicted.trials);
    double p1 = observed.rate, p2 = predicted.rate;
    double pooled = (static_cast<double>(observed.logical_failures) +
                     static_cast<double>(predicted.logical_failures)) /
                    (n1 + n2);
    double var = pooled * (1 - pooled) * (1 / n1 + 1 / n2);
    if (var <= 0) {
        rep.z = 0;
        rep.p_value = 1;
        rep.verdict = Verdict::Consistent;
        return rep;
    }
    rep.z = (p1 - p2) / std::sqrt(var);
    rep.p_value = std::erfc(std::abs(rep.z) / std::sqrt(2.0));
    if (rep.p_value < alpha)
        rep.verdict = rep.z > 0 ? Verdict::ObservedWorse : Verdict::ObservedBetter;
    else
        rep.verdict = Verdict::Consistent;
    return rep;
}

std::string comparison_report_json(const ComparisonReport& r) {
    auto trial_json = [](const LogicalTrialResult& t) {
        json j;
        j["trials"] = t.trials;
        j["logical_failures"] = t.logical_failures;
        j["rounds_per_trial"] = t.rounds_per_trial;
        j["rate"] = t.rate;
        j["ci95"] = {t.ci_low, t.ci_high};
        j["ci_method"] = "wilson";
        return j;
    };
    json j;
    j["schema"] = "verdict.v1";
    j["verdict"] = verdict_name(r.verdict);
    j["z"] = r.z;
    j["p_value"] = r.p_value;
    j["observed"] = trial_json(r.observed);
    j["predicted"] = trial_json(r.predicted);
    return j.dump(2);
}

}  // namespace detnest
