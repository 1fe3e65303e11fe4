#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "detnest/extract.hpp"
#include "detnest/nest.hpp"
#include "detnest/rng.hpp"
#include "detnest/simulate.hpp"

using namespace detnest;

namespace {

std::map<GateKind, GateErrorModel> depolarizing_models(double rate) {
    std::map<GateKind, GateErrorModel> m;
    for (auto k : {GateKind::Init0, GateKind::Hadamard, GateKind::CZ, GateKind::IdleMemory,
                   GateKind::MeasureZ})
        m[k] = GateErrorModel::depolarizing(k, rate);
    return m;
}

bool any_bit_set(const MeasurementRecord& r) {
    for (const auto& col : r.bits)
        for (auto w : col)
            if (w) return true;
    return false;
}

}  // namespace

TEST_CASE("all-zero models give an all-zero stream") {
    for (bool square : {false, true}) {
        Circuit c = square ? build_parity_square_circuit(depolarizing_models(0.0))
                           : build_repetition_circuit(3, depolarizing_models(0.0));
        MeasurementRecord r = simulate(c, 500, 42);
        CHECK_FALSE(any_bit_set(r));
    }
}

TEST_CASE("identical seeds give bit-identical records") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.01));
    MeasurementRecord a = simulate(c, 20000, 1234);
    MeasurementRecord b = simulate(c, 20000, 1234);
    CHECK(a.bits == b.bits);
    MeasurementRecord other = simulate(c, 20000, 1235);
    CHECK(other.bits != a.bits);
}

TEST_CASE("rounds must be positive") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.001));
    CHECK_THROWS(simulate(c, 0, 1));
}

TEST_CASE("a single forced error reproduces the propagation oracle") {
    for (bool square : {false, true}) {
        Circuit c = square ? build_parity_square_circuit(depolarizing_models(0.0))
                           : build_repetition_circuit(3, depolarizing_models(0.0));
        for (const auto& g : c.gates) {
            for (const auto& label : legal_labels(g.kind)) {
                SimOptions opt;
                opt.forced_errors.push_back({4, g.id, label});
                MeasurementRecord r = simulate_full(c, 16, 9, opt).record;
                std::vector<DetectionEvent> got = detect_events(r);
                DetectionPattern expect = propagate_single(c, {g.id, label, 4});
                CAPTURE(c.name);
                CAPTURE(g.id);
                CAPTURE(label);
                CHECK(got == expect.events);
            }
        }
    }
}

TEST_CASE("a certain error every round telescopes to a single onset event") {
    auto models = depolarizing_models(0.0);
    GateErrorModel h = GateErrorModel::zero(GateKind::Hadamard);
    h.set_term("Z", 1.0);
    models[GateKind::Hadamard] = h;
    Circuit c = build_repetition_circuit(3, models);
    // Restrict the certain error to H3 only.
    c.default_models[GateKind::Hadamard] = GateErrorModel::zero(GateKind::Hadamard);
    c.override_models["H3"] = h;

    MeasurementRecord r = simulate(c, 50, 3);
    std::vector<DetectionEvent> got = detect_events(r);

    std::vector<ErrorLocation> locs;
    for (long long t = 0; t < 50; ++t) locs.push_back({"H3", "Z", t});
    DetectionPattern composite = propagate_composite(c, locs);
    // Keep only events inside the observed window.
    std::vector<DetectionEvent> expect;
    for (const auto& e : composite.events)
        if (e.round < 50) expect.push_back(e);
    CHECK(got == expect);
    CHECK(got.size() == 1);
    CHECK(got[0].round == 1);
}

TEST_CASE("sharding is reproducible and matches the derived-seed contract") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.01));
    auto shards = simulate_sharded(c, 5000, 77, 4);
    CHECK(shards.size() == 4);
    std::set<std::uint64_t> seeds;
    for (int s = 0; s < 4; ++s) {
        CHECK(shards[s].seed == derive_seed(77, s));
        seeds.insert(shards[s].seed);
        MeasurementRecord direct = simulate(c, 5000, derive_seed(77, s));
        CHECK(shards[s].bits == direct.bits);
    }
    CHECK(seeds.size() == 4);

    auto threaded = simulate_sharded(c, 5000, 77, 4, 4);
    for (int s = 0; s < 4; ++s) CHECK(threaded[s].bits == shards[s].bits);

    auto one = simulate_sharded(c, 5000, 77, 1);
    CHECK(one[0].bits == simulate(c, 5000, derive_seed(77, 0)).bits);
}

TEST_CASE("sharded frequencies agree between 4x25k and 1x100k runs") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.001));
    Nest n = build_nest(c, StabilizerType::Z);
    ClusterPolicy policy;

    auto shards = simulate_sharded(c, 25000, 5150, 4);
    std::vector<EstimatedNest> parts;
    for (const auto& r : shards) parts.push_back(estimate_nest(r, n, policy));
    EstimatedNest merged = merge_estimates(parts);

    EstimatedNest single = estimate_nest(simulate(c, 100000, 999), n, policy);
    CHECK(merged.rounds_observed == single.rounds_observed);

    for (const auto& cls : n.classes) {
        double n1 = static_cast<double>(merged.count(cls.pattern));
        double n2 = static_cast<double>(single.count(cls.pattern));
        double expected = cls.probability * 100000;
        double sigma = std::sqrt(std::max(expected, 1.0));
        CHECK(std::abs(n1 - n2) <= 3 * sigma * std::sqrt(2.0) + 3);
    }
}

TEST_CASE("empirical class frequencies match the nest at sparse rates") {
    // Sparse regime: isolation losses are far below the statistical band.
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.0002));
    Nest n = build_nest(c, StabilizerType::Z);
    std::uint64_t rounds = 1000000;
    EstimatedNest est = estimate_nest(simulate(c, rounds, 2024), n, ClusterPolicy{});
    for (const auto& cls : n.classes) {
        double expected = cls.probability * static_cast<double>(rounds);
        double sigma = std::sqrt(expected);
        double got = static_cast<double>(est.count(cls.pattern));
        CAPTURE(pattern_key(cls.pattern));
        CHECK(std::abs(got - expected) <= 3 * sigma + 3);
    }
}

TEST_CASE("record file round trip is exact") {
    Circuit c = build_parity_square_circuit(depolarizing_models(0.008));
    MeasurementRecord r = simulate(c, 12345, 31);
    auto path = std::filesystem::temp_directory_path() / "detnest_test.mrec";
    save_record(r, path.string());
    MeasurementRecord back = load_record(path.string());
    CHECK(back.bits == r.bits);
    CHECK(back.circuit_hash == r.circuit_hash);
    CHECK(back.model_fingerprint == r.model_fingerprint);
    CHECK(back.seed == r.seed);
    CHECK(back.rounds == r.rounds);
    CHECK(back.rng_name == r.rng_name);
    CHECK(back.measure_qubits == r.measure_qubits);
    CHECK(back.circuit_name == r.circuit_name);
    std::string sidecar = record_sidecar_json(r);
    CHECK(sidecar.find("splitmix64") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("throughput stays above the contract") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.008));
    auto start = std::chrono::steady_clock::now();
    MeasurementRecord r = simulate(c, 400000, 5);
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    double rounds_per_second = 400000.0 / elapsed.count();
    CHECK(rounds_per_second >= 1e5);
}
