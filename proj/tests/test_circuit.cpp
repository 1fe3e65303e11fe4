#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "detnest/circuit.hpp"

using namespace detnest;

namespace {

std::map<GateKind, GateErrorModel> depolarizing_models(double rate) {
    std::map<GateKind, GateErrorModel> m;
    for (auto k : {GateKind::Init0, GateKind::Hadamard, GateKind::CZ, GateKind::IdleMemory,
                   GateKind::MeasureZ})
        m[k] = GateErrorModel::depolarizing(k, rate);
    return m;
}

}  // namespace

TEST_CASE("distance 3 circuit matches the reference layout") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.001));
    CHECK(c.num_data == 3);
    CHECK(c.num_measure == 2);
    // 4 CZ + 3 consolidated idles + 4 H + 2 M + 2 Init.
    CHECK(c.gates.size() == 15);

    std::set<std::string> ids;
    for (const auto& g : c.gates) ids.insert(g.id);
    std::set<std::string> expected = {"CZ1", "CZ2", "CZ3", "CZ4", "I1", "I2", "I3", "H1",
                                      "H2",  "H3",  "H4",  "M1",  "M2", "|0>1", "|0>2"};
    CHECK(ids == expected);

    // CZ1 and CZ3 fire before CZ2 and CZ4.
    CHECK(c.gate("CZ1").layer == 0);
    CHECK(c.gate("CZ3").layer == 0);
    CHECK(c.gate("CZ2").layer == 1);
    CHECK(c.gate("CZ4").layer == 1);
    CHECK(c.gate("CZ1").qubits == std::vector<int>{0, 1});
    CHECK(c.gate("CZ3").qubits == std::vector<int>{2, 3});

    // Pre-measure Hadamards precede measurement; post-init ones follow it.
    CHECK(c.gate("H1").layer < c.gate("M1").layer);
    CHECK(c.gate("H3").layer > c.gate("|0>1").layer);

    CHECK(c.gate("I1").slots == 5);
    CHECK(c.gate("I2").slots == 4);
    CHECK(c.gate("I3").slots == 5);

    CHECK(c.is_boundary(1));
    CHECK(c.is_boundary(3));
    CHECK(c.cell_of(1) == 0);
    CHECK(c.cell_of(3) == 1);
}

TEST_CASE("distance 2 has a single doubly-boundary measure qubit") {
    Circuit c = build_repetition_circuit(2, depolarizing_models(0.001));
    CHECK(c.num_data == 2);
    CHECK(c.num_measure == 1);
    CHECK(c.is_boundary(1));
}

TEST_CASE("interior measure qubits of distance 5 are isomorphic under translation") {
    Circuit c = build_repetition_circuit(5, depolarizing_models(0.001));
    // Gates touching measure qubit k live at qubits {2k, 2k+1, 2k+2}; shifting
    // every qubit index by 2 must map cell 1's gate set onto cell 2's.
    auto signature = [&](int cell) {
        int mq = 2 * cell + 1;
        std::set<std::tuple<std::string, int, std::vector<int>>> sig;
        for (const auto& g : c.gates) {
            bool touches = false;
            for (int q : g.qubits) touches |= (q == mq);
            if (!touches) continue;
            std::vector<int> rel;
            for (int q : g.qubits) rel.push_back(q - mq);
            sig.insert({gate_kind_name(g.kind), g.layer, rel});
        }
        return sig;
    };
    CHECK(signature(1) == signature(2));
    CHECK_FALSE(c.is_boundary(3));
    CHECK(c.is_boundary(1));
    CHECK(c.is_boundary(7));
}

TEST_CASE("repetition family counts hold for all small distances") {
    for (int d = 2; d <= 8; ++d) {
        Circuit c = build_repetition_circuit(d, depolarizing_models(0.0005));
        CHECK(c.num_data == d);
        CHECK(c.num_measure == d - 1);
        int czs = 0;
        for (const auto& g : c.gates) czs += g.kind == GateKind::CZ;
        CHECK(czs == 2 * (d - 1));
        CHECK_NOTHROW(validate_circuit(c));
    }
}

TEST_CASE("parity square carries both stabilizer types") {
    Circuit c = build_parity_square_circuit(depolarizing_models(0.001));
    CHECK(c.num_data == 2);
    CHECK(c.num_measure == 2);
    CHECK(c.stabilizer_of(1) == StabilizerType::Z);
    CHECK(c.stabilizer_of(3) == StabilizerType::X);
    CHECK(c.measure_qubits_of(StabilizerType::Z) == std::vector<int>{1});
    CHECK(c.measure_qubits_of(StabilizerType::X) == std::vector<int>{3});
    CHECK_NOTHROW(validate_circuit(c));
}

TEST_CASE("builders reject bad input") {
    CHECK_THROWS(build_repetition_circuit(1, depolarizing_models(0.001)));
    std::map<GateKind, GateErrorModel> missing;
    missing[GateKind::CZ] = GateErrorModel::depolarizing(GateKind::CZ, 0.001);
    CHECK_THROWS(build_repetition_circuit(3, missing));
    CHECK_THROWS(build_parity_square_circuit(missing));
}

TEST_CASE("error model validation") {
    GateErrorModel m = GateErrorModel::zero(GateKind::Hadamard);
    m.set_term("X", 0.1);
    CHECK_NOTHROW(m.validate());
    m.set_term("IX", 0.1);
    CHECK_THROWS(m.validate());

    GateErrorModel neg = GateErrorModel::zero(GateKind::CZ);
    neg.set_term("XZ", -0.5);
    CHECK_THROWS(neg.validate());

    GateErrorModel big = GateErrorModel::zero(GateKind::MeasureZ);
    big.set_term("X", 1.5);
    CHECK_THROWS(big.validate());
}

TEST_CASE("circuit JSON round trip is exact") {
    for (bool square : {false, true}) {
        Circuit c = square ? build_parity_square_circuit(depolarizing_models(0.002))
                           : build_repetition_circuit(4, depolarizing_models(0.002));
        c.override_models["CZ1"] = GateErrorModel::depolarizing(GateKind::CZ, 0.007);
        std::string once = circuit_to_json(c);
        Circuit back = circuit_from_json(once);
        CHECK(circuit_to_json(back) == once);
        CHECK(circuit_hash(back) == circuit_hash(c));
        CHECK(model_fingerprint(back) == model_fingerprint(c));
    }
}

TEST_CASE("hash separates structure from models") {
    Circuit a = build_repetition_circuit(3, depolarizing_models(0.001));
    Circuit b = build_repetition_circuit(3, depolarizing_models(0.005));
    CHECK(circuit_hash(a) == circuit_hash(b));
    CHECK(model_fingerprint(a) != model_fingerprint(b));
    Circuit c = build_repetition_circuit(5, depolarizing_models(0.001));
    CHECK(circuit_hash(a) != circuit_hash(c));
}

TEST_CASE("error model set round trip and reattachment") {
    ErrorModelSet set;
    set.defaults[GateKind::CZ] = GateErrorModel::depolarizing(GateKind::CZ, 0.004);
    set.defaults[GateKind::Hadamard] = GateErrorModel::depolarizing(GateKind::Hadamard, 0.001);
    std::string text = error_models_to_json(set);
    ErrorModelSet back = error_models_from_json(text);
    CHECK(error_models_to_json(back) == text);

    Circuit c = build_repetition_circuit(3, depolarizing_models(0.001));
    Circuit refit = with_models(c, back);
    CHECK(refit.model_for(refit.gate("CZ1")).total() == doctest::Approx(0.004));
    CHECK(refit.model_for(refit.gate("I1")).total() == doctest::Approx(0.0));
    CHECK(circuit_hash(refit) == circuit_hash(c));
}
