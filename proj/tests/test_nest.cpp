#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "detnest/nest.hpp"

using namespace detnest;

namespace {

std::map<GateKind, GateErrorModel> depolarizing_models(double rate) {
    std::map<GateKind, GateErrorModel> m;
    for (auto k : {GateKind::Init0, GateKind::Hadamard, GateKind::CZ, GateKind::IdleMemory,
                   GateKind::MeasureZ})
        m[k] = GateErrorModel::depolarizing(k, rate);
    return m;
}

DetectionPattern pat(std::vector<std::pair<int, long long>> evs) {
    DetectionPattern p;
    for (auto [q, r] : evs) p.events.push_back({q, r});
    return canonicalize(p);
}

std::set<std::pair<std::string, std::string>> contributor_set(const ErrorClass& c) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& t : c.contributors) out.insert({t.gate_id, t.pauli});
    return out;
}

double total_model_probability(const Circuit& c) {
    double t = 0;
    for (const auto& g : c.gates) t += c.model_for(g).total();
    return t;
}

}  // namespace

TEST_CASE("distance 3 nest has the six expected classes") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.006));
    Nest n = build_nest(c, StabilizerType::Z);

    std::set<std::string> keys;
    for (const auto& cls : n.classes) keys.insert(pattern_key(cls.pattern));
    std::set<std::string> expected = {
        "q1@r0",          // single, left boundary
        "q3@r0",          // single, right boundary
        "q1@r0+q1@r1",    // vertical left
        "q3@r0+q3@r1",    // vertical right
        "q1@r0+q3@r0",    // horizontal
        "q1@r0+q3@r1",    // diagonal
    };
    CHECK(keys == expected);
}

TEST_CASE("vertical class carries the fourteen terms of the worked example") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.006));
    Nest n = build_nest(c, StabilizerType::Z);
    const ErrorClass* vert = class_lookup(n, pat({{1, 0}, {1, 1}}));
    REQUIRE(vert != nullptr);

    // Initialization X; first Hadamard Y/Z; first CZ IZ/IY/ZZ/ZY; second CZ
    // ZI/ZZ/YI/YZ; second Hadamard X/Y; measurement flip.
    std::set<std::pair<std::string, std::string>> expected = {
        {"|0>1", "X"},
        {"H3", "Y"}, {"H3", "Z"},
        {"CZ1", "IZ"}, {"CZ1", "IY"}, {"CZ1", "ZZ"}, {"CZ1", "ZY"},
        {"CZ2", "ZI"}, {"CZ2", "ZZ"}, {"CZ2", "YI"}, {"CZ2", "YZ"},
        {"H1", "X"}, {"H1", "Y"},
        {"M1", "X"},
    };
    CHECK(contributor_set(*vert) == expected);
    CHECK(vert->contributors.size() == 14);
}

TEST_CASE("vertical class probability matches the closed form") {
    // With every one-qubit term p/3 and every CZ term q/15 the vertical class
    // totals 2*(p/3)*2 + 8*(q/15) + p_init + p_meas. Summed here straight
    // from the frozen contributor list, independently of build_nest.
    double p = 0.009, q = 0.0045, p_init = 0.002, p_meas = 0.0075;
    auto models = depolarizing_models(0.0);
    models[GateKind::Hadamard] = GateErrorModel::depolarizing(GateKind::Hadamard, p);
    models[GateKind::IdleMemory] = GateErrorModel::depolarizing(GateKind::IdleMemory, p);
    models[GateKind::CZ] = GateErrorModel::depolarizing(GateKind::CZ, q);
    models[GateKind::Init0] = GateErrorModel::depolarizing(GateKind::Init0, p_init);
    models[GateKind::MeasureZ] = GateErrorModel::depolarizing(GateKind::MeasureZ, p_meas);

    Circuit c = build_repetition_circuit(3, models);
    Nest n = build_nest(c, StabilizerType::Z);
    const ErrorClass* vert = class_lookup(n, pat({{1, 0}, {1, 1}}));
    REQUIRE(vert != nullptr);

    double expected = 2 * (p / 3) * 2 + 8 * (q / 15) + p_init + p_meas;
    CHECK(vert->probability == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("boundary class content: the prose list plus the table-forced terms") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.006));
    Nest n = build_nest(c, StabilizerType::Z);
    const ErrorClass* left = class_lookup(n, pat({{1, 0}}));
    REQUIRE(left != nullptr);

    std::set<std::pair<std::string, std::string>> enumerated = {
        {"I1", "X"}, {"I1", "Y"},
        {"CZ1", "XZ"}, {"CZ1", "XY"}, {"CZ1", "YZ"}, {"CZ1", "YY"},
    };
    std::set<std::pair<std::string, std::string>> table_forced = {
        {"CZ1", "XI"}, {"CZ1", "YI"}, {"CZ1", "XX"}, {"CZ1", "YX"},
    };
    std::set<std::pair<std::string, std::string>> all = enumerated;
    all.insert(table_forced.begin(), table_forced.end());
    CHECK(contributor_set(*left) == all);

    // Slot-weighted, the enumerated terms stand for 2x5 idle slots + 4 CZ
    // terms = 14 primitive error types.
    int slot_weight = 0;
    for (const auto& t : left->contributors)
        if (enumerated.count({t.gate_id, t.pauli})) slot_weight += t.slots;
    CHECK(slot_weight == 14);
}

TEST_CASE("conservation holds exactly for random model draws") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.0, 0.01);
    for (int draw = 0; draw < 50; ++draw) {
        std::map<GateKind, GateErrorModel> models;
        for (auto k : {GateKind::Init0, GateKind::Hadamard, GateKind::CZ,
                       GateKind::IdleMemory, GateKind::MeasureZ}) {
            GateErrorModel m = GateErrorModel::zero(k);
            for (const auto& label : legal_labels(k)) {
                double p = u(gen);
                if (draw % 5 == 0 && gen() % 3 == 0) p = 0;  // exercise zero skipping
                m.set_term(label, p);
            }
            models[k] = m;
        }
        Circuit c = build_repetition_circuit(3 + draw % 3, models);
        Nest n = build_nest(c, StabilizerType::Z);
        double lhs = n.total_class_probability() + n.total_undetectable_probability();
        CHECK(lhs == doctest::Approx(total_model_probability(c)).epsilon(1e-12));
    }
}

TEST_CASE("conservation holds per nest on the parity square") {
    Circuit c = build_parity_square_circuit(depolarizing_models(0.004));
    for (auto type : {StabilizerType::Z, StabilizerType::X}) {
        Nest n = build_nest(c, type);
        double lhs = n.total_class_probability() + n.total_undetectable_probability();
        CHECK(lhs == doctest::Approx(total_model_probability(c)).epsilon(1e-12));
    }
}

TEST_CASE("vertical cylinders are thicker than the diagonal one") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.008));
    Nest n = build_nest(c, StabilizerType::Z);
    const ErrorClass* diag = class_lookup(n, pat({{1, 0}, {3, 1}}));
    REQUIRE(diag != nullptr);
    for (const auto& q : {1, 3}) {
        const ErrorClass* vert = class_lookup(n, pat({{*&q, 0}, {*&q, 1}}));
        REQUIRE(vert != nullptr);
        CHECK(vert->probability > diag->probability);
    }
    // Few errors feed the diagonal: two CZ gates, four terms each.
    CHECK(diag->contributors.size() == 8);
}

TEST_CASE("all-zero models give an empty nest") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.0));
    Nest n = build_nest(c, StabilizerType::Z);
    CHECK(n.classes.empty());
    CHECK(n.undetectable.empty());
}

TEST_CASE("class lookup canonicalizes and rejects the empty pattern") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.005));
    Nest n = build_nest(c, StabilizerType::Z);
    DetectionPattern shifted;
    shifted.events = {{1, 7}, {1, 8}};
    const ErrorClass* a = class_lookup(n, shifted);
    const ErrorClass* b = class_lookup(n, pat({{1, 0}, {1, 1}}));
    REQUIRE(a != nullptr);
    CHECK(a == b);
    CHECK(class_lookup(n, DetectionPattern{}) == nullptr);
}

TEST_CASE("undetectable terms include every data Z error") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.005));
    Nest n = build_nest(c, StabilizerType::Z);
    std::set<std::pair<std::string, std::string>> undet;
    for (const auto& t : n.undetectable) undet.insert({t.gate_id, t.pauli});
    for (const std::string& idle : {"I1", "I2", "I3"})
        CHECK(undet.count({idle, "Z"}) == 1);
    CHECK(undet.count({"CZ1", "IX"}) == 1);
    CHECK(undet.count({"H3", "X"}) == 1);
}

TEST_CASE("nest export is deterministic and round trips") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.0031));
    Nest n = build_nest(c, StabilizerType::Z);
    std::string once = nest_to_json(n);
    std::string twice = nest_to_json(build_nest(c, StabilizerType::Z));
    CHECK(once == twice);
    Nest back = nest_from_json(once);
    CHECK(back == n);
    CHECK(nest_to_json(back) == once);
}

TEST_CASE("plot data pairs every class with a cylinder") {
    Circuit c = build_repetition_circuit(3, depolarizing_models(0.002));
    Nest n = build_nest(c, StabilizerType::Z);
    std::string plot = nest_plot_json(n);
    CHECK(plot.find("cylinders") != std::string::npos);
    size_t count = 0, pos = 0;
    while ((pos = plot.find("diameter", pos)) != std::string::npos) {
        ++count;
        pos += 8;
    }
    CHECK(count == n.classes.size());
}

TEST_CASE("parity square nests see the expected single-event classes") {
    Circuit c = build_parity_square_circuit(depolarizing_models(0.004));
    Nest nz = build_nest(c, StabilizerType::Z);
    Nest nx = build_nest(c, StabilizerType::X);

    // A data X (bit flip) feeds the Z nest single; a data Z feeds the X nest
    // single; Y data errors appear in both nests.
    const ErrorClass* zs = class_lookup(nz, pat({{1, 0}}));
    REQUIRE(zs != nullptr);
    CHECK(contributor_set(*zs).count({"I1", "X"}) == 1);
    CHECK(contributor_set(*zs).count({"I1", "Y"}) == 1);

    const ErrorClass* xs = class_lookup(nx, pat({{3, 0}}));
    REQUIRE(xs != nullptr);
    CHECK(contributor_set(*xs).count({"I1", "Z"}) == 1);
    CHECK(contributor_set(*xs).count({"I1", "Y"}) == 1);
}
