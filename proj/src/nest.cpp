#include "detnest/nest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace detnest {

using nlohmann::json;

double Nest::total_class_probability() const {
    double t = 0;
    for (const auto& c : classes) t += c.probability;
    return t;
}

double Nest::total_undetectable_probability() const {
    double t = 0;
    for (const auto& c : undetectable) t += c.probability;
    return t;
}

namespace {

DetectionPattern project_to_type(const DetectionPattern& p, const Circuit& c,
                                 StabilizerType type) {
    DetectionPattern out;
    for (const auto& e : p.events)
        if (c.stabilizer_of(e.measure_qubit) == type) out.events.push_back(e);
    return out;
}

bool pattern_less(const DetectionPattern& a, const DetectionPattern& b) {
    return a.events < b.events;
}

}  // namespace

Nest build_nest(const Circuit& circuit, StabilizerType type) {
    validate_circuit(circuit);

    Nest nest;
    nest.circuit_name = circuit.name;
    nest.circuit_hash = circuit_hash(circuit);
    nest.stabilizer_type = type;
    nest.cells = circuit.measure_qubits_of(type);
    for (int q : nest.cells) nest.cell_boundary.push_back(circuit.is_boundary(q));
    if (nest.cells.empty())
        throw std::invalid_argument("circuit has no measure qubits of type " +
                                    stabilizer_name(type));

    std::map<std::vector<DetectionEvent>, ErrorClass> by_pattern;

    for (const auto& g : circuit.gates) {
        const GateErrorModel& model = circuit.model_for(g);
        for (const auto& [label, p] : model.terms) {
            if (p <= 0) continue;
            DetectionPattern full = propagate_single(circuit, {g.id, label, 0});
            DetectionPattern proj = canonicalize(project_to_type(full, circuit, type));
            Contributor contrib{g.id, label, p, g.slots, g.kind};
            if (proj.empty()) {
                nest.undetectable.push_back(contrib);
                continue;
            }
            auto& cls = by_pattern[proj.events];
            cls.pattern = proj;
            cls.contributors.push_back(contrib);
            cls.probability += p;
        }
    }

    for (auto& [key, cls] : by_pattern) {
        std::sort(cls.contributors.begin(), cls.contributors.end(),
                  [](const Contributor& a, const Contributor& b) {
                      return std::tie(a.gate_id, a.pauli) < std::tie(b.gate_id, b.pauli);
                  });
        nest.classes.push_back(cls);
    }
    std::sort(nest.classes.begin(), nest.classes.end(),
              [](const ErrorClass& a, const ErrorClass& b) {
                  return pattern_less(a.pattern, b.pattern);
              });
    std::sort(nest.undetectable.begin(), nest.undetectable.end(),
              [](const Contributor& a, const Contributor& b) {
                  return std::tie(a.gate_id, a.pauli) < std::tie(b.gate_id, b.pauli);
              });
    return nest;
}

const ErrorClass* class_lookup(const Nest& nest, const DetectionPattern& pattern) {
    DetectionPattern canon = canonicalize(pattern);
    if (canon.empty()) return nullptr;
    for (const auto& c : nest.classes)
        if (c.pattern == canon) return &c;
    return nullptr;
}

namespace {

json pattern_to_json(const DetectionPattern& p) {
    json j = json::array();
    for (const auto& e : p.events) j.push_back({{"qubit", e.measure_qubit}, {"round", e.round}});
    return j;
}

DetectionPattern pattern_from_json(const json& j) {
    DetectionPattern p;
    for (const auto& ej : j)
        p.events.push_back({ej.at("qubit").get<int>(), ej.at("round").get<long long>()});
    return p;
}

json contributor_to_json(const Contributor& c) {
    json j;
    j["gate"] = c.gate_id;
    j["kind"] = gate_kind_name(c.kind);
    j["pauli"] = c.pauli;
    j["probability"] = c.probability;
    if (c.slots != 1) j["slots"] = c.slots;
    return j;
}

Contributor contributor_from_json(const json& j) {
    Contributor c;
    c.gate_id = j.at("gate").get<std::string>();
    c.kind = gate_kind_from_name(j.at("kind").get<std::string>());
    c.pauli = j.at("pauli").get<std::string>();
    c.probability = j.at("probability").get<double>();
    c.slots = j.value("slots", 1);
    return c;
}

}  // namespace

std::string nest_to_json(const Nest& n) {
    json j;
    j["schema"] = "nest.v1";
    j["circuit_name"] = n.circuit_name;
    j["circuit_hash"] = n.circuit_hash;
    j["stabilizer_type"] = stabilizer_name(n.stabilizer_type);
    j["cells"] = n.cells;
    json boundary = json::array();
    for (bool b : n.cell_boundary) boundary.push_back(b);
    j["cell_boundary"] = boundary;

    j["classes"] = json::array();
    for (const auto& c : n.classes) {
        json cj;
        cj["pattern"] = pattern_to_json(c.pattern);
        cj["probability"] = c.probability;
        cj["contributors"] = json::array();
        for (const auto& t : c.contributors) cj["contributors"].push_back(contributor_to_json(t));
        j["classes"].push_back(cj);
    }
    j["undetectable"] = json::array();
    for (const auto& t : n.undetectable) j["undetectable"].push_back(contributor_to_json(t));
    return j.dump(2);
}

Nest nest_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "nest.v1")
        throw std::invalid_argument("expected schema nest.v1");
    Nest n;
    n.circuit_name = j.at("circuit_name").get<std::string>();
    n.circuit_hash = j.at("circuit_hash").get<std::uint64_t>();
    n.stabilizer_type = stabilizer_from_name(j.at("stabilizer_type").get<std::string>());
    n.cells = j.at("cells").get<std::vector<int>>();
    for (const auto& b : j.at("cell_boundary")) n.cell_boundary.push_back(b.get<bool>());
    for (const auto& cj : j.at("classes")) {
        ErrorClass c;
        c.pattern = pattern_from_json(cj.at("pattern"));
        c.probability = cj.at("probability").get<double>();
        for (const auto& tj : cj.at("contributors")) c.contributors.push_back(contributor_from_json(tj));
        n.classes.push_back(c);
    }
    for (const auto& tj : j.at("undetectable")) n.undetectable.push_back(contributor_from_json(tj));
    return n;
}

Nest load_nest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return nest_from_json(ss.str());
}

void save_nest(const Nest& n, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << nest_to_json(n) << '\n';
}

std::string nest_plot_json(const Nest& n) {
    // Cell coordinate of each event; single-event classes get a stub to the
    // nearest edge at half-cell offset.
    std::map<int, int> cell_of;
    for (size_t i = 0; i < n.cells.size(); ++i) cell_of[n.cells[i]] = static_cast<int>(i);
    int last_cell = static_cast<int>(n.cells.size()) - 1;

    json j;
    j["schema"] = "nestplot.v1";
    j["circuit_name"] = n.circuit_name;
    j["stabilizer_type"] = stabilizer_name(n.stabilizer_type);
    j["cylinders"] = json::array();
    for (const auto& c : n.classes) {
        json cyl;
        double x0 = cell_of.at(c.pattern.events.front().measure_qubit);
        double t0 = static_cast<double>(c.pattern.events.front().round);
        cyl["from"] = {x0, t0};
        if (c.pattern.events.size() == 2) {
            double x1 = cell_of.at(c.pattern.events.back().measure_qubit);
            double t1 = static_cast<double>(c.pattern.events.back().round);
            cyl["to"] = {x1, t1};
        } else {
            double edge = (x0 <= last_cell - x0) ? -0.5 : last_cell + 0.5;
            cyl["to"] = {edge, t0};
        }
        cyl["diameter"] = c.probability;
        j["cylinders"].push_back(cyl);
    }
    return j.dump(2);
}

}  // namespace detnest
