#include "detnest/invert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace detnest {

using nlohmann::json;

std::string parameterization_name(Parameterization p) {
    switch (p) {
        case Parameterization::PerTerm: return "per-term";
        case Parameterization::PerGateDepolarizing: return "per-gate";
        case Parameterization::PerKindDepolarizing: return "per-kind";
    }
    throw std::logic_error("bad parameterization");
}

Parameterization parameterization_from_name(const std::string& s) {
    if (s == "per-term") return Parameterization::PerTerm;
    if (s == "per-gate") return Parameterization::PerGateDepolarizing;
    if (s == "per-kind") return Parameterization::PerKindDepolarizing;
    throw std::invalid_argument("unknown parameterization: " + s);
}

ConstraintSystem build_system(const std::vector<NestPair>& nests, Parameterization param) {
    if (nests.empty()) throw std::invalid_argument("no nests given");

    ConstraintSystem sys;
    sys.parameterization = param;

    std::map<std::string, size_t> index_of;
    auto unknown_for = [&](const std::string& circuit, const Contributor& t) -> size_t {
        std::string name;
        ConstraintSystem::UnknownRef ref;
        ref.kind = t.kind;
        switch (param) {
            case Parameterization::PerTerm:
                name = circuit + "/" + t.gate_id + ":" + t.pauli;
                ref.circuit_name = circuit;
                ref.gate_id = t.gate_id;
                ref.pauli = t.pauli;
                break;
            case Parameterization::PerGateDepolarizing:
                name = circuit + "/" + t.gate_id;
                ref.circuit_name = circuit;
                ref.gate_id = t.gate_id;
                break;
            case Parameterization::PerKindDepolarizing:
                name = gate_kind_name(t.kind);
                break;
        }
        auto it = index_of.find(name);
        if (it != index_of.end()) return it->second;
        size_t idx = sys.unknown_names.size();
        index_of[name] = idx;
        sys.unknown_names.push_back(name);
        sys.unknown_refs.push_back(ref);
        return idx;
    };

    // First pass registers every unknown so rows can be sized up front.
    for (const auto& [analytic, estimated] : nests) {
        if (analytic == nullptr || estimated == nullptr)
            throw std::invalid_argument("null nest in system input");
        if (analytic->circuit_hash != estimated->circuit_hash)
            throw std::invalid_argument("analytic and estimated nests disagree on circuit");
        for (const auto& cls : analytic->classes)
            for (const auto& t : cls.contributors) unknown_for(analytic->circuit_name, t);
        for (const auto& t : analytic->undetectable) unknown_for(analytic->circuit_name, t);
        // Every observed pattern must be an analytic class.
        for (const auto& [pattern, count] : estimated->counts) {
            DetectionPattern p;
            p.events = pattern;
            if (class_lookup(*analytic, p) == nullptr)
                throw std::invalid_argument("estimated pattern " + pattern_key(p) +
                                            " missing from analytic nest");
        }
    }

    for (const auto& [analytic, estimated] : nests) {
        for (const auto& cls : analytic->classes) {
            std::vector<double> row(sys.unknown_names.size(), 0.0);
            for (const auto& t : cls.contributors) {
                size_t col = unknown_for(analytic->circuit_name, t);
                double coeff = 1.0;
                if (param != Parameterization::PerTerm)
                    coeff = 1.0 / static_cast<double>(legal_labels(t.kind).size());
                row[col] += coeff;
            }
            std::uint64_t count = estimated->count(cls.pattern);
            std::uint64_t rounds = estimated->rounds_observed;
            double p_hat = static_cast<double>(count) / static_cast<double>(rounds);
            // Variance guard for empty cells: half an observation.
            double p_var = (static_cast<double>(count) + 0.5) / static_cast<double>(rounds);
            double var = p_var * (1.0 - p_var) / static_cast<double>(rounds);

            sys.matrix.push_back(std::move(row));
            sys.rhs.push_back(p_hat);
            sys.weights.push_back(1.0 / var);
            sys.row_counts.push_back(count);
            sys.row_rounds.push_back(rounds);
            sys.row_labels.push_back(analytic->circuit_name + "/" +
                                     stabilizer_name(analytic->stabilizer_type) + "/" +
                                     pattern_key(cls.pattern));
        }
    }
    return sys;
}

FitResult solve(const ConstraintSystem& system, const SolveOptions& options) {
    const size_t m = system.rows();
    const size_t n = system.cols();
    if (m == 0 || n == 0) throw std::invalid_argument("empty constraint system");

    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m), wsqrt(m);
    bool any_nonzero = false;
    for (size_t r = 0; r < m; ++r) {
        if (system.rhs[r] < 0) throw std::invalid_argument("negative rhs entry");
        b(r) = system.rhs[r];
        wsqrt(r) = std::sqrt(system.weights[r]);
        for (size_t c = 0; c < n; ++c) {
            A(r, c) = system.matrix[r][c];
            any_nonzero |= system.matrix[r][c] != 0.0;
        }
    }
    if (!any_nonzero) throw std::invalid_argument("all-zero constraint matrix");

    Eigen::MatrixXd Aw = wsqrt.asDiagonal() * A;
    Eigen::VectorXd bw = wsqrt.asDiagonal() * b;

    // Identifiability from the weighted design matrix: unknowns with
    // significant weight in any near-null singular direction.
    FitResult fit;
    fit.identifiable.assign(n, true);
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Aw, Eigen::ComputeFullV);
        double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        double cutoff = std::max(smax, 1.0) * 1e-9;
        fit.rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > cutoff) fit.rank++;
        for (int i = fit.rank; i < svd.matrixV().cols(); ++i)
            for (size_t j = 0; j < n; ++j)
                if (std::abs(svd.matrixV()(j, i)) > 1e-7) fit.identifiable[j] = false;
    }

    // Lawson-Hanson active set on the weighted system. Variables that fail
    // to enter (degenerate columns) are barred from re-entry.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false), barred(n, false);
    int iterations = 0;

    auto solve_passive = [&](const std::vector<int>& idx) {
        Eigen::MatrixXd Ap(m, idx.size());
        for (size_t k = 0; k < idx.size(); ++k) Ap.col(k) = Aw.col(idx[k]);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(Ap, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        return svd.solve(bw).eval();
    };

    double grad_scale = std::max(1.0, (Aw.transpose() * bw).cwiseAbs().maxCoeff());
    while (iterations < options.max_iterations) {
        ++iterations;
        Eigen::VectorXd grad = Aw.transpose() * (bw - Aw * x);
        int best = -1;
        double best_g = options.tolerance * grad_scale;
        for (size_t j = 0; j < n; ++j)
            if (!passive[j] && !barred[j] && grad(j) > best_g) {
                best_g = grad(j);
                best = static_cast<int>(j);
            }
        if (best < 0) break;
        passive[best] = true;

        for (int inner = 0; inner <= static_cast<int>(n); ++inner) {
            std::vector<int> idx;
            for (size_t j = 0; j < n; ++j)
                if (passive[j]) idx.push_back(static_cast<int>(j));
            if (idx.empty()) break;
            Eigen::VectorXd z = solve_passive(idx);
            bool all_positive = true;
            for (size_t k = 0; k < idx.size(); ++k) all_positive &= z(k) > 0;
            if (all_positive) {
                x.setZero();
                for (size_t k = 0; k < idx.size(); ++k) x(idx[k]) = z(k);
                break;
            }
            double alpha = 1.0;
            for (size_t k = 0; k < idx.size(); ++k) {
                if (z(k) <= 0) {
                    double denom = x(idx[k]) - z(k);
                    if (denom > 0) alpha = std::min(alpha, x(idx[k]) / denom);
                }
            }
            for (size_t k = 0; k < idx.size(); ++k) {
                double nx = x(idx[k]) + alpha * (z(k) - x(idx[k]));
                if (nx <= options.tolerance * 1e-3 || (z(k) <= 0 && alpha >= 1.0) ||
                    (z(k) <= 0 && nx <= options.tolerance)) {
                    if (idx[k] == best && x(idx[k]) == 0.0) barred[idx[k]] = true;
                    x(idx[k]) = 0;
                    passive[idx[k]] = false;
                } else {
                    x(idx[k]) = nx;
                }
            }
        }
    }
    fit.iterations = iterations;

    fit.rates.assign(n, 0.0);
    for (size_t j = 0; j < n; ++j) fit.rates[j] = x(j);

    // Confidence intervals from the Gaussian approximation on the full
    // design: pseudo-inverse of the weighted normal matrix.
    {
        Eigen::MatrixXd N = Aw.transpose() * Aw;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(N, Eigen::ComputeFullU | Eigen::ComputeFullV);
        double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        double cutoff = std::max(smax, 1.0) * 1e-12;
        Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < svd.singularValues().size(); ++i) {
            double s = svd.singularValues()(i);
            if (s > cutoff)
                pinv += svd.matrixV().col(i) * (1.0 / s) * svd.matrixU().col(i).transpose();
        }
        fit.sigmas.assign(n, 0.0);
        fit.covariance.assign(n, std::vector<double>(n, 0.0));
        for (size_t j = 0; j < n; ++j) {
            for (size_t k = 0; k < n; ++k) fit.covariance[j][k] = pinv(j, k);
            fit.sigmas[j] = fit.identifiable[j]
                                ? std::sqrt(std::max(pinv(j, j), 0.0))
                                : std::numeric_limits<double>::infinity();
        }
    }

    Eigen::VectorXd res = b - A * x;
    fit.residuals.assign(m, 0.0);
    fit.chi2 = 0;
    for (size_t r = 0; r < m; ++r) {
        fit.residuals[r] = res(r);
        fit.chi2 += system.weights[r] * res(r) * res(r);
    }
    fit.dof = static_cast<int>(m) - fit.rank;
    fit.p_value = fit.dof > 0 ? gamma_q(fit.dof / 2.0, fit.chi2 / 2.0) : 1.0;

    for (size_t j = 0; j < n; ++j)
        if (!fit.identifiable[j]) fit.unidentifiable.push_back(system.unknown_names[j]);
    return fit;
}

double combination_sigma(const FitResult& fit, const std::vector<double>& coeffs) {
    if (coeffs.size() != fit.covariance.size())
        throw std::invalid_argument("coefficient length mismatch");
    double var = 0;
    for (size_t j = 0; j < coeffs.size(); ++j)
        for (size_t k = 0; k < coeffs.size(); ++k)
            var += coeffs[j] * fit.covariance[j][k] * coeffs[k];
    return std::sqrt(std::max(var, 0.0));
}

ErrorModelSet fitted_models_for(const ConstraintSystem& system, const FitResult& fit,
                                const std::string& circuit_name) {
    ErrorModelSet out;
    for (size_t j = 0; j < system.cols(); ++j) {
        const auto& ref = system.unknown_refs[j];
        double rate = fit.rates[j];
        switch (system.parameterization) {
            case Parameterization::PerKindDepolarizing:
                out.defaults[ref.kind] = GateErrorModel::depolarizing(ref.kind, rate);
                break;
            case Parameterization::PerGateDepolarizing:
                if (ref.circuit_name == circuit_name)
                    out.overrides[ref.gate_id] = GateErrorModel::depolarizing(ref.kind, rate);
                break;
            case Parameterization::PerTerm:
                if (ref.circuit_name == circuit_name) {
                    auto it = out.overrides.find(ref.gate_id);
                    if (it == out.overrides.end()) {
                        GateErrorModel m = GateErrorModel::zero(ref.kind);
                        m.set_term(ref.pauli, rate);
                        out.overrides[ref.gate_id] = m;
                    } else {
                        it->second.set_term(ref.pauli, rate);
                    }
                }
                break;
        }
    }
    if (system.parameterization != Parameterization::PerKindDepolarizing) {
        // Gates without any identified term keep zero defaults.
        for (auto k : {GateKind::Init0, GateKind::Hadamard, GateKind::CZ,
                       GateKind::IdleMemory, GateKind::MeasureZ})
            out.defaults[k] = GateErrorModel::zero(k);
    }
    return out;
}

std::string fit_report_json(const ConstraintSystem& system, const FitResult& fit) {
    json j;
    j["schema"] = "fitreport.v1";
    j["parameterization"] = parameterization_name(system.parameterization);
    j["rank"] = fit.rank;
    j["rows"] = system.rows();
    j["chi2"] = fit.chi2;
    j["dof"] = fit.dof;
    j["p_value"] = fit.p_value;
    j["iterations"] = fit.iterations;
    j["parameters"] = json::array();
    for (size_t i = 0; i < system.cols(); ++i) {
        json pj;
        pj["name"] = system.unknown_names[i];
        pj["rate"] = fit.rates[i];
        pj["sigma"] = fit.identifiable[i] ? json(fit.sigmas[i]) : json();
        pj["identifiable"] = static_cast<bool>(fit.identifiable[i]);
        j["parameters"].push_back(pj);
    }
    j["unidentifiable"] = fit.unidentifiable;
    j["residuals"] = json::array();
    for (size_t r = 0; r < system.rows(); ++r) {
        json rj;
        rj["row"] = system.row_labels[r];
        rj["observed"] = system.rhs[r];
        rj["residual"] = fit.residuals[r];
        rj["count"] = system.row_counts[r];
        j["residuals"].push_back(rj);
    }
    return j.dump(2);
}

namespace {

double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    // Lentz continued fraction for the upper tail.
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw std::invalid_argument("gamma_q domain");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

}  // namespace detnest
