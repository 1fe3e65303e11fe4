#pragma once

#include <map>
#include <string>
#include <vector>

#include "detnest/extract.hpp"
#include "detnest/nest.hpp"

namespace detnest {

/// How the per-class constraints map onto unknowns.
///  - PerTerm: one unknown per (gate instance, Pauli label); raw and
///    underdetermined on a single code, nullspace reported honestly.
///  - PerGateDepolarizing: one rate per gate instance, split uniformly
///    over the instance's legal labels.
///  - PerKindDepolarizing: one rate per gate kind, shared across every
///    instance and circuit in the system; the grouping that ties the two
///    experiments together.
enum class Parameterization { PerTerm, PerGateDepolarizing, PerKindDepolarizing };

std::string parameterization_name(Parameterization p);
Parameterization parameterization_from_name(const std::string& s);

struct NestPair {
    const Nest* analytic = nullptr;
    const EstimatedNest* estimated = nullptr;
};

struct ConstraintSystem {
    Parameterization parameterization = Parameterization::PerKindDepolarizing;
    std::vector<std::string> unknown_names;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> matrix;  // row-major coefficients
    std::vector<double> rhs;                  // estimated class probabilities
    std::vector<double> weights;              // 1 / variance per row
    std::vector<std::uint64_t> row_counts;
    std::vector<std::uint64_t> row_rounds;

    // Enough provenance to rebuild error-model documents from a fit.
    struct UnknownRef {
        GateKind kind = GateKind::IdleMemory;
        std::string circuit_name;  // empty for kind-scoped unknowns
        std::string gate_id;       // empty for kind-scoped unknowns
        std::string pauli;         // PerTerm only
    };
    std::vector<UnknownRef> unknown_refs;

    size_t rows() const { return matrix.size(); }
    size_t cols() const { return unknown_names.size(); }
};

/// Assemble one row per analytic class, right-hand sides from the paired
/// estimates. Each row states: sum of the member terms' probabilities
/// equals the observed class probability.
ConstraintSystem build_system(const std::vector<NestPair>& nests, Parameterization param);

struct SolveOptions {
    double tolerance = 1e-12;
    int max_iterations = 10000;
};

struct FitResult {
    std::vector<double> rates;   // per unknown, >= 0
    std::vector<double> sigmas;  // Gaussian-approximation standard errors
    std::vector<bool> identifiable;
    std::vector<std::string> unidentifiable;  // names of flagged unknowns
    std::vector<double> residuals;            // rhs - A * rates
    std::vector<std::vector<double>> covariance;  // pseudo-inverse normal matrix
    double chi2 = 0;
    int dof = 0;
    double p_value = 1;
    int rank = 0;
    int iterations = 0;
};

/// Standard error of sum_j coeffs[j] * rates[j]. Valid whenever the
/// combination lies in the identifiable subspace (e.g. the readout sum of
/// two individually degenerate parameters).
double combination_sigma(const FitResult& fit, const std::vector<double>& coeffs);

/// Weighted non-negative least squares (active set). Rank-deficient
/// systems get the minimum-norm non-negative solution with every
/// nullspace-touching unknown flagged instead of trusted.
FitResult solve(const ConstraintSystem& system, const SolveOptions& options = {});

/// Rebuild an errormodel.v1 document from a fit, for one circuit. Kind
/// -scoped fits return the same defaults for any circuit name.
ErrorModelSet fitted_models_for(const ConstraintSystem& system, const FitResult& fit,
                                const std::string& circuit_name);

std::string fit_report_json(const ConstraintSystem& system, const FitResult& fit);

/// Regularized upper incomplete gamma Q(a, x); the chi-square tail.
double gamma_q(double a, double x);

}  // namespace detnest
