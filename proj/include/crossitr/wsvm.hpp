#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crossitr/kernels.hpp"

namespace crossitr {

// sign with sign(0) := +1.
constexpr int sign_of(double v) noexcept { return v >= 0.0 ? 1 : -1; }

// Piecewise hinge max{1 - sign(u) v, 0}.
double psi_loss(double u, double v) noexcept;

// Weighted classification reduction shared by OWL, GOWL and crossover GOWL:
//   minimize (1/n) sum_i w_i max{1 - y_i f(x_i), 0} + lambda |f|^2
// over f = h + b, h in the RKHS of `kernel`, b an unpenalized offset.
struct WeightedClassificationProblem {
    Matrix features;             // n x p
    std::vector<int> labels;     // +1 / -1
    std::vector<double> weights; // >= 0
    double lambda = 1.0;
    KernelSpec kernel;

    std::size_t size() const noexcept { return labels.size(); }
    // Per-row dual box C_i = w_i / (2 lambda n).
    double box(std::size_t i) const { return weights[i] / (2.0 * lambda * static_cast<double>(size())); }

    void validate() const;
};

// f(x) = sum_j coefficients_j k(support_points_j, x) + intercept.
struct DecisionFunction {
    Matrix support_points;  // m x p
    Vector coefficients;    // m
    double intercept = 0.0;
    KernelSpec kernel;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(support_points.cols()); }
};

double evaluate_f(const DecisionFunction& f, std::span<const double> x);
Vector evaluate_f(const DecisionFunction& f, const Matrix& points);
// Same, from a precomputed kernel block k(points_i, support_j) whose columns
// follow `support_rows` of the original training matrix.
Vector evaluate_f(const DecisionFunction& f, const Matrix& cross_gram,
                  std::span<const std::size_t> support_rows);

struct SolverOptions {
    double tol = 1e-4;                  // max KKT violation at termination
    std::size_t max_iterations = 100000; // pair updates
    // Recompute the dual objective after every update and throw NumericError
    // if it decreases. O(n^2) per step; meant for tests.
    bool check_monotone = false;
};

struct WsvmFit {
    DecisionFunction decision;
    std::vector<double> alphas;            // dual variables, one per row
    std::vector<std::size_t> support_rows; // rows with alpha > 0, ascending
    bool converged = false;
    std::size_t iterations = 0;
    double kkt_violation = 0.0;
};

WsvmFit fit_wsvm(const WeightedClassificationProblem& problem, const SolverOptions& opts = {});

// Same solve with a caller-supplied n x n Gram matrix of problem.features
// under problem.kernel.
WsvmFit fit_wsvm(const WeightedClassificationProblem& problem, const Matrix& gram,
                 const SolverOptions& opts = {});

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j k_ij.
double dual_objective(const WeightedClassificationProblem& problem, const Matrix& gram,
                      std::span<const double> alphas);

// The weighted objective in the dual's scaling, sum_i C_i psi(y_i, f(x_i)) +
// 1/2 |h|^2, with |h|^2 = alpha' Q alpha. Equals the lambda-scaled objective
// divided by 2 lambda, so it bounds the dual objective from above.
double primal_objective(const WeightedClassificationProblem& problem, const Matrix& gram,
                        std::span<const double> alphas, double intercept);

// Maximal KKT violation of `alphas` with offset f.intercept acting as the
// multiplier of the equality constraint. Zero at exact optimality.
double check_kkt(const WeightedClassificationProblem& problem, const DecisionFunction& f,
                 std::span<const double> alphas);

// Builds the decision function (coefficients alpha_j y_j, offset averaged over
// free support vectors) from any feasible alpha.
DecisionFunction decision_from_alphas(const WeightedClassificationProblem& problem,
                                      const Matrix& gram, std::span<const double> alphas);

}  // namespace crossitr
