#include "crossitr/wsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crossitr {

double psi_loss(double u, double v) noexcept {
    return std::max(1.0 - static_cast<double>(sign_of(u)) * v, 0.0);
}

void WeightedClassificationProblem::validate() const {
    const auto n = size();
    if (n == 0) throw ArgumentError("classification problem has no rows");
    if (static_cast<std::size_t>(features.rows()) != n || weights.size() != n)
        throw ArgumentError("features, labels and weights must have the same length");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be positive");
    kernel.validate();
    bool any_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 1 && labels[i] != -1) throw ArgumentError("labels must be -1 or +1");
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
            throw ArgumentError("weights must be finite and nonnegative");
        any_positive = any_positive || weights[i] > 0.0;
    }
    if (!any_positive) throw DegenerateRewardError("every classification weight is zero");
    if (!features.allFinite()) throw ArgumentError("features must be finite");
}

double evaluate_f(const DecisionFunction& f, std::span<const double> x) {
    if (x.size() != f.dim() && f.support_points.rows() > 0)
        throw ArgumentError("evaluate_f: dimension mismatch");
    double sum = f.intercept;
    std::vector<double> sp(f.dim());
    for (Eigen::Index j = 0; j < f.support_points.rows(); ++j) {
        for (std::size_t t = 0; t < sp.size(); ++t) sp[t] = f.support_points(j, static_cast<Eigen::Index>(t));
        sum += f.coefficients(j) * kernel_eval(f.kernel, sp, x);
    }
    return sum;
}

Vector evaluate_f(const DecisionFunction& f, const Matrix& points) {
    if (f.support_points.rows() == 0) return Vector::Constant(points.rows(), f.intercept);
    if (points.cols() != f.support_points.cols()) throw ArgumentError("evaluate_f: dimension mismatch");
    const Matrix k = gram_matrix(f.kernel, points, f.support_points);
    return (k * f.coefficients).array() + f.intercept;
}

Vector evaluate_f(const DecisionFunction& f, const Matrix& cross_gram,
                  std::span<const std::size_t> support_rows) {
    if (support_rows.size() != static_cast<std::size_t>(f.coefficients.size()))
        throw ArgumentError("evaluate_f: support row count mismatch");
    Vector out = Vector::Constant(cross_gram.rows(), f.intercept);
    for (std::size_t j = 0; j < support_rows.size(); ++j)
        out += f.coefficients(static_cast<Eigen::Index>(j)) *
               cross_gram.col(static_cast<Eigen::Index>(support_rows[j]));
    return out;
}

namespace {

struct Bounds {
    std::vector<double> box;
    std::vector<std::size_t> active;  // rows with box > 0
};

Bounds make_bounds(const WeightedClassificationProblem& problem) {
    Bounds b;
    b.box.resize(problem.size());
    for (std::size_t i = 0; i < problem.size(); ++i) {
        b.box[i] = problem.box(i);
        if (b.box[i] > 0.0) b.active.push_back(i);
    }
    return b;
}

bool in_up(int y, double a, double c) { return (y == 1 && a < c) || (y == -1 && a > 0.0); }
bool in_low(int y, double a, double c) { return (y == -1 && a < c) || (y == 1 && a > 0.0); }

// G_i = sum_j y_i y_j k_ij alpha_j - 1 over the active rows.
std::vector<double> gradient(const WeightedClassificationProblem& problem, const Matrix& gram,
                             const Bounds& bounds, std::span<const double> alphas) {
    std::vector<double> g(problem.size(), -1.0);
    for (auto i : bounds.active) {
        double s = 0.0;
        for (auto j : bounds.active)
            if (alphas[j] != 0.0)
                s += problem.labels[j] * alphas[j] * gram(static_cast<Eigen::Index>(i),
                                                          static_cast<Eigen::Index>(j));
        g[i] = problem.labels[i] * s - 1.0;
    }
    return g;
}

double offset_from_gradient(const WeightedClassificationProblem& problem, const Bounds& bounds,
                            std::span<const double> alphas, const std::vector<double>& g) {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (auto i : bounds.active) {
        const int y = problem.labels[i];
        const double yg = y * g[i];
        if (alphas[i] >= bounds.box[i]) {
            if (y == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alphas[i] <= 0.0) {
            if (y == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    double rho;
    if (free_count > 0) rho = free_sum / static_cast<double>(free_count);
    else if (std::isinf(ub)) rho = lb;
    else if (std::isinf(lb)) rho = ub;
    else rho = 0.5 * (ub + lb);
    return -rho;
}

DecisionFunction assemble(const WeightedClassificationProblem& problem,
                          std::span<const double> alphas, double intercept,
                          std::vector<std::size_t>& support_rows) {
    support_rows.clear();
    for (std::size_t i = 0; i < alphas.size(); ++i)
        if (alphas[i] > 0.0) support_rows.push_back(i);
    DecisionFunction f;
    f.kernel = problem.kernel;
    f.intercept = intercept;
    const auto m = static_cast<Eigen::Index>(support_rows.size());
    f.support_points.resize(m, problem.features.cols());
    f.coefficients.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto i = support_rows[static_cast<std::size_t>(j)];
        f.support_points.row(j) = problem.features.row(static_cast<Eigen::Index>(i));
        f.coefficients(j) = alphas[i] * problem.labels[i];
    }
    return f;
}

void check_gram(const WeightedClassificationProblem& problem, const Matrix& gram) {
    const auto n = static_cast<Eigen::Index>(problem.size());
    if (gram.rows() != n || gram.cols() != n) throw ArgumentError("gram matrix has the wrong shape");
    if (gram.hasNaN()) throw NumericError("kernel evaluation produced NaN");
}

}  // namespace

WsvmFit fit_wsvm(const WeightedClassificationProblem& problem, const SolverOptions& opts) {
    problem.validate();
    return fit_wsvm(problem, gram_matrix(problem.kernel, problem.features), opts);
}

WsvmFit fit_wsvm(const WeightedClassificationProblem& problem, const Matrix& gram,
                 const SolverOptions& opts) {
    problem.validate();
    check_gram(problem, gram);
    const Bounds bounds = make_bounds(problem);
    const auto& act = bounds.active;
    const auto& y = problem.labels;
    const auto& c = bounds.box;

    std::vector<double> alpha(problem.size(), 0.0);
    std::vector<double> g(problem.size(), -1.0);
    const auto K = [&gram](std::size_t i, std::size_t j) {
        return gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };

    WsvmFit fit;
    for (;;) {
        // Maximal violating pair; strict comparisons keep the lowest index.
        std::size_t i = 0, j = 0;
        double m = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        for (auto t : act) {
            const double v = -y[t] * g[t];
            if (in_up(y[t], alpha[t], c[t]) && v > m) {
                m = v;
                i = t;
            }
            if (in_low(y[t], alpha[t], c[t]) && v < big_m) {
                big_m = v;
                j = t;
            }
        }
        const double gap = std::isinf(m) || std::isinf(big_m) ? 0.0 : std::max(m - big_m, 0.0);
        fit.kkt_violation = gap;
        if (gap <= opts.tol) {
            fit.converged = true;
            break;
        }
        if (fit.iterations >= opts.max_iterations) break;
        ++fit.iterations;

        // Move alpha_i by y_i t and alpha_j by -y_j t; this keeps y'alpha = 0.
        double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (eta <= 0.0) eta = 1e-12;
        double t = gap / eta;
        const double room_i = y[i] == 1 ? c[i] - alpha[i] : alpha[i];
        const double room_j = y[j] == 1 ? alpha[j] : c[j] - alpha[j];
        t = std::min({t, room_i, room_j});

        const double before = opts.check_monotone ? dual_objective(problem, gram, alpha) : 0.0;
        alpha[i] = t == room_i ? (y[i] == 1 ? c[i] : 0.0) : alpha[i] + y[i] * t;
        alpha[j] = t == room_j ? (y[j] == 1 ? 0.0 : c[j]) : alpha[j] - y[j] * t;
        alpha[i] = std::clamp(alpha[i], 0.0, c[i]);
        alpha[j] = std::clamp(alpha[j], 0.0, c[j]);
        for (auto k : act) g[k] += y[k] * t * (K(k, i) - K(k, j));

        if (opts.check_monotone) {
            const double after = dual_objective(problem, gram, alpha);
            if (after < before - 1e-12 * std::max(1.0, std::abs(before)))
                throw NumericError("dual objective decreased during working-set update");
        }
    }

    fit.decision = assemble(problem, alpha, offset_from_gradient(problem, bounds, alpha, g),
                            fit.support_rows);
    fit.alphas = std::move(alpha);
    return fit;
}

double dual_objective(const WeightedClassificationProblem& problem, const Matrix& gram,
                      std::span<const double> alphas) {
    const auto n = problem.size();
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alphas[i] == 0.0) continue;
        linear += alphas[i];
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (alphas[j] != 0.0)
                s += problem.labels[j] * alphas[j] *
                     gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        quad += problem.labels[i] * alphas[i] * s;
    }
    return linear - 0.5 * quad;
}

double primal_objective(const WeightedClassificationProblem& problem, const Matrix& gram,
                        std::span<const double> alphas, double intercept) {
    const auto n = problem.size();
    double loss = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (alphas[j] != 0.0)
                s += problem.labels[j] * alphas[j] *
                     gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        quad += problem.labels[i] * alphas[i] * s;
        loss += problem.box(i) * psi_loss(problem.labels[i], s + intercept);
    }
    return loss + 0.5 * quad;
}

double check_kkt(const WeightedClassificationProblem& problem, const DecisionFunction& f,
                 std::span<const double> alphas) {
    if (alphas.size() != problem.size()) throw ArgumentError("check_kkt: alpha length mismatch");
    const Bounds bounds = make_bounds(problem);
    const Matrix gram = gram_matrix(problem.kernel, problem.features);
    const auto g = gradient(problem, gram, bounds, alphas);
    double violation = 0.0;
    for (auto t : bounds.active) {
        const double v = -problem.labels[t] * g[t];
        if (in_up(problem.labels[t], alphas[t], bounds.box[t]))
            violation = std::max(violation, v - f.intercept);
        if (in_low(problem.labels[t], alphas[t], bounds.box[t]))
            violation = std::max(violation, f.intercept - v);
    }
    return violation;
}

DecisionFunction decision_from_alphas(const WeightedClassificationProblem& problem,
                                      const Matrix& gram, std::span<const double> alphas) {
    problem.validate();
    check_gram(problem, gram);
    const Bounds bounds = make_bounds(problem);
    const auto g = gradient(problem, gram, bounds, alphas);
    std::vector<std::size_t> rows;
    return assemble(problem, alphas, offset_from_gradient(problem, bounds, alphas, g), rows);
}

}  // namespace crossitr
