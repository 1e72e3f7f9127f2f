#include "crossitr/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossitr/rng.hpp"

namespace crossitr {

namespace {
constexpr double kZeroReward = 1e-12;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::crossover_gowl: return "crossover_gowl";
        case Method::parallel_owl: return "owl";
        case Method::parallel_gowl: return "gowl";
        case Method::ridge: return "ridge";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    for (auto m : {Method::crossover_gowl, Method::parallel_owl, Method::parallel_gowl, Method::ridge})
        if (name == to_string(m)) return m;
    throw ArgumentError("unknown method '" + name + "'");
}

std::vector<double> HyperGrid::default_sigmas() {
    std::vector<double> s;
    for (int i = 1; i <= 50; ++i) s.push_back(i / 10.0);
    return s;
}

std::vector<double> HyperGrid::lambdas(std::size_t n) const {
    std::vector<double> out;
    for (double v : lambda_numerators) out.push_back(v / static_cast<double>(n));
    return out;
}

void HyperGrid::validate() const {
    if (lambda_numerators.empty() || sigmas.empty()) throw ArgumentError("tuning grid is empty");
    for (double v : lambda_numerators)
        if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("lambda grid entries must be positive");
    for (double v : sigmas)
        if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("sigma grid entries must be positive");
    if (folds < 2) throw ArgumentError("at least two folds are required");
}

double RidgeFit::predict(std::span<const double> x, int a) const {
    if (x.size() != dim) throw ArgumentError("ridge: dimension mismatch");
    const auto p = static_cast<Eigen::Index>(dim);
    double v = coefficients(0) + a * coefficients(p + 1);
    for (Eigen::Index j = 0; j < p; ++j)
        v += x[static_cast<std::size_t>(j)] * (coefficients(1 + j) + a * coefficients(p + 2 + j));
    return v;
}

double RidgeFit::contrast(std::span<const double> x) const {
    return predict(x, 1) - predict(x, -1);
}

std::size_t RegimeModel::dim() const {
    if (ridge) return ridge->dim;
    return decision ? decision->dim() : 0;
}

double RegimeModel::decision_value(std::span<const double> x) const {
    if (ridge) return ridge->contrast(x);
    if (!decision) throw ArgumentError("regime model has no decision function");
    if (x.size() != decision->dim()) throw ArgumentError("recommend: dimension mismatch");
    return evaluate_f(*decision, x);
}

Vector RegimeModel::decision_values(const Matrix& points) const {
    if (ridge) {
        Vector out(points.rows());
        std::vector<double> row(static_cast<std::size_t>(points.cols()));
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            for (Eigen::Index j = 0; j < points.cols(); ++j) row[static_cast<std::size_t>(j)] = points(i, j);
            out(i) = ridge->contrast(row);
        }
        return out;
    }
    if (!decision) throw ArgumentError("regime model has no decision function");
    if (static_cast<std::size_t>(points.cols()) != decision->dim())
        throw ArgumentError("recommend: dimension mismatch");
    return evaluate_f(*decision, points);
}

int recommend(const RegimeModel& model, std::span<const double> x) {
    return sign_of(model.decision_value(x));
}

std::vector<int> recommend(const RegimeModel& model, const Matrix& points) {
    const Vector f = model.decision_values(points);
    std::vector<int> out(static_cast<std::size_t>(f.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = sign_of(f(i));
    return out;
}

// ---------------------------------------------------------------------------
// Shared cross-validation engine for the OWL family
// ---------------------------------------------------------------------------

namespace {

// Classification inputs on the training rows plus what is needed to score a
// rule on the held-out rows.
struct FoldProblem {
    std::vector<int> labels;
    std::vector<double> weights;
    std::vector<double> test_reward;
    std::vector<int> test_treatment;
    std::vector<double> test_propensity;
};

using PrepareFn = std::function<FoldProblem(std::span<const std::size_t> train,
                                            std::span<const std::size_t> test, std::size_t fold)>;

Matrix rows_of(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

bool both_labels(const FoldProblem& fp) {
    bool plus = false, minus = false;
    for (std::size_t i = 0; i < fp.labels.size(); ++i) {
        if (fp.weights[i] <= 0.0) continue;
        (fp.labels[i] == 1 ? plus : minus) = true;
    }
    return plus && minus;
}

struct Selection {
    double lambda = 0.0;
    double sigma = 0.0;
    std::vector<CandidateScore> scores;
};

Selection select_by_value(const Matrix& x, const FoldSplit& split, const PrepareFn& prepare,
                          const HyperGrid& grid, const std::vector<double>& lambdas) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto k = split.folds.size();
    const auto ns = grid.sigmas.size();
    const auto nl = lambdas.size();
    // Indexed accumulation so the reduction order is fixed.
    std::vector<std::vector<double>> fold_scores(k, std::vector<double>(ns * nl, 0.0));

    for (std::size_t f = 0; f < k; ++f) {
        const auto train = training_indices(split, f, n);
        const auto& test = split.folds[f];
        const FoldProblem fp = prepare(train, test, f);
        if (!both_labels(fp)) throw PoorAllocationError(f);

        const Matrix x_train = rows_of(x, train);
        const Matrix x_test = rows_of(x, test);
        const Matrix d_train = squared_distances(x_train, x_train);
        const Matrix d_test = squared_distances(x_test, x_train);

        WeightedClassificationProblem problem;
        problem.features = x_train;
        problem.labels = fp.labels;
        problem.weights = fp.weights;
        for (std::size_t s = 0; s < ns; ++s) {
            const double sigma = grid.sigmas[s];
            const Matrix g_train = gaussian_from_sq_dist(d_train, sigma);
            const Matrix g_test = gaussian_from_sq_dist(d_test, sigma);
            problem.kernel = KernelSpec::gaussian(sigma);
            for (std::size_t l = 0; l < nl; ++l) {
                problem.lambda = lambdas[l];
                const WsvmFit fit = fit_wsvm(problem, g_train, grid.solver);
                const Vector fv = evaluate_f(fit.decision, g_test, fit.support_rows);
                double score = 0.0;
                for (std::size_t i = 0; i < test.size(); ++i)
                    if (fp.test_treatment[i] == sign_of(fv(static_cast<Eigen::Index>(i))))
                        score += fp.test_reward[i] / fp.test_propensity[i];
                fold_scores[f][s * nl + l] = score / static_cast<double>(test.size());
            }
        }
    }

    Selection sel;
    double best = -std::numeric_limits<double>::infinity();
    // Larger lambda first, then smaller sigma; strict improvement keeps the
    // first candidate among ties.
    for (std::size_t li = nl; li-- > 0;) {
        for (std::size_t s = 0; s < ns; ++s) {
            double mean = 0.0;
            for (std::size_t f = 0; f < k; ++f) mean += fold_scores[f][s * nl + li];
            mean /= static_cast<double>(k);
            sel.scores.push_back({lambdas[li], grid.sigmas[s], mean});
            if (mean > best) {
                best = mean;
                sel.lambda = lambdas[li];
                sel.sigma = grid.sigmas[s];
            }
        }
    }
    return sel;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

RegimeModel finish(Method method, const Matrix& x, const FoldProblem& full, const Selection& sel,
                   const HyperGrid& grid, bool poor_allocation) {
    WeightedClassificationProblem problem;
    problem.features = x;
    problem.labels = full.labels;
    problem.weights = full.weights;
    problem.lambda = sel.lambda;
    problem.kernel = KernelSpec::gaussian(sel.sigma);
    const WsvmFit fit = fit_wsvm(problem, grid.solver);

    RegimeModel model;
    model.method = method;
    model.decision = fit.decision;
    model.lambda = sel.lambda;
    model.sigma = sel.sigma;
    model.converged = fit.converged;
    model.cv_scores = sel.scores;
    if (poor_allocation)
        model.warnings.emplace_back("a classification label occurs fewer times than there are folds");
    if (!fit.converged) model.warnings.emplace_back("final fit reached the iteration cap");
    return model;
}

double reward_weight(double reward, double propensity) {
    return std::abs(reward) < kZeroReward ? 0.0 : std::abs(reward) / propensity;
}

void require_some_weight(const std::vector<double>& weights) {
    if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; }))
        throw DegenerateRewardError("every reward is zero; no treatment information");
}

}  // namespace

WeightedClassificationProblem crossover_problem(const CrossoverDataset& data,
                                                std::span<const double> rewards, double lambda,
                                                KernelSpec kernel) {
    if (rewards.size() != data.size()) throw ArgumentError("reward count mismatch");
    WeightedClassificationProblem problem;
    problem.features = data.covariates();
    problem.lambda = lambda;
    problem.kernel = kernel;
    for (std::size_t i = 0; i < data.size(); ++i) {
        problem.labels.push_back(sign_of(rewards[i]) * data[i].a1);
        problem.weights.push_back(reward_weight(rewards[i], data[i].propensity));
    }
    return problem;
}

// ---------------------------------------------------------------------------
// Crossover GOWL
// ---------------------------------------------------------------------------

RegimeModel fit_crossover_gowl(const CrossoverDataset& data, const HyperGrid& grid,
                               const CarryoverOption& carryover, std::uint64_t seed) {
    grid.validate();
    const auto n = data.size();
    if (n < grid.folds) throw ArgumentError("fewer subjects than folds");
    const Matrix x = data.covariates();

    // Rewards of `rows` under a carryover model fit on `train` only.
    auto rewards_for = [&](std::span<const std::size_t> train, std::span<const std::size_t> rows,
                           std::uint64_t forest_seed, std::optional<CarryoverModel>* keep) {
        CarryoverFn delta;
        if (carryover.kind == CarryoverOption::Kind::oracle) {
            delta = carryover.oracle;
        } else if (carryover.kind == CarryoverOption::Kind::estimate) {
            RegressorSpec spec = carryover.spec;
            spec.seed = forest_seed;
            CarryoverModel model = fit_carryover(data.subset(train), spec);
            delta = model.as_function();
            if (keep) *keep = std::move(model);
        }
        std::vector<double> r(rows.size());
        for (std::size_t t = 0; t < rows.size(); ++t) {
            const auto& o = data[rows[t]];
            r[t] = delta ? o.y1 - (o.y2 - delta(o.x, o.a1)) : o.y1 - o.y2;
        }
        return r;
    };

    auto problem_for = [&](std::span<const std::size_t> train, std::span<const std::size_t> test,
                           std::uint64_t forest_seed, std::optional<CarryoverModel>* keep) {
        std::vector<std::size_t> rows(train.begin(), train.end());
        rows.insert(rows.end(), test.begin(), test.end());
        const auto r = rewards_for(train, rows, forest_seed, keep);
        FoldProblem fp;
        for (std::size_t t = 0; t < train.size(); ++t) {
            const auto& o = data[train[t]];
            fp.labels.push_back(sign_of(r[t]) * o.a1);
            fp.weights.push_back(reward_weight(r[t], o.propensity));
        }
        for (std::size_t t = 0; t < test.size(); ++t) {
            const auto& o = data[test[t]];
            fp.test_reward.push_back(r[train.size() + t]);
            fp.test_treatment.push_back(o.a1);
            fp.test_propensity.push_back(o.propensity);
        }
        return fp;
    };

    const auto everyone = all_rows(n);
    std::optional<CarryoverModel> final_model;
    const FoldProblem full = problem_for(everyone, {}, carryover.spec.seed, &final_model);
    require_some_weight(full.weights);

    // Stratify on sign(R) a1 with the uncorrected reward; the corrected one
    // depends on a per-fold fit that does not exist yet.
    std::vector<int> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = sign_of(data[i].y1 - data[i].y2) * data[i].a1;
    const FoldSplit split = split_folds(n, grid.folds, strata, seed);

    const PrepareFn prepare = [&](std::span<const std::size_t> train, std::span<const std::size_t> test,
                                  std::size_t fold) {
        return problem_for(train, test, derive_seed(carryover.spec.seed, {fold + 1}), nullptr);
    };
    const Selection sel = select_by_value(x, split, prepare, grid, grid.lambdas(n));
    RegimeModel model = finish(Method::crossover_gowl, x, full, sel, grid, split.poor_allocation);
    model.carryover = std::move(final_model);
    return model;
}

// ---------------------------------------------------------------------------
// Parallel-design baselines
// ---------------------------------------------------------------------------

namespace {

FoldProblem parallel_scoring(const ParallelDataset& data, std::span<const std::size_t> test) {
    FoldProblem fp;
    for (auto i : test) {
        fp.test_reward.push_back(data[i].y);
        fp.test_treatment.push_back(data[i].a);
        fp.test_propensity.push_back(data[i].propensity);
    }
    return fp;
}

}  // namespace

RegimeModel fit_parallel_gowl(const ParallelDataset& data, const HyperGrid& grid, std::uint64_t seed) {
    grid.validate();
    const auto n = data.size();
    if (n < grid.folds) throw ArgumentError("fewer subjects than folds");
    const Matrix x = data.covariates();

    auto problem_for = [&](std::span<const std::size_t> train, std::span<const std::size_t> test) {
        FoldProblem fp = parallel_scoring(data, test);
        for (auto i : train) {
            fp.labels.push_back(sign_of(data[i].y) * data[i].a);
            fp.weights.push_back(reward_weight(data[i].y, data[i].propensity));
        }
        return fp;
    };
    const FoldProblem full = problem_for(all_rows(n), {});
    require_some_weight(full.weights);

    const FoldSplit split = split_folds(n, grid.folds, full.labels, seed);
    const PrepareFn prepare = [&](std::span<const std::size_t> train, std::span<const std::size_t> test,
                                  std::size_t) { return problem_for(train, test); };
    const Selection sel = select_by_value(x, split, prepare, grid, grid.lambdas(n));
    return finish(Method::parallel_gowl, x, full, sel, grid, split.poor_allocation);
}

RegimeModel fit_parallel_owl(const ParallelDataset& data, const HyperGrid& grid, std::uint64_t seed,
                             const OwlShift& shift) {
    grid.validate();
    const auto n = data.size();
    if (n < grid.folds) throw ArgumentError("fewer subjects than folds");
    const Matrix x = data.covariates();

    auto problem_for = [&](std::span<const std::size_t> train, std::span<const std::size_t> test) {
        FoldProblem fp = parallel_scoring(data, test);
        double offset = 0.0;
        if (shift.fixed) {
            offset = *shift.fixed;
        } else {
            offset = std::numeric_limits<double>::infinity();
            for (auto i : train) offset = std::min(offset, data[i].y);
        }
        for (auto i : train) {
            const double shifted = data[i].y - offset;
            if (shifted < 0.0) throw ArgumentError("OWL shift leaves a negative outcome");
            fp.labels.push_back(data[i].a);
            fp.weights.push_back(shifted < kZeroReward ? 0.0 : shifted / data[i].propensity);
        }
        return fp;
    };
    const FoldProblem full = problem_for(all_rows(n), {});
    require_some_weight(full.weights);

    std::vector<int> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = data[i].a;
    const FoldSplit split = split_folds(n, grid.folds, strata, seed);
    const PrepareFn prepare = [&](std::span<const std::size_t> train, std::span<const std::size_t> test,
                                  std::size_t) { return problem_for(train, test); };
    const Selection sel = select_by_value(x, split, prepare, grid, grid.lambdas(n));
    return finish(Method::parallel_owl, x, full, sel, grid, split.poor_allocation);
}

// ---------------------------------------------------------------------------
// Ridge regression baseline
// ---------------------------------------------------------------------------

std::vector<double> default_ridge_penalties(std::size_t n) {
    return HyperGrid{}.lambdas(n);
}

namespace {

Matrix ridge_design(const ParallelDataset& data, std::span<const std::size_t> rows) {
    const auto p = static_cast<Eigen::Index>(data.dim());
    Matrix phi(static_cast<Eigen::Index>(rows.size()), 2 * p + 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& o = data[rows[r]];
        const auto i = static_cast<Eigen::Index>(r);
        phi(i, 0) = 1.0;
        phi(i, p + 1) = o.a;
        for (Eigen::Index j = 0; j < p; ++j) {
            phi(i, 1 + j) = o.x[static_cast<std::size_t>(j)];
            phi(i, p + 2 + j) = o.a * o.x[static_cast<std::size_t>(j)];
        }
    }
    return phi;
}

RidgeFit solve_ridge(const ParallelDataset& data, std::span<const std::size_t> rows, double penalty) {
    if (!(penalty > 0.0)) throw ArgumentError("ridge penalty must be positive");
    const Matrix phi = ridge_design(data, rows);
    Vector y(phi.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) y(static_cast<Eigen::Index>(r)) = data[rows[r]].y;
    RidgeFit fit;
    fit.dim = data.dim();
    fit.coefficients = Vector::Zero(phi.cols());
    if (std::isinf(penalty)) {
        fit.coefficients(0) = y.mean();
        return fit;
    }
    const double m = static_cast<double>(rows.size());
    Matrix lhs = phi.transpose() * phi / m;
    lhs.diagonal().tail(phi.cols() - 1).array() += penalty;
    const Vector rhs = phi.transpose() * y / m;
    fit.coefficients = lhs.ldlt().solve(rhs);
    if (!fit.coefficients.allFinite()) throw NumericError("ridge solve produced non-finite coefficients");
    return fit;
}

}  // namespace

RidgeFit fit_ridge(const ParallelDataset& data, double penalty) {
    return solve_ridge(data, all_rows(data.size()), penalty);
}

RegimeModel fit_ridge_regime(const ParallelDataset& data, std::span<const double> penalties,
                             std::size_t folds, std::uint64_t seed) {
    if (penalties.empty()) throw ArgumentError("no ridge penalties given");
    for (double p : penalties)
        if (!(p > 0.0)) throw ArgumentError("ridge penalty must be positive");
    const auto n = data.size();
    if (folds < 2 || n < folds) throw ArgumentError("invalid fold count for ridge");

    std::vector<int> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = data[i].a;
    const FoldSplit split = split_folds(n, folds, strata, seed);

    std::vector<double> mse(penalties.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        const auto train = training_indices(split, f, n);
        const auto& test = split.folds[f];
        for (std::size_t c = 0; c < penalties.size(); ++c) {
            const RidgeFit fit = solve_ridge(data, train, penalties[c]);
            double sse = 0.0;
            for (auto i : test) {
                const double e = data[i].y - fit.predict(data[i].x, data[i].a);
                sse += e * e;
            }
            mse[c] += sse / static_cast<double>(test.size()) / static_cast<double>(folds);
        }
    }

    RegimeModel model;
    model.method = Method::ridge;
    std::size_t best = 0;
    bool have = false;
    for (std::size_t c = 0; c < penalties.size(); ++c) {
        model.cv_scores.push_back({penalties[c], 0.0, mse[c]});
        // Ties go to the larger penalty.
        if (!have || mse[c] < mse[best] || (mse[c] == mse[best] && penalties[c] > penalties[best])) {
            best = c;
            have = true;
        }
    }
    model.ridge_penalty = penalties[best];
    model.ridge = solve_ridge(data, all_rows(n), penalties[best]);
    return model;
}

}  // namespace crossitr
