#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crossitr/carryover.hpp"
#include "crossitr/data.hpp"
#include "crossitr/wsvm.hpp"

namespace crossitr {

enum class Method { crossover_gowl, parallel_owl, parallel_gowl, ridge };

std::string to_string(Method m);
Method method_from_string(const std::string& name);  // throws ArgumentError

// Tuning grid. Penalties are stored multiplied by n: the fit divides each
// entry by the size of the dataset it is given.
struct HyperGrid {
    std::vector<double> lambda_numerators{0.1, 0.5, 1, 5, 10, 50, 100, 500};
    std::vector<double> sigmas = default_sigmas();
    std::size_t folds = 5;
    SolverOptions solver;

    static std::vector<double> default_sigmas();  // 0.1, 0.2, ..., 5.0
    std::vector<double> lambdas(std::size_t n) const;
    void validate() const;
};

struct CarryoverOption {
    enum class Kind { none, estimate, oracle };
    Kind kind = Kind::none;
    RegressorSpec spec;  // used by estimate
    CarryoverFn oracle;  // used by oracle

    static CarryoverOption none() { return {}; }
    static CarryoverOption estimate(RegressorSpec spec) { return {Kind::estimate, spec, {}}; }
    static CarryoverOption known(CarryoverFn delta) { return {Kind::oracle, {}, std::move(delta)}; }
};

// OWL shift: per training set minimum of Y (default), or a fixed constant
// subtracted from every outcome.
struct OwlShift {
    std::optional<double> fixed;
};

struct CandidateScore {
    double lambda = 0.0;
    double sigma = 0.0;  // 0 for ridge
    double score = 0.0;  // mean over folds; value (higher better) or MSE (lower better)
};

// Treatment model of the ridge baseline on phi(x, a) = (1, x, a, a x).
struct RidgeFit {
    Vector coefficients;  // 2p + 2
    std::size_t dim = 0;

    double predict(std::span<const double> x, int a) const;
    // yhat(x, +1) - yhat(x, -1)
    double contrast(std::span<const double> x) const;
};

struct RegimeModel {
    Method method = Method::crossover_gowl;
    std::optional<DecisionFunction> decision;  // OWL family
    std::optional<RidgeFit> ridge;
    std::optional<CarryoverModel> carryover;   // final-fit estimate, if any
    double lambda = 0.0;
    double sigma = 0.0;
    double ridge_penalty = 0.0;
    bool converged = true;
    std::vector<CandidateScore> cv_scores;
    std::vector<std::string> warnings;

    std::size_t dim() const;
    double decision_value(std::span<const double> x) const;
    Vector decision_values(const Matrix& points) const;
};

// sign of the decision value, sign(0) := +1.
int recommend(const RegimeModel& model, std::span<const double> x);
std::vector<int> recommend(const RegimeModel& model, const Matrix& points);

RegimeModel fit_crossover_gowl(const CrossoverDataset& data, const HyperGrid& grid,
                               const CarryoverOption& carryover, std::uint64_t seed);
RegimeModel fit_parallel_gowl(const ParallelDataset& data, const HyperGrid& grid, std::uint64_t seed);
RegimeModel fit_parallel_owl(const ParallelDataset& data, const HyperGrid& grid, std::uint64_t seed,
                             const OwlShift& shift = {});

// Ridge penalties {0.1, 0.5, 1, 5, 10, 50, 100, 500} / n.
std::vector<double> default_ridge_penalties(std::size_t n);

// Minimizes (1/n) |y - Phi b|^2 + penalty |b without intercept|^2; the
// penalty is chosen by held-out MSE. An infinite penalty gives the
// intercept-only model.
RegimeModel fit_ridge_regime(const ParallelDataset& data, std::span<const double> penalties,
                             std::size_t folds, std::uint64_t seed);
RidgeFit fit_ridge(const ParallelDataset& data, double penalty);

// Classification problem of crossover GOWL for given rewards: labels
// sign(R_i) a1_i, weights |R_i| / propensity_i (zero when |R_i| < 1e-12).
WeightedClassificationProblem crossover_problem(const CrossoverDataset& data,
                                                std::span<const double> rewards, double lambda,
                                                KernelSpec kernel);

}  // namespace crossitr
