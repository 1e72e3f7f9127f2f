#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crossitr/data.hpp"

namespace crossitr {

// A treatment rule x -> {-1, +1}.
using Regime = std::function<int(std::span<const double>)>;

// Inverse-propensity value estimate
//   sum Y 1{A = D(X)} / pi  /  sum 1{A = D(X)} / pi.
// Throws UndefinedValueError when no subject received the recommended arm.
double estimated_value(const ParallelDataset& data, const Regime& regime);
// Same, with the recommendations already computed (one per row).
double estimated_value(const ParallelDataset& data, std::span<const int> recommended);

// Fraction of rows of `points` on which `regime` and `truth` disagree.
double misclassification_rate(const Matrix& points, const Regime& regime, const Regime& truth);
double misclassification_rate(std::span<const int> predicted, std::span<const int> truth);

// Mean of (estimated - optimal)^2 across replications.
double value_mse(std::span<const double> estimated, std::span<const double> optimal);

// Fits a regime on a training subset; the seed is derived per fold.
using CrossoverFitFn = std::function<Regime(const CrossoverDataset& train, std::uint64_t seed)>;

struct CvValue {
    double mean = 0.0;
    double sd = 0.0;  // across folds, divisor k - 1
    std::vector<double> fold_values;
};

// K-fold value on crossover data. A held-out subject contributes y1 when the
// fitted rule recommends its first-period arm and y2 otherwise; each fold
// reports the mean over its subjects. Folds are stratified on a1.
CvValue crossover_cv_value(const CrossoverDataset& data, const CrossoverFitFn& fit,
                           std::size_t folds = 5, std::uint64_t seed = 1);

}  // namespace crossitr
