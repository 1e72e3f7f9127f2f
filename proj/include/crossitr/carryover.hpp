#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "crossitr/data.hpp"
#include "crossitr/forest.hpp"

namespace crossitr {

// delta_{a1}(x): carryover (plus period) effect on the period-2 outcome.
using CarryoverFn = std::function<double(std::span<const double> x, int a1)>;

// Two-stage carryover estimate:
//   1. g(x, a1) ~ E[Y1 | X = x, A1 = a1]
//   2. Yhat2 = g(x, a2) with a2 = -a1
//   3. delta(x, a1) ~ E[Y2 - Yhat2 | X = x, A1 = a1]
class CarryoverModel {
public:
    CarryoverModel(Regressor outcome, Regressor residual)
        : outcome_(std::make_shared<const Regressor>(std::move(outcome))),
          residual_(std::make_shared<const Regressor>(std::move(residual))) {}

    double delta(std::span<const double> x, int a1) const;
    // Stage-1 prediction g(x, a).
    double baseline(std::span<const double> x, int a) const;

    const Regressor& outcome_model() const noexcept { return *outcome_; }
    const Regressor& residual_model() const noexcept { return *residual_; }

    // Callable sharing this model's fitted regressors.
    CarryoverFn as_function() const;

private:
    std::shared_ptr<const Regressor> outcome_;
    std::shared_ptr<const Regressor> residual_;
};

// Regressor design row (x_1, ..., x_p, a).
std::vector<double> with_treatment(std::span<const double> x, int a);

CarryoverModel fit_carryover(const CrossoverDataset& data, const RegressorSpec& spec);

// R_i = y1_i - (y2_i - delta(x_i, a1_i)); delta = 0 when none is given.
std::vector<double> corrected_rewards(const CrossoverDataset& data, const CarryoverFn& delta = {});
std::vector<double> corrected_rewards(const CrossoverDataset& data, const CarryoverModel& model);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;           // two-sided
    double mean_difference = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

// Welch unequal-variance two-sample t test of mean(first) - mean(second).
// Throws InsufficientDataError when either sample has fewer than two values.
WelchResult welch_ttest(std::span<const double> first, std::span<const double> second);

struct CarryoverTests {
    // H0: E[delta_{+1}(X)] = 0. Compares period-2 responses of sequence
    // (+1, -1) with period-1 responses of sequence (-1, +1); both received -1.
    WelchResult after_plus;
    // H0: E[delta_{-1}(X)] = 0, symmetrically.
    WelchResult after_minus;
};

CarryoverTests carryover_ttest(const CrossoverDataset& data);

}  // namespace crossitr
