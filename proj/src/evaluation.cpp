#include "crossitr/evaluation.hpp"

#include <cmath>

#include "crossitr/rng.hpp"

namespace crossitr {

double estimated_value(const ParallelDataset& data, std::span<const int> recommended) {
    if (recommended.size() != data.size()) throw ArgumentError("one recommendation per row is required");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].a != recommended[i]) continue;
        num += data[i].y / data[i].propensity;
        den += 1.0 / data[i].propensity;
    }
    if (!(den > 0.0)) throw UndefinedValueError("no subject received the recommended treatment");
    return num / den;
}

double estimated_value(const ParallelDataset& data, const Regime& regime) {
    std::vector<int> rec(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) rec[i] = regime(data[i].x);
    return estimated_value(data, rec);
}

double misclassification_rate(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw ArgumentError("misclassification: length mismatch");
    if (predicted.empty()) throw ArgumentError("misclassification: empty test set");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

double misclassification_rate(const Matrix& points, const Regime& regime, const Regime& truth) {
    if (points.rows() == 0) throw ArgumentError("misclassification: empty test set");
    std::vector<double> row(static_cast<std::size_t>(points.cols()));
    std::size_t wrong = 0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) row[static_cast<std::size_t>(j)] = points(i, j);
        wrong += regime(row) != truth(row);
    }
    return static_cast<double>(wrong) / static_cast<double>(points.rows());
}

double value_mse(std::span<const double> estimated, std::span<const double> optimal) {
    if (estimated.size() != optimal.size()) throw ArgumentError("value_mse: length mismatch");
    if (estimated.empty()) throw ArgumentError("value_mse: no replications");
    double sum = 0.0;
    for (std::size_t i = 0; i < estimated.size(); ++i) {
        const double d = estimated[i] - optimal[i];
        sum += d * d;
    }
    return sum / static_cast<double>(estimated.size());
}

CvValue crossover_cv_value(const CrossoverDataset& data, const CrossoverFitFn& fit, std::size_t folds,
                           std::uint64_t seed) {
    const auto n = data.size();
    if (folds < 2 || n < folds) throw ArgumentError("crossover_cv_value: need 2 <= folds <= n");
    std::vector<int> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = data[i].a1;
    const FoldSplit split = split_folds(n, folds, strata, seed);

    CvValue out;
    for (std::size_t f = 0; f < folds; ++f) {
        const auto train = training_indices(split, f, n);
        const Regime rule = fit(data.subset(train), derive_seed(seed, {f}));
        double sum = 0.0;
        for (auto i : split.folds[f]) {
            const auto& o = data[i];
            sum += rule(o.x) == o.a1 ? o.y1 : o.y2;
        }
        out.fold_values.push_back(sum / static_cast<double>(split.folds[f].size()));
    }
    for (double v : out.fold_values) out.mean += v;
    out.mean /= static_cast<double>(folds);
    double ss = 0.0;
    for (double v : out.fold_values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(folds - 1));
    return out;
}

}  // namespace crossitr
