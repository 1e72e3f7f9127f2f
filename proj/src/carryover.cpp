#include "crossitr/carryover.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace crossitr {

std::vector<double> with_treatment(std::span<const double> x, int a) {
    std::vector<double> row(x.begin(), x.end());
    row.push_back(static_cast<double>(a));
    return row;
}

double CarryoverModel::delta(std::span<const double> x, int a1) const {
    return residual_->predict(with_treatment(x, a1));
}

double CarryoverModel::baseline(std::span<const double> x, int a) const {
    return outcome_->predict(with_treatment(x, a));
}

CarryoverFn CarryoverModel::as_function() const {
    return [model = *this](std::span<const double> x, int a1) { return model.delta(x, a1); };
}

CarryoverModel fit_carryover(const CrossoverDataset& data, const RegressorSpec& spec) {
    const auto n = data.size();
    if (n < 2) throw ArgumentError("fit_carryover needs at least two subjects");
    const auto p = static_cast<Eigen::Index>(data.dim());
    Matrix design(static_cast<Eigen::Index>(n), p + 1);
    std::vector<double> y1(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < p; ++j) design(r, j) = data[i].x[static_cast<std::size_t>(j)];
        design(r, p) = data[i].a1;
        y1[i] = data[i].y1;
    }
    Regressor outcome = fit_regressor(spec, design, y1);

    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i)
        residual[i] = data[i].y2 - outcome.predict(with_treatment(data[i].x, data[i].a2()));

    RegressorSpec second = spec;
    second.seed = spec.seed ^ 0x5bd1e995ULL;
    Regressor residual_model = fit_regressor(second, design, residual);
    return CarryoverModel(std::move(outcome), std::move(residual_model));
}

std::vector<double> corrected_rewards(const CrossoverDataset& data, const CarryoverFn& delta) {
    std::vector<double> r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& o = data[i];
        r[i] = delta ? o.y1 - (o.y2 - delta(o.x, o.a1)) : o.y1 - o.y2;
    }
    return r;
}

std::vector<double> corrected_rewards(const CrossoverDataset& data, const CarryoverModel& model) {
    if (model.residual_model().dim() != data.dim() + 1)
        throw ArgumentError("carryover model was fit on a different covariate dimension");
    return corrected_rewards(data, model.as_function());
}

WelchResult welch_ttest(std::span<const double> first, std::span<const double> second) {
    if (first.size() < 2 || second.size() < 2)
        throw InsufficientDataError("welch_ttest needs at least two values per sample");
    auto moments = [](std::span<const double> v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair{mean, ss / static_cast<double>(v.size() - 1)};
    };
    const auto [m1, v1] = moments(first);
    const auto [m2, v2] = moments(second);
    const double n1 = static_cast<double>(first.size());
    const double n2 = static_cast<double>(second.size());

    WelchResult out;
    out.n1 = first.size();
    out.n2 = second.size();
    out.mean_difference = m1 - m2;
    const double r1 = v1 / n1;
    const double r2 = v2 / n2;
    const double se2 = r1 + r2;
    if (se2 == 0.0) {
        // Both samples constant.
        out.df = n1 + n2 - 2.0;
        if (m1 == m2) {
            out.t = 0.0;
            out.p = 1.0;
        } else {
            out.t = m1 > m2 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
            out.p = 0.0;
        }
        return out;
    }
    out.t = (m1 - m2) / std::sqrt(se2);
    out.df = se2 * se2 / (r1 * r1 / (n1 - 1.0) + r2 * r2 / (n2 - 1.0));
    const boost::math::students_t_distribution<double> dist(out.df);
    out.p = std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(out.t)));
    return out;
}

CarryoverTests carryover_ttest(const CrossoverDataset& data) {
    std::vector<double> y2_after_plus, y1_minus_first, y2_after_minus, y1_plus_first;
    for (const auto& o : data) {
        if (o.a1 == 1) {
            y2_after_plus.push_back(o.y2);
            y1_plus_first.push_back(o.y1);
        } else {
            y2_after_minus.push_back(o.y2);
            y1_minus_first.push_back(o.y1);
        }
    }
    if (y2_after_plus.size() < 2 || y2_after_minus.size() < 2)
        throw InsufficientDataError("carryover t tests need at least two subjects per sequence");
    return {welch_ttest(y2_after_plus, y1_minus_first), welch_ttest(y2_after_minus, y1_plus_first)};
}

}  // namespace crossitr
