#include "crossitr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossitr/rng.hpp"

namespace crossitr {

void RegressorSpec::validate() const {
    if (kind == RegressorKind::mean) return;
    if (trees < 1) throw ArgumentError("forest needs at least one tree");
    if (min_leaf < 1) throw ArgumentError("min_leaf must be at least 1");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0))
        throw ArgumentError("feature_fraction must lie in (0, 1]");
}

double RegressionTree::predict(std::span<const double> x) const {
    std::uint32_t at = 0;
    while (nodes_[at].feature >= 0) {
        const auto& node = nodes_[at];
        at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes_[at].value;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes_[i].feature >= 0) d[nodes_[i].left] = d[nodes_[i].right] = d[i] + 1;
    }
    return best;
}

Regressor::Regressor(RegressorSpec spec, std::size_t dim, std::vector<RegressionTree> trees,
                     double constant)
    : spec_(spec), dim_(dim), trees_(std::move(trees)), constant_(constant) {}

double Regressor::predict(std::span<const double> x) const {
    if (x.size() != dim_) throw ArgumentError("regressor: dimension mismatch");
    if (trees_.empty()) return constant_;
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict(x);
    return sum / static_cast<double>(trees_.size());
}

Vector Regressor::predict(const Matrix& features) const {
    Vector out(features.rows());
    std::vector<double> row(static_cast<std::size_t>(features.cols()));
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        for (Eigen::Index j = 0; j < features.cols(); ++j) row[static_cast<std::size_t>(j)] = features(i, j);
        out(i) = predict(row);
    }
    return out;
}

namespace {

// Training data in canonical row order, one contiguous array per feature.
struct Columns {
    std::vector<std::vector<double>> x;  // x[feature][row]
    std::vector<double> y;
};

Columns canonical(const Matrix& features, std::span<const double> targets) {
    const auto n = static_cast<std::size_t>(features.rows());
    const auto q = static_cast<std::size_t>(features.cols());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t j = 0; j < q; ++j) {
            const double xa = features(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
            const double xb = features(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
            if (xa != xb) return xa < xb;
        }
        return targets[a] < targets[b];
    });
    Columns c;
    c.x.assign(q, std::vector<double>(n));
    c.y.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < q; ++j)
            c.x[j][r] = features(static_cast<Eigen::Index>(order[r]), static_cast<Eigen::Index>(j));
        c.y[r] = targets[order[r]];
    }
    return c;
}

class TreeBuilder {
public:
    TreeBuilder(const Columns& data, const RegressorSpec& spec, Rng& rng)
        : data_(data), spec_(spec), rng_(rng) {
        const auto q = data.x.size();
        mtry_ = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(spec.feature_fraction * static_cast<double>(q) + 1e-9)));
        mtry_ = std::min(mtry_, q);
        features_.resize(q);
        std::iota(features_.begin(), features_.end(), 0);
    }

    RegressionTree build(std::vector<std::size_t> rows) {
        nodes_.clear();
        grow(rows, 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    std::uint32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        double sum = 0.0;
        for (auto r : rows) sum += data_.y[r];
        const double m = static_cast<double>(rows.size());
        nodes_[id].value = sum / m;

        if (depth >= spec_.max_depth || rows.size() < 2 * spec_.min_leaf) return id;
        const Split split = best_split(rows, sum);
        if (split.feature < 0) return id;

        const auto& col = data_.x[static_cast<std::size_t>(split.feature)];
        std::vector<std::size_t> left, right;
        for (auto r : rows) (col[r] <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        const auto l = grow(left, depth + 1);
        const auto r = grow(right, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    Split best_split(const std::vector<std::size_t>& rows, double total) {
        // Partial Fisher-Yates draw of mtry features, then scan them in
        // ascending order so ties resolve to the lowest feature index.
        for (std::size_t k = 0; k < mtry_; ++k) {
            const auto pick = k + rng_.below(features_.size() - k);
            std::swap(features_[k], features_[pick]);
        }
        std::vector<std::size_t> tried(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
        std::sort(tried.begin(), tried.end());

        const std::size_t n = rows.size();
        const double base = total * total / static_cast<double>(n);
        Split best;
        std::vector<std::size_t> sorted(rows);
        for (auto f : tried) {
            const auto& col = data_.x[f];
            std::sort(sorted.begin(), sorted.end(), [&col](std::size_t a, std::size_t b) {
                return col[a] < col[b] || (col[a] == col[b] && a < b);
            });
            if (col[sorted.front()] == col[sorted.back()]) continue;
            double left_sum = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                left_sum += data_.y[sorted[k - 1]];
                if (k < spec_.min_leaf || n - k < spec_.min_leaf) continue;
                const double lo = col[sorted[k - 1]];
                const double hi = col[sorted[k]];
                if (lo == hi) continue;
                const double nl = static_cast<double>(k);
                const double nr = static_cast<double>(n - k);
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
                if (gain > best.gain) {
                    double mid = lo + 0.5 * (hi - lo);
                    if (!(mid < hi)) mid = lo;
                    best = {static_cast<int>(f), mid, gain};
                }
            }
        }
        if (best.gain <= 1e-12 * std::max(1.0, std::abs(base))) best.feature = -1;
        return best;
    }

    const Columns& data_;
    const RegressorSpec& spec_;
    Rng& rng_;
    std::size_t mtry_ = 1;
    std::vector<std::size_t> features_;
    std::vector<RegressionTree::Node> nodes_;
};

}  // namespace

Regressor fit_regressor(const RegressorSpec& spec, const Matrix& features, std::span<const double> targets) {
    spec.validate();
    const auto n = static_cast<std::size_t>(features.rows());
    if (n < 2) throw ArgumentError("fit_regressor needs at least two rows");
    if (targets.size() != n) throw ArgumentError("fit_regressor: target count mismatch");
    if (!features.allFinite() ||
        !std::all_of(targets.begin(), targets.end(), [](double v) { return std::isfinite(v); }))
        throw ArgumentError("fit_regressor: inputs must be finite");
    const auto dim = static_cast<std::size_t>(features.cols());

    if (spec.kind == RegressorKind::mean) {
        const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
        return Regressor(spec, dim, {}, mean);
    }

    const Columns data = canonical(features, targets);
    std::vector<RegressionTree> trees;
    trees.reserve(spec.trees);
    for (std::size_t t = 0; t < spec.trees; ++t) {
        Rng rng(derive_seed(spec.seed, {t}));
        std::vector<std::size_t> rows(n);
        if (spec.bootstrap)
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        else
            std::iota(rows.begin(), rows.end(), 0);
        TreeBuilder builder(data, spec, rng);
        trees.push_back(builder.build(std::move(rows)));
    }
    return Regressor(spec, dim, std::move(trees), 0.0);
}

}  // namespace crossitr
