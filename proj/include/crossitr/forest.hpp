#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "crossitr/data.hpp"

namespace crossitr {

enum class RegressorKind { forest, mean };

struct RegressorSpec {
    RegressorKind kind = RegressorKind::forest;
    std::size_t trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_leaf = 5;
    double feature_fraction = 1.0 / 3.0;  // share of features tried per split
    bool bootstrap = true;
    std::uint64_t seed = 1;

    static RegressorSpec mean() {
        RegressorSpec s;
        s.kind = RegressorKind::mean;
        return s;
    }

    void validate() const;
};

// CART regression tree stored as a flat node array; node 0 is the root.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        double value = 0.0;
    };

    explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    double predict(std::span<const double> x) const;
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t depth() const;

private:
    std::vector<Node> nodes_;
};

// Fitted regressor: a forest of trees, or a constant.
class Regressor {
public:
    Regressor(RegressorSpec spec, std::size_t dim, std::vector<RegressionTree> trees, double constant);

    double predict(std::span<const double> x) const;
    Vector predict(const Matrix& features) const;

    const RegressorSpec& spec() const noexcept { return spec_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

private:
    RegressorSpec spec_;
    std::size_t dim_;
    std::vector<RegressionTree> trees_;
    double constant_;
};

// Forest: bootstrap rows per tree, random feature subset per split,
// variance-reduction splits at midpoints between sorted distinct values;
// prediction is the mean over trees. Mean: constant at the target mean.
// Rows are put into a canonical order first, so the fit does not depend on
// the order in which training rows are supplied.
Regressor fit_regressor(const RegressorSpec& spec, const Matrix& features, std::span<const double> targets);

}  // namespace crossitr
