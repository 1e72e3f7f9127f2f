#pragma once

#include <cstddef>
#include <vector>

#include "crossitr/regimes.hpp"
#include "crossitr/simulation.hpp"

namespace test_support {

inline std::vector<double> row(const crossitr::Matrix& m, Eigen::Index i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    return r;
}

// Disagreement of a fitted model with the scenario's optimal rule.
inline double misclassification(const crossitr::RegimeModel& model, const crossitr::ScenarioSpec& spec,
                                const crossitr::Matrix& test) {
    const auto rec = crossitr::recommend(model, test);
    std::size_t wrong = 0;
    for (Eigen::Index i = 0; i < test.rows(); ++i)
        if (rec[static_cast<std::size_t>(i)] != spec.optimal(row(test, i))) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(test.rows());
}

}  // namespace test_support
