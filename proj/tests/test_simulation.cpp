#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>

#include "crossitr/simulation.hpp"
#include "support.hpp"

using namespace crossitr;
using test_support::row;

namespace {

// Columns: mu, c (scenarios 1, 3), c (scenarios 2, 4), delta_+1 and delta_-1
// of scenario 3, delta_+1 and delta_-1 of scenario 4. Computed by hand.
struct Pinned {
    std::array<double, 5> x;  // x1..x4, x5 = 0.7
    double mu, c13, c24, d3p, d3m, d4p, d4m;
};

const Pinned kPinned[] = {
    {{0, 0, 0, 0, 0.7}, 1.0, 0.336, 0.0, 0.332, 0.334, 1.0, 0.0},
    {{0.1, 0.1, 0.1, 0.1, 0.7}, 1.45, 0.112, 0.100625, 0.669, 0.3905, 0.79, 0.034},
    {{0.5, -0.5, 0.2, -0.3, 0.7}, 0.3, 0.336, 0.215625, 0.018, 0.159, -0.25, -0.05},
    {{-0.8, 0.6, -0.4, 0.9, 0.7}, 2.1, 0.56, -1.4375, 0.77, 0.665, 2.24, 0.436},
    {{0.95, -0.95, 0.5, 0.25, 0.7}, 0.55, 0.336, -0.20484375, 0.107, 0.2215, -1.8025, 0.076},
};

struct Moments {
    double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(v.size() - 1);
    return m;
}

std::vector<ResultRow> sorted(std::vector<ResultRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.scenario, a.n_train, a.replication, a.method, a.metric) <
               std::tie(b.scenario, b.n_train, b.replication, b.method, b.metric);
    });
    return rows;
}

void expect_same_rows(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].scenario, b[i].scenario);
        EXPECT_EQ(a[i].n_train, b[i].n_train);
        EXPECT_EQ(a[i].replication, b[i].replication);
        EXPECT_EQ(a[i].method, b[i].method);
        EXPECT_EQ(a[i].metric, b[i].metric);
        EXPECT_EQ(a[i].value, b[i].value);
        EXPECT_EQ(a[i].converged, b[i].converged);
        EXPECT_EQ(a[i].seed, b[i].seed);
    }
}

}  // namespace

TEST(ScenarioFunctions, PinnedClosedForms) {
    for (const auto& pt : kPinned) {
        for (int id = 1; id <= 4; ++id) {
            const ScenarioSpec spec{id, 5};
            const auto f = scenario_functions(spec);
            EXPECT_NEAR(f.mu(pt.x), pt.mu, 1e-12);
            EXPECT_NEAR(f.c(pt.x), id % 2 ? pt.c13 : pt.c24, 1e-12);
            for (int a1 : {1, -1}) {
                double expected = 0.0;
                if (id == 3) expected = a1 == 1 ? pt.d3p : pt.d3m;
                if (id == 4) expected = a1 == 1 ? pt.d4p : pt.d4m;
                EXPECT_NEAR(f.delta(pt.x, a1), expected, 1e-12) << "scenario " << id << " a1 " << a1;
            }
            EXPECT_EQ(spec.optimal(pt.x), spec.c(pt.x) >= 0 ? 1 : -1);
        }
    }
}

TEST(ScenarioFunctions, Examples) {
    const std::vector<double> zero(50, 0.0);
    const ScenarioSpec one{1, 50};
    EXPECT_NEAR(one.c(zero), 0.336, 1e-15);
    EXPECT_EQ(one.optimal(zero), 1);
    std::vector<double> tenth(50, 0.0);
    std::fill_n(tenth.begin(), 4, 0.1);
    EXPECT_NEAR(one.mu(tenth), 1.45, 1e-15);
    const ScenarioSpec four{4, 50};
    EXPECT_EQ(four.delta(zero, -1), 0.0);
    EXPECT_EQ(four.delta(zero, 1), 1.0);
    EXPECT_TRUE(four.has_carryover());
    EXPECT_FALSE(one.has_carryover());
}

TEST(ScenarioFunctions, Validation) {
    EXPECT_THROW((ScenarioSpec{5, 50}).validate(), ArgumentError);
    EXPECT_THROW((ScenarioSpec{0, 50}).validate(), ArgumentError);
    EXPECT_THROW(scenario_functions(ScenarioSpec{5, 50}), ArgumentError);
    EXPECT_THROW((ScenarioSpec{1, 3}).validate(), ArgumentError);
}

TEST(ScenarioFunctions, ScenarioThreeCarryoverIsNonnegative) {
    Rng rng(1);
    const ScenarioSpec spec{3, 10};
    const Matrix x = gen_covariates(2000, 10, rng);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (int a1 : {1, -1}) EXPECT_GE(spec.delta(row(x, i), a1), 0.0);
}

TEST(GenCovariates, MeanSupportDeterminism) {
    Rng rng(2);
    const Matrix x = gen_covariates(1000000, 1, rng);
    EXPECT_LT(std::abs(x.mean()), 0.005);
    EXPECT_LT(x.maxCoeff(), 1.0);
    EXPECT_GT(x.minCoeff(), -1.0);
    Rng a(3), b(3);
    EXPECT_EQ(gen_covariates(50, 7, a), gen_covariates(50, 7, b));
    EXPECT_THROW(gen_covariates(0, 3, a), ArgumentError);
}

TEST(GenCrossover, ConditionalMeansAtFixedX) {
    const ScenarioSpec spec{1, 5};
    Rng rng(4);
    for (const auto& pt : kPinned) {
        std::vector<double> y1_plus, diff_plus, diff_minus;
        for (int r = 0; r < 100000; ++r) {
            const auto [y1, y2] = draw_crossover_outcomes(spec, pt.x, 1, rng);
            y1_plus.push_back(y1);
            diff_plus.push_back(y1 - y2);
            const auto [z1, z2] = draw_crossover_outcomes(spec, pt.x, -1, rng);
            diff_minus.push_back(z1 - z2);
        }
        EXPECT_NEAR(moments(y1_plus).mean, pt.mu + pt.c13, 0.01);
        EXPECT_NEAR(moments(diff_plus).mean, 2 * pt.c13, 0.015);
        EXPECT_NEAR(moments(diff_minus).mean, -2 * pt.c13, 0.015);
    }
}

TEST(GenCrossover, NoiseCovariance) {
    const ScenarioSpec spec{1, 5};
    Rng rng(5);
    const auto data = gen_crossover_dataset(spec, 100000, rng);
    std::vector<double> e1, e2;
    double cross = 0.0;
    for (const auto& o : data) {
        EXPECT_EQ(o.propensity, 0.5);
        e1.push_back(o.y1 - spec.mu(o.x) - o.a1 * spec.c(o.x));
        e2.push_back(o.y2 - spec.mu(o.x) + o.a1 * spec.c(o.x));
    }
    const auto m1 = moments(e1), m2 = moments(e2);
    for (std::size_t i = 0; i < e1.size(); ++i) cross += (e1[i] - m1.mean) * (e2[i] - m2.mean);
    EXPECT_NEAR(cross / static_cast<double>(e1.size() - 1), 0.5, 0.01);
    EXPECT_NEAR(m1.var, 1.0, 0.02);
    EXPECT_NEAR(m2.var, 1.0, 0.02);
}

TEST(GenCrossover, NoiseCovarianceLeavesMeansAlone) {
    ScenarioSpec correlated{4, 5}, independent{4, 5, 0.0};
    Rng a(6), b(7);
    for (const auto& pt : kPinned) {
        std::vector<double> y2c, y2i;
        for (int r = 0; r < 100000; ++r) {
            y2c.push_back(draw_crossover_outcomes(correlated, pt.x, -1, a).second);
            y2i.push_back(draw_crossover_outcomes(independent, pt.x, -1, b).second);
        }
        const double mean = pt.mu + pt.c24 + pt.d4m;
        EXPECT_NEAR(moments(y2c).mean, mean, 0.01);
        EXPECT_NEAR(moments(y2i).mean, mean, 0.01);
    }
}

TEST(GenCrossover, CarryoverEntersPeriodTwo) {
    const ScenarioSpec spec{3, 5};
    Rng rng(8);
    const auto& pt = kPinned[3];
    std::vector<double> y2;
    for (int r = 0; r < 100000; ++r) y2.push_back(draw_crossover_outcomes(spec, pt.x, 1, rng).second);
    EXPECT_NEAR(moments(y2).mean, pt.mu - pt.c13 + pt.d3p, 0.01);
}

TEST(GenParallel, CalibrationAndDeterminism) {
    const ScenarioSpec spec{2, 5};
    Rng rng(9);
    const auto& pt = kPinned[2];
    std::vector<double> y;
    for (int r = 0; r < 100000; ++r) y.push_back(draw_parallel_outcome(spec, pt.x, -1, rng));
    EXPECT_NEAR(moments(y).mean, pt.mu - pt.c24, 0.01);

    const auto data = gen_parallel_dataset(spec, 100000, rng);
    std::vector<double> e;
    for (const auto& o : data) {
        EXPECT_EQ(o.propensity, 0.5);
        EXPECT_LE(std::abs(o.y), 50.0);
        e.push_back(o.y - spec.mu(o.x) - o.a * spec.c(o.x));
    }
    EXPECT_NEAR(moments(e).var, 1.0, 0.02);

    Rng a(10), b(10);
    const auto da = gen_parallel_dataset(spec, 40, a), db = gen_parallel_dataset(spec, 40, b);
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(da[i].x, db[i].x);
        EXPECT_EQ(da[i].y, db[i].y);
        EXPECT_EQ(da[i].a, db[i].a);
    }
}

TEST(RunExperiment, RowAccounting) {
    SimConfig cfg;
    cfg.n_train = {30};
    cfg.replications = 1;
    cfg.methods = {Method::crossover_gowl};
    cfg.n_test = 500;
    const auto rows = run_experiment(cfg);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].metric, "misclassification");
    EXPECT_EQ(rows[1].metric, "value");
    EXPECT_EQ(rows[2].metric, "optimal_value");
    for (const auto& r : rows) {
        EXPECT_TRUE(std::isfinite(r.value));
        EXPECT_EQ(r.seed, replication_seed(1, 1, 30, 0));
    }

    // Carryover scenarios add the carryover error of crossover GOWL only.
    cfg.scenarios = {3};
    cfg.methods = {Method::crossover_gowl, Method::ridge};
    cfg.carryover_spec.trees = 10;
    const auto more = run_experiment(cfg);
    EXPECT_EQ(more.size(), 7u);
    EXPECT_EQ(std::count_if(more.begin(), more.end(), [](auto& r) { return r.metric == "carryover_mse"; }), 1);
}

TEST(RunExperiment, MethodOrderAndThreadsDoNotMatter) {
    SimConfig cfg;
    cfg.n_train = {30, 40};
    cfg.replications = 3;
    cfg.n_test = 300;
    cfg.grid.sigmas = {0.5, 1.0, 2.0};
    cfg.threads = 1;
    const auto base = run_experiment(cfg);

    SimConfig swapped = cfg;
    std::reverse(swapped.methods.begin(), swapped.methods.end());
    expect_same_rows(sorted(base), sorted(run_experiment(swapped)));

    SimConfig threaded = cfg;
    threaded.threads = 4;
    expect_same_rows(base, run_experiment(threaded));

    // A single replication reproduces in isolation.
    const auto one = run_replication(cfg, 1, 40, 2);
    std::vector<ResultRow> slice;
    for (const auto& r : base)
        if (r.n_train == 40 && r.replication == 2) slice.push_back(r);
    expect_same_rows(slice, one);
}

TEST(RunExperiment, ConfigValidation) {
    SimConfig cfg;
    cfg.replications = 0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = SimConfig{};
    cfg.scenarios = {7};
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = SimConfig{};
    cfg.methods.clear();
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = SimConfig{};
    cfg.use_paper_scale();
    EXPECT_EQ(cfg.replications, 1000u);
    EXPECT_EQ(cfg.n_test, 10000u);
}

TEST(ReplicationSeed, DistinctAndStable) {
    std::map<std::uint64_t, int> seen;
    for (int s = 1; s <= 4; ++s)
        for (std::size_t n : {30u, 75u, 150u})
            for (std::size_t r = 0; r < 50; ++r) ++seen[replication_seed(1, s, n, r)];
    EXPECT_EQ(seen.size(), 600u);
    EXPECT_EQ(replication_seed(9, 2, 75, 3), replication_seed(9, 2, 75, 3));
    EXPECT_NE(replication_seed(9, 2, 75, 3), replication_seed(10, 2, 75, 3));
}

TEST(ResultsCsv, HeaderAndNaN) {
    std::vector<ResultRow> rows{{1, 30, 0, Method::parallel_owl, "value", 1.25, true, 42},
                                {1, 30, 0, Method::ridge, "fit_error", std::nan(""), false, 42}};
    EXPECT_EQ(format_results_csv(rows),
              "scenario,n_train,replication,method,metric,value,converged,seed\n"
              "1,30,0,owl,value,1.25,1,42\n"
              "1,30,0,ridge,fit_error,NaN,0,42\n");
}

TEST(Summarize, MeansAndValueMse) {
    std::vector<ResultRow> rows;
    const double values[] = {1.0, 2.0, 4.0};
    const double optimal[] = {1.5, 2.0, 3.0};
    for (std::size_t r = 0; r < 3; ++r) {
        rows.push_back({1, 30, r, Method::crossover_gowl, "value", values[r], true, 0});
        rows.push_back({1, 30, r, Method::crossover_gowl, "optimal_value", optimal[r], true, 0});
    }
    rows.push_back({1, 30, 3, Method::crossover_gowl, "fit_error", std::nan(""), false, 0});
    std::map<std::string, SummaryCell> cells;
    for (const auto& c : summarize(rows)) cells[c.metric] = c;
    ASSERT_TRUE(cells.count("value"));
    EXPECT_DOUBLE_EQ(cells["value"].mean, 7.0 / 3);
    EXPECT_EQ(cells["value"].count, 3u);
    EXPECT_DOUBLE_EQ(cells["value"].se, std::sqrt(7.0 / 3 / 3));
    ASSERT_TRUE(cells.count("value_mse"));
    EXPECT_DOUBLE_EQ(cells["value_mse"].mean, (0.25 + 0.0 + 1.0) / 3);
}

TEST(RunExperiment, CrossoverBeatsOwlAndRidgeInScenarioOne) {
    SimConfig cfg;
    cfg.n_train = {75};
    cfg.replications = 100;
    cfg.methods = {Method::crossover_gowl, Method::parallel_owl, Method::ridge};
    cfg.seed = 3;
    std::map<Method, double> mean;
    for (const auto& c : summarize(run_experiment(cfg)))
        if (c.metric == "misclassification") mean[c.method] = c.mean;
    RecordProperty("crossover", std::to_string(mean[Method::crossover_gowl]));
    RecordProperty("owl", std::to_string(mean[Method::parallel_owl]));
    RecordProperty("ridge", std::to_string(mean[Method::ridge]));
    EXPECT_LT(mean[Method::crossover_gowl], mean[Method::parallel_owl]);
    EXPECT_LT(mean[Method::crossover_gowl], mean[Method::ridge]);
}
