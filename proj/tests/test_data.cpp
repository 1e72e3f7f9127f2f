#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "crossitr/data.hpp"
#include "crossitr/regimes.hpp"
#include "crossitr/rng.hpp"

using namespace crossitr;

namespace {

CrossoverDataset random_crossover(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CrossoverObservation> rows;
    for (std::size_t i = 0; i < n; ++i) {
        CrossoverObservation o;
        for (std::size_t j = 0; j < p; ++j) o.x.push_back(rng.uniform(-1, 1));
        o.a1 = rng.coin();
        o.y1 = rng.normal() + (o.x[0] > 0 ? o.a1 : -o.a1);
        o.y2 = rng.normal() - (o.x[0] > 0 ? o.a1 : -o.a1);
        rows.push_back(o);
    }
    return CrossoverDataset(rows);
}

}  // namespace

TEST(LoadCsv, DefaultPropensity) {
    const auto d = parse_crossover_csv("x1,x2,a1,y1,y2\n0.1,0.2,1,3,4\n-1,2,-1,0.5,1\n0,0,1,-2,2\n");
    EXPECT_EQ(d.size(), 3u);
    EXPECT_EQ(d.dim(), 2u);
    for (const auto& o : d) EXPECT_EQ(o.propensity, 0.5);
    EXPECT_EQ(d[1].a1, -1);
    EXPECT_EQ(d[1].a2(), 1);
    EXPECT_EQ(d[0].x[1], 0.2);
    EXPECT_EQ(d[2].y1, -2.0);
}

TEST(LoadCsv, RowOrderAndExplicitColumns) {
    CsvSchema s;
    s.x_cols = {"age"};
    s.a1_col = "trt";
    s.y1_col = "first";
    s.y2_col = "second";
    const auto d = parse_crossover_csv("id,first,second,trt,age\n7,1,2,1,30\n8,3,4,-1,40\n", s);
    ASSERT_EQ(d.dim(), 1u);
    EXPECT_EQ(d[0].x[0], 30.0);
    EXPECT_EQ(d[1].x[0], 40.0);
    EXPECT_EQ(d[1].y2, 4.0);
}

TEST(LoadCsv, BadTreatmentNamesRow) {
    try {
        parse_crossover_csv("x1,a1,y1,y2\n0,1,1,1\n0,0,1,1\n0,-1,1,1\n");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        ASSERT_EQ(e.issues().size(), 1u);
        EXPECT_EQ(e.issues()[0].row, 2u);
    }
}

TEST(LoadCsv, ListsEveryBadRow) {
    try {
        parse_crossover_csv("x1,a1,y1,y2,propensity\nabc,1,1,1,0.5\n0,1,1,1,0.5\n0,1,1,1,1.5\n0,1,1,1,0\n");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        std::vector<std::size_t> rows;
        for (const auto& i : e.issues()) rows.push_back(i.row);
        EXPECT_EQ(rows, (std::vector<std::size_t>{1, 3, 4}));
    }
}

TEST(LoadCsv, MissingColumnIsSchemaError) {
    try {
        parse_crossover_csv("x1,a1,y1\n0,1,1\n");
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.column(), "y2");
    }
}

TEST(LoadCsv, EmptyInput) {
    EXPECT_THROW(parse_crossover_csv(""), EmptyInputError);
    EXPECT_THROW(parse_crossover_csv("x1,a1,y1,y2\n"), EmptyInputError);
}

TEST(LoadCsv, MissingFileIsIoError) {
    EXPECT_THROW(load_crossover_csv("/nonexistent/trial.csv"), IoError);
}

TEST(LoadCsv, PropensityFloor) {
    EXPECT_THROW(parse_crossover_csv("x1,a1,y1,y2,propensity\n0,1,1,1,0.05\n", {}, 0.1), ValidationError);
    EXPECT_NO_THROW(parse_crossover_csv("x1,a1,y1,y2,propensity\n0,1,1,1,0.2\n", {}, 0.1));
}

TEST(LoadCsv, RoundTripIsExact) {
    const auto d = random_crossover(40, 3, 11);
    const auto back = parse_crossover_csv(format_crossover_csv(d));
    ASSERT_EQ(back.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(back[i].x, d[i].x);
        EXPECT_EQ(back[i].a1, d[i].a1);
        EXPECT_EQ(back[i].y1, d[i].y1);
        EXPECT_EQ(back[i].y2, d[i].y2);
        EXPECT_EQ(back[i].propensity, d[i].propensity);
    }
    const auto path = std::filesystem::temp_directory_path() / "crossitr_roundtrip.csv";
    write_crossover_csv(path, d);
    const auto file = load_crossover_csv(path);
    std::filesystem::remove(path);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(file[i].y2, d[i].y2);
}

TEST(LoadCsv, ExplicitHalfPropensityMatchesDefault) {
    const auto d = random_crossover(60, 2, 5);
    std::string with = format_crossover_csv(d);
    std::string without;
    // Drop the trailing propensity column.
    std::istringstream in(with);
    for (std::string line; std::getline(in, line);) without += line.substr(0, line.rfind(',')) + "\n";
    const auto a = parse_crossover_csv(with);
    const auto b = parse_crossover_csv(without);
    HyperGrid grid;
    grid.sigmas = {0.5, 1.0};
    const auto ma = fit_crossover_gowl(a, grid, CarryoverOption::none(), 3);
    const auto mb = fit_crossover_gowl(b, grid, CarryoverOption::none(), 3);
    ASSERT_TRUE(ma.decision && mb.decision);
    EXPECT_EQ(ma.decision->coefficients, mb.decision->coefficients);
    EXPECT_EQ(ma.decision->intercept, mb.decision->intercept);
}

TEST(Dataset, RejectsMixedDimensions) {
    std::vector<ParallelObservation> rows{{{0.0, 1.0}, 1, 1.0, 0.5}, {{0.0}, -1, 1.0, 0.5}};
    EXPECT_THROW(ParallelDataset{rows}, ValidationError);
}

TEST(Dataset, PeriodOneProjection) {
    const auto d = random_crossover(5, 2, 1);
    const auto p = period_one(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(p[i].a, d[i].a1);
        EXPECT_EQ(p[i].y, d[i].y1);
        EXPECT_EQ(p[i].x, d[i].x);
    }
}

TEST(SplitFolds, ExactDivision) {
    const auto s = split_folds(10, 5, 42);
    ASSERT_EQ(s.folds.size(), 5u);
    std::set<std::size_t> all;
    for (const auto& f : s.folds) {
        EXPECT_EQ(f.size(), 2u);
        all.insert(f.begin(), f.end());
    }
    EXPECT_EQ(all.size(), 10u);
    EXPECT_EQ(*all.rbegin(), 9u);
    EXPECT_FALSE(s.poor_allocation);
}

TEST(SplitFolds, Stratified) {
    std::vector<int> labels{1, 1, 1, 1, 1, -1, -1, -1, -1, -1};
    const auto s = split_folds(10, 5, labels, 3);
    for (const auto& f : s.folds) {
        ASSERT_EQ(f.size(), 2u);
        EXPECT_NE(labels[f[0]], labels[f[1]]);
    }
}

TEST(SplitFolds, PoorAllocationFlag) {
    std::vector<int> labels{1, 1, 1, 1, 1, -1};
    EXPECT_TRUE(split_folds(6, 5, labels, 3).poor_allocation);
}

TEST(SplitFolds, Errors) {
    EXPECT_THROW(split_folds(4, 5, 1), ArgumentError);
    EXPECT_THROW(split_folds(4, 1, 1), ArgumentError);
}

TEST(SplitFolds, PartitionProperty) {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        const std::size_t k = 2 + rng.below(n - 1);
        std::vector<int> labels(n);
        for (auto& l : labels) l = rng.coin();
        const auto seed = rng.next_u64();
        const auto s = trial % 2 ? split_folds(n, k, labels, seed) : split_folds(n, k, seed);
        ASSERT_EQ(s.folds.size(), k);
        std::vector<int> seen(n, 0);
        std::size_t lo = n, hi = 0;
        for (const auto& f : s.folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
            for (auto i : f) ++seen[i];
        }
        EXPECT_LE(hi - lo, 1u);
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        if (trial % 2) {
            const auto plus = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
            const std::size_t minus = n - plus;
            const bool poor = (plus > 0 && plus < k) || (minus > 0 && minus < k);
            EXPECT_EQ(s.poor_allocation, poor);
            if (!poor && plus > 0 && minus > 0)
                for (const auto& f : s.folds) {
                    const auto fp = std::count_if(f.begin(), f.end(), [&](auto i) { return labels[i] == 1; });
                    EXPECT_GT(fp, 0);
                    EXPECT_LT(static_cast<std::size_t>(fp), f.size());
                }
        }
        // Determinism.
        const auto again = trial % 2 ? split_folds(n, k, labels, seed) : split_folds(n, k, seed);
        EXPECT_EQ(again.folds, s.folds);
        // Training complement.
        const auto train = training_indices(s, 0, n);
        EXPECT_EQ(train.size() + s.folds[0].size(), n);
    }
}
