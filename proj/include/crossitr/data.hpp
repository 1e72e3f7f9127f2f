#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossitr/errors.hpp"

namespace crossitr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultPropensity = 0.5;

// One subject of a 2x2 crossover trial. The period-2 treatment is -a1.
struct CrossoverObservation {
    std::vector<double> x;
    int a1 = 1;
    double y1 = 0.0;
    double y2 = 0.0;
    double propensity = kDefaultPropensity;  // P(sequence (a1, -a1) | x)

    int a2() const noexcept { return -a1; }
};

// One subject of a parallel-group trial.
struct ParallelObservation {
    std::vector<double> x;
    int a = 1;
    double y = 0.0;
    double propensity = kDefaultPropensity;
};

// Throws ArgumentError when the record breaks a range/finiteness rule.
// `propensity_floor` is the positivity bound pi0 (exclusive of zero).
void validate(const CrossoverObservation& obs, double propensity_floor = 0.0);
void validate(const ParallelObservation& obs, double propensity_floor = 0.0);

// Homogeneous, validated, immutable collection of observations sharing one
// covariate dimension.
template <class Obs>
class Dataset {
public:
    explicit Dataset(std::vector<Obs> rows, double propensity_floor = 0.0);

    std::size_t size() const noexcept { return rows_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const Obs& operator[](std::size_t i) const { return rows_[i]; }
    const std::vector<Obs>& rows() const noexcept { return rows_; }
    auto begin() const noexcept { return rows_.begin(); }
    auto end() const noexcept { return rows_.end(); }

    // n x p covariate matrix.
    Matrix covariates() const;

    Dataset subset(std::span<const std::size_t> indices) const;

private:
    std::vector<Obs> rows_;
    std::size_t dim_ = 0;
};

using CrossoverDataset = Dataset<CrossoverObservation>;
using ParallelDataset = Dataset<ParallelObservation>;

extern template class Dataset<CrossoverObservation>;
extern template class Dataset<ParallelObservation>;

// Period-1 projection of a crossover dataset: (x, a1, y1, propensity).
ParallelDataset period_one(const CrossoverDataset& data);

// Column mapping for crossover CSV files.
struct CsvSchema {
    std::vector<std::string> x_cols;  // empty: every column not used below
    std::string a1_col = "a1";
    std::string y1_col = "y1";
    std::string y2_col = "y2";
    // Unset: a column named "propensity" is used when present, otherwise
    // every row gets kDefaultPropensity.
    std::optional<std::string> propensity_col;
};

CrossoverDataset load_crossover_csv(const std::filesystem::path& path,
                                    const CsvSchema& schema = {},
                                    double propensity_floor = 0.0);

// Same as load_crossover_csv but reading from in-memory text.
CrossoverDataset parse_crossover_csv(const std::string& text, const CsvSchema& schema = {},
                                     double propensity_floor = 0.0);

// Writes x1..xp,a1,y1,y2,propensity in shortest round-trip form, so reloading
// reproduces every field exactly.
void write_crossover_csv(const std::filesystem::path& path, const CrossoverDataset& data);
std::string format_crossover_csv(const CrossoverDataset& data);

struct FoldSplit {
    std::vector<std::vector<std::size_t>> folds;  // 0-based, each sorted
    // Set when some label value occurs fewer than k times, so it cannot be
    // present in every fold.
    bool poor_allocation = false;
};

// k disjoint folds covering 0..n-1 with sizes differing by at most one. When
// labels are given, each label value is dealt round-robin so it lands in
// every fold whenever its count is at least k.
FoldSplit split_folds(std::size_t n, std::size_t k, std::span<const int> labels,
                      std::uint64_t seed);
FoldSplit split_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Complement of fold `f` within 0..n-1.
std::vector<std::size_t> training_indices(const FoldSplit& split, std::size_t f, std::size_t n);

// Formats a double so that parsing it back yields the same value.
std::string format_double(double v);

}  // namespace crossitr
