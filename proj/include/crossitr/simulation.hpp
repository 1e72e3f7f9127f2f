#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crossitr/data.hpp"
#include "crossitr/forest.hpp"
#include "crossitr/regimes.hpp"
#include "crossitr/rng.hpp"

namespace crossitr {

// Simulation scenario. Outcomes follow
//   Y_k = mu(X) + A_k c(X) + delta_{A1}(X) 1{k = 2} + eps_k
// with mu(x) = 1 + x1 + 2 x2 + 0.5 x3 + x4 and X ~ U(-1, 1)^p.
struct ScenarioSpec {
    int id = 1;                // 1..4
    std::size_t p = 50;
    double noise_cov = 0.5;    // Cov(eps1, eps2); unit variances

    void validate() const;     // throws ArgumentError
    double mu(std::span<const double> x) const;
    double c(std::span<const double> x) const;
    double delta(std::span<const double> x, int a1) const;
    // sign(c(x)), sign(0) := +1
    int optimal(std::span<const double> x) const;
    bool has_carryover() const noexcept { return id == 3 || id == 4; }
};

struct ScenarioFunctions {
    std::function<double(std::span<const double>)> mu;
    std::function<double(std::span<const double>)> c;
    std::function<double(std::span<const double>, int)> delta;
};

ScenarioFunctions scenario_functions(const ScenarioSpec& spec);

// n x p, i.i.d. U(-1, 1), filled row by row.
Matrix gen_covariates(std::size_t n, std::size_t p, Rng& rng);

// Outcomes of one subject at covariates x. The crossover pair is redrawn if
// either value leaves [-50, 50], which the model makes practically
// impossible; each redraw is logged to stderr.
std::pair<double, double> draw_crossover_outcomes(const ScenarioSpec& spec, std::span<const double> x,
                                                  int a1, Rng& rng);
double draw_parallel_outcome(const ScenarioSpec& spec, std::span<const double> x, int a, Rng& rng);

CrossoverDataset gen_crossover_dataset(const ScenarioSpec& spec, std::size_t n, Rng& rng);
ParallelDataset gen_parallel_dataset(const ScenarioSpec& spec, std::size_t n, Rng& rng);

// How crossover GOWL treats carryover inside experiments. `automatic`
// estimates it for scenarios that have one and ignores it otherwise.
enum class CarryoverMode { automatic, none, estimate };

struct SimConfig {
    std::vector<int> scenarios{1};
    std::vector<std::size_t> n_train{30, 75, 150, 300, 600};
    std::size_t n_test = 2000;
    std::size_t replications = 100;
    std::vector<Method> methods{Method::crossover_gowl, Method::parallel_owl, Method::parallel_gowl,
                                Method::ridge};
    std::uint64_t seed = 1;
    std::size_t p = 50;
    HyperGrid grid;
    RegressorSpec carryover_spec;
    CarryoverMode carryover = CarryoverMode::automatic;
    std::size_t threads = 0;  // 0: ITR_THREADS, else hardware concurrency

    void validate() const;
    void use_paper_scale() { replications = 1000; n_test = 10000; }
};

struct ResultRow {
    int scenario = 0;
    std::size_t n_train = 0;
    std::size_t replication = 0;
    Method method = Method::crossover_gowl;
    std::string metric;
    double value = 0.0;
    bool converged = true;
    std::uint64_t seed = 0;  // replication substream seed
};

// Seed of replication `rep` for (scenario, n); independent of every other
// replication and of the method list.
std::uint64_t replication_seed(std::uint64_t master, int scenario, std::size_t n, std::size_t rep);

// Rows of one replication, in method order then metric order. Fit failures
// become a single "fit_error" row with a NaN value and converged = false.
std::vector<ResultRow> run_replication(const SimConfig& config, int scenario, std::size_t n,
                                       std::size_t rep);

// Every (scenario, n, replication) of the config. The output order is fixed
// regardless of the number of worker threads.
std::vector<ResultRow> run_experiment(const SimConfig& config);

std::string format_results_csv(std::span<const ResultRow> rows);
void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);

struct SummaryCell {
    int scenario = 0;
    std::size_t n_train = 0;
    Method method = Method::crossover_gowl;
    std::string metric;
    double mean = 0.0;
    double se = 0.0;          // standard error of the mean
    std::size_t count = 0;    // finite values used
};

// Per (scenario, n, method, metric) means and standard errors, plus a
// "value_mse" cell built from matched value / optimal_value rows.
std::vector<SummaryCell> summarize(std::span<const ResultRow> rows);

// Worker count from ITR_THREADS, falling back to hardware concurrency.
std::size_t default_thread_count();

}  // namespace crossitr
