#include "crossitr/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "crossitr/evaluation.hpp"

namespace crossitr {

namespace {
constexpr double kOutcomeTripwire = 50.0;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

void ScenarioSpec::validate() const {
    if (id < 1 || id > 4) throw ArgumentError("unknown scenario " + std::to_string(id) + " (expected 1-4)");
    if (p < 4) throw ArgumentError("scenarios need at least 4 covariates");
    if (!(std::abs(noise_cov) < 1.0)) throw ArgumentError("noise covariance must lie in (-1, 1)");
}

double ScenarioSpec::mu(std::span<const double> x) const {
    return 1.0 + x[0] + 2.0 * x[1] + 0.5 * x[2] + x[3];
}

double ScenarioSpec::c(std::span<const double> x) const {
    if (id == 1 || id == 3) return 1.12 * (0.3 - x[0] - x[1]);
    return 1.15 * (x[0] - 1.25 * x[1] * x[1]);
}

double ScenarioSpec::delta(std::span<const double> x, int a1) const {
    switch (id) {
        case 3: {
            const double m = mu(x), cc = c(x);
            return a1 == 1 ? std::abs(m - cc) / 2.0 : std::abs(m + cc) / 4.0;
        }
        case 4:
            return a1 == 1 ? 1.0 - 2.0 * x[0] - x[1] * x[1] : 0.4 * x[0] * x[0] + 0.3 * x[1];
        default:
            return 0.0;
    }
}

int ScenarioSpec::optimal(std::span<const double> x) const {
    return sign_of(c(x));
}

ScenarioFunctions scenario_functions(const ScenarioSpec& spec) {
    spec.validate();
    return {[spec](std::span<const double> x) { return spec.mu(x); },
            [spec](std::span<const double> x) { return spec.c(x); },
            [spec](std::span<const double> x, int a1) { return spec.delta(x, a1); }};
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Matrix gen_covariates(std::size_t n, std::size_t p, Rng& rng) {
    if (n < 1 || p < 1) throw ArgumentError("gen_covariates: n and p must be positive");
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    return x;
}

namespace {

std::vector<double> draw_row(std::size_t p, Rng& rng) {
    std::vector<double> x(p);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}

void tripwire(const char* what, double y) {
    std::cerr << "warning: " << what << " outcome " << y << " exceeds the generator bound; redrawing noise\n";
}

}  // namespace

std::pair<double, double> draw_crossover_outcomes(const ScenarioSpec& spec, std::span<const double> x,
                                                  int a1, Rng& rng) {
    // Cholesky factor of [[1, r], [r, 1]].
    const double r = spec.noise_cov;
    const double tail = std::sqrt(1.0 - r * r);
    const double m = spec.mu(x), cc = spec.c(x), d = spec.delta(x, a1);
    for (;;) {
        const double z1 = rng.normal(), z2 = rng.normal();
        const double y1 = m + a1 * cc + z1;
        const double y2 = m - a1 * cc + d + (r * z1 + tail * z2);
        if (std::abs(y1) <= kOutcomeTripwire && std::abs(y2) <= kOutcomeTripwire) return {y1, y2};
        tripwire("crossover", std::max(std::abs(y1), std::abs(y2)));
    }
}

double draw_parallel_outcome(const ScenarioSpec& spec, std::span<const double> x, int a, Rng& rng) {
    const double m = spec.mu(x) + a * spec.c(x);
    for (;;) {
        const double y = m + rng.normal();
        if (std::abs(y) <= kOutcomeTripwire) return y;
        tripwire("parallel", y);
    }
}

CrossoverDataset gen_crossover_dataset(const ScenarioSpec& spec, std::size_t n, Rng& rng) {
    spec.validate();
    if (n < 1) throw ArgumentError("gen_crossover_dataset: n must be positive");
    std::vector<CrossoverObservation> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CrossoverObservation o;
        o.x = draw_row(spec.p, rng);
        o.a1 = rng.coin();
        std::tie(o.y1, o.y2) = draw_crossover_outcomes(spec, o.x, o.a1, rng);
        o.propensity = 0.5;
        rows.push_back(std::move(o));
    }
    return CrossoverDataset(std::move(rows));
}

ParallelDataset gen_parallel_dataset(const ScenarioSpec& spec, std::size_t n, Rng& rng) {
    spec.validate();
    if (n < 1) throw ArgumentError("gen_parallel_dataset: n must be positive");
    std::vector<ParallelObservation> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ParallelObservation o;
        o.x = draw_row(spec.p, rng);
        o.a = rng.coin();
        o.y = draw_parallel_outcome(spec, o.x, o.a, rng);
        o.propensity = 0.5;
        rows.push_back(std::move(o));
    }
    return ParallelDataset(std::move(rows));
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

void SimConfig::validate() const {
    if (scenarios.empty()) throw ArgumentError("no scenarios configured");
    for (int s : scenarios) ScenarioSpec{s, p}.validate();
    if (n_train.empty()) throw ArgumentError("no training sizes configured");
    for (auto n : n_train)
        if (n < grid.folds) throw ArgumentError("every training size must be at least the fold count");
    if (n_test < 1) throw ArgumentError("n_test must be positive");
    if (replications < 1) throw ArgumentError("replications must be positive");
    if (methods.empty()) throw ArgumentError("no methods configured");
    grid.validate();
    carryover_spec.validate();
}

std::uint64_t replication_seed(std::uint64_t master, int scenario, std::size_t n, std::size_t rep) {
    return derive_seed(master, {static_cast<std::uint64_t>(scenario), n, rep});
}

namespace {

enum Stream : std::uint64_t { crossover_stream = 1, parallel_stream = 2, test_stream = 3, fit_stream = 10 };

CarryoverOption carryover_for(const SimConfig& config, const ScenarioSpec& spec) {
    const bool estimate = config.carryover == CarryoverMode::estimate ||
                          (config.carryover == CarryoverMode::automatic && spec.has_carryover());
    return estimate ? CarryoverOption::estimate(config.carryover_spec) : CarryoverOption::none();
}

double carryover_mse(const CarryoverModel& model, const ScenarioSpec& spec, const ParallelDataset& test) {
    // Squared error of delta-hat against delta over the test covariates, both
    // first-period arms.
    double sum = 0.0;
    for (const auto& o : test)
        for (int a1 : {1, -1}) {
            const double e = model.delta(o.x, a1) - spec.delta(o.x, a1);
            sum += e * e;
        }
    return sum / (2.0 * static_cast<double>(test.size()));
}

}  // namespace

std::vector<ResultRow> run_replication(const SimConfig& config, int scenario, std::size_t n,
                                       std::size_t rep) {
    const ScenarioSpec spec{scenario, config.p};
    const std::uint64_t seed = replication_seed(config.seed, scenario, n, rep);
    Rng cross_rng(derive_seed(seed, {crossover_stream}));
    Rng par_rng(derive_seed(seed, {parallel_stream}));
    Rng test_rng(derive_seed(seed, {test_stream}));
    const CrossoverDataset cross = gen_crossover_dataset(spec, n, cross_rng);
    const ParallelDataset par = gen_parallel_dataset(spec, n, par_rng);
    const ParallelDataset test = gen_parallel_dataset(spec, config.n_test, test_rng);
    const Matrix test_x = test.covariates();

    std::vector<int> truth(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) truth[i] = spec.optimal(test[i].x);
    const double optimal_value = estimated_value(test, truth);

    std::vector<ResultRow> rows;
    auto emit = [&](Method m, std::string metric, double value, bool converged) {
        rows.push_back({scenario, n, rep, m, std::move(metric), value, converged, seed});
    };
    for (Method m : config.methods) {
        const std::uint64_t fit_seed = derive_seed(seed, {fit_stream + static_cast<std::uint64_t>(m)});
        RegimeModel model;
        try {
            switch (m) {
                case Method::crossover_gowl:
                    model = fit_crossover_gowl(cross, config.grid, carryover_for(config, spec), fit_seed);
                    break;
                case Method::parallel_owl:
                    model = fit_parallel_owl(par, config.grid, fit_seed);
                    break;
                case Method::parallel_gowl:
                    model = fit_parallel_gowl(par, config.grid, fit_seed);
                    break;
                case Method::ridge:
                    model = fit_ridge_regime(par, default_ridge_penalties(n), config.grid.folds, fit_seed);
                    break;
            }
        } catch (const Error&) {
            emit(m, "fit_error", std::numeric_limits<double>::quiet_NaN(), false);
            continue;
        }
        const std::vector<int> rec = recommend(model, test_x);
        emit(m, "misclassification", misclassification_rate(rec, truth), model.converged);
        double value = std::numeric_limits<double>::quiet_NaN();
        bool value_ok = model.converged;
        try {
            value = estimated_value(test, rec);
        } catch (const UndefinedValueError&) {
            value_ok = false;
        }
        emit(m, "value", value, value_ok);
        emit(m, "optimal_value", optimal_value, true);
        if (model.carryover) emit(m, "carryover_mse", carryover_mse(*model.carryover, spec, test), true);
    }
    return rows;
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("ITR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ResultRow> run_experiment(const SimConfig& config) {
    config.validate();
    struct Task {
        int scenario;
        std::size_t n, rep;
    };
    std::vector<Task> tasks;
    for (int s : config.scenarios)
        for (auto n : config.n_train)
            for (std::size_t r = 0; r < config.replications; ++r) tasks.push_back({s, n, r});

    std::vector<std::vector<ResultRow>> slots(tasks.size());
    std::vector<std::exception_ptr> failures(tasks.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
            try {
                slots[t] = run_replication(config, tasks[t].scenario, tasks[t].n, tasks[t].rep);
            } catch (...) {
                failures[t] = std::current_exception();
            }
        }
    };
    const std::size_t threads =
        std::min(tasks.size(), config.threads ? config.threads : default_thread_count());
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work);
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);

    std::vector<ResultRow> rows;
    for (auto& slot : slots) rows.insert(rows.end(), slot.begin(), slot.end());
    return rows;
}

std::string format_results_csv(std::span<const ResultRow> rows) {
    std::ostringstream out;
    out << "scenario,n_train,replication,method,metric,value,converged,seed\n";
    for (const auto& r : rows)
        out << r.scenario << ',' << r.n_train << ',' << r.replication << ',' << to_string(r.method) << ','
            << r.metric << ',' << (std::isnan(r.value) ? std::string("NaN") : format_double(r.value)) << ','
            << (r.converged ? 1 : 0) << ',' << r.seed << '\n';
    return out.str();
}

void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << format_results_csv(rows);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<SummaryCell> summarize(std::span<const ResultRow> rows) {
    using Key = std::tuple<int, std::size_t, int, std::string>;
    std::map<Key, std::vector<double>> values;
    // (scenario, n, method, rep) -> (value, optimal)
    std::map<std::tuple<int, std::size_t, int, std::size_t>, std::pair<double, double>> paired;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        const int m = static_cast<int>(r.method);
        if (r.metric == "fit_error") continue;
        values[{r.scenario, r.n_train, m, r.metric}].push_back(r.value);
        if (r.metric == "value" || r.metric == "optimal_value") {
            auto& slot = paired.try_emplace({r.scenario, r.n_train, m, r.replication}, nan, nan).first->second;
            (r.metric == "value" ? slot.first : slot.second) = r.value;
        }
    }
    for (const auto& [key, vo] : paired) {
        const auto& [s, n, m, rep] = key;
        const double d = vo.first - vo.second;
        values[{s, n, m, "value_mse"}].push_back(d * d);
    }

    std::vector<SummaryCell> out;
    for (const auto& [key, vs] : values) {
        SummaryCell cell;
        std::tie(cell.scenario, cell.n_train, std::ignore, cell.metric) = key;
        cell.method = static_cast<Method>(std::get<2>(key));
        double sum = 0.0;
        for (double v : vs)
            if (std::isfinite(v)) {
                sum += v;
                ++cell.count;
            }
        cell.mean = cell.count ? sum / static_cast<double>(cell.count) : nan;
        if (cell.count > 1) {
            double ss = 0.0;
            for (double v : vs)
                if (std::isfinite(v)) ss += (v - cell.mean) * (v - cell.mean);
            cell.se = std::sqrt(ss / static_cast<double>(cell.count - 1) / static_cast<double>(cell.count));
        }
        out.push_back(std::move(cell));
    }
    return out;
}

}  // namespace crossitr
