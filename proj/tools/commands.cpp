#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "crossitr/carryover.hpp"
#include "crossitr/evaluation.hpp"
#include "crossitr/regimes.hpp"
#include "crossitr/rng.hpp"
#include "crossitr/simulation.hpp"

namespace crossitr::cli {

using json = nlohmann::ordered_json;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

CsvSchema SchemaArgs::schema() const {
    CsvSchema s;
    s.x_cols = split_list(x_cols);
    s.a1_col = a1_col;
    s.y1_col = y1_col;
    s.y2_col = y2_col;
    if (!propensity_col.empty()) s.propensity_col = propensity_col;
    return s;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

// Fails early, before any long computation, when `path` cannot be created.
void probe_writable(const std::string& path) {
    const bool existed = std::filesystem::exists(path);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot write '" + path + "'");
    }
    if (!existed) std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct ResolvedSim {
    SimConfig config;
    std::string out = "results.csv";
};

std::string carryover_name(CarryoverMode m) {
    switch (m) {
        case CarryoverMode::automatic: return "auto";
        case CarryoverMode::none: return "none";
        case CarryoverMode::estimate: return "estimate";
    }
    return "auto";
}

template <class T>
std::vector<T> as_list(const json& v, const std::string& key, std::vector<std::string>& errors,
                       bool (*check)(const json&)) {
    std::vector<T> out;
    const json items = v.is_array() ? v : json::array({v});
    if (items.empty()) errors.push_back(key + ": must not be empty");
    for (const auto& item : items) {
        if (!check(item)) {
            errors.push_back(key + ": unexpected value " + item.dump());
            return {};
        }
        out.push_back(item.get<T>());
    }
    return out;
}

bool is_count(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); }
bool is_real(const json& v) { return v.is_number(); }
bool is_text(const json& v) { return v.is_string(); }

void apply_config(const json& j, ResolvedSim& r, std::vector<std::string>& errors) {
    if (!j.is_object()) {
        errors.push_back("config: expected a JSON object");
        return;
    }
    SimConfig& c = r.config;
    for (const auto& [key, v] : j.items()) {
        if (key == "scenario") {
            auto ids = as_list<std::size_t>(v, key, errors, is_count);
            c.scenarios.assign(ids.begin(), ids.end());
        } else if (key == "n") {
            c.n_train = as_list<std::size_t>(v, key, errors, is_count);
        } else if (key == "reps" || key == "n_test" || key == "seed" || key == "p" || key == "folds" ||
                   key == "threads") {
            if (!is_count(v)) {
                errors.push_back(key + ": expected a nonnegative integer");
                continue;
            }
            const auto u = v.get<std::uint64_t>();
            if (key == "reps") c.replications = u;
            else if (key == "n_test") c.n_test = u;
            else if (key == "seed") c.seed = u;
            else if (key == "p") c.p = u;
            else if (key == "folds") c.grid.folds = u;
            else c.threads = u;
        } else if (key == "methods") {
            c.methods.clear();
            for (const auto& name : as_list<std::string>(v, key, errors, is_text)) {
                try {
                    c.methods.push_back(method_from_string(name));
                } catch (const ArgumentError& e) {
                    errors.push_back("methods: " + std::string(e.what()));
                }
            }
        } else if (key == "lambdas") {
            c.grid.lambda_numerators = as_list<double>(v, key, errors, is_real);
        } else if (key == "sigmas") {
            c.grid.sigmas = as_list<double>(v, key, errors, is_real);
        } else if (key == "carryover") {
            const std::string mode = v.is_string() ? v.get<std::string>() : "";
            if (mode == "auto") c.carryover = CarryoverMode::automatic;
            else if (mode == "none") c.carryover = CarryoverMode::none;
            else if (mode == "estimate") c.carryover = CarryoverMode::estimate;
            else errors.push_back("carryover: expected \"auto\", \"none\" or \"estimate\"");
        } else if (key == "output") {
            if (v.is_string()) r.out = v.get<std::string>();
            else errors.push_back("output: expected a string");
        } else {
            errors.push_back(key + ": unknown field");
        }
    }
}

template <class T>
std::vector<T> parse_counts(const std::string& text, const std::string& flag, std::vector<std::string>& errors) {
    std::vector<T> out;
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v < 0) throw std::invalid_argument(item);
            out.push_back(static_cast<T>(v));
        } catch (const std::exception&) {
            errors.push_back(flag + ": '" + item + "' is not a nonnegative integer");
        }
    }
    if (out.empty() && errors.empty()) errors.push_back(flag + ": empty list");
    return out;
}

ResolvedSim resolve(const SimulateArgs& args) {
    ResolvedSim r;
    std::vector<std::string> errors;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + args.config_path + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError({std::string("config: ") + e.what()});
        }
        apply_config(j, r, errors);
    }
    if (args.paper_scale) r.config.use_paper_scale();
    if (args.scenarios) {
        auto ids = parse_counts<int>(*args.scenarios, "--scenario", errors);
        r.config.scenarios = ids;
    }
    if (args.n_train) r.config.n_train = parse_counts<std::size_t>(*args.n_train, "--n", errors);
    if (args.reps) r.config.replications = *args.reps;
    if (args.n_test) r.config.n_test = *args.n_test;
    if (args.methods) {
        r.config.methods.clear();
        for (const auto& name : split_list(*args.methods)) {
            try {
                r.config.methods.push_back(method_from_string(name));
            } catch (const ArgumentError& e) {
                errors.push_back("--methods: " + std::string(e.what()));
            }
        }
    }
    if (args.seed) r.config.seed = *args.seed;
    if (args.out) r.out = *args.out;
    if (!errors.empty()) throw ConfigError(std::move(errors));
    try {
        r.config.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError({e.what()});
    }
    return r;
}

json echo(const ResolvedSim& r) {
    const SimConfig& c = r.config;
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    return {{"scenario", c.scenarios},
            {"n", c.n_train},
            {"reps", c.replications},
            {"n_test", c.n_test},
            {"methods", methods},
            {"seed", c.seed},
            {"p", c.p},
            {"folds", c.grid.folds},
            {"lambdas", c.grid.lambda_numerators},
            {"sigmas", c.grid.sigmas},
            {"carryover", carryover_name(c.carryover)},
            {"output", r.out}};
}

std::string summary_path(const std::string& out) {
    std::filesystem::path p(out);
    p.replace_extension(".summary.json");
    return p.string();
}

}  // namespace

int cmd_simulate(const SimulateArgs& args) {
    const ResolvedSim r = resolve(args);
    if (args.dry_run) {
        std::cout << json{{"seed", r.config.seed}, {"config", echo(r)}}.dump(2) << '\n';
        return ok;
    }
    const std::string summary_file = summary_path(r.out);
    probe_writable(r.out);
    probe_writable(summary_file);

    const auto rows = run_experiment(r.config);
    write_text(r.out, format_results_csv(rows));

    json cells = json::array();
    for (const auto& s : summarize(rows))
        cells.push_back({{"scenario", s.scenario},
                         {"n_train", s.n_train},
                         {"method", to_string(s.method)},
                         {"metric", s.metric},
                         {"mean", s.mean},
                         {"se", s.se},
                         {"count", s.count}});
    std::size_t failures = 0;
    for (const auto& row : rows) failures += row.metric == "fit_error";
    const json summary{{"seed", r.config.seed}, {"config", echo(r)}, {"rows", rows.size()},
                       {"fit_failures", failures}, {"summary", cells}};
    write_text(summary_file, summary.dump(2) + "\n");
    return ok;
}

// ---------------------------------------------------------------------------
// analyze / ttest
// ---------------------------------------------------------------------------

namespace {

json welch_json(const WelchResult& w, const std::string& hypothesis) {
    return {{"hypothesis", hypothesis}, {"t", w.t},   {"df", w.df}, {"p", w.p},
            {"mean_difference", w.mean_difference}, {"n1", w.n1}, {"n2", w.n2}};
}

json tests_json(const CarryoverTests& t) {
    return {{"after_plus", welch_json(t.after_plus, "E[delta_{+1}(X)] = 0")},
            {"after_minus", welch_json(t.after_minus, "E[delta_{-1}(X)] = 0")}};
}

Regime as_regime(RegimeModel model) {
    auto shared = std::make_shared<const RegimeModel>(std::move(model));
    return [shared](std::span<const double> x) { return recommend(*shared, x); };
}

CrossoverFitFn fitter(Method m, const HyperGrid& grid, const CarryoverOption& carryover) {
    switch (m) {
        case Method::crossover_gowl:
            return [grid, carryover](const CrossoverDataset& train, std::uint64_t seed) {
                return as_regime(fit_crossover_gowl(train, grid, carryover, seed));
            };
        case Method::parallel_owl:
            return [grid](const CrossoverDataset& train, std::uint64_t seed) {
                return as_regime(fit_parallel_owl(period_one(train), grid, seed));
            };
        case Method::parallel_gowl:
            return [grid](const CrossoverDataset& train, std::uint64_t seed) {
                return as_regime(fit_parallel_gowl(period_one(train), grid, seed));
            };
        case Method::ridge:
            return [grid](const CrossoverDataset& train, std::uint64_t seed) {
                return as_regime(fit_ridge_regime(period_one(train), default_ridge_penalties(train.size()),
                                                  grid.folds, seed));
            };
    }
    throw ArgumentError("unknown method");
}

}  // namespace

int cmd_analyze(const AnalyzeArgs& args) {
    const CrossoverDataset data = load_crossover_csv(args.data, args.schema.schema());
    std::vector<Method> methods;
    for (const auto& name : split_list(args.methods)) methods.push_back(method_from_string(name));
    if (methods.empty()) throw ArgumentError("no methods requested");
    if (args.folds < 2 || args.folds > data.size()) throw ArgumentError("--folds must lie in [2, n]");
    if (!(args.gate_alpha > 0.0 && args.gate_alpha < 1.0)) throw ArgumentError("--gate-alpha must lie in (0, 1)");
    if (args.out.size()) probe_writable(args.out);

    json report;
    report["seed"] = args.seed;
    report["data"] = {{"path", std::filesystem::path(args.data).filename().string()},
                      {"subjects", data.size()},
                      {"covariates", data.dim()}};
    report["folds"] = args.folds;
    json warnings = json::array();

    std::optional<CarryoverTests> tests;
    try {
        tests = carryover_ttest(data);
        report["carryover_tests"] = tests_json(*tests);
    } catch (const InsufficientDataError& e) {
        report["carryover_tests"] = nullptr;
        warnings.push_back(e.what());
    }

    std::string applied = args.carryover;
    if (args.carryover == "ttest-gate") {
        if (!tests) throw InsufficientDataError("ttest-gate needs both carryover tests");
        const bool reject = tests->after_plus.p < args.gate_alpha || tests->after_minus.p < args.gate_alpha;
        applied = reject ? "estimate" : "none";
    }
    report["carryover"] = {{"mode", args.carryover}, {"applied", applied}};
    if (args.carryover == "ttest-gate") report["carryover"]["alpha"] = args.gate_alpha;

    HyperGrid grid;
    grid.folds = args.folds;
    const CarryoverOption carryover = applied == "estimate"
                                          ? CarryoverOption::estimate(RegressorSpec{})
                                          : CarryoverOption::none();

    int code = ok;
    json table = json::array();
    for (Method m : methods) {
        json row{{"method", to_string(m)}};
        try {
            const CvValue v = crossover_cv_value(data, fitter(m, grid, carryover), args.folds, args.seed);
            row["mean"] = v.mean;
            row["sd"] = v.sd;
            row["fold_values"] = v.fold_values;
        } catch (const PoorAllocationError&) {
            row["mean"] = nullptr;
            row["sd"] = nullptr;
            row["error"] = kPoorAllocationWarning;
            std::cerr << "warning: " << to_string(m) << ": " << kPoorAllocationWarning << '\n';
            code = std::max<int>(code, numeric_error);
        } catch (const DegenerateRewardError& e) {
            row["mean"] = nullptr;
            row["sd"] = nullptr;
            row["error"] = e.what();
            code = std::max<int>(code, input_error);
        }
        table.push_back(std::move(row));
    }

    // Observed period-1 value: mean of y1, with the spread of its per-fold
    // means over the same stratified folds.
    std::vector<int> strata;
    double total = 0.0;
    for (const auto& o : data) {
        strata.push_back(o.a1);
        total += o.y1;
    }
    const FoldSplit split = split_folds(data.size(), args.folds, strata, args.seed);
    std::vector<double> fold_means;
    for (const auto& fold : split.folds) {
        double s = 0.0;
        for (auto i : fold) s += data[i].y1;
        fold_means.push_back(s / static_cast<double>(fold.size()));
    }
    double fm = 0.0, ss = 0.0;
    for (double v : fold_means) fm += v;
    fm /= static_cast<double>(fold_means.size());
    for (double v : fold_means) ss += (v - fm) * (v - fm);
    table.push_back({{"method", "observed_period1"},
                     {"mean", total / static_cast<double>(data.size())},
                     {"sd", std::sqrt(ss / static_cast<double>(fold_means.size() - 1))},
                     {"fold_values", fold_means}});

    report["table"] = std::move(table);
    report["warnings"] = std::move(warnings);
    write_text(args.out, report.dump(2) + "\n");
    return code;
}

int cmd_ttest(const TtestArgs& args) {
    const CrossoverDataset data = load_crossover_csv(args.data, args.schema.schema());
    if (args.out.size()) probe_writable(args.out);
    json report = tests_json(carryover_ttest(data));
    report["subjects"] = data.size();
    write_text(args.out, report.dump(2) + "\n");
    return ok;
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

int report_error(const std::exception& e) {
    json err{{"message", e.what()}};
    int code = input_error;
    if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
        err["error"] = "config";
        err["fields"] = c->fields();
    } else if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
        err["error"] = "validation";
        json rows = json::array();
        for (const auto& issue : v->issues()) rows.push_back({{"row", issue.row}, {"message", issue.message}});
        err["rows"] = rows;
    } else if (const auto* s = dynamic_cast<const SchemaError*>(&e)) {
        err["error"] = "schema";
        err["column"] = s->column();
    } else if (dynamic_cast<const EmptyInputError*>(&e)) {
        err["error"] = "empty_input";
    } else if (dynamic_cast<const IoError*>(&e)) {
        err["error"] = "io";
        code = io_error;
    } else if (const auto* p = dynamic_cast<const PoorAllocationError*>(&e)) {
        err["error"] = "poor_allocation";
        err["fold"] = p->fold();
        err["message"] = kPoorAllocationWarning;
        code = numeric_error;
    } else if (dynamic_cast<const NumericError*>(&e)) {
        err["error"] = "numeric";
        code = numeric_error;
    } else if (dynamic_cast<const Error*>(&e)) {
        err["error"] = "input";
    } else {
        err["error"] = "internal";
        code = numeric_error;
    }
    std::cerr << err.dump() << '\n';
    return code;
}

}  // namespace crossitr::cli
