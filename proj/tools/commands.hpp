#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossitr/data.hpp"
#include "crossitr/errors.hpp"

namespace crossitr::cli {

enum ExitCode : int { ok = 0, input_error = 2, io_error = 3, numeric_error = 4 };

// Malformed simulate config; one message per offending field.
class ConfigError : public ArgumentError {
public:
    explicit ConfigError(std::vector<std::string> fields)
        : ArgumentError("invalid configuration"), fields_(std::move(fields)) {}
    const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
    std::vector<std::string> fields_;
};

struct SimulateArgs {
    std::string config_path;
    std::optional<std::string> scenarios;  // "1,2"
    std::optional<std::string> n_train;    // "30,75"
    std::optional<std::size_t> reps;
    std::optional<std::size_t> n_test;
    std::optional<std::string> methods;    // "crossover_gowl,owl"
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool paper_scale = false;
    bool dry_run = false;
};

struct SchemaArgs {
    std::string x_cols;  // comma list; empty = auto
    std::string a1_col = "a1";
    std::string y1_col = "y1";
    std::string y2_col = "y2";
    std::string propensity_col;

    CsvSchema schema() const;
};

struct AnalyzeArgs {
    std::string data;
    SchemaArgs schema;
    std::string methods = "crossover_gowl,owl,gowl,ridge";
    std::string carryover = "none";  // none | estimate | ttest-gate
    double gate_alpha = 0.05;
    std::uint64_t seed = 1;
    std::size_t folds = 5;
    std::string out;  // empty = stdout
};

struct TtestArgs {
    std::string data;
    SchemaArgs schema;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_analyze(const AnalyzeArgs& args);
int cmd_ttest(const TtestArgs& args);

// Maps a library exception to an exit code and writes an error JSON object
// to stderr.
int report_error(const std::exception& e);

std::vector<std::string> split_list(const std::string& text);

}  // namespace crossitr::cli
