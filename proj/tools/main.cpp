#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_schema_flags(CLI::App& cmd, crossitr::cli::SchemaArgs& s) {
    cmd.add_option("--schema.x-cols", s.x_cols, "Comma-separated covariate columns (default: all others)");
    cmd.add_option("--schema.a1-col", s.a1_col, "First-period treatment column")->capture_default_str();
    cmd.add_option("--schema.y1-col", s.y1_col, "Period-1 outcome column")->capture_default_str();
    cmd.add_option("--schema.y2-col", s.y2_col, "Period-2 outcome column")->capture_default_str();
    cmd.add_option("--schema.propensity-col", s.propensity_col,
                   "Propensity column (default: 'propensity' if present, else 0.5)");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace crossitr::cli;
    CLI::App app{"Individualized treatment regimes from 2x2 crossover trials"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a replicated simulation experiment");
    simulate->add_option("--config", sim.config_path, "JSON experiment config");
    simulate->add_option("--scenario", sim.scenarios, "Scenario id(s), e.g. 1 or 1,2");
    simulate->add_option("--n", sim.n_train, "Training sizes, e.g. 30,75");
    simulate->add_option("--reps", sim.reps, "Replications per (scenario, n)");
    simulate->add_option("--ntest", sim.n_test, "Test-set size");
    simulate->add_option("--methods", sim.methods, "crossover_gowl,owl,gowl,ridge");
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--out", sim.out, "Result CSV path");
    simulate->add_flag("--paper-scale", sim.paper_scale, "1000 replications, n_test 10000");
    simulate->add_flag("--dry-run", sim.dry_run, "Print the resolved config and exit");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Cross-validated value of each method on a trial CSV");
    analyze->add_option("data,--data", an.data, "Crossover trial CSV")->required();
    add_schema_flags(*analyze, an.schema);
    analyze->add_option("--methods", an.methods, "Methods to compare")->capture_default_str();
    analyze->add_option("--carryover", an.carryover, "none, estimate or ttest-gate")
        ->check(CLI::IsMember({"none", "estimate", "ttest-gate"}))
        ->capture_default_str();
    analyze->add_option("--gate-alpha", an.gate_alpha, "Rejection level for ttest-gate")->capture_default_str();
    analyze->add_option("--seed", an.seed, "Seed")->capture_default_str();
    analyze->add_option("--folds", an.folds, "Cross-validation folds")->capture_default_str();
    analyze->add_option("--out", an.out, "Report JSON path (default: stdout)");

    TtestArgs tt;
    auto* ttest = app.add_subcommand("ttest", "Welch tests for carryover effects");
    ttest->add_option("data,--data", tt.data, "Crossover trial CSV")->required();
    add_schema_flags(*ttest, tt.schema);
    ttest->add_option("--out", tt.out, "Report JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return input_error;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*analyze) return cmd_analyze(an);
        return cmd_ttest(tt);
    } catch (const std::exception& e) {
        return report_error(e);
    }
}
