// Command-line front end: simulate trials, run estimators, drive Monte Carlo
// experiments, and verify the exhaustive-enumeration oracles.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rctperm/instances.hpp"
#include "rctperm/rctperm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitOracle = 3;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        rctperm::write_text_file(out_path, text);
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 bool print_effective) {
    rctperm::RunConfig cfg = rctperm::parse_config(config_path);
    if (print_effective)
        std::cout << rctperm::to_json(cfg).dump(1) << "\n";
    auto roster = rctperm::generate_cohort(cfg.cohort, cfg.trial.seed);
    auto assignment = rctperm::sample_assignment(roster, cfg.trial.arms,
                                                 cfg.trial.per_arm, cfg.trial.seed);
    auto record =
        rctperm::run_trial(roster, assignment, cfg.trial, cfg.trial.seed);
    if (out_path.empty())
        std::cout << rctperm::to_json(record).dump(1) << "\n";
    else
        rctperm::save_trial_record(record, out_path);
    return kExitOk;
}

int cmd_estimate(const std::string& record_path, const std::string& kind,
                 int enumeration_cap, int ipw_resamples, std::uint64_t ipw_seed,
                 double trim_lo, double trim_hi, const std::string& out_path) {
    rctperm::TrialRecord record = rctperm::load_trial_record(record_path);
    if (!record.has_indices()) record.indices = rctperm::recompute_indices(record);
    rctperm::EstimatorSpec spec;
    spec.kind = rctperm::estimator_kind_from_string(kind);
    spec.enumeration_cap = enumeration_cap;
    spec.ipw_resamples = ipw_resamples;
    spec.ipw_seed = ipw_seed;
    spec.trim_lo = trim_lo;
    spec.trim_hi = trim_hi;
    spec.validate();
    auto report = rctperm::apply_estimator(record, spec);
    emit(rctperm::to_json(report).dump(1) + "\n", out_path);
    return kExitOk;
}

int cmd_mc_experiment(const std::string& config_path, std::string csv_path,
                      std::string summary_path, bool print_effective) {
    rctperm::RunConfig cfg = rctperm::parse_config(config_path);
    if (print_effective)
        std::cout << rctperm::to_json(cfg).dump(1) << "\n";
    auto ec = cfg.to_experiment_config();
    if (csv_path.empty()) csv_path = cfg.experiment.output_csv;
    if (summary_path.empty()) summary_path = cfg.experiment.output_summary;
    auto table = rctperm::run_mc_experiment(ec);
    emit(rctperm::experiment_csv(table, ec.trial.arms), csv_path);
    emit(rctperm::summary_to_json(table).dump(1) + "\n", summary_path);
    return kExitOk;
}

int cmd_oracle() {
    bool all_pass = true;
    for (const auto& inst : rctperm::tiny_instances()) {
        auto exp = rctperm::exact_expectation(inst.roster, inst.config);
        auto unbiased = rctperm::verify_unbiasedness(exp);
        auto variance = rctperm::verify_variance_identity(exp);
        bool structural = exp.cells_cover &&
                          std::abs(exp.weight_total - 1.0) <= 1e-12 &&
                          exp.max_general_gap <= 1e-10;
        bool pass = unbiased.pass && variance.pass && structural;
        all_pass = all_pass && pass;
        double worst_bias = 0.0, worst_var = 0.0;
        for (double v : unbiased.residual_dagger)
            worst_bias = std::max(worst_bias, std::abs(v));
        for (double v : unbiased.residual_dagger_idx)
            worst_bias = std::max(worst_bias, std::abs(v));
        for (double v : variance.residual)
            worst_var = std::max(worst_var, std::abs(v));
        std::printf("%-34s %s  bias %.3e  var-identity %.3e\n",
                    inst.name.c_str(), pass ? "PASS" : "FAIL", worst_bias,
                    worst_var);
    }
    return all_pass ? kExitOk : kExitOracle;
}

int cmd_schema(const std::string& which) {
    if (which == "config" || which == "all")
        std::cout << rctperm::schemas::kConfigSchema << "\n";
    if (which == "record" || which == "all")
        std::cout << rctperm::schemas::kTrialRecordSchema << "\n";
    if (which == "report" || which == "all")
        std::cout << rctperm::schemas::kEstimateReportSchema << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and estimators for budget-constrained "
                 "resource-allocation RCTs"};
    app.require_subcommand(1);

    std::string config_path, out_path, record_path, csv_path, summary_path;
    std::string estimator_kind = "raw";
    std::string schema_which = "all";
    bool print_effective = false;
    int enumeration_cap = rctperm::kEnumerationCap;
    int ipw_resamples = 2000;
    std::uint64_t ipw_seed = 0;
    double trim_lo = rctperm::kDefaultTrimLo, trim_hi = rctperm::kDefaultTrimHi;

    auto* simulate = app.add_subcommand("simulate", "Run one trial from a config");
    simulate->add_option("--config", config_path, "JSON config file")->required();
    simulate->add_option("--out", out_path, "Trial record output path (default stdout)");
    simulate->add_flag("--print-effective-config", print_effective,
                       "Echo the config with defaults applied");

    auto* estimate = app.add_subcommand("estimate", "Apply an estimator to a record");
    estimate->add_option("--record", record_path, "Trial record JSON")->required();
    estimate->add_option("--estimator", estimator_kind,
                         "raw | permuted_indexed | permuted_general | ipw")
        ->required();
    estimate->add_option("--enumeration-cap", enumeration_cap,
                         "Agent cap for exhaustive enumeration");
    estimate->add_option("--ipw-resamples", ipw_resamples, "Propensity resamples");
    estimate->add_option("--ipw-seed", ipw_seed, "Propensity resample seed");
    estimate->add_option("--trim-lo", trim_lo, "Propensity trim lower bound");
    estimate->add_option("--trim-hi", trim_hi, "Propensity trim upper bound");
    estimate->add_option("--out", out_path, "Report output path (default stdout)");

    auto* mc = app.add_subcommand("mc-experiment",
                                  "Monte Carlo experiment over many trials");
    mc->add_option("--config", config_path, "JSON config file")->required();
    mc->add_option("--csv", csv_path, "Per-trial CSV output path");
    mc->add_option("--summary", summary_path, "Summary JSON output path");
    mc->add_flag("--print-effective-config", print_effective,
                 "Echo the config with defaults applied");

    app.add_subcommand("oracle",
                       "Verify the unbiasedness and variance theorems on "
                       "built-in tiny instances");

    auto* schema = app.add_subcommand("schema", "Print the JSON schemas");
    schema->add_option("--which", schema_which, "config | record | report | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, out_path, print_effective);
        if (estimate->parsed())
            return cmd_estimate(record_path, estimator_kind, enumeration_cap,
                                ipw_resamples, ipw_seed, trim_lo, trim_hi,
                                out_path);
        if (mc->parsed())
            return cmd_mc_experiment(config_path, csv_path, summary_path,
                                     print_effective);
        if (app.get_subcommand("oracle")->parsed()) return cmd_oracle();
        if (schema->parsed()) return cmd_schema(schema_which);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}
