#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "rctperm/estimators.hpp"
#include "rctperm/model.hpp"
#include "rctperm/oracle.hpp"
#include "rctperm/sim.hpp"

namespace rctperm {

enum class EstimatorKind { Raw, PermutedIndexed, PermutedGeneral, Ipw };

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Raw: return "raw";
        case EstimatorKind::PermutedIndexed: return "permuted_indexed";
        case EstimatorKind::PermutedGeneral: return "permuted_general";
        case EstimatorKind::Ipw: return "ipw";
    }
    throw ConfigError("unknown estimator kind");
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
    if (s == "raw") return EstimatorKind::Raw;
    if (s == "permuted_indexed") return EstimatorKind::PermutedIndexed;
    if (s == "permuted_general") return EstimatorKind::PermutedGeneral;
    if (s == "ipw") return EstimatorKind::Ipw;
    throw ConfigError("unknown estimator kind '" + s + "'");
}

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Raw;
    int enumeration_cap = kEnumerationCap;  // permuted_general
    int ipw_resamples = 2000;
    std::uint64_t ipw_seed = 0;
    double trim_lo = kDefaultTrimLo, trim_hi = kDefaultTrimHi;

    void validate() const {
        if (enumeration_cap < 1) throw ConfigError("enumeration cap must be >= 1");
        if (ipw_resamples < 1) throw ConfigError("ipw resamples must be >= 1");
        if (!(0.0 < trim_lo && trim_lo <= trim_hi && trim_hi < 1.0))
            throw ConfigError("trim bounds must satisfy 0 < lo <= hi < 1");
    }
};

struct ExperimentConfig {
    CohortConfig cohort;
    TrialConfig trial;
    std::vector<EstimatorSpec> estimators;
    int trials = 0;
    std::uint64_t master_seed = 0;
    // Redraw the cohort each trial (matching the double expectation in
    // Eval*); when false the cohort is fixed and only assignment and
    // transitions vary (the design-based view).
    bool redraw_cohort = true;
    int threads = 1;

    void validate() const {
        cohort.validate();
        trial.validate();
        if (trials < 1) throw ConfigError("experiment needs at least 1 trial");
        if (estimators.empty()) throw ConfigError("experiment needs estimators");
        for (const auto& e : estimators) e.validate();
        if (threads < 1) throw ConfigError("thread count must be >= 1");
    }
};

struct ExperimentRow {
    int trial_index = 0;
    std::uint64_t trial_seed = 0;
    std::string estimator;
    std::vector<double> eval_per_arm;
    double delta = 0.0;
    std::string error;  // empty on success
};

struct EstimatorSummary {
    std::string estimator;
    int count = 0;  // successful rows
    double mean_delta = 0.0;
    double var_delta = 0.0;   // sample variance, n-1
    double variance_ratio = -1.0;  // var / var(raw), when raw present
    int n_value_analytic = -1;     // vs raw, when applicable
};

struct ExperimentTable {
    std::vector<ExperimentRow> rows;  // trials x estimators, trial-major
    std::vector<EstimatorSummary> summary;
};

inline EstimateReport apply_estimator(const TrialRecord& record,
                                      const EstimatorSpec& spec) {
    switch (spec.kind) {
        case EstimatorKind::Raw: return eval_raw(record);
        case EstimatorKind::PermutedIndexed: return eval_permuted_indexed(record);
        case EstimatorKind::PermutedGeneral:
            return eval_permuted_general(record, spec.enumeration_cap);
        case EstimatorKind::Ipw:
            return eval_ipw(record, spec.ipw_resamples, spec.ipw_seed,
                            spec.trim_lo, spec.trim_hi);
    }
    throw ConfigError("unknown estimator kind");
}

inline ExperimentTable run_mc_experiment(const ExperimentConfig& config) {
    config.validate();
    const int E = static_cast<int>(config.estimators.size());
    ExperimentTable table;
    table.rows.assign(static_cast<std::size_t>(config.trials) * E, {});

    // Rows are preallocated and written by trial index, so the result is
    // identical for any thread count.
    auto run_range = [&](int lo, int hi) {
        for (int trial = lo; trial < hi; ++trial) {
            std::uint64_t child =
                rng::mix({config.master_seed, static_cast<std::uint64_t>(trial),
                          rng::kStreamTrialChild});
            std::uint64_t cohort_seed =
                config.redraw_cohort ? child : config.master_seed;
            TrialRecord record;
            std::string trial_error;
            try {
                auto roster = generate_cohort(config.cohort, cohort_seed);
                auto assignment = sample_assignment(
                    roster, config.trial.arms, config.trial.per_arm, child);
                record = run_trial(roster, assignment, config.trial, child);
            } catch (const std::exception& e) {
                trial_error = e.what();
            }
            for (int k = 0; k < E; ++k) {
                ExperimentRow& row = table.rows[static_cast<std::size_t>(trial) * E + k];
                row.trial_index = trial;
                row.trial_seed = child;
                row.estimator = to_string(config.estimators[k].kind);
                if (!trial_error.empty()) {
                    row.error = trial_error;
                    continue;
                }
                try {
                    auto rep = apply_estimator(record, config.estimators[k]);
                    row.eval_per_arm = rep.eval_per_arm;
                    row.delta = rep.delta;
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
        }
    };

    if (config.threads == 1) {
        run_range(0, config.trials);
    } else {
        std::vector<std::thread> pool;
        int per = (config.trials + config.threads - 1) / config.threads;
        for (int w = 0; w < config.threads; ++w) {
            int lo = w * per, hi = std::min(config.trials, lo + per);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }

    // Summaries in estimator order.
    double var_raw = -1.0;
    for (int k = 0; k < E; ++k) {
        EstimatorSummary s;
        s.estimator = to_string(config.estimators[k].kind);
        std::vector<double> deltas;
        for (int trial = 0; trial < config.trials; ++trial) {
            const auto& row = table.rows[static_cast<std::size_t>(trial) * E + k];
            if (row.error.empty()) deltas.push_back(row.delta);
        }
        s.count = static_cast<int>(deltas.size());
        if (!deltas.empty()) {
            for (double d : deltas) s.mean_delta += d;
            s.mean_delta /= static_cast<double>(deltas.size());
        }
        if (deltas.size() >= 2) s.var_delta = sample_variance(deltas);
        if (config.estimators[k].kind == EstimatorKind::Raw && deltas.size() >= 2)
            var_raw = s.var_delta;
        table.summary.push_back(std::move(s));
    }
    for (auto& s : table.summary) {
        if (s.estimator == "raw" || var_raw < 0.0) continue;
        if (s.var_delta > 0.0) {
            s.variance_ratio = s.var_delta / var_raw;
            s.n_value_analytic = n_value(var_raw, s.var_delta);
        }
    }
    return table;
}

// Diagnostic companion to the estimators: estimate the assignment-averaged
// Eval by drawing random assignments and re-simulating (against the same
// transition randomness, which is keyed by agent and timestep) only when the
// replayed actions differ from the record's.
inline std::vector<double> partition_expectation(const TrialRecord& record,
                                                 int n_partitions,
                                                 std::uint64_t seed) {
    if (n_partitions < 1) throw ConfigError("need at least one partition draw");
    std::vector<double> sums(record.meta.arms, 0.0);
    for (int k = 0; k < n_partitions; ++k) {
        std::uint64_t draw_seed = rng::mix(
            {seed, static_cast<std::uint64_t>(k), rng::kStreamPartitionDiag});
        Assignment c = sample_assignment(record.roster, record.meta.arms,
                                         record.meta.per_arm, draw_seed);
        if (is_observable_counterfactual(record, c)) {
            for (int a = 0; a < record.meta.arms; ++a)
                sums[a] += eval_arm_under(record, c, a);
        } else {
            TrialRecord redo =
                run_trial(record.roster, c, record.meta, record.meta.seed);
            for (int a = 0; a < record.meta.arms; ++a)
                sums[a] += eval_arm(redo, a);
        }
    }
    for (double& v : sums) v /= static_cast<double>(n_partitions);
    return sums;
}

}  // namespace rctperm
