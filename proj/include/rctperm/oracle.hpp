#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rctperm/estimators.hpp"
#include "rctperm/model.hpp"
#include "rctperm/sim.hpp"
#include "rctperm/trial.hpp"

namespace rctperm {

// ---------------------------------------------------------------------------
// Exhaustive expectation over assignments x transition randomness.
//
// Transition randomness is represented as one uniform draw u(i,t) per agent
// per timestep: the next state is 1{u < p(state, action)}. Since each agent
// has only four possible transition probabilities, the unit interval splits
// into finitely many cells per (i,t) on which every indicator is constant.
// Enumerating the product of these cells couples all assignments to the same
// underlying randomness, which is exactly the potential-outcomes view the
// variance identity needs: conditioned on a cell, trajectories are
// deterministic and two assignments are observable counterfactuals of each
// other iff they realize identical action matrices.
// ---------------------------------------------------------------------------

struct ExhaustiveExpectation {
    int arms = 0;
    // Per-arm exact moments.
    std::vector<double> eval_star;       // E[Eval]
    std::vector<double> e_dagger;        // E[general permuted estimate]
    std::vector<double> e_dagger_idx;    // E[index-threshold estimate] (2 arms)
    std::vector<double> var_eval;
    std::vector<double> var_dagger;
    std::vector<double> var_dagger_idx;
    std::vector<double> contraction_rhs;    // partition-sum formula, exact
    // Diagnostics.
    long long assignment_count = 0;
    long long table_count = 0;           // number of randomness cells
    double weight_total = 0.0;           // should be 1
    bool cells_cover = true;             // partition cells always covered C
    double max_general_gap = 0.0;  // worst |general estimate - true cell mean|
    bool has_indexed = false;      // index-threshold columns valid (2 arms)
};

inline ExhaustiveExpectation exact_expectation(
    const std::vector<AgentSpec>& roster, const TrialConfig& config,
    long long table_cap = 2'000'000) {
    config.validate();
    const int n = static_cast<int>(roster.size());
    const int T = config.horizon;
    const int M = config.arms;
    if (n != M * config.per_arm)
        throw ConfigError("exact_expectation: roster size != arms*per_arm");
    if (n > 6 || T > 3)
        throw UnsupportedError("exact_expectation caps: at most 6 agents and T<=3");

    // Interval discretization of u(i,t): cuts at the agent's own transition
    // probabilities. Within an interval, 1{u < p} is constant for all four p.
    struct Cell {
        double mid, weight;
    };
    std::vector<std::vector<Cell>> cells_per_agent(n);
    long long tables = 1;
    for (int i = 0; i < n; ++i) {
        const auto& m = roster[i].true_model;
        std::vector<double> cuts = {0.0, 1.0, m.p_pass_01, m.p_pass_11,
                                    m.p_act_01, m.p_act_11};
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            cells_per_agent[i].push_back(
                {0.5 * (cuts[k] + cuts[k + 1]), cuts[k + 1] - cuts[k]});
        for (int t = 0; t < T; ++t)
            tables *= static_cast<long long>(cells_per_agent[i].size());
        if (tables > table_cap)
            throw UnsupportedError(
                "exact_expectation: randomness cell count exceeds cap " +
                std::to_string(table_cap) +
                "; use models with fewer distinct probabilities");
    }

    auto assignments = enumerate_assignments(std::vector<int>(M, config.per_arm));
    const auto C = static_cast<double>(assignments.size());

    ExhaustiveExpectation out;
    out.arms = M;
    out.assignment_count = static_cast<long long>(assignments.size());
    out.table_count = tables;
    out.has_indexed = M == 2;
    out.eval_star.assign(M, 0.0);
    out.e_dagger.assign(M, 0.0);
    out.e_dagger_idx.assign(M, 0.0);
    out.var_eval.assign(M, 0.0);
    out.var_dagger.assign(M, 0.0);
    out.var_dagger_idx.assign(M, 0.0);
    out.contraction_rhs.assign(M, 0.0);
    std::vector<double> e_eval_sq(M, 0.0), e_dag_sq(M, 0.0), e_idx_sq(M, 0.0);

    // Mixed-radix counter over the (agent, t) cells.
    std::vector<int> digit(n * T, 0);
    std::vector<detail::WhittleCache> caches(M, detail::WhittleCache(n));

    TrialRecord rec;
    rec.meta = config;
    rec.roster = roster;

    std::vector<std::vector<double>> evals(assignments.size(),
                                           std::vector<double>(M));
    std::vector<std::vector<double>> dag_vals(assignments.size(),
                                              std::vector<double>(M));
    std::vector<ByteMatrix> action_mats(assignments.size());

    bool done = false;
    while (!done) {
        double w = 1.0;
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < T; ++t)
                w *= cells_per_agent[i][digit[i * T + t]].weight;

        // Deterministic trajectory of every assignment on this cell.
        for (std::size_t ci = 0; ci < assignments.size(); ++ci) {
            const Assignment& c = assignments[ci];
            rec.assignment = c;
            rec.states.assign(n, StateRow(T + 1, 0));
            rec.actions.assign(n, ActionRow(T, 0));
            rec.indices.assign(M, RealMatrix(n, std::vector<double>(T, 0.0)));
            for (int i = 0; i < n; ++i) rec.states[i][0] = roster[i].initial_state;
            auto members = c.members_by_arm();
            for (int t = 1; t <= T; ++t) {
                fill_indices_at(roster, rec.meta, rec.states, rec.actions, t,
                                rec.indices, caches);
                for (int a = 0; a < M; ++a) {
                    std::vector<std::pair<int, double>> scored;
                    for (int id : members[a])
                        scored.emplace_back(id, rec.indices[a][id][t - 1]);
                    auto acts = allocate(scored, config.budgets[a]);
                    for (std::size_t k = 0; k < scored.size(); ++k)
                        rec.actions[scored[k].first][t - 1] = acts[k];
                }
                for (int i = 0; i < n; ++i) {
                    double p = roster[i].true_model.prob_next_engaged(
                        rec.states[i][t - 1], rec.actions[i][t - 1]);
                    double u = cells_per_agent[i][digit[i * T + (t - 1)]].mid;
                    rec.states[i][t] = u < p ? 1 : 0;
                }
            }
            for (int a = 0; a < M; ++a) evals[ci][a] = eval_arm(rec, a);
            action_mats[ci] = rec.actions;

            // Estimator values under this realization.
            auto dag = eval_permuted_general(rec, n);
            for (int a = 0; a < M; ++a) {
                double v = evals[ci][a];
                dag_vals[ci][a] = dag.eval_per_arm[a];
                out.eval_star[a] += w * v / C;
                e_eval_sq[a] += w * v * v / C;
                out.e_dagger[a] += w * dag.eval_per_arm[a] / C;
                e_dag_sq[a] += w * dag.eval_per_arm[a] * dag.eval_per_arm[a] / C;
            }
            if (M == 2) {
                auto idx = eval_permuted_indexed(rec);
                for (int a = 0; a < M; ++a) {
                    out.e_dagger_idx[a] += w * idx.eval_per_arm[a] / C;
                    e_idx_sq[a] +=
                        w * idx.eval_per_arm[a] * idx.eval_per_arm[a] / C;
                }
            }
        }

        // Partition cells of this randomness cell: identical action matrices.
        std::map<ByteMatrix, std::vector<std::size_t>> cells;
        for (std::size_t ci = 0; ci < assignments.size(); ++ci)
            cells[action_mats[ci]].push_back(ci);
        std::size_t covered = 0;
        for (const auto& [mat, members] : cells) {
            covered += members.size();
            for (int a = 0; a < M; ++a) {
                double sum = 0.0, sum_sq = 0.0;
                for (std::size_t ci : members) {
                    sum += evals[ci][a];
                    sum_sq += evals[ci][a] * evals[ci][a];
                }
                out.contraction_rhs[a] +=
                    w * (sum_sq - sum * sum / static_cast<double>(members.size())) /
                    C;
                // Cross-check: the general estimator on any member must reproduce the
                // true cell mean (the replay-based counterfactual set must be
                // exactly this cell).
                double mean = sum / static_cast<double>(members.size());
                for (std::size_t ci : members)
                    out.max_general_gap =
                        std::max(out.max_general_gap, std::abs(dag_vals[ci][a] - mean));
            }
        }
        out.cells_cover = out.cells_cover && covered == assignments.size();
        out.weight_total += w;

        // Advance the mixed-radix counter.
        int pos = 0;
        for (;; ++pos) {
            if (pos == n * T) {
                done = true;
                break;
            }
            int agent = pos / T;
            if (++digit[pos] < static_cast<int>(cells_per_agent[agent].size()))
                break;
            digit[pos] = 0;
        }
    }

    for (int a = 0; a < M; ++a) {
        out.var_eval[a] = e_eval_sq[a] - out.eval_star[a] * out.eval_star[a];
        out.var_dagger[a] = e_dag_sq[a] - out.e_dagger[a] * out.e_dagger[a];
        out.var_dagger_idx[a] =
            e_idx_sq[a] - out.e_dagger_idx[a] * out.e_dagger_idx[a];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Theorem verifiers
// ---------------------------------------------------------------------------

struct UnbiasednessReport {
    std::vector<double> residual_dagger;      // E[Eval-dagger] - Eval*
    std::vector<double> residual_dagger_idx;  // E[Eval-dagger-Y] - Eval*
    bool pass = true;
};

inline UnbiasednessReport verify_unbiasedness(const ExhaustiveExpectation& e,
                                              double tol = 1e-10) {
    UnbiasednessReport r;
    for (int a = 0; a < e.arms; ++a) {
        r.residual_dagger.push_back(e.e_dagger[a] - e.eval_star[a]);
        double ridx =
            e.has_indexed ? e.e_dagger_idx[a] - e.eval_star[a] : 0.0;
        r.residual_dagger_idx.push_back(ridx);
        if (std::abs(r.residual_dagger.back()) > tol || std::abs(ridx) > tol)
            r.pass = false;
    }
    return r;
}

struct VarianceIdentityReport {
    std::vector<double> lhs;  // Var(Eval) - Var(Eval-dagger)
    std::vector<double> rhs;  // partition-sum formula
    std::vector<double> residual;
    bool pass = true;
};

inline VarianceIdentityReport verify_variance_identity(
    const ExhaustiveExpectation& e, double tol = 1e-10,
    double nonneg_tol = 1e-12) {
    VarianceIdentityReport r;
    for (int a = 0; a < e.arms; ++a) {
        double lhs = e.var_eval[a] - e.var_dagger[a];
        double rhs = e.contraction_rhs[a];
        r.lhs.push_back(lhs);
        r.rhs.push_back(rhs);
        r.residual.push_back(lhs - rhs);
        if (std::abs(lhs - rhs) > tol || rhs < -nonneg_tol) r.pass = false;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

inline double sample_variance(const std::vector<double>& values) {
    if (values.size() < 2)
        throw ValidationError("sample_variance needs at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(values.size() - 1);
}

enum class NValueMode { Analytic, Simulated };

// Smallest number of independent raw trials whose averaged estimate matches
// the permuted estimator's variance. Analytic mode assumes Var(mean of n) =
// var_raw / n; simulated mode bootstraps means of n from the raw samples.
inline int n_value(double var_raw, double var_perm,
                   NValueMode mode = NValueMode::Analytic,
                   const std::vector<double>& raw_samples = {},
                   std::uint64_t seed = 0, int bootstrap_reps = 20000) {
    if (!(var_perm > 0.0)) throw ConfigError("n_value: var_perm must be positive");
    if (mode == NValueMode::Analytic) {
        int n = static_cast<int>(std::ceil(var_raw / var_perm));
        return std::max(n, 1);
    }
    if (raw_samples.size() < 2)
        throw ConfigError("n_value simulated mode needs raw samples");
    rng::Sequence seq(rng::mix({seed, rng::kStreamBootstrap}));
    const int hard_cap = 1'000'000;
    for (int n = 1; n <= hard_cap; ++n) {
        std::vector<double> means(bootstrap_reps);
        for (int b = 0; b < bootstrap_reps; ++b) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k)
                sum += raw_samples[seq.next_below(raw_samples.size())];
            means[b] = sum / n;
        }
        if (sample_variance(means) <= var_perm) return n;
    }
    throw NumericError("n_value simulated mode did not terminate");
}

}  // namespace rctperm
