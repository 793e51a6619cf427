#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rctperm/model.hpp"
#include "rctperm/policy.hpp"
#include "rctperm/rng.hpp"
#include "rctperm/trial.hpp"

namespace rctperm {

inline constexpr int kEnumerationCap = 16;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultTrimLo = 0.01;
inline constexpr double kDefaultTrimHi = 0.99;

enum class CounterfactualKind { FullDagger, ThresholdRestricted };

struct CounterfactualSet {
    std::vector<Assignment> assignments;
    CounterfactualKind kind = CounterfactualKind::FullDagger;
};

// ---------------------------------------------------------------------------
// Replay: recompute every agent's action under a candidate membership using
// the stored index matrices (indices are agent-intrinsic, so they are valid
// under any membership as long as the replayed actions keep matching).
// ---------------------------------------------------------------------------

namespace detail {

inline void require_indices(const TrialRecord& record) {
    if (!record.has_indices())
        throw ValidationError(
            "record lacks index matrices; recompute them from the policy specs "
            "before running permutation estimators");
}

}  // namespace detail

// Returns true iff replaying every arm's policy under `candidate` membership
// reproduces every agent's original action at every timestep. If
// `thresholds_out` is non-null it receives tau[arm][t-1] = min index among
// treated agents (+inf when none), filled only up to the first mismatch.
inline bool replay_matches(const TrialRecord& record, const Assignment& candidate,
                           RealMatrix* thresholds_out = nullptr) {
    detail::require_indices(record);
    const int T = record.meta.horizon;
    const int M = record.meta.arms;
    if (thresholds_out)
        thresholds_out->assign(M, std::vector<double>(T, kInf));
    auto members = candidate.members_by_arm();
    for (int t = 1; t <= T; ++t) {
        for (int a = 0; a < M; ++a) {
            std::vector<std::pair<int, double>> scored;
            scored.reserve(members[a].size());
            for (int id : members[a])
                scored.emplace_back(id, record.indices[a][id][t - 1]);
            auto acts = allocate(scored, record.meta.budgets[a]);
            double tau = kInf;
            for (std::size_t k = 0; k < scored.size(); ++k) {
                if (acts[k] != record.actions[scored[k].first][t - 1]) return false;
                if (acts[k]) tau = std::min(tau, scored[k].second);
            }
            if (thresholds_out) (*thresholds_out)[a][t - 1] = tau;
        }
    }
    return true;
}

inline bool is_observable_counterfactual(const TrialRecord& record,
                                         const Assignment& candidate) {
    if (candidate.arm_sizes != record.assignment.arm_sizes)
        throw ValidationError("candidate arm sizes differ from the record's");
    return replay_matches(record, candidate);
}

// tau[arm][t-1] of the record's own assignment.
inline RealMatrix thresholds_of(const TrialRecord& record) {
    RealMatrix tau;
    if (!replay_matches(record, record.assignment, &tau))
        throw ValidationError(
            "record is not self-consistent: replaying its own assignment does "
            "not reproduce its actions");
    return tau;
}

// All ordered partitions of agents {0..n-1} into arms of the given sizes.
inline std::vector<Assignment> enumerate_assignments(
    const std::vector<int>& arm_sizes) {
    int n = 0;
    for (int s : arm_sizes) n += s;
    std::vector<Assignment> out;
    std::vector<int> arm_of(n, -1);
    // Fill arms left to right; within each arm pick an increasing id subset
    // from the still-unassigned pool.
    auto rec = [&](auto&& self, int arm) -> void {
        if (arm == static_cast<int>(arm_sizes.size())) {
            Assignment a;
            a.arm_of = arm_of;
            a.arm_sizes = arm_sizes;
            out.push_back(std::move(a));
            return;
        }
        std::vector<int> pool;
        for (int i = 0; i < n; ++i)
            if (arm_of[i] < 0) pool.push_back(i);
        const int need = arm_sizes[arm];
        std::vector<int> pick(need);
        auto choose = [&](auto&& inner, int from, int k) -> void {
            if (k == need) {
                for (int id : pick) arm_of[id] = arm;
                self(self, arm + 1);
                for (int id : pick) arm_of[id] = -1;
                return;
            }
            for (int j = from; j <= static_cast<int>(pool.size()) - (need - k); ++j) {
                pick[k] = pool[j];
                inner(inner, j + 1, k + 1);
            }
        };
        choose(choose, 0, 0);
    };
    rec(rec, 0);
    return out;
}

inline CounterfactualSet enumerate_counterfactuals(
    const TrialRecord& record,
    CounterfactualKind kind = CounterfactualKind::FullDagger,
    int cap = kEnumerationCap) {
    detail::require_indices(record);
    if (record.total_agents() > cap)
        throw UnsupportedError(
            "roster of " + std::to_string(record.total_agents()) +
            " agents exceeds the enumeration cap of " + std::to_string(cap) +
            "; use the index-threshold estimator instead");
    RealMatrix original_tau = thresholds_of(record);
    CounterfactualSet set;
    set.kind = kind;
    for (auto& c : enumerate_assignments(record.assignment.arm_sizes)) {
        RealMatrix tau;
        if (!replay_matches(record, c, &tau)) continue;
        if (kind == CounterfactualKind::ThresholdRestricted && tau != original_tau)
            continue;
        set.assignments.push_back(std::move(c));
    }
    return set;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

inline EstimateReport eval_raw(const TrialRecord& record) {
    std::vector<double> evals(record.meta.arms);
    for (int a = 0; a < record.meta.arms; ++a) evals[a] = eval_arm(record, a);
    return make_report("raw", std::move(evals));
}

// Eval(pi_m | c): the original rewards of the agents c places in arm m. No
// re-simulation — identical actions imply the recorded outcomes stand.
inline double eval_arm_under(const TrialRecord& record, const Assignment& c,
                             int arm) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.arm_of.size(); ++i)
        if (c.arm_of[i] == arm) sum += record.agent_reward(static_cast<int>(i));
    return sum;
}

inline EstimateReport eval_permuted_general(const TrialRecord& record,
                                            int cap = kEnumerationCap) {
    CounterfactualSet set =
        enumerate_counterfactuals(record, CounterfactualKind::FullDagger, cap);
    std::vector<double> evals(record.meta.arms, 0.0);
    for (const auto& c : set.assignments)
        for (int a = 0; a < record.meta.arms; ++a)
            evals[a] += eval_arm_under(record, c, a);
    for (double& v : evals) v /= static_cast<double>(set.assignments.size());
    EstimateReport r = make_report("permuted_general", std::move(evals));
    r.diag.counterfactual_count =
        static_cast<long long>(set.assignments.size());
    r.diag.thresholds = thresholds_of(record);
    return r;
}

// ---------------------------------------------------------------------------
// Index-threshold machinery (two-arm trials)
// ---------------------------------------------------------------------------

struct SwapStructure {
    std::vector<int> supergroup_of;          // phi(i)
    std::vector<std::uint8_t> lambda;        // swappability flag per agent
    RealMatrix thresholds;                   // tau[arm][t-1]
    std::vector<std::vector<int>> supergroups;  // members of each supergroup
    std::vector<std::vector<int>> groups;       // swappable members only
    std::vector<double> representative_rewards;  // mean reward over each group

    int supergroup_count() const { return static_cast<int>(supergroups.size()); }
    int lambda_one_count() const {
        int c = 0;
        for (auto v : lambda) c += v;
        return c;
    }
};

inline SwapStructure build_swap_structure(const TrialRecord& record) {
    if (record.meta.arms != 2)
        throw UnsupportedError(
            "the index-threshold estimator handles exactly two arms; got " +
            std::to_string(record.meta.arms));
    detail::require_indices(record);
    const int n = record.total_agents();
    const int T = record.meta.horizon;

    SwapStructure s;
    s.thresholds = thresholds_of(record);

    // Supergroups: one per distinct received-action row.
    s.supergroup_of.assign(n, -1);
    std::map<ActionRow, int> row_id;
    for (int i = 0; i < n; ++i) {
        auto [it, inserted] =
            row_id.try_emplace(record.actions[i], static_cast<int>(row_id.size()));
        if (inserted) s.supergroups.emplace_back();
        s.supergroup_of[i] = it->second;
        s.supergroups[it->second].push_back(i);
    }

    // Lambda: swappable iff at every timestep the agent sits strictly on one
    // side of both arms' thresholds (same side for both). Exact threshold
    // ties are kept in place.
    s.lambda.assign(n, 1);
    for (int i = 0; i < n; ++i) {
        for (int t = 0; t < T && s.lambda[i]; ++t) {
            int sign_product = 1;
            for (int a = 0; a < 2; ++a) {
                double idx = record.indices[a][i][t];
                double tau = s.thresholds[a][t];
                int sign = idx > tau ? 1 : (idx < tau ? -1 : 0);
                sign_product *= sign;
            }
            if (sign_product <= 0) s.lambda[i] = 0;
        }
    }

    s.groups.resize(s.supergroups.size());
    s.representative_rewards.assign(s.supergroups.size(), 0.0);
    for (std::size_t k = 0; k < s.supergroups.size(); ++k) {
        double sum = 0.0;
        for (int i : s.supergroups[k])
            if (s.lambda[i]) {
                s.groups[k].push_back(i);
                sum += record.agent_reward(i);
            }
        if (!s.groups[k].empty())
            s.representative_rewards[k] = sum / static_cast<double>(s.groups[k].size());
    }
    return s;
}

inline EstimateReport eval_permuted_indexed(const TrialRecord& record) {
    SwapStructure s = build_swap_structure(record);
    std::vector<double> evals(2, 0.0);
    for (int i = 0; i < record.total_agents(); ++i) {
        int arm = record.assignment.arm_of[i];
        evals[arm] += s.lambda[i] ? s.representative_rewards[s.supergroup_of[i]]
                                  : record.agent_reward(i);
    }
    EstimateReport r = make_report("permuted_indexed", std::move(evals));
    r.diag.thresholds = s.thresholds;
    r.diag.supergroup_count = s.supergroup_count();
    r.diag.lambda_one_count = s.lambda_one_count();
    for (const auto& g : s.groups)
        r.diag.group_sizes.push_back(static_cast<int>(g.size()));
    return r;
}

// ---------------------------------------------------------------------------
// IPW baseline (single-step trials)
// ---------------------------------------------------------------------------

struct PropensityResult {
    std::vector<double> p;  // p-hat(i, a(i) | policy), per agent
    double min_p = 1.0, max_p = 0.0;
};

namespace detail {

inline void require_single_step(const TrialRecord& record) {
    if (record.meta.horizon != 1)
        throw UnsupportedError("IPW requires T=1; sequential trials make "
                               "propensity scores inapplicable");
}

// Index of every agent at t=1 under one policy spec (states are the initial
// states; there is no prior action history).
inline std::vector<double> first_step_indices(const TrialRecord& record,
                                              const IndexPolicySpec& policy) {
    const int n = record.total_agents();
    const PolicyContext ctx{n, record.meta.per_arm};
    std::vector<double> idx(n);
    for (int i = 0; i < n; ++i) {
        std::uint8_t s0 = record.roster[i].initial_state;
        idx[i] = compute_index(policy, record.roster[i],
                               std::span<const std::uint8_t>(&s0, 1), {}, 1, ctx);
    }
    return idx;
}

// Single-step action agent `self` receives when grouped with `others` under
// the given indices and budget.
inline int single_step_action(const std::vector<double>& idx, int self,
                              const std::vector<int>& others, int budget) {
    std::vector<std::pair<int, double>> scored;
    scored.reserve(others.size() + 1);
    scored.emplace_back(self, idx[self]);
    for (int id : others) scored.emplace_back(id, idx[id]);
    return allocate(scored, budget)[0];
}

}  // namespace detail

// p-hat(i, a(i) | policy): over R resamples, draw N-1 uniform companions for
// agent i from the rest of the roster, run the policy's single-step
// allocation, and count how often i receives its observed action. Companion
// draws are keyed by (seed, i, r) only — identical policies see identical
// resample streams.
inline PropensityResult estimate_propensities(const TrialRecord& record,
                                              const IndexPolicySpec& policy,
                                              int budget, int n_resamples,
                                              std::uint64_t resample_seed,
                                              double trim_lo = kDefaultTrimLo,
                                              double trim_hi = kDefaultTrimHi) {
    detail::require_single_step(record);
    if (n_resamples < 1) throw ConfigError("propensity resample count must be >= 1");
    const int n = record.total_agents();
    const int companions = record.meta.per_arm - 1;
    auto idx = detail::first_step_indices(record, policy);

    PropensityResult out;
    out.p.resize(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> pool;
        pool.reserve(n - 1);
        for (int j = 0; j < n; ++j)
            if (j != i) pool.push_back(j);
        int hits = 0;
        for (int r = 0; r < n_resamples; ++r) {
            rng::Sequence seq(rng::mix({resample_seed, static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(r),
                                        rng::kStreamPropensity}));
            // Partial Fisher-Yates: the first `companions` entries become a
            // uniform subset of the other agents.
            for (int k = 0; k < companions; ++k) {
                std::uint64_t j =
                    k + seq.next_below(static_cast<std::uint64_t>(pool.size() - k));
                std::swap(pool[k], pool[j]);
            }
            std::vector<int> others(pool.begin(), pool.begin() + companions);
            int act = detail::single_step_action(idx, i, others, budget);
            hits += act == record.actions[i][0];
        }
        double p = static_cast<double>(hits) / n_resamples;
        p = std::clamp(p, trim_lo, trim_hi);
        out.p[i] = p;
        out.min_p = std::min(out.min_p, p);
        out.max_p = std::max(out.max_p, p);
    }
    return out;
}

// Exact propensities by full enumeration of the C(n-1, N-1) companion sets.
// No trimming — this is the oracle path.
inline PropensityResult exact_propensities(const TrialRecord& record,
                                           const IndexPolicySpec& policy,
                                           int budget) {
    detail::require_single_step(record);
    const int n = record.total_agents();
    const int companions = record.meta.per_arm - 1;
    auto idx = detail::first_step_indices(record, policy);

    PropensityResult out;
    out.p.resize(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> pool;
        for (int j = 0; j < n; ++j)
            if (j != i) pool.push_back(j);
        long long hits = 0, total = 0;
        std::vector<int> pick(companions);
        auto choose = [&](auto&& self, int from, int k) -> void {
            if (k == companions) {
                ++total;
                hits += detail::single_step_action(idx, i, pick, budget) ==
                        record.actions[i][0];
                return;
            }
            for (int j = from;
                 j <= static_cast<int>(pool.size()) - (companions - k); ++j) {
                pick[k] = pool[j];
                self(self, j + 1, k + 1);
            }
        };
        if (companions == 0) {
            total = 1;
            hits = detail::single_step_action(idx, i, {}, budget) ==
                   record.actions[i][0];
        } else {
            choose(choose, 0, 0);
        }
        double p = static_cast<double>(hits) / static_cast<double>(total);
        out.p[i] = p;
        out.min_p = std::min(out.min_p, p);
        out.max_p = std::max(out.max_p, p);
    }
    return out;
}

// The standard IPW estimate of each arm's policy value:
//   (1/M) sum_m sum_{i in C_m} [p(i,a(i)|pi) / p(i,a(i)|pi_m)] r_i
// `source_arm` = -1 pools all arms per the equation above; a non-negative
// value restricts the inner sum to that arm's members (without the 1/M),
// which is a diagnostic variant rather than the textbook form.
inline EstimateReport eval_ipw(const TrialRecord& record, int n_resamples,
                               std::uint64_t resample_seed,
                               double trim_lo = kDefaultTrimLo,
                               double trim_hi = kDefaultTrimHi,
                               int source_arm = -1) {
    detail::require_single_step(record);
    const int M = record.meta.arms;
    const int n = record.total_agents();
    if (source_arm >= M) throw ConfigError("source arm out of range");

    // Behavior propensities: each agent under its own arm's policy.
    std::vector<PropensityResult> by_policy(M);
    for (int m = 0; m < M; ++m)
        by_policy[m] = estimate_propensities(record, record.meta.policies[m],
                                             record.meta.budgets[m], n_resamples,
                                             resample_seed, trim_lo, trim_hi);

    EstimateReport r;
    r.kind = "ipw";
    r.eval_per_arm.assign(M, 0.0);
    r.diag.min_propensity = 1.0;
    r.diag.max_propensity = 0.0;
    r.diag.min_weight = kInf;
    r.diag.max_weight = -kInf;
    for (const auto& pr : by_policy) {
        r.diag.min_propensity = std::min(r.diag.min_propensity, pr.min_p);
        r.diag.max_propensity = std::max(r.diag.max_propensity, pr.max_p);
    }

    for (int target = 0; target < M; ++target) {
        const auto& p_target = by_policy[target].p;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            int m = record.assignment.arm_of[i];
            if (source_arm >= 0 && m != source_arm) continue;
            double w = p_target[i] / by_policy[m].p[i];
            r.diag.min_weight = std::min(r.diag.min_weight, w);
            r.diag.max_weight = std::max(r.diag.max_weight, w);
            total += w * record.agent_reward(i);
        }
        r.eval_per_arm[target] = source_arm >= 0 ? total : total / M;
    }
    if (M == 2) r.delta = r.eval_per_arm[1] - r.eval_per_arm[0];
    return r;
}

// Oracle variant: same equation with exact, untrimmed propensities.
inline EstimateReport eval_ipw_exact(const TrialRecord& record) {
    detail::require_single_step(record);
    const int M = record.meta.arms;
    const int n = record.total_agents();
    std::vector<PropensityResult> by_policy(M);
    for (int m = 0; m < M; ++m)
        by_policy[m] = exact_propensities(record, record.meta.policies[m],
                                          record.meta.budgets[m]);
    EstimateReport r;
    r.kind = "ipw_exact";
    r.eval_per_arm.assign(M, 0.0);
    for (int target = 0; target < M; ++target) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            int m = record.assignment.arm_of[i];
            if (by_policy[m].p[i] == 0.0)
                throw NumericError("zero behavior propensity for agent " +
                                   std::to_string(i));
            total += by_policy[target].p[i] / by_policy[m].p[i] *
                     record.agent_reward(i);
        }
        r.eval_per_arm[target] = total / M;
    }
    if (M == 2) r.delta = r.eval_per_arm[1] - r.eval_per_arm[0];
    return r;
}

}  // namespace rctperm
