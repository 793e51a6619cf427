#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rctperm/model.hpp"
#include "rctperm/policy.hpp"
#include "rctperm/rng.hpp"
#include "rctperm/trial.hpp"

namespace rctperm {

enum class CohortKind { SyntheticThreeType, RandomMonotone };

inline std::string to_string(CohortKind k) {
    switch (k) {
        case CohortKind::SyntheticThreeType: return "synthetic_three_type";
        case CohortKind::RandomMonotone: return "random_monotone";
    }
    throw ConfigError("unknown cohort kind");
}

inline CohortKind cohort_kind_from_string(const std::string& s) {
    if (s == "synthetic_three_type") return CohortKind::SyntheticThreeType;
    if (s == "random_monotone") return CohortKind::RandomMonotone;
    throw ConfigError("unknown cohort kind '" + s + "'");
}

struct CohortConfig {
    CohortKind kind = CohortKind::SyntheticThreeType;

    // SyntheticThreeType: counts per type and the three transition matrices.
    int n1 = 0, n2 = 0, n3 = 0;
    TransitionModel type1{0.05, 0.95, 0.10, 0.99};  // non-recoverable
    TransitionModel type2{0.85, 0.60, 0.90, 0.95};  // self-healing
    TransitionModel type3{0.50, 0.50, 0.50, 0.50};  // indifferent

    // RandomMonotone: acting never hurts; passive rows drawn uniformly and
    // active rows add a clamped uplift.
    int total = 0;
    double pass_01_lo = 0.05, pass_01_hi = 0.5;
    double pass_11_lo = 0.4, pass_11_hi = 0.95;
    double uplift_lo = 0.05, uplift_hi = 0.3;

    std::uint8_t initial_state = 1;
    // Width of a uniform perturbation applied to the planner's estimate;
    // zero means the planner knows the true dynamics.
    double planner_noise = 0.0;

    void validate() const {
        if (n1 < 0 || n2 < 0 || n3 < 0 || total < 0)
            throw ConfigError("cohort counts must be non-negative");
        for (const auto* m : {&type1, &type2, &type3}) m->validate();
        for (double p : {pass_01_lo, pass_01_hi, pass_11_lo, pass_11_hi,
                         uplift_lo, uplift_hi})
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError("cohort sampling range outside [0,1]");
        if (pass_01_lo > pass_01_hi || pass_11_lo > pass_11_hi ||
            uplift_lo > uplift_hi)
            throw ConfigError("cohort sampling range inverted");
        if (initial_state > 1) throw ConfigError("initial state must be 0 or 1");
        if (planner_noise < 0.0) throw ConfigError("planner noise must be >= 0");
        int size = kind == CohortKind::SyntheticThreeType ? n1 + n2 + n3 : total;
        if (size == 0) throw ConfigError("cohort is empty");
    }
};

using TrialConfig = TrialMeta;

namespace detail {

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

inline std::vector<double> agent_features(double type_label,
                                          const TransitionModel& estimate) {
    return {type_label, estimate.p_pass_01, estimate.p_pass_11,
            estimate.p_act_01, estimate.p_act_11};
}

inline TransitionModel perturb(const TransitionModel& m, double noise,
                               rng::Sequence& seq) {
    if (noise == 0.0) return m;
    auto jitter = [&](double p) { return clamp01(p + seq.next_in(-noise, noise)); };
    return TransitionModel{jitter(m.p_pass_01), jitter(m.p_pass_11),
                           jitter(m.p_act_01), jitter(m.p_act_11)};
}

}  // namespace detail

inline std::vector<AgentSpec> generate_cohort(const CohortConfig& config,
                                              std::uint64_t seed) {
    config.validate();
    rng::Sequence seq(rng::mix({seed, rng::kStreamCohort}));
    std::vector<AgentSpec> roster;

    auto push = [&](double type_label, const TransitionModel& truth) {
        AgentSpec a;
        a.id = static_cast<int>(roster.size());
        a.true_model = truth;
        a.initial_state = config.initial_state;
        TransitionModel est = detail::perturb(truth, config.planner_noise, seq);
        a.observable_features = detail::agent_features(type_label, est);
        roster.push_back(std::move(a));
    };

    if (config.kind == CohortKind::SyntheticThreeType) {
        for (int i = 0; i < config.n1; ++i) push(1.0, config.type1);
        for (int i = 0; i < config.n2; ++i) push(2.0, config.type2);
        for (int i = 0; i < config.n3; ++i) push(3.0, config.type3);
    } else {
        for (int i = 0; i < config.total; ++i) {
            TransitionModel m;
            m.p_pass_01 = seq.next_in(config.pass_01_lo, config.pass_01_hi);
            m.p_pass_11 = seq.next_in(config.pass_11_lo, config.pass_11_hi);
            m.p_act_01 = detail::clamp01(
                m.p_pass_01 + seq.next_in(config.uplift_lo, config.uplift_hi));
            m.p_act_11 = detail::clamp01(
                m.p_pass_11 + seq.next_in(config.uplift_lo, config.uplift_hi));
            push(0.0, m);
        }
    }
    return roster;
}

// Uniform partition of the roster into M ordered arms of size N:
// Fisher-Yates shuffle of the ids, then split into consecutive blocks.
inline Assignment sample_assignment(const std::vector<AgentSpec>& roster, int arms,
                                    int per_arm, std::uint64_t seed) {
    const int n = static_cast<int>(roster.size());
    if (arms < 1 || per_arm < 1 || n != arms * per_arm)
        throw ConfigError("sample_assignment: roster size " + std::to_string(n) +
                          " != arms*per_arm = " + std::to_string(arms * per_arm));
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = roster[i].id;
    rng::Sequence seq(rng::mix({seed, rng::kStreamAssignment}));
    for (int i = n - 1; i > 0; --i)
        std::swap(ids[i], ids[seq.next_below(static_cast<std::uint64_t>(i) + 1)]);
    Assignment a;
    a.arm_of.assign(n, -1);
    a.arm_sizes.assign(arms, per_arm);
    for (int k = 0; k < n; ++k) a.arm_of[ids[k]] = k / per_arm;
    return a;
}

namespace detail {

// Whittle indices are expensive and depend only on (planner estimate, state),
// so memoize per agent and state for one trial replay.
class WhittleCache {
  public:
    explicit WhittleCache(int agents)
        : value_(agents, std::array<double, 2>{kUnset, kUnset}) {}

    double get(const IndexPolicySpec& spec, const AgentSpec& agent, int state) {
        double& slot = value_[agent.id][state];
        if (std::isnan(slot))
            slot = whittle_index(agent.planner_estimate(), state, spec.discount,
                                 spec.tolerance);
        return slot;
    }

  private:
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::array<double, 2>> value_;
};

}  // namespace detail

// Fill indices[arm][agent][t-1] for timestep t (1-based) from each agent's own
// observed history. Every arm's policy is evaluated over the WHOLE roster:
// replaying a counterfactual membership later needs the index any policy
// would have given any agent.
inline void fill_indices_at(const std::vector<AgentSpec>& roster,
                            const TrialMeta& meta, const ByteMatrix& states,
                            const ByteMatrix& actions, int t,
                            std::vector<RealMatrix>& indices,
                            std::vector<detail::WhittleCache>& caches) {
    const int n = static_cast<int>(roster.size());
    const PolicyContext ctx{n, meta.per_arm};
    for (int a = 0; a < meta.arms; ++a) {
        const IndexPolicySpec& spec = meta.policies[a];
        for (int i = 0; i < n; ++i) {
            std::span<const std::uint8_t> sh(states[i].data(), t);
            std::span<const std::uint8_t> ah(actions[i].data(), t - 1);
            double v;
            try {
                v = spec.kind == PolicyKind::Whittle
                        ? caches[a].get(spec, roster[i], sh.back())
                        : compute_index(spec, roster[i], sh, ah, t, ctx);
            } catch (const std::exception& e) {
                throw NumericError("index failure for agent " + std::to_string(i) +
                                   " at t=" + std::to_string(t) + " under arm " +
                                   std::to_string(a) + " policy: " + e.what());
            }
            indices[a][i][t - 1] = v;
        }
    }
}

inline TrialRecord run_trial(const std::vector<AgentSpec>& roster,
                             const Assignment& assignment,
                             const TrialConfig& config, std::uint64_t seed) {
    config.validate();
    const int n = static_cast<int>(roster.size());
    const int T = config.horizon;
    if (n != config.arms * config.per_arm)
        throw ConfigError("run_trial: roster size does not match arms*per_arm");
    assignment.validate();

    TrialRecord rec;
    rec.meta = config;
    rec.meta.seed = seed;
    rec.roster = roster;
    rec.assignment = assignment;
    rec.states.assign(n, StateRow(T + 1, 0));
    rec.actions.assign(n, ActionRow(T, 0));
    rec.indices.assign(config.arms, RealMatrix(n, std::vector<double>(T, 0.0)));
    for (int i = 0; i < n; ++i) rec.states[i][0] = roster[i].initial_state;

    auto members = assignment.members_by_arm();
    std::vector<detail::WhittleCache> caches(config.arms, detail::WhittleCache(n));

    for (int t = 1; t <= T; ++t) {
        fill_indices_at(roster, rec.meta, rec.states, rec.actions, t, rec.indices,
                        caches);
        for (int a = 0; a < config.arms; ++a) {
            std::vector<std::pair<int, double>> scored;
            scored.reserve(members[a].size());
            for (int id : members[a])
                scored.emplace_back(id, rec.indices[a][id][t - 1]);
            auto acts = allocate(scored, config.budgets[a]);
            for (std::size_t k = 0; k < scored.size(); ++k)
                rec.actions[scored[k].first][t - 1] = acts[k];
        }
        for (int i = 0; i < n; ++i) {
            double p = roster[i].true_model.prob_next_engaged(
                rec.states[i][t - 1], rec.actions[i][t - 1]);
            double u = rng::counter_uniform(seed, static_cast<std::uint64_t>(i),
                                            static_cast<std::uint64_t>(t),
                                            rng::kStreamTransition);
            rec.states[i][t] = u < p ? 1 : 0;
        }
    }
    rec.validate();
    return rec;
}

// Rebuild the per-policy index matrices of a record whose trajectories are
// already known (e.g. externally authored data without indices).
inline std::vector<RealMatrix> recompute_indices(const TrialRecord& record) {
    const int n = record.total_agents();
    const int T = record.meta.horizon;
    std::vector<RealMatrix> out(record.meta.arms,
                                RealMatrix(n, std::vector<double>(T, 0.0)));
    std::vector<detail::WhittleCache> caches(record.meta.arms,
                                             detail::WhittleCache(n));
    for (int t = 1; t <= T; ++t)
        fill_indices_at(record.roster, record.meta, record.states, record.actions,
                        t, out, caches);
    return out;
}

}  // namespace rctperm
