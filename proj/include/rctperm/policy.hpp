#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rctperm/model.hpp"
#include "rctperm/rng.hpp"

namespace rctperm {

enum class PolicyKind { Greedy, Whittle, RoundRobin, Control, TypeTarget };

inline std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::Whittle: return "whittle";
        case PolicyKind::RoundRobin: return "round_robin";
        case PolicyKind::Control: return "control";
        case PolicyKind::TypeTarget: return "type_target";
    }
    throw ConfigError("unknown policy kind");
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "greedy") return PolicyKind::Greedy;
    if (s == "whittle") return PolicyKind::Whittle;
    if (s == "round_robin") return PolicyKind::RoundRobin;
    if (s == "control") return PolicyKind::Control;
    if (s == "type_target") return PolicyKind::TypeTarget;
    throw ConfigError("unknown policy kind '" + s + "'");
}

struct IndexPolicySpec {
    PolicyKind kind = PolicyKind::Control;
    double discount = 0.95;     // Whittle
    double tolerance = 1e-6;    // Whittle subsidy bisection
    double target_type = 0.0;   // TypeTarget

    void validate() const {
        if (!(discount > 0.0 && discount < 1.0))
            throw ConfigError("policy discount must lie in (0,1)");
        if (!(tolerance > 0.0)) throw ConfigError("policy tolerance must be positive");
    }

    bool operator==(const IndexPolicySpec&) const = default;
};

// Roster-level facts an index may depend on besides the agent itself.
struct PolicyContext {
    int roster_size = 0;
    int arm_size = 0;
};

namespace detail {

// Value iteration for the two-state single-agent MDP with a passivity
// subsidy. Returns Q(state, active) - Q(state, passive) at the fixed point.
inline double subsidized_action_gap(const TransitionModel& m, int state,
                                    double subsidy, double beta,
                                    double vi_tol = 1e-9, int vi_cap = 100000) {
    double v[2] = {0.0, 0.0};
    for (int it = 0; it < vi_cap; ++it) {
        double nv[2];
        double change = 0.0;
        for (int s = 0; s < 2; ++s) {
            double q_pass = s + subsidy +
                            beta * (m.prob_next_engaged(s, 0) * v[1] +
                                    (1.0 - m.prob_next_engaged(s, 0)) * v[0]);
            double q_act = s + beta * (m.prob_next_engaged(s, 1) * v[1] +
                                       (1.0 - m.prob_next_engaged(s, 1)) * v[0]);
            nv[s] = std::max(q_pass, q_act);
            change = std::max(change, std::abs(nv[s] - v[s]));
        }
        v[0] = nv[0];
        v[1] = nv[1];
        if (change < vi_tol) break;
    }
    double q_pass = state + subsidy +
                    beta * (m.prob_next_engaged(state, 0) * v[1] +
                            (1.0 - m.prob_next_engaged(state, 0)) * v[0]);
    double q_act = state + beta * (m.prob_next_engaged(state, 1) * v[1] +
                                   (1.0 - m.prob_next_engaged(state, 1)) * v[0]);
    return q_act - q_pass;
}

}  // namespace detail

// Whittle index: the passive-action subsidy at which active and passive are
// equally attractive in `state`, found by bisection. The gap is monotone
// decreasing in the subsidy for these two-state chains.
inline double whittle_index(const TransitionModel& estimate, int state, double beta,
                            double tol) {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("whittle discount outside (0,1)");
    if (!(tol > 0.0)) throw ConfigError("whittle tolerance must be positive");
    double lo = -2.0, hi = 2.0;
    double glo = detail::subsidized_action_gap(estimate, state, lo, beta);
    double ghi = detail::subsidized_action_gap(estimate, state, hi, beta);
    if (glo < 0.0) return lo;  // passive dominates even when taxed
    if (ghi > 0.0) return hi;  // active dominates even under maximal subsidy
    int cap = 100000;
    while (hi - lo > tol) {
        if (--cap < 0)
            throw NumericError("whittle bisection failed to converge: state=" +
                               std::to_string(state) + " interval [" +
                               std::to_string(lo) + "," + std::to_string(hi) + "]");
        double mid = 0.5 * (lo + hi);
        if (detail::subsidized_action_gap(estimate, state, mid, beta) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Round-robin cast as an index policy: fixed base priority from the id
// ordering, pushed down by the arm size for every past treatment.
inline double round_robin_index(const AgentSpec& agent,
                                std::span<const std::uint8_t> own_action_history,
                                int /*t*/, int arm_size) {
    double base = arm_size - 1.0 - agent.id;
    long treats = std::accumulate(own_action_history.begin(),
                                  own_action_history.end(), 0L);
    return base - static_cast<double>(arm_size) * treats;
}

// The per-agent index. Reads nothing but the agent's own spec and history,
// which is what makes swapped assignments replayable.
inline double compute_index(const IndexPolicySpec& spec, const AgentSpec& agent,
                            std::span<const std::uint8_t> own_state_history,
                            std::span<const std::uint8_t> own_action_history,
                            int t, const PolicyContext& ctx) {
    if (own_state_history.size() != static_cast<std::size_t>(t) ||
        own_action_history.size() + 1 != static_cast<std::size_t>(t))
        throw ValidationError("history lengths inconsistent with timestep " +
                              std::to_string(t));
    switch (spec.kind) {
        case PolicyKind::Control:
            // Budget zero makes the value irrelevant; any finite
            // deterministic number keeps the ordering total.
            return rng::counter_uniform(0, static_cast<std::uint64_t>(agent.id),
                                        static_cast<std::uint64_t>(t),
                                        rng::kStreamControlIndex);
        case PolicyKind::Greedy: {
            int s = own_state_history.back();
            TransitionModel est = agent.planner_estimate();
            return est.prob_next_engaged(s, 1) - est.prob_next_engaged(s, 0);
        }
        case PolicyKind::Whittle:
            return whittle_index(agent.planner_estimate(), own_state_history.back(),
                                 spec.discount, spec.tolerance);
        case PolicyKind::RoundRobin:
            return round_robin_index(agent, own_action_history, t, ctx.arm_size);
        case PolicyKind::TypeTarget: {
            double hit = agent.type_label() == spec.target_type ? 1.0 : 0.0;
            return hit + 1e-9 * (ctx.roster_size - 1 - agent.id);
        }
    }
    throw ConfigError("unknown policy kind");
}

// Top-B allocation over one arm with deterministic tie-breaking
// (index descending, then agent id ascending). Returns the action bit per
// entry, in input order.
inline std::vector<std::uint8_t> allocate(
    const std::vector<std::pair<int, double>>& indices_at_t, int budget) {
    if (budget < 0) throw ConfigError("negative budget");
    const int n = static_cast<int>(indices_at_t.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (indices_at_t[a].second != indices_at_t[b].second)
            return indices_at_t[a].second > indices_at_t[b].second;
        return indices_at_t[a].first < indices_at_t[b].first;
    });
    std::vector<std::uint8_t> actions(n, 0);
    const int picks = std::min(budget, n);
    for (int k = 0; k < picks; ++k) actions[order[k]] = 1;
    return actions;
}

}  // namespace rctperm
