#pragma once

#include <cstdint>
#include <vector>

#include "rctperm/rctperm.hpp"

namespace testutil {

inline rctperm::AgentSpec agent(int id, const rctperm::TransitionModel& m,
                                std::uint8_t s0 = 1, double type = 0.0) {
    rctperm::AgentSpec a;
    a.id = id;
    a.true_model = m;
    a.initial_state = s0;
    a.observable_features = {type, m.p_pass_01, m.p_pass_11, m.p_act_01,
                             m.p_act_11};
    return a;
}

inline rctperm::TrialConfig config(int arms, int per_arm, std::vector<int> budgets,
                                   int horizon,
                                   std::vector<rctperm::IndexPolicySpec> policies,
                                   std::uint64_t seed = 0) {
    rctperm::TrialConfig c;
    c.arms = arms;
    c.per_arm = per_arm;
    c.budgets = std::move(budgets);
    c.horizon = horizon;
    c.seed = seed;
    c.policies = std::move(policies);
    return c;
}

inline rctperm::Assignment assignment(std::vector<int> arm_of, int arms) {
    rctperm::Assignment a;
    a.arm_sizes.assign(arms, 0);
    for (int m : arm_of) ++a.arm_sizes[m];
    a.arm_of = std::move(arm_of);
    return a;
}

// Simulate the same roster/config under every possible assignment with the
// same seed: the counter-based transition streams are keyed by (seed, agent,
// t), so the records share one underlying randomness table.
inline std::vector<rctperm::TrialRecord> coupled_records(
    const std::vector<rctperm::AgentSpec>& roster,
    const rctperm::TrialConfig& cfg, std::uint64_t seed) {
    auto all = rctperm::enumerate_assignments(
        std::vector<int>(cfg.arms, cfg.per_arm));
    std::vector<rctperm::TrialRecord> out;
    out.reserve(all.size());
    for (const auto& c : all) out.push_back(rctperm::run_trial(roster, c, cfg, seed));
    return out;
}

inline const rctperm::TransitionModel kCoin{0.5, 0.5, 0.5, 0.5};
inline const rctperm::TransitionModel kTreatToRecover{0.0, 1.0, 1.0, 1.0};
inline const rctperm::TransitionModel kDecayUnlessTreated{0.0, 0.0, 0.0, 1.0};
inline const rctperm::TransitionModel kHalfUplift{0.0, 0.5, 0.5, 1.0};
inline const rctperm::TransitionModel kStayPut{0.0, 1.0, 0.0, 1.0};

}  // namespace testutil
