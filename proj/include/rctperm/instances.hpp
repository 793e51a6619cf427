#pragma once

#include <string>
#include <vector>

#include "rctperm/model.hpp"
#include "rctperm/policy.hpp"
#include "rctperm/sim.hpp"
#include "rctperm/trial.hpp"

namespace rctperm {

// Built-in tiny two-arm instances for the exhaustive theorem checks. All
// transition probabilities lie in {0, 0.5, 1} so each agent-timestep
// contributes at most two randomness cells and full enumeration stays cheap.
struct TinyInstance {
    std::string name;
    std::vector<AgentSpec> roster;
    TrialConfig config;
};

namespace detail {

inline AgentSpec tiny_agent(int id, const TransitionModel& m,
                            std::uint8_t s0 = 1, double type = 0.0) {
    AgentSpec a;
    a.id = id;
    a.true_model = m;
    a.initial_state = s0;
    a.observable_features = {type, m.p_pass_01, m.p_pass_11, m.p_act_01,
                             m.p_act_11};
    return a;
}

inline TrialConfig tiny_config(int per_arm, std::vector<int> budgets, int horizon,
                               std::vector<IndexPolicySpec> policies) {
    TrialConfig c;
    c.arms = 2;
    c.per_arm = per_arm;
    c.budgets = std::move(budgets);
    c.horizon = horizon;
    c.seed = 0;
    c.policies = std::move(policies);
    return c;
}

}  // namespace detail

inline std::vector<TinyInstance> tiny_instances() {
    using detail::tiny_agent;
    using detail::tiny_config;
    // Transition archetypes (all probabilities in {0, 0.5, 1}).
    const TransitionModel kTreatToRecover{0.0, 1.0, 1.0, 1.0};
    const TransitionModel kDecayUnlessTreated{0.0, 0.0, 0.0, 1.0};
    const TransitionModel kCoin{0.5, 0.5, 0.5, 0.5};
    const TransitionModel kHalfUplift{0.0, 0.5, 0.5, 1.0};
    const TransitionModel kFragile{0.5, 0.0, 1.0, 0.5};

    IndexPolicySpec control{PolicyKind::Control};
    IndexPolicySpec greedy{PolicyKind::Greedy};
    IndexPolicySpec whittle{PolicyKind::Whittle, 0.9, 1e-6};
    IndexPolicySpec round_robin{PolicyKind::RoundRobin};

    std::vector<TinyInstance> out;

    // 1. Pure control: every assignment is an observable counterfactual, so
    // contraction is maximal; rewards still differ across assignments.
    out.push_back({"control_vs_control",
                   {tiny_agent(0, kCoin), tiny_agent(1, kHalfUplift),
                    tiny_agent(2, kDecayUnlessTreated), tiny_agent(3, kCoin, 0)},
                   tiny_config(2, {0, 0}, 2, {control, control})});

    // 2. Greedy treatment arm vs control, mixed deterministic/stochastic.
    out.push_back({"greedy_vs_control",
                   {tiny_agent(0, kTreatToRecover, 0),
                    tiny_agent(1, kDecayUnlessTreated), tiny_agent(2, kCoin),
                    tiny_agent(3, kHalfUplift)},
                   tiny_config(2, {1, 0}, 2, {greedy, control})});

    // 3. Fully deterministic models: one trajectory per assignment.
    out.push_back({"greedy_vs_greedy_deterministic",
                   {tiny_agent(0, kTreatToRecover, 0),
                    tiny_agent(1, kDecayUnlessTreated),
                    tiny_agent(2, kTreatToRecover, 1),
                    tiny_agent(3, kDecayUnlessTreated, 0),
                    tiny_agent(4, kTreatToRecover, 0),
                    tiny_agent(5, kDecayUnlessTreated)},
                   tiny_config(3, {1, 1}, 2, {greedy, greedy})});

    // 4. Whittle vs greedy on stochastic dynamics.
    out.push_back({"whittle_vs_greedy",
                   {tiny_agent(0, kHalfUplift), tiny_agent(1, kFragile),
                    tiny_agent(2, kCoin), tiny_agent(3, kDecayUnlessTreated)},
                   tiny_config(2, {1, 1}, 2, {whittle, greedy})});

    // 5. Round robin vs greedy, three agents per arm.
    out.push_back({"round_robin_vs_greedy",
                   {tiny_agent(0, kFragile), tiny_agent(1, kTreatToRecover, 0),
                    tiny_agent(2, kCoin), tiny_agent(3, kDecayUnlessTreated),
                    tiny_agent(4, kHalfUplift, 0),
                    tiny_agent(5, kTreatToRecover)},
                   tiny_config(3, {1, 1}, 2, {round_robin, greedy})});

    // 6. Single-step whittle vs control with a saturated treatment budget.
    out.push_back({"saturated_whittle_vs_control",
                   {tiny_agent(0, kCoin), tiny_agent(1, kHalfUplift),
                    tiny_agent(2, kFragile, 0), tiny_agent(3, kCoin)},
                   tiny_config(2, {2, 0}, 1, {whittle, control})});

    return out;
}

}  // namespace rctperm
