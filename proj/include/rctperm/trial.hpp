#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rctperm/model.hpp"
#include "rctperm/policy.hpp"

namespace rctperm {

struct TrialMeta {
    int arms = 0;
    int per_arm = 0;
    std::vector<int> budgets;  // one per arm
    int horizon = 0;
    std::uint64_t seed = 0;
    std::vector<IndexPolicySpec> policies;  // one per arm

    void validate() const {
        if (arms < 1) throw ValidationError("meta: arms must be >= 1");
        if (per_arm < 1) throw ValidationError("meta: per_arm must be >= 1");
        if (horizon < 1) throw ValidationError("meta: horizon must be >= 1");
        if (static_cast<int>(budgets.size()) != arms)
            throw ValidationError("meta: need one budget per arm");
        if (static_cast<int>(policies.size()) != arms)
            throw ValidationError("meta: need one policy per arm");
        for (int b : budgets)
            if (b < 0 || b > per_arm)
                throw ValidationError("meta: budget " + std::to_string(b) +
                                      " outside [0, per_arm]");
        for (const auto& p : policies) p.validate();
    }

    bool operator==(const TrialMeta&) const = default;
};

// One realized trial: who was assigned where, what everyone did and
// experienced, and the full index matrices every arm's policy induces over
// the whole roster (needed to replay counterfactual memberships).
struct TrialRecord {
    TrialMeta meta;
    std::vector<AgentSpec> roster;
    Assignment assignment;
    ByteMatrix states;             // agents x (T+1)
    ByteMatrix actions;            // agents x T
    std::vector<RealMatrix> indices;  // per arm policy: agents x T

    int total_agents() const { return static_cast<int>(roster.size()); }

    bool has_indices() const { return !indices.empty(); }

    double agent_reward(int id) const { return reward(states[id]); }

    void validate() const {
        meta.validate();
        const int n = total_agents();
        const int T = meta.horizon;
        if (n != meta.arms * meta.per_arm)
            throw ValidationError("roster size " + std::to_string(n) +
                                  " != arms*per_arm");
        for (int i = 0; i < n; ++i)
            if (roster[i].id != i)
                throw ValidationError("roster ids must be contiguous from 0; slot " +
                                      std::to_string(i) + " holds id " +
                                      std::to_string(roster[i].id));
        if (static_cast<int>(assignment.arm_of.size()) != n ||
            assignment.arms() != meta.arms)
            throw ValidationError("assignment shape mismatch");
        for (int sz : assignment.arm_sizes)
            if (sz != meta.per_arm) throw ValidationError("arm size != per_arm");
        assignment.validate();

        auto check_matrix = [&](const ByteMatrix& m, int cols, const char* name) {
            if (static_cast<int>(m.size()) != n)
                throw ValidationError(std::string(name) + ": wrong row count");
            for (int i = 0; i < n; ++i) {
                if (static_cast<int>(m[i].size()) != cols)
                    throw ValidationError(std::string(name) + ": row " +
                                          std::to_string(i) + " has wrong length");
                for (int j = 0; j < cols; ++j)
                    if (m[i][j] > 1)
                        throw ValidationError(std::string(name) + ": non-binary entry at row " +
                                              std::to_string(i) + " col " + std::to_string(j));
            }
        };
        check_matrix(states, T + 1, "states");
        check_matrix(actions, T, "actions");

        for (int i = 0; i < n; ++i)
            if (states[i][0] != roster[i].initial_state)
                throw ValidationError("states column 0 disagrees with roster initial state at row " +
                                      std::to_string(i));

        // Budget: per arm, per timestep, exactly min(B, arm size) treatments.
        auto members = assignment.members_by_arm();
        for (int a = 0; a < meta.arms; ++a) {
            const int expected = std::min(meta.budgets[a],
                                          static_cast<int>(members[a].size()));
            for (int t = 0; t < T; ++t) {
                int spent = 0;
                for (int id : members[a]) spent += actions[id][t];
                if (spent > meta.budgets[a])
                    throw ValidationError("budget exceeded in arm " + std::to_string(a) +
                                          " at t=" + std::to_string(t + 1));
                if (spent != expected)
                    throw ValidationError("arm " + std::to_string(a) + " at t=" +
                                          std::to_string(t + 1) + " spent " +
                                          std::to_string(spent) + " of expected " +
                                          std::to_string(expected));
            }
        }

        if (has_indices()) {
            if (static_cast<int>(indices.size()) != meta.arms)
                throw ValidationError("indices: need one matrix per arm policy");
            for (int a = 0; a < meta.arms; ++a) {
                if (static_cast<int>(indices[a].size()) != n)
                    throw ValidationError("indices[" + std::to_string(a) +
                                          "]: wrong row count");
                for (int i = 0; i < n; ++i)
                    if (static_cast<int>(indices[a][i].size()) != T)
                        throw ValidationError("indices[" + std::to_string(a) + "] row " +
                                              std::to_string(i) + " has wrong length");
            }
        }
    }

    bool operator==(const TrialRecord&) const = default;
};

// Eval(pi_m): summed reward over the arm's members.
inline double eval_arm(const TrialRecord& record, int arm) {
    if (arm < 0 || arm >= record.meta.arms)
        throw std::out_of_range("eval_arm: arm " + std::to_string(arm) +
                                " out of range");
    double sum = 0.0;
    for (std::size_t i = 0; i < record.roster.size(); ++i)
        if (record.assignment.arm_of[i] == arm) sum += record.agent_reward(static_cast<int>(i));
    return sum;
}

}  // namespace rctperm
