#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rctperm {

// Error taxonomy. The CLI maps these onto exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using StateRow = std::vector<std::uint8_t>;   // length T+1, entries in {0,1}
using ActionRow = std::vector<std::uint8_t>;  // length T, entries in {0,1}
using ByteMatrix = std::vector<std::vector<std::uint8_t>>;
using RealMatrix = std::vector<std::vector<double>>;

// Two-state action-conditioned transition probabilities.
// p_X_s1 = Pr(next state 1 | current state s, action X).
struct TransitionModel {
    double p_pass_01 = 0.0;
    double p_pass_11 = 0.0;
    double p_act_01 = 0.0;
    double p_act_11 = 0.0;

    double prob_next_engaged(int state, int action) const {
        if (action) return state ? p_act_11 : p_act_01;
        return state ? p_pass_11 : p_pass_01;
    }

    void validate() const {
        for (double p : {p_pass_01, p_pass_11, p_act_01, p_act_11})
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError("transition probability outside [0,1]");
    }

    bool operator==(const TransitionModel&) const = default;
};

struct AgentSpec {
    int id = 0;
    // observable_features[0] is the type label for type-targeting policies;
    // features[1..4] hold the planner's transition estimate in the order
    // p_pass_01, p_pass_11, p_act_01, p_act_11.
    std::vector<double> observable_features;
    TransitionModel true_model;
    std::uint8_t initial_state = 1;

    // Planner estimate read back out of the feature vector.
    TransitionModel planner_estimate() const {
        if (observable_features.size() < 5)
            throw ValidationError("agent " + std::to_string(id) +
                                  ": feature vector too short for planner estimate");
        return TransitionModel{observable_features[1], observable_features[2],
                               observable_features[3], observable_features[4]};
    }

    double type_label() const {
        return observable_features.empty() ? 0.0 : observable_features[0];
    }

    bool operator==(const AgentSpec&) const = default;
};

// Partition of the roster into M experimental arms.
struct Assignment {
    std::vector<int> arm_of;     // agent id -> arm index
    std::vector<int> arm_sizes;  // per-arm member counts

    int arms() const { return static_cast<int>(arm_sizes.size()); }

    std::vector<std::vector<int>> members_by_arm() const {
        std::vector<std::vector<int>> out(arm_sizes.size());
        for (std::size_t a = 0; a < arm_sizes.size(); ++a)
            out[a].reserve(arm_sizes[a]);
        for (std::size_t i = 0; i < arm_of.size(); ++i)
            out[arm_of[i]].push_back(static_cast<int>(i));
        return out;
    }

    void validate() const {
        std::vector<int> counts(arm_sizes.size(), 0);
        for (std::size_t i = 0; i < arm_of.size(); ++i) {
            int a = arm_of[i];
            if (a < 0 || a >= arms())
                throw ValidationError("agent " + std::to_string(i) +
                                      ": arm index out of range");
            ++counts[a];
        }
        for (int a = 0; a < arms(); ++a)
            if (counts[a] != arm_sizes[a])
                throw ValidationError("arm " + std::to_string(a) +
                                      ": declared size " + std::to_string(arm_sizes[a]) +
                                      " but " + std::to_string(counts[a]) + " members");
    }

    bool operator==(const Assignment&) const = default;
};

// Total reward of one agent: time spent engaged after the first allocation.
// s_0 is excluded; it predates any action.
inline double reward(std::span<const std::uint8_t> states_row) {
    double sum = 0.0;
    for (std::size_t t = 1; t < states_row.size(); ++t) {
        if (states_row[t] > 1)
            throw ValidationError("state entry not in {0,1} at t=" + std::to_string(t));
        sum += states_row[t];
    }
    return sum;
}

// Estimator output: per-arm Eval values, the lift, and whatever the
// estimator can say about how it got there.
struct EstimateReport {
    std::string kind;
    std::vector<double> eval_per_arm;
    double delta = 0.0;

    struct Diagnostics {
        RealMatrix thresholds;              // arm x t, permutation estimators
        std::vector<int> group_sizes;       // |G_k|
        int supergroup_count = 0;
        int lambda_one_count = -1;
        long long counterfactual_count = -1;  // |C dagger| when enumerated
        double min_propensity = -1.0, max_propensity = -1.0;
        double min_weight = -1.0, max_weight = -1.0;
    } diag;
};

inline EstimateReport make_report(std::string kind, std::vector<double> evals) {
    EstimateReport r;
    r.kind = std::move(kind);
    r.eval_per_arm = std::move(evals);
    if (r.eval_per_arm.size() == 2)
        r.delta = r.eval_per_arm[1] - r.eval_per_arm[0];
    return r;
}

}  // namespace rctperm
