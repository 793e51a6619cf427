#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace rctperm;

TEST_CASE("three-type cohort emits the fixed matrices") {
    CohortConfig cfg;
    cfg.kind = CohortKind::SyntheticThreeType;
    cfg.n1 = 1;
    cfg.n2 = 1;
    cfg.n3 = 0;
    auto roster = generate_cohort(cfg, 5);
    REQUIRE(roster.size() == 2);
    CHECK(roster[0].true_model ==
          TransitionModel{0.05, 0.95, 0.10, 0.99});
    CHECK(roster[1].true_model ==
          TransitionModel{0.85, 0.60, 0.90, 0.95});
    CHECK(roster[0].type_label() == 1.0);
    CHECK(roster[1].type_label() == 2.0);
    // Planner estimate defaults to the true model.
    CHECK(roster[0].planner_estimate() == roster[0].true_model);
}

TEST_CASE("indifferent type is the all-half matrix") {
    CohortConfig cfg;
    cfg.n3 = 1;
    auto roster = generate_cohort(cfg, 5);
    CHECK(roster[0].true_model == TransitionModel{0.5, 0.5, 0.5, 0.5});
}

TEST_CASE("cohort generation is deterministic per seed") {
    CohortConfig cfg;
    cfg.kind = CohortKind::RandomMonotone;
    cfg.total = 20;
    auto a = generate_cohort(cfg, 123);
    auto b = generate_cohort(cfg, 123);
    auto c = generate_cohort(cfg, 124);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("empty cohort is rejected") {
    CohortConfig cfg;
    CHECK_THROWS_AS(generate_cohort(cfg, 1), ConfigError);
}

TEST_CASE("random monotone cohorts respect ranges and monotonicity") {
    CohortConfig cfg;
    cfg.kind = CohortKind::RandomMonotone;
    cfg.total = 200;
    auto roster = generate_cohort(cfg, 9);
    for (const auto& a : roster) {
        const auto& m = a.true_model;
        CHECK((m.p_pass_01 >= 0.05 && m.p_pass_01 <= 0.5));
        CHECK((m.p_pass_11 >= 0.4 && m.p_pass_11 <= 0.95));
        CHECK(m.p_act_01 >= m.p_pass_01);
        CHECK(m.p_act_11 >= m.p_pass_11);
        CHECK((m.p_act_01 <= 1.0 && m.p_act_11 <= 1.0));
    }
}

TEST_CASE("single-arm assignment puts everyone in arm 0") {
    CohortConfig cfg;
    cfg.n3 = 4;
    auto roster = generate_cohort(cfg, 2);
    auto a = sample_assignment(roster, 1, 4, 3);
    CHECK(a.arm_of == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("assignments are uniform over the partition space") {
    CohortConfig cfg;
    cfg.n3 = 2;
    auto roster = generate_cohort(cfg, 1);
    int first_in_arm0 = 0;
    for (int seed = 0; seed < 10000; ++seed)
        first_in_arm0 += sample_assignment(roster, 2, 1, seed).arm_of[0] == 0;
    CHECK(first_in_arm0 >= 4700);
    CHECK(first_in_arm0 <= 5300);
}

TEST_CASE("assignment sampling is deterministic and validates sizes") {
    CohortConfig cfg;
    cfg.n3 = 6;
    auto roster = generate_cohort(cfg, 1);
    CHECK(sample_assignment(roster, 2, 3, 42) == sample_assignment(roster, 2, 3, 42));
    CHECK_THROWS_AS(sample_assignment(roster, 2, 4, 42), ConfigError);
}

TEST_CASE("control arms never act") {
    std::vector<AgentSpec> roster;
    for (int i = 0; i < 6; ++i) roster.push_back(testutil::agent(i, testutil::kCoin));
    auto cfg = testutil::config(2, 3, {1, 0}, 4,
                                {IndexPolicySpec{PolicyKind::Greedy},
                                 IndexPolicySpec{PolicyKind::Control}});
    auto assignment = sample_assignment(roster, 2, 3, 8);
    auto rec = run_trial(roster, assignment, cfg, 8);
    for (int i = 0; i < 6; ++i)
        if (assignment.arm_of[i] == 1)
            for (int t = 0; t < 4; ++t) CHECK(rec.actions[i][t] == 0);
}

TEST_CASE("deterministic models follow the hand-computed orbit") {
    // p_pass_11 = 1, start engaged, never treated: stays engaged forever.
    std::vector<AgentSpec> roster = {testutil::agent(0, testutil::kStayPut),
                                     testutil::agent(1, testutil::kStayPut)};
    auto cfg = testutil::config(1, 2, {0}, 5,
                                {IndexPolicySpec{PolicyKind::Control}});
    auto rec = run_trial(roster, testutil::assignment({0, 0}, 1), cfg, 77);
    CHECK(rec.states[0] == StateRow{1, 1, 1, 1, 1, 1});
    // Decaying agent from s_0=1 without treatment: drops and stays down.
    std::vector<AgentSpec> r2 = {testutil::agent(0, testutil::kDecayUnlessTreated),
                                 testutil::agent(1, testutil::kDecayUnlessTreated)};
    auto rec2 = run_trial(r2, testutil::assignment({0, 0}, 1), cfg, 77);
    CHECK(rec2.states[0] == StateRow{1, 0, 0, 0, 0, 0});
}

TEST_CASE("transitions are keyed by agent and timestep, not membership") {
    // Same seed, different assignments, budget zero everywhere: every agent
    // receives the same actions, so trajectories must match exactly.
    std::vector<AgentSpec> roster;
    for (int i = 0; i < 4; ++i) roster.push_back(testutil::agent(i, testutil::kCoin));
    auto cfg = testutil::config(2, 2, {0, 0}, 6,
                                {IndexPolicySpec{PolicyKind::Control},
                                 IndexPolicySpec{PolicyKind::Control}});
    auto rec_a = run_trial(roster, testutil::assignment({0, 0, 1, 1}, 2), cfg, 13);
    auto rec_b = run_trial(roster, testutil::assignment({0, 1, 0, 1}, 2), cfg, 13);
    CHECK(rec_a.states == rec_b.states);
}

TEST_CASE("policy-obliviousness: same received actions, same trajectory") {
    // The treated agent's trajectory is identical whether its arm runs
    // greedy or whittle, as long as the realized actions coincide.
    std::vector<AgentSpec> roster = {testutil::agent(0, testutil::kHalfUplift),
                                     testutil::agent(1, testutil::kCoin)};
    auto cfg_g = testutil::config(1, 2, {2}, 6, {IndexPolicySpec{PolicyKind::Greedy}});
    auto cfg_w = testutil::config(1, 2, {2}, 6,
                                  {IndexPolicySpec{PolicyKind::Whittle, 0.9, 1e-6}});
    // Saturated budget: everyone treated under both policies.
    auto rec_g = run_trial(roster, testutil::assignment({0, 0}, 1), cfg_g, 21);
    auto rec_w = run_trial(roster, testutil::assignment({0, 0}, 1), cfg_w, 21);
    CHECK(rec_g.actions == rec_w.actions);
    CHECK(rec_g.states == rec_w.states);
}

TEST_CASE("run_trial is fully deterministic") {
    CohortConfig ccfg;
    ccfg.kind = CohortKind::RandomMonotone;
    ccfg.total = 10;
    auto roster = generate_cohort(ccfg, 31);
    auto cfg = testutil::config(2, 5, {2, 2}, 5,
                                {IndexPolicySpec{PolicyKind::Whittle, 0.95, 1e-6},
                                 IndexPolicySpec{PolicyKind::Greedy}});
    auto assignment = sample_assignment(roster, 2, 5, 31);
    auto a = run_trial(roster, assignment, cfg, 31);
    auto b = run_trial(roster, assignment, cfg, 31);
    CHECK(a == b);
}

TEST_CASE("exactly min(B, N) treatments per arm per timestep") {
    std::vector<AgentSpec> roster;
    for (int i = 0; i < 6; ++i)
        roster.push_back(testutil::agent(i, testutil::kHalfUplift));
    auto cfg = testutil::config(2, 3, {2, 3}, 4,
                                {IndexPolicySpec{PolicyKind::Greedy},
                                 IndexPolicySpec{PolicyKind::RoundRobin}});
    // Budget 3 == arm size: every member is treated each timestep.
    auto assignment = sample_assignment(roster, 2, 3, 5);
    auto rec = run_trial(roster, assignment, cfg, 5);
    auto members = assignment.members_by_arm();
    for (int t = 0; t < 4; ++t) {
        int spent0 = 0, spent1 = 0;
        for (int id : members[0]) spent0 += rec.actions[id][t];
        for (int id : members[1]) spent1 += rec.actions[id][t];
        CHECK(spent0 == 2);
        CHECK(spent1 == 3);
    }
}

TEST_CASE("recompute_indices reproduces the stored matrices") {
    CohortConfig ccfg;
    ccfg.kind = CohortKind::RandomMonotone;
    ccfg.total = 8;
    auto roster = generate_cohort(ccfg, 4);
    auto cfg = testutil::config(2, 4, {1, 1}, 3,
                                {IndexPolicySpec{PolicyKind::Greedy},
                                 IndexPolicySpec{PolicyKind::RoundRobin}});
    auto rec = run_trial(roster, sample_assignment(roster, 2, 4, 4), cfg, 4);
    CHECK(recompute_indices(rec) == rec.indices);
}
