#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace rctperm;

TEST_CASE("deterministic instance collapses to the assignment average") {
    // One agent per arm; arm 0 treats (keeps its agent engaged), arm 1 lets
    // it decay. Whoever lands in arm 0 scores 1, the other scores 0.
    std::vector<AgentSpec> roster = {
        testutil::agent(0, testutil::kDecayUnlessTreated),
        testutil::agent(1, testutil::kDecayUnlessTreated)};
    auto cfg = testutil::config(2, 1, {1, 0}, 1,
                                {IndexPolicySpec{PolicyKind::Greedy},
                                 IndexPolicySpec{PolicyKind::Control}});
    auto e = exact_expectation(roster, cfg);
    CHECK(e.table_count == 1);
    CHECK(e.assignment_count == 2);
    CHECK(e.weight_total == Catch::Approx(1.0).margin(1e-14));
    CHECK(e.eval_star[0] == Catch::Approx(1.0).margin(1e-14));
    CHECK(e.eval_star[1] == Catch::Approx(0.0).margin(1e-14));
    CHECK(e.var_eval[0] == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("coin agents give mean one-half and variance one-quarter") {
    std::vector<AgentSpec> roster = {testutil::agent(0, testutil::kCoin),
                                     testutil::agent(1, testutil::kCoin)};
    auto cfg = testutil::config(2, 1, {0, 0}, 1,
                                {IndexPolicySpec{PolicyKind::Control},
                                 IndexPolicySpec{PolicyKind::Control}});
    auto e = exact_expectation(roster, cfg);
    CHECK(e.table_count == 4);
    for (int a = 0; a < 2; ++a) {
        CHECK(e.eval_star[a] == Catch::Approx(0.5).margin(1e-14));
        CHECK(e.var_eval[a] == Catch::Approx(0.25).margin(1e-14));
    }
}

TEST_CASE("exhaustive expectation enforces its size caps") {
    std::vector<AgentSpec> roster;
    for (int i = 0; i < 8; ++i)
        roster.push_back(testutil::agent(i, testutil::kCoin));
    auto cfg = testutil::config(2, 4, {0, 0}, 1,
                                {IndexPolicySpec{PolicyKind::Control},
                                 IndexPolicySpec{PolicyKind::Control}});
    CHECK_THROWS_AS(exact_expectation(roster, cfg), UnsupportedError);
}

TEST_CASE("built-in instances satisfy unbiasedness and the variance identity") {
    for (const auto& inst : tiny_instances()) {
        INFO(inst.name);
        auto e = exact_expectation(inst.roster, inst.config);
        CHECK(e.weight_total == Catch::Approx(1.0).margin(1e-12));
        CHECK(e.cells_cover);
        CHECK(e.max_general_gap <= 1e-10);
        auto ub = verify_unbiasedness(e);
        CHECK(ub.pass);
        auto vi = verify_variance_identity(e);
        CHECK(vi.pass);
    }
}

TEST_CASE("idle arms with random rewards contract variance strictly") {
    std::vector<AgentSpec> roster;
    for (int i = 0; i < 4; ++i)
        roster.push_back(testutil::agent(i, testutil::kCoin));
    auto cfg = testutil::config(2, 2, {0, 0}, 2,
                                {IndexPolicySpec{PolicyKind::Control},
                                 IndexPolicySpec{PolicyKind::Control}});
    auto e = exact_expectation(roster, cfg);
    for (int a = 0; a < 2; ++a) {
        CHECK(e.contraction_rhs[a] > 0.0);
        CHECK(e.var_dagger[a] < e.var_eval[a]);
        CHECK(e.var_dagger_idx[a] < e.var_eval[a]);
    }
}

TEST_CASE("sample_variance matches hand computations") {
    CHECK(sample_variance({3, 3, 3}) == 0.0);
    CHECK(sample_variance({0, 2}) == Catch::Approx(2.0).margin(1e-15));
    CHECK(sample_variance({1, 2, 3, 4}) == Catch::Approx(5.0 / 3.0).margin(1e-15));
    CHECK_THROWS_AS(sample_variance({1.0}), ValidationError);
}

TEST_CASE("analytic n-value is the rounded-up variance ratio") {
    CHECK(n_value(40.0, 10.0) == 4);
    CHECK(n_value(10.0, 10.0) == 1);
    CHECK(n_value(5.0, 10.0) == 1);
    CHECK(n_value(49.09, 4.94) == 10);
    CHECK(n_value(40.1, 10.0) == 5);
    CHECK_THROWS_AS(n_value(1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(n_value(1.0, -1.0), ConfigError);
}

TEST_CASE("simulated n-value agrees with analytic on an easy profile") {
    rng::Sequence seq(77);
    std::vector<double> raw(4000);
    for (double& v : raw) v = seq.next_unit() < 0.5 ? 0.0 : 10.0;
    double var_raw = sample_variance(raw);
    int analytic = n_value(var_raw, var_raw / 4.0);
    int simulated = n_value(var_raw, var_raw / 4.0, NValueMode::Simulated, raw, 3);
    CHECK(analytic == 4);
    CHECK(std::abs(simulated - analytic) <= 1);
    CHECK_THROWS_AS(n_value(1.0, 0.5, NValueMode::Simulated, {}), ConfigError);
}

namespace {

ExperimentConfig small_experiment(int threads) {
    ExperimentConfig ec;
    ec.cohort.kind = CohortKind::RandomMonotone;
    ec.cohort.total = 8;
    ec.trial = testutil::config(2, 4, {1, 1}, 3,
                                {IndexPolicySpec{PolicyKind::Greedy},
                                 IndexPolicySpec{PolicyKind::Whittle, 0.9, 1e-6}});
    ec.estimators = {EstimatorSpec{EstimatorKind::Raw},
                     EstimatorSpec{EstimatorKind::PermutedIndexed}};
    ec.trials = 6;
    ec.master_seed = 2024;
    ec.threads = threads;
    return ec;
}

}  // namespace

TEST_CASE("experiments emit one row per trial and estimator") {
    auto table = run_mc_experiment(small_experiment(1));
    REQUIRE(table.rows.size() == 12);
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& row = table.rows[k];
        CHECK(row.trial_index == static_cast<int>(k / 2));
        CHECK(row.estimator == (k % 2 == 0 ? "raw" : "permuted_indexed"));
        CHECK(row.error.empty());
    }
    REQUIRE(table.summary.size() == 2);
    CHECK(table.summary[0].count == 6);
    CHECK(table.summary[1].count == 6);
    CHECK(table.summary[1].variance_ratio >= 0.0);
}

TEST_CASE("experiment output is identical across reruns and thread counts") {
    auto base = experiment_csv(run_mc_experiment(small_experiment(1)), 2);
    CHECK(base == experiment_csv(run_mc_experiment(small_experiment(1)), 2));
    CHECK(base == experiment_csv(run_mc_experiment(small_experiment(3)), 2));
}

TEST_CASE("estimator failures are recorded per row, not thrown") {
    auto ec = small_experiment(1);
    // permuted_general over an 8-agent roster with cap 4 must fail per row.
    ec.estimators = {EstimatorSpec{EstimatorKind::Raw}};
    ec.estimators.push_back({});
    ec.estimators[1].kind = EstimatorKind::PermutedGeneral;
    ec.estimators[1].enumeration_cap = 4;
    auto table = run_mc_experiment(ec);
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        if (table.rows[k].estimator == "permuted_general")
            CHECK(!table.rows[k].error.empty());
        else
            CHECK(table.rows[k].error.empty());
    }
    CHECK(table.summary[1].count == 0);
}

TEST_CASE("partition expectation is exact for deterministic idle cohorts") {
    // All-stay-put agents, no budget: every membership replays and every
    // agent scores the full horizon, so each arm averages per_arm * T.
    std::vector<AgentSpec> roster;
    for (int i = 0; i < 6; ++i)
        roster.push_back(testutil::agent(i, testutil::kStayPut));
    auto cfg = testutil::config(2, 3, {0, 0}, 4,
                                {IndexPolicySpec{PolicyKind::Control},
                                 IndexPolicySpec{PolicyKind::Control}});
    auto rec = run_trial(roster, sample_assignment(roster, 2, 3, 1), cfg, 1);
    auto means = partition_expectation(rec, 25, 99);
    CHECK(means[0] == Catch::Approx(12.0).margin(1e-12));
    CHECK(means[1] == Catch::Approx(12.0).margin(1e-12));
    CHECK_THROWS_AS(partition_expectation(rec, 0, 99), ConfigError);
}
