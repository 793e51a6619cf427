#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rctperm/estimators.hpp"
#include "rctperm/experiment.hpp"
#include "rctperm/model.hpp"
#include "rctperm/sim.hpp"
#include "rctperm/trial.hpp"

namespace rctperm {

using json = nlohmann::json;

namespace detail {

inline int levenshtein(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] != b[j - 1])});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string nearest_key(const std::string& key,
                               const std::vector<std::string>& candidates) {
    std::string best;
    int best_d = std::numeric_limits<int>::max();
    for (const auto& c : candidates) {
        int d = levenshtein(key, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace detail

// Strict object reader: every documented key is registered by access; any
// leftover key is rejected with a nearest-key suggestion.
class StrictReader {
  public:
    StrictReader(const json& j, std::string path)
        : j_(&j), path_(std::move(path)) {
        if (!j.is_object())
            throw ConfigError(path_ + ": expected a JSON object");
    }

    bool has(const std::string& key) {
        note(key);
        return j_->contains(key);
    }

    const json& at(const std::string& key) {
        note(key);
        auto it = j_->find(key);
        if (it == j_->end())
            throw ConfigError(path_ + ": missing required key '" + key + "'");
        return *it;
    }

    template <typename T>
    T get(const std::string& key) {
        return convert<T>(at(key), key);
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        note(key);
        auto it = j_->find(key);
        if (it == j_->end()) return fallback;
        return convert<T>(*it, key);
    }

    std::string child_path(const std::string& key) const {
        return path_ + "." + key;
    }

    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (std::find(known_.begin(), known_.end(), it.key()) != known_.end())
                continue;
            std::string msg = path_ + ": unknown key '" + it.key() + "'";
            std::string hint = detail::nearest_key(it.key(), known_);
            if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
            throw ConfigError(msg);
        }
    }

  private:
    void note(const std::string& key) {
        if (std::find(known_.begin(), known_.end(), key) == known_.end())
            known_.push_back(key);
    }

    template <typename T>
    T convert(const json& v, const std::string& key) {
        try {
            return v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(path_ + "." + key + ": wrong type (" + e.what() +
                              ")");
        }
    }

    const json* j_;
    std::string path_;
    std::vector<std::string> known_;
};

// ---------------------------------------------------------------------------
// Domain <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const TransitionModel& m) {
    return {{"p_pass_01", m.p_pass_01},
            {"p_pass_11", m.p_pass_11},
            {"p_act_01", m.p_act_01},
            {"p_act_11", m.p_act_11}};
}

inline TransitionModel transition_from_json(const json& j,
                                            const std::string& path) {
    StrictReader r(j, path);
    TransitionModel m;
    m.p_pass_01 = r.get<double>("p_pass_01");
    m.p_pass_11 = r.get<double>("p_pass_11");
    m.p_act_01 = r.get<double>("p_act_01");
    m.p_act_11 = r.get<double>("p_act_11");
    r.finish();
    try {
        m.validate();
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return m;
}

inline json to_json(const IndexPolicySpec& p) {
    return {{"kind", to_string(p.kind)},
            {"discount", p.discount},
            {"tolerance", p.tolerance},
            {"target_type", p.target_type}};
}

inline IndexPolicySpec policy_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    IndexPolicySpec p;
    p.kind = policy_kind_from_string(r.get<std::string>("kind"));
    p.discount = r.get_or<double>("discount", p.discount);
    p.tolerance = r.get_or<double>("tolerance", p.tolerance);
    p.target_type = r.get_or<double>("target_type", p.target_type);
    r.finish();
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return p;
}

inline json to_json(const TrialMeta& m) {
    json policies = json::array();
    for (const auto& p : m.policies) policies.push_back(to_json(p));
    return {{"arms", m.arms},       {"per_arm", m.per_arm},
            {"budgets", m.budgets}, {"horizon", m.horizon},
            {"seed", m.seed},       {"policies", policies}};
}

inline TrialMeta meta_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    TrialMeta m;
    m.arms = r.get<int>("arms");
    m.per_arm = r.get<int>("per_arm");
    m.budgets = r.get<std::vector<int>>("budgets");
    m.horizon = r.get<int>("horizon");
    m.seed = r.get<std::uint64_t>("seed");
    const json& pol = r.at("policies");
    if (!pol.is_array()) throw ConfigError(path + ".policies: expected an array");
    for (std::size_t k = 0; k < pol.size(); ++k)
        m.policies.push_back(
            policy_from_json(pol[k], path + ".policies[" + std::to_string(k) + "]"));
    r.finish();
    try {
        m.validate();
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return m;
}

inline json to_json(const AgentSpec& a) {
    return {{"id", a.id},
            {"observable_features", a.observable_features},
            {"true_model", to_json(a.true_model)},
            {"initial_state", a.initial_state}};
}

inline AgentSpec agent_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    AgentSpec a;
    a.id = r.get<int>("id");
    a.observable_features = r.get<std::vector<double>>("observable_features");
    a.true_model = transition_from_json(r.at("true_model"), path + ".true_model");
    int s0 = r.get<int>("initial_state");
    if (s0 != 0 && s0 != 1)
        throw ValidationError(path + ".initial_state: must be 0 or 1");
    a.initial_state = static_cast<std::uint8_t>(s0);
    r.finish();
    return a;
}

inline json to_json(const Assignment& a) {
    return {{"arm_of", a.arm_of}, {"arm_sizes", a.arm_sizes}};
}

inline Assignment assignment_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    Assignment a;
    a.arm_of = r.get<std::vector<int>>("arm_of");
    a.arm_sizes = r.get<std::vector<int>>("arm_sizes");
    r.finish();
    try {
        a.validate();
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return a;
}

inline ByteMatrix binary_matrix_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + ": expected an array of rows");
    ByteMatrix m;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& row = j[i];
        if (!row.is_array())
            throw ValidationError(path + "[" + std::to_string(i) +
                                  "]: expected an array");
        std::vector<std::uint8_t> out;
        for (std::size_t k = 0; k < row.size(); ++k) {
            const json& v = row[k];
            if (!v.is_number_integer() ||
                (v.get<long long>() != 0 && v.get<long long>() != 1))
                throw ValidationError(path + "[" + std::to_string(i) + "][" +
                                      std::to_string(k) + "]: entry must be 0 or 1");
            out.push_back(static_cast<std::uint8_t>(v.get<long long>()));
        }
        m.push_back(std::move(out));
    }
    return m;
}

inline json to_json(const TrialRecord& rec) {
    json roster = json::array();
    for (const auto& a : rec.roster) roster.push_back(to_json(a));
    json indices = json::object();
    for (std::size_t a = 0; a < rec.indices.size(); ++a)
        indices[std::to_string(a)] = rec.indices[a];
    json out = {{"meta", to_json(rec.meta)},
                {"roster", roster},
                {"assignment", to_json(rec.assignment)},
                {"states", rec.states},
                {"actions", rec.actions}};
    if (rec.has_indices()) out["indices"] = indices;
    return out;
}

inline TrialRecord record_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    TrialRecord rec;
    rec.meta = meta_from_json(r.at("meta"), path + ".meta");
    const json& roster = r.at("roster");
    if (!roster.is_array()) throw ValidationError(path + ".roster: expected array");
    for (std::size_t k = 0; k < roster.size(); ++k)
        rec.roster.push_back(
            agent_from_json(roster[k], path + ".roster[" + std::to_string(k) + "]"));
    rec.assignment = assignment_from_json(r.at("assignment"), path + ".assignment");
    rec.states = binary_matrix_from_json(r.at("states"), path + ".states");
    rec.actions = binary_matrix_from_json(r.at("actions"), path + ".actions");
    if (r.has("indices")) {
        const json& idx = r.at("indices");
        if (!idx.is_object())
            throw ValidationError(path + ".indices: expected a map arm -> matrix");
        rec.indices.resize(rec.meta.arms);
        for (auto it = idx.begin(); it != idx.end(); ++it) {
            int arm;
            try {
                arm = std::stoi(it.key());
            } catch (...) {
                throw ValidationError(path + ".indices: key '" + it.key() +
                                      "' is not an arm index");
            }
            if (arm < 0 || arm >= rec.meta.arms)
                throw ValidationError(path + ".indices: arm " + it.key() +
                                      " out of range");
            try {
                rec.indices[arm] = it.value().get<RealMatrix>();
            } catch (const json::exception& e) {
                throw ValidationError(path + ".indices." + it.key() +
                                      ": wrong shape (" + std::string(e.what()) + ")");
            }
        }
    }
    r.finish();
    try {
        rec.validate();
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return rec;
}

inline json to_json(const EstimateReport& rep) {
    auto real_or_tag = [](double v) -> json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    json thresholds = json::array();
    for (const auto& row : rep.diag.thresholds) {
        json jr = json::array();
        for (double v : row) jr.push_back(real_or_tag(v));
        thresholds.push_back(std::move(jr));
    }
    json diag = {{"thresholds", thresholds},
                 {"group_sizes", rep.diag.group_sizes},
                 {"supergroup_count", rep.diag.supergroup_count},
                 {"lambda_one_count", rep.diag.lambda_one_count},
                 {"counterfactual_count", rep.diag.counterfactual_count}};
    if (rep.diag.min_propensity >= 0.0) {
        diag["min_propensity"] = rep.diag.min_propensity;
        diag["max_propensity"] = rep.diag.max_propensity;
        diag["min_weight"] = real_or_tag(rep.diag.min_weight);
        diag["max_weight"] = real_or_tag(rep.diag.max_weight);
    }
    return {{"kind", rep.kind},
            {"eval_per_arm", rep.eval_per_arm},
            {"delta", rep.delta},
            {"diagnostics", diag}};
}

// ---------------------------------------------------------------------------
// Cohort / experiment configuration
// ---------------------------------------------------------------------------

inline json to_json(const CohortConfig& c) {
    json out = {{"kind", to_string(c.kind)},
                {"initial_state", c.initial_state},
                {"planner_noise", c.planner_noise}};
    if (c.kind == CohortKind::SyntheticThreeType) {
        out["n1"] = c.n1;
        out["n2"] = c.n2;
        out["n3"] = c.n3;
        out["type1"] = to_json(c.type1);
        out["type2"] = to_json(c.type2);
        out["type3"] = to_json(c.type3);
    } else {
        out["total"] = c.total;
        out["pass_01_lo"] = c.pass_01_lo;
        out["pass_01_hi"] = c.pass_01_hi;
        out["pass_11_lo"] = c.pass_11_lo;
        out["pass_11_hi"] = c.pass_11_hi;
        out["uplift_lo"] = c.uplift_lo;
        out["uplift_hi"] = c.uplift_hi;
    }
    return out;
}

inline CohortConfig cohort_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    CohortConfig c;
    c.kind = cohort_kind_from_string(r.get<std::string>("kind"));
    c.initial_state =
        static_cast<std::uint8_t>(r.get_or<int>("initial_state", c.initial_state));
    c.planner_noise = r.get_or<double>("planner_noise", c.planner_noise);
    if (c.kind == CohortKind::SyntheticThreeType) {
        c.n1 = r.get<int>("n1");
        c.n2 = r.get<int>("n2");
        c.n3 = r.get<int>("n3");
        if (r.has("type1"))
            c.type1 = transition_from_json(r.at("type1"), path + ".type1");
        if (r.has("type2"))
            c.type2 = transition_from_json(r.at("type2"), path + ".type2");
        if (r.has("type3"))
            c.type3 = transition_from_json(r.at("type3"), path + ".type3");
    } else {
        c.total = r.get<int>("total");
        c.pass_01_lo = r.get_or<double>("pass_01_lo", c.pass_01_lo);
        c.pass_01_hi = r.get_or<double>("pass_01_hi", c.pass_01_hi);
        c.pass_11_lo = r.get_or<double>("pass_11_lo", c.pass_11_lo);
        c.pass_11_hi = r.get_or<double>("pass_11_hi", c.pass_11_hi);
        c.uplift_lo = r.get_or<double>("uplift_lo", c.uplift_lo);
        c.uplift_hi = r.get_or<double>("uplift_hi", c.uplift_hi);
    }
    r.finish();
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return c;
}

inline json to_json(const EstimatorSpec& e) {
    return {{"kind", to_string(e.kind)},
            {"enumeration_cap", e.enumeration_cap},
            {"ipw_resamples", e.ipw_resamples},
            {"ipw_seed", e.ipw_seed},
            {"trim_lo", e.trim_lo},
            {"trim_hi", e.trim_hi}};
}

inline EstimatorSpec estimator_from_json(const json& j, const std::string& path) {
    StrictReader r(j, path);
    EstimatorSpec e;
    e.kind = estimator_kind_from_string(r.get<std::string>("kind"));
    e.enumeration_cap = r.get_or<int>("enumeration_cap", e.enumeration_cap);
    e.ipw_resamples = r.get_or<int>("ipw_resamples", e.ipw_resamples);
    e.ipw_seed = r.get_or<std::uint64_t>("ipw_seed", e.ipw_seed);
    e.trim_lo = r.get_or<double>("trim_lo", e.trim_lo);
    e.trim_hi = r.get_or<double>("trim_hi", e.trim_hi);
    r.finish();
    try {
        e.validate();
    } catch (const std::exception& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
    return e;
}

struct RunConfig {
    CohortConfig cohort;
    TrialConfig trial;
    std::vector<EstimatorSpec> estimators;
    struct Experiment {
        bool present = false;
        int trials = 0;
        std::uint64_t master_seed = 0;
        bool redraw_cohort = true;
        int threads = 1;
        std::string output_csv, output_summary;
    } experiment;

    int cohort_size() const {
        return cohort.kind == CohortKind::SyntheticThreeType
                   ? cohort.n1 + cohort.n2 + cohort.n3
                   : cohort.total;
    }

    void validate() const {
        cohort.validate();
        trial.validate();
        if (cohort_size() != trial.arms * trial.per_arm)
            throw ConfigError("cohort size " + std::to_string(cohort_size()) +
                              " does not equal trial.arms * trial.per_arm = " +
                              std::to_string(trial.arms * trial.per_arm));
        for (const auto& e : estimators) e.validate();
    }

    ExperimentConfig to_experiment_config() const {
        if (!experiment.present)
            throw ConfigError("config has no 'experiment' section");
        ExperimentConfig ec;
        ec.cohort = cohort;
        ec.trial = trial;
        ec.estimators = estimators;
        ec.trials = experiment.trials;
        ec.master_seed = experiment.master_seed;
        ec.redraw_cohort = experiment.redraw_cohort;
        ec.threads = experiment.threads;
        return ec;
    }
};

inline json to_json(const RunConfig& c) {
    json estimators = json::array();
    for (const auto& e : c.estimators) estimators.push_back(to_json(e));
    json out = {{"cohort", to_json(c.cohort)},
                {"trial", to_json(c.trial)},
                {"estimators", estimators}};
    if (c.experiment.present)
        out["experiment"] = {{"trials", c.experiment.trials},
                             {"master_seed", c.experiment.master_seed},
                             {"redraw_cohort", c.experiment.redraw_cohort},
                             {"threads", c.experiment.threads},
                             {"output_csv", c.experiment.output_csv},
                             {"output_summary", c.experiment.output_summary}};
    return out;
}

inline RunConfig config_from_json(const json& j) {
    StrictReader r(j, "config");
    RunConfig c;
    c.cohort = cohort_from_json(r.at("cohort"), "config.cohort");
    c.trial = meta_from_json(r.at("trial"), "config.trial");
    if (r.has("estimators")) {
        const json& ests = r.at("estimators");
        if (!ests.is_array())
            throw ConfigError("config.estimators: expected an array");
        for (std::size_t k = 0; k < ests.size(); ++k)
            c.estimators.push_back(estimator_from_json(
                ests[k], "config.estimators[" + std::to_string(k) + "]"));
    }
    if (r.has("experiment")) {
        StrictReader e(r.at("experiment"), "config.experiment");
        c.experiment.present = true;
        c.experiment.trials = e.get<int>("trials");
        c.experiment.master_seed = e.get<std::uint64_t>("master_seed");
        c.experiment.redraw_cohort =
            e.get_or<bool>("redraw_cohort", c.experiment.redraw_cohort);
        c.experiment.threads = e.get_or<int>("threads", c.experiment.threads);
        c.experiment.output_csv = e.get_or<std::string>("output_csv", "");
        c.experiment.output_summary = e.get_or<std::string>("output_summary", "");
    }
    r.finish();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": malformed JSON (" + e.what() + ")");
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open file for writing: " + path);
    out << text;
    if (!out) throw ConfigError("failed writing file: " + path);
}

inline RunConfig parse_config(const std::string& path) {
    return config_from_json(read_json_file(path));
}

inline TrialRecord load_trial_record(const std::string& path) {
    return record_from_json(read_json_file(path), "record");
}

inline void save_trial_record(const TrialRecord& rec, const std::string& path) {
    write_text_file(path, to_json(rec).dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Experiment table output
// ---------------------------------------------------------------------------

inline std::string format_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string experiment_csv(const ExperimentTable& table, int arms) {
    std::ostringstream os;
    os << "trial_index,trial_seed,estimator";
    for (int a = 0; a < arms; ++a) os << ",eval_arm_" << a;
    os << ",delta,error\n";
    for (const auto& row : table.rows) {
        os << row.trial_index << ',' << row.trial_seed << ',' << row.estimator;
        for (int a = 0; a < arms; ++a) {
            os << ',';
            if (a < static_cast<int>(row.eval_per_arm.size()))
                os << format_real(row.eval_per_arm[a]);
        }
        os << ',';
        if (row.error.empty()) os << format_real(row.delta);
        std::string err = row.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        os << ',' << err << '\n';
    }
    return os.str();
}

inline json summary_to_json(const ExperimentTable& table) {
    json out = json::array();
    for (const auto& s : table.summary) {
        json row = {{"estimator", s.estimator},
                    {"count", s.count},
                    {"mean_delta", s.mean_delta},
                    {"var_delta", s.var_delta}};
        if (s.variance_ratio >= 0.0) {
            row["variance_ratio"] = s.variance_ratio;
            row["n_value_analytic"] = s.n_value_analytic;
        }
        out.push_back(std::move(row));
    }
    return {{"estimators", out}};
}

}  // namespace rctperm
