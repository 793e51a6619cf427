#pragma once

namespace rctperm::schemas {

// JSON Schema documents for the on-disk formats. Copies live under docs/.

inline constexpr const char* kConfigSchema = R"JSON({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "RunConfig",
  "type": "object",
  "additionalProperties": false,
  "required": ["cohort", "trial"],
  "properties": {
    "cohort": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kind"],
      "properties": {
        "kind": {"enum": ["synthetic_three_type", "random_monotone"]},
        "n1": {"type": "integer", "minimum": 0},
        "n2": {"type": "integer", "minimum": 0},
        "n3": {"type": "integer", "minimum": 0},
        "type1": {"$ref": "#/$defs/transition_model"},
        "type2": {"$ref": "#/$defs/transition_model"},
        "type3": {"$ref": "#/$defs/transition_model"},
        "total": {"type": "integer", "minimum": 0},
        "pass_01_lo": {"type": "number", "minimum": 0, "maximum": 1},
        "pass_01_hi": {"type": "number", "minimum": 0, "maximum": 1},
        "pass_11_lo": {"type": "number", "minimum": 0, "maximum": 1},
        "pass_11_hi": {"type": "number", "minimum": 0, "maximum": 1},
        "uplift_lo": {"type": "number", "minimum": 0, "maximum": 1},
        "uplift_hi": {"type": "number", "minimum": 0, "maximum": 1},
        "initial_state": {"enum": [0, 1]},
        "planner_noise": {"type": "number", "minimum": 0}
      }
    },
    "trial": {"$ref": "#/$defs/trial_meta"},
    "estimators": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["kind"],
        "properties": {
          "kind": {"enum": ["raw", "permuted_indexed", "permuted_general", "ipw"]},
          "enumeration_cap": {"type": "integer", "minimum": 1},
          "ipw_resamples": {"type": "integer", "minimum": 1},
          "ipw_seed": {"type": "integer", "minimum": 0},
          "trim_lo": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
          "trim_hi": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
        }
      }
    },
    "experiment": {
      "type": "object",
      "additionalProperties": false,
      "required": ["trials", "master_seed"],
      "properties": {
        "trials": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "redraw_cohort": {"type": "boolean"},
        "threads": {"type": "integer", "minimum": 1},
        "output_csv": {"type": "string"},
        "output_summary": {"type": "string"}
      }
    }
  },
  "$defs": {
    "transition_model": {
      "type": "object",
      "additionalProperties": false,
      "required": ["p_pass_01", "p_pass_11", "p_act_01", "p_act_11"],
      "properties": {
        "p_pass_01": {"type": "number", "minimum": 0, "maximum": 1},
        "p_pass_11": {"type": "number", "minimum": 0, "maximum": 1},
        "p_act_01": {"type": "number", "minimum": 0, "maximum": 1},
        "p_act_11": {"type": "number", "minimum": 0, "maximum": 1}
      }
    },
    "policy": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kind"],
      "properties": {
        "kind": {"enum": ["greedy", "whittle", "round_robin", "control", "type_target"]},
        "discount": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "target_type": {"type": "number"}
      }
    },
    "trial_meta": {
      "type": "object",
      "additionalProperties": false,
      "required": ["arms", "per_arm", "budgets", "horizon", "seed", "policies"],
      "properties": {
        "arms": {"type": "integer", "minimum": 1},
        "per_arm": {"type": "integer", "minimum": 1},
        "budgets": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "horizon": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "policies": {"type": "array", "items": {"$ref": "#/$defs/policy"}}
      }
    }
  }
})JSON";

inline constexpr const char* kTrialRecordSchema = R"JSON({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "TrialRecord",
  "type": "object",
  "additionalProperties": false,
  "required": ["meta", "roster", "assignment", "states", "actions"],
  "properties": {
    "meta": {"$ref": "rctperm.config.schema.json#/$defs/trial_meta"},
    "roster": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["id", "observable_features", "true_model", "initial_state"],
        "properties": {
          "id": {"type": "integer", "minimum": 0},
          "observable_features": {"type": "array", "items": {"type": "number"}},
          "true_model": {"$ref": "rctperm.config.schema.json#/$defs/transition_model"},
          "initial_state": {"enum": [0, 1]}
        }
      }
    },
    "assignment": {
      "type": "object",
      "additionalProperties": false,
      "required": ["arm_of", "arm_sizes"],
      "properties": {
        "arm_of": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "arm_sizes": {"type": "array", "items": {"type": "integer", "minimum": 0}}
      }
    },
    "states": {
      "type": "array",
      "items": {"type": "array", "items": {"enum": [0, 1]}},
      "description": "agents x (T+1); column 0 is the initial state"
    },
    "actions": {
      "type": "array",
      "items": {"type": "array", "items": {"enum": [0, 1]}},
      "description": "agents x T"
    },
    "indices": {
      "type": "object",
      "description": "map arm index -> (agents x T) real matrix; optional if recomputable from the policy specs",
      "additionalProperties": {
        "type": "array",
        "items": {"type": "array", "items": {"type": "number"}}
      }
    }
  }
})JSON";

inline constexpr const char* kEstimateReportSchema = R"JSON({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "EstimateReport",
  "type": "object",
  "additionalProperties": false,
  "required": ["kind", "eval_per_arm", "delta", "diagnostics"],
  "properties": {
    "kind": {"enum": ["raw", "permuted_general", "permuted_indexed", "ipw", "ipw_exact"]},
    "eval_per_arm": {"type": "array", "items": {"type": "number"}},
    "delta": {"type": "number"},
    "diagnostics": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "thresholds": {
          "type": "array",
          "items": {"type": "array",
                    "items": {"anyOf": [{"type": "number"},
                                          {"enum": ["inf", "-inf"]}]}},
          "description": "arm x T index thresholds; 'inf' when no agent was treated"
        },
        "group_sizes": {"type": "array", "items": {"type": "integer"}},
        "supergroup_count": {"type": "integer"},
        "lambda_one_count": {"type": "integer"},
        "counterfactual_count": {"type": "integer"},
        "min_propensity": {"type": "number"},
        "max_propensity": {"type": "number"},
        "min_weight": {"anyOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]},
        "max_weight": {"anyOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]}
      }
    }
  }
})JSON";

}  // namespace rctperm::schemas
