//! Forward-chaining production system used as the expert model.
//!
//! A [`RuleSet`] is data: each [`ProductionRule`] names the knowledge
//! component it exercises, the working-memory slots it matches, an action
//! from the fixed [`ActionRegistry`] and three hint templates. The
//! [`RuleEngine`] matches rules incrementally with alpha and beta memories and
//! fires them to a fixpoint; the resulting [`Trace`] is the expert solution
//! and the reference every student step is checked against.

mod actions;
mod engine;
pub mod naive;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use actions::{ActionFn, ActionRegistry};
pub use engine::{RuleEngine, CYCLE_LIMIT};
pub use trace::{CheckResult, ExpectedValue, Firing, Trace};

use crate::value::Value;

/// Variable bindings of one match, keyed by variable name.
pub type Bindings = BTreeMap<String, Value>;

/// Stable textual form of a binding set; part of the conflict-resolution key.
pub fn binding_signature(bindings: &Bindings) -> String {
    bindings
        .iter()
        .map(|(k, v)| format!("{k}={}", v.to_plain()))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub slot: String,
    pub value: Value,
}

impl Fact {
    pub fn new(slot: impl Into<String>, value: Value) -> Self {
        Fact {
            slot: slot.into(),
            value,
        }
    }
}

/// Matches any fact in `slot` and binds its value to `bind`. A variable bound
/// by two conditions must receive equal values (the join test).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub slot: String,
    pub bind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    /// Name of a primitive in the [`ActionRegistry`].
    pub name: String,
    /// Bound variables passed to the primitive, in order.
    pub args: Vec<String>,
    /// Slot receiving the derived value.
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionRule {
    pub id: String,
    #[serde(rename = "kc")]
    pub kc_id: String,
    pub conditions: Vec<Condition>,
    pub action: ActionSpec,
    /// Encouragement, strategy explanation, bottom-out. Placeholders are
    /// `{var}` for bindings and `{value}` for the derived value.
    pub hints: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub id: String,
    pub rules: Vec<ProductionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("slot `{0}` already holds a fact")]
    DuplicateSlot(String),
    #[error("no derived values for slot `{0}`")]
    UnknownSlot(String),
    #[error("firing limit of {0} reached; the rule set probably loops")]
    CycleLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleSetError {
    #[error("rule set `{set}`: duplicate rule id `{rule}`")]
    DuplicateRule { set: String, rule: String },
    #[error("rule `{rule}`: unknown action `{action}`")]
    UnknownAction { rule: String, action: String },
    #[error("rule `{rule}`: argument `{var}` is not bound by any condition")]
    UnboundArgument { rule: String, var: String },
    #[error("rule `{rule}`: needs at least one condition")]
    NoConditions { rule: String },
    #[error("rule `{rule}`: empty knowledge component")]
    MissingKc { rule: String },
    #[error("invalid rule set json: {0}")]
    Json(String),
}

impl RuleSet {
    pub fn from_json(text: &str) -> Result<Self, RuleSetError> {
        serde_json::from_str(text).map_err(|e| RuleSetError::Json(e.to_string()))
    }

    /// Structural checks against the primitives available in `registry`.
    pub fn validate(&self, registry: &ActionRegistry) -> Result<(), RuleSetError> {
        let mut seen = BTreeSet::new();
        for rule in &self.rules {
            if !seen.insert(rule.id.as_str()) {
                return Err(RuleSetError::DuplicateRule {
                    set: self.id.clone(),
                    rule: rule.id.clone(),
                });
            }
            if rule.kc_id.trim().is_empty() {
                return Err(RuleSetError::MissingKc { rule: rule.id.clone() });
            }
            if rule.conditions.is_empty() {
                return Err(RuleSetError::NoConditions { rule: rule.id.clone() });
            }
            if registry.get(&rule.action.name).is_none() {
                return Err(RuleSetError::UnknownAction {
                    rule: rule.id.clone(),
                    action: rule.action.name.clone(),
                });
            }
            for arg in &rule.action.args {
                if !rule.conditions.iter().any(|c| &c.bind == arg) {
                    return Err(RuleSetError::UnboundArgument {
                        rule: rule.id.clone(),
                        var: arg.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn rule(&self, id: &str) -> Option<&ProductionRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn kc_ids(&self) -> BTreeSet<String> {
        self.rules.iter().map(|r| r.kc_id.clone()).collect()
    }
}

/// Extend `bindings` with `var = value`, failing on a conflicting binding.
pub(crate) fn bind(bindings: &Bindings, var: &str, value: &Value) -> Option<Bindings> {
    match bindings.get(var) {
        Some(existing) if existing != value => None,
        Some(_) => Some(bindings.clone()),
        None => {
            let mut b = bindings.clone();
            b.insert(var.to_string(), value.clone());
            Some(b)
        }
    }
}

/// Fire `rule` on `bindings`: look up the action and apply it to the bound
/// arguments. `None` means the primitive declined.
pub(crate) fn apply_action(
    rule: &ProductionRule,
    registry: &ActionRegistry,
    bindings: &Bindings,
) -> Option<Value> {
    let f = registry.get(&rule.action.name)?;
    let args: Option<Vec<Value>> = rule
        .action
        .args
        .iter()
        .map(|a| bindings.get(a).cloned())
        .collect();
    f(&args?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(id: &str) -> ProductionRule {
        ProductionRule {
            id: id.into(),
            kc_id: "kc".into(),
            conditions: vec![Condition {
                slot: "a".into(),
                bind: "x".into(),
            }],
            action: ActionSpec {
                name: "add".into(),
                args: vec!["x".into()],
                target: "b".into(),
            },
            hints: ["1".into(), "2".into(), "3".into()],
        }
    }

    #[test]
    fn validation_catches_authoring_mistakes() {
        let reg = ActionRegistry::builtin();
        let ok = RuleSet { id: "s".into(), rules: vec![rule("r")] };
        assert!(ok.validate(&reg).is_ok());

        let dup = RuleSet { id: "s".into(), rules: vec![rule("r"), rule("r")] };
        assert!(matches!(dup.validate(&reg), Err(RuleSetError::DuplicateRule { .. })));

        let mut r = rule("r");
        r.action.name = "nope".into();
        let bad = RuleSet { id: "s".into(), rules: vec![r] };
        assert!(matches!(bad.validate(&reg), Err(RuleSetError::UnknownAction { .. })));

        let mut r = rule("r");
        r.action.args = vec!["y".into()];
        let bad = RuleSet { id: "s".into(), rules: vec![r] };
        assert!(matches!(bad.validate(&reg), Err(RuleSetError::UnboundArgument { .. })));
    }

    #[test]
    fn rule_json_requires_three_hints() {
        let text = r#"{"id":"s","rules":[{"id":"r","kc":"k","conditions":[{"slot":"a","bind":"x"}],
            "action":{"name":"add","args":["x"],"target":"b"},"hints":["1","2"]}]}"#;
        assert!(RuleSet::from_json(text).is_err());
    }

    #[test]
    fn join_test_rejects_conflicting_bindings() {
        let b = bind(&Bindings::new(), "x", &Value::int(1)).unwrap();
        assert!(bind(&b, "x", &Value::int(2)).is_none());
        assert_eq!(bind(&b, "x", &Value::int(1)), Some(b.clone()));
    }
}
