use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Bindings, EngineError, Fact};
use crate::value::Value;

/// One rule firing that derived a new fact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub rule_id: String,
    pub kc_id: String,
    pub bindings: Bindings,
    pub derived: Fact,
}

/// Ordered firings of a run to fixpoint: the expert solution path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub firings: Vec<Firing>,
}

/// A value some rule derived for a step slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedValue<'a> {
    pub value: &'a Value,
    pub rule_id: &'a str,
    pub kc_id: &'a str,
    pub bindings: &'a Bindings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub correct: bool,
    /// Knowledge component of the rule whose value matched; `None` when wrong.
    pub matched_kc: Option<String>,
}

impl Trace {
    pub fn is_empty(&self) -> bool {
        self.firings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.firings.len()
    }

    /// Every value derived for `slot`, in firing order. Several values mean
    /// several solution strategies.
    pub fn expected_values(&self, slot: &str) -> Result<Vec<ExpectedValue<'_>>, EngineError> {
        let out: Vec<ExpectedValue<'_>> = self
            .firings
            .iter()
            .filter(|f| f.derived.slot == slot)
            .map(|f| ExpectedValue {
                value: &f.derived.value,
                rule_id: &f.rule_id,
                kc_id: &f.kc_id,
                bindings: &f.bindings,
            })
            .collect();
        if out.is_empty() {
            return Err(EngineError::UnknownSlot(slot.to_string()));
        }
        Ok(out)
    }

    /// Strategy to hint from: the lexicographically first `(rule id,
    /// binding signature)` among firings for `slot`.
    pub fn preferred(&self, slot: &str) -> Result<ExpectedValue<'_>, EngineError> {
        let values = self.expected_values(slot)?;
        Ok(values
            .into_iter()
            .min_by_key(|v| (v.rule_id.to_string(), super::binding_signature(v.bindings)))
            .expect("non-empty"))
    }

    /// Compare a student's input with every expected value for `slot`.
    pub fn check_input(&self, slot: &str, input: &Value) -> Result<CheckResult, EngineError> {
        let values = self.expected_values(slot)?;
        Ok(match values.iter().find(|v| v.value.equivalent(input)) {
            Some(v) => CheckResult {
                correct: true,
                matched_kc: Some(v.kc_id.to_string()),
            },
            None => CheckResult {
                correct: false,
                matched_kc: None,
            },
        })
    }

    pub fn derived_facts(&self) -> BTreeSet<Fact> {
        self.firings.iter().map(|f| f.derived.clone()).collect()
    }
}
