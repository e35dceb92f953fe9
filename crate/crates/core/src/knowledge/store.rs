use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{bkt_update, BktParams, KcState, KnowledgeError, DEFAULT_MASTERY_THRESHOLD};
use crate::domains::Catalog;
use crate::transactions::{Action, Outcome, TransactionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MasteryConfig {
    pub defaults: BktParams,
    /// Per-component overrides of `defaults`.
    pub per_kc: BTreeMap<String, BktParams>,
    pub threshold: f64,
}

impl Default for MasteryConfig {
    fn default() -> Self {
        MasteryConfig {
            defaults: BktParams::default(),
            per_kc: BTreeMap::new(),
            threshold: DEFAULT_MASTERY_THRESHOLD,
        }
    }
}

impl MasteryConfig {
    pub fn params(&self, kc: &str) -> &BktParams {
        self.per_kc.get(kc).unwrap_or(&self.defaults)
    }

    pub fn validate(&self) -> Result<(), KnowledgeError> {
        self.defaults.validate()?;
        for p in self.per_kc.values() {
            p.validate()?;
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(KnowledgeError::OutOfRange("threshold"));
        }
        Ok(())
    }
}

/// A knowledge-tracing update caused by one record.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub kc_id: String,
    pub correct: bool,
    pub before: f64,
    pub after: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasteryEntry {
    pub kc_id: String,
    pub p_mastery: f64,
    pub mastered: bool,
    pub problem_types: Vec<String>,
}

/// Per-student mastery, rebuilt deterministically from the transaction log.
///
/// Only the first scored event per (problem instance, step) becomes a BKT
/// observation: the first attempt, or a bottom-out hint requested before any
/// attempt, which counts as incorrect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasteryStore {
    #[serde(skip)]
    config: MasteryConfig,
    #[serde(skip)]
    kcs: BTreeSet<String>,
    states: BTreeMap<String, BTreeMap<String, KcState>>,
    observed: BTreeMap<String, BTreeSet<(String, String)>>,
    completed: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    transactions: BTreeMap<String, u64>,
}

impl MasteryStore {
    pub fn new(config: MasteryConfig, kcs: BTreeSet<String>) -> Self {
        MasteryStore {
            config,
            kcs,
            states: BTreeMap::new(),
            observed: BTreeMap::new(),
            completed: BTreeMap::new(),
            transactions: BTreeMap::new(),
        }
    }

    pub fn for_catalog(catalog: &Catalog, config: MasteryConfig) -> Self {
        MasteryStore::new(config, catalog.kc_ids())
    }

    /// Fold a whole log into a fresh store. On error, returns the index of
    /// the offending record.
    pub fn replay<'a>(
        catalog: &Catalog,
        config: MasteryConfig,
        records: impl IntoIterator<Item = &'a TransactionRecord>,
    ) -> Result<Self, (usize, KnowledgeError)> {
        let mut store = MasteryStore::for_catalog(catalog, config);
        for (i, r) in records.into_iter().enumerate() {
            store.observe(r).map_err(|e| (i, e))?;
        }
        Ok(store)
    }

    pub fn config(&self) -> &MasteryConfig {
        &self.config
    }

    pub fn observe(&mut self, record: &TransactionRecord) -> Result<Option<Observation>, KnowledgeError> {
        let scored = match record.action {
            Action::Attempt => Some(record.outcome == Outcome::Correct),
            Action::Hint if record.hint_level == Some(3) => Some(false),
            _ => None,
        };
        if scored.is_some() {
            if let Some(kc) = &record.kc_id {
                if !self.kcs.contains(kc) {
                    return Err(KnowledgeError::UnknownKc(kc.clone()));
                }
            }
        }
        *self.transactions.entry(record.student_id.clone()).or_default() += 1;

        if record.action == Action::Done && record.outcome == Outcome::Correct {
            if let (Some(ty), Some(inst)) = (&record.problem_type_id, &record.problem_instance_id) {
                self.completed
                    .entry(record.student_id.clone())
                    .or_default()
                    .entry(ty.clone())
                    .or_default()
                    .insert(inst.clone());
            }
            return Ok(None);
        }
        let Some(correct) = scored else { return Ok(None) };
        let (Some(inst), Some(slot), Some(kc)) =
            (&record.problem_instance_id, &record.step_slot, &record.kc_id)
        else {
            return Ok(None);
        };
        let first = self
            .observed
            .entry(record.student_id.clone())
            .or_default()
            .insert((inst.clone(), slot.clone()));
        if !first {
            return Ok(None);
        }
        let params = *self.config.params(kc);
        let before = self.state(&record.student_id, kc);
        let update = bkt_update(&before, &params, correct);
        let mut after = update.state;
        after.updated_at = Some(record.timestamp);
        let obs = Observation {
            kc_id: kc.clone(),
            correct,
            before: before.p_mastery,
            after: after.p_mastery,
            degenerate: update.degenerate,
        };
        self.states
            .entry(record.student_id.clone())
            .or_default()
            .insert(kc.clone(), after);
        Ok(Some(obs))
    }

    /// Current state, or the prior for an untouched component.
    pub fn state(&self, student: &str, kc: &str) -> KcState {
        self.states
            .get(student)
            .and_then(|m| m.get(kc))
            .cloned()
            .unwrap_or_else(|| KcState::prior(student, kc, self.config.params(kc)))
    }

    pub fn mastery(&self, student: &str, kc: &str) -> f64 {
        self.state(student, kc).p_mastery
    }

    pub fn is_mastered(&self, student: &str, kc: &str) -> bool {
        self.mastery(student, kc) >= self.config.threshold
    }

    pub fn completed_count(&self, student: &str, type_id: &str) -> usize {
        self.completed
            .get(student)
            .and_then(|m| m.get(type_id))
            .map_or(0, |s| s.len())
    }

    pub fn completed_total(&self, student: &str) -> usize {
        self.completed
            .get(student)
            .map_or(0, |m| m.values().map(|s| s.len()).sum())
    }

    pub fn transaction_count(&self, student: &str) -> u64 {
        self.transactions.get(student).copied().unwrap_or(0)
    }

    pub fn students(&self) -> impl Iterator<Item = &str> {
        self.transactions.keys().map(|s| s.as_str())
    }

    /// Every catalog component with its mastery; untouched ones at the prior.
    pub fn mastery_report(&self, student: &str, catalog: &Catalog) -> Vec<MasteryEntry> {
        catalog
            .kc_ids()
            .into_iter()
            .map(|kc| {
                let p = self.mastery(student, &kc);
                MasteryEntry {
                    problem_types: catalog.types_touching(&kc),
                    mastered: p >= self.config.threshold,
                    p_mastery: p,
                    kc_id: kc,
                }
            })
            .collect()
    }

    /// Canonical JSON of the whole store; equal stores give equal bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("store serializes")
    }
}
