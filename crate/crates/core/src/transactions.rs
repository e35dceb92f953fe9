//! The append-only transaction log, stored as JSON Lines.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::Catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Access,
    Attempt,
    Hint,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "correct")]
    Correct,
    #[serde(rename = "incorrect")]
    Incorrect,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Outcome {
    pub fn from_bool(correct: bool) -> Self {
        if correct {
            Outcome::Correct
        } else {
            Outcome::Incorrect
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub timestamp: DateTime<Utc>,
    pub student_id: String,
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tutor_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_type_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_instance_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kc_id: Option<String>,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint_level: Option<u8>,
}

impl TransactionRecord {
    /// A bare record with every optional field empty.
    pub fn new(
        timestamp: DateTime<Utc>,
        student_id: &str,
        session_id: &str,
        action: Action,
        outcome: Outcome,
    ) -> Self {
        TransactionRecord {
            timestamp,
            student_id: student_id.to_string(),
            session_id: session_id.to_string(),
            tutor_id: None,
            problem_type_id: None,
            problem_instance_id: None,
            step_slot: None,
            kc_id: None,
            action,
            input: None,
            outcome,
            hint_level: None,
        }
    }

    /// Field presence rules per action.
    pub fn check_shape(&self) -> Result<(), String> {
        let has = |o: &Option<String>| o.is_some();
        let problem = has(&self.tutor_id) && has(&self.problem_type_id) && has(&self.problem_instance_id);
        let step = problem && has(&self.step_slot) && has(&self.kc_id);
        match self.action {
            Action::Access => {
                if self.outcome != Outcome::NotApplicable {
                    return Err("access outcome must be n/a".into());
                }
                if has(&self.step_slot) || has(&self.kc_id) || has(&self.input) || self.hint_level.is_some() {
                    return Err("access carries no step, kc, input or hint level".into());
                }
            }
            Action::Attempt => {
                if !step || !has(&self.input) {
                    return Err("attempt needs problem, step, kc and input".into());
                }
                if self.outcome == Outcome::NotApplicable {
                    return Err("attempt outcome must be correct or incorrect".into());
                }
                if self.hint_level.is_some() {
                    return Err("attempt carries no hint level".into());
                }
            }
            Action::Hint => {
                if !step {
                    return Err("hint needs problem, step and kc".into());
                }
                if !matches!(self.hint_level, Some(1..=3)) {
                    return Err("hint level must be 1, 2 or 3".into());
                }
                if self.outcome != Outcome::NotApplicable || has(&self.input) {
                    return Err("hint outcome must be n/a and carry no input".into());
                }
            }
            Action::Done => {
                if !problem {
                    return Err("done needs a problem".into());
                }
                if has(&self.step_slot) || has(&self.kc_id) || has(&self.input) || self.hint_level.is_some() {
                    return Err("done carries no step, kc, input or hint level".into());
                }
                if self.outcome == Outcome::NotApplicable {
                    return Err("done outcome must be correct or incorrect".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub fn write_record(out: &mut impl Write, record: &TransactionRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

pub fn write_log(out: &mut impl Write, records: &[TransactionRecord]) -> std::io::Result<()> {
    for r in records {
        write_record(out, r)?;
    }
    Ok(())
}

/// Parse JSON Lines; blank lines are skipped, line numbers are 1-based.
pub fn read_log(input: impl BufRead) -> Result<Vec<TransactionRecord>, LogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 0-based index of the offending record.
    pub record: usize,
    pub message: String,
}

/// Invariant check over a whole log: record shapes, per-session timestamp
/// order, known catalog ids, no attempts or hints on a step already answered
/// correctly, and completed `done` only after every step is correct.
pub fn validate_log(records: &[TransactionRecord], catalog: &Catalog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut last_ts: BTreeMap<&str, DateTime<Utc>> = BTreeMap::new();
    let mut correct_steps: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let kcs = catalog.kc_ids();
    for (i, r) in records.iter().enumerate() {
        let mut flag = |m: String| out.push(Violation { record: i, message: m });
        if let Err(m) = r.check_shape() {
            flag(m);
            continue;
        }
        if let Some(prev) = last_ts.get(r.session_id.as_str()) {
            if r.timestamp < *prev {
                flag(format!("timestamp goes backwards in session {}", r.session_id));
            }
        }
        last_ts.insert(&r.session_id, r.timestamp);
        if let Some(t) = &r.tutor_id {
            if catalog.tutor(t).is_err() {
                flag(format!("unknown tutor `{t}`"));
            }
        }
        let pt = match &r.problem_type_id {
            Some(id) => match catalog.problem_type(id) {
                Ok(pt) => Some(pt),
                Err(_) => {
                    flag(format!("unknown problem type `{id}`"));
                    continue;
                }
            },
            None => None,
        };
        if let Some(kc) = &r.kc_id {
            if !kcs.contains(kc) {
                flag(format!("unknown knowledge component `{kc}`"));
            }
        }
        let Some(instance) = r.problem_instance_id.as_deref() else { continue };
        let done = correct_steps.entry(instance).or_default();
        match r.action {
            Action::Attempt | Action::Hint => {
                let slot = r.step_slot.as_deref().expect("checked shape");
                if let Some(pt) = pt {
                    if pt.step(slot).is_none() {
                        flag(format!("problem type `{}` has no step `{slot}`", pt.id));
                    }
                }
                if done.contains(slot) {
                    flag(format!("{:?} on step `{slot}` after it was answered correctly", r.action));
                }
                if r.action == Action::Attempt && r.outcome == Outcome::Correct {
                    done.insert(slot);
                }
            }
            Action::Done if r.outcome == Outcome::Correct => {
                if let Some(pt) = pt {
                    if pt.steps.iter().any(|s| !done.contains(s.slot.as_str())) {
                        flag("completed done before every step was correct".into());
                    }
                }
            }
            _ => {}
        }
    }
    out
}
