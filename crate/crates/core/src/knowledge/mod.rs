//! Bayesian Knowledge Tracing: a two-state hidden Markov model per student
//! and knowledge component, updated from first attempts at each step.

mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use store::{MasteryConfig, MasteryEntry, MasteryStore, Observation};

/// Mastery probability at or above which a knowledge component counts as
/// mastered.
pub const DEFAULT_MASTERY_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BktParams {
    /// Prior probability of mastery, P(L0).
    pub p_init: f64,
    /// Learning rate, P(T).
    pub p_transit: f64,
    pub p_slip: f64,
    pub p_guess: f64,
}

impl Default for BktParams {
    fn default() -> Self {
        BktParams {
            p_init: 0.3,
            p_transit: 0.2,
            p_slip: 0.1,
            p_guess: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeError {
    #[error("parameter `{0}` must lie in [0, 1]")]
    OutOfRange(&'static str),
    #[error("slip + guess must be below 1")]
    NotIdentifiable,
    #[error("unknown knowledge component `{0}`")]
    UnknownKc(String),
}

impl BktParams {
    pub fn new(p_init: f64, p_transit: f64, p_slip: f64, p_guess: f64) -> Result<Self, KnowledgeError> {
        let p = BktParams {
            p_init,
            p_transit,
            p_slip,
            p_guess,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KnowledgeError> {
        for (name, v) in [
            ("p_init", self.p_init),
            ("p_transit", self.p_transit),
            ("p_slip", self.p_slip),
            ("p_guess", self.p_guess),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(KnowledgeError::OutOfRange(name));
            }
        }
        if self.p_slip + self.p_guess >= 1.0 {
            return Err(KnowledgeError::NotIdentifiable);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KcState {
    pub student_id: String,
    pub kc_id: String,
    pub p_mastery: f64,
    /// `1 - p_mastery`, carried separately so it keeps full precision once
    /// mastery rounds close to 1.
    pub p_unmastered: f64,
    pub observations: u32,
    pub updated_at: Option<DateTime<Utc>>,
}

impl KcState {
    pub fn prior(student_id: &str, kc_id: &str, params: &BktParams) -> Self {
        KcState::with_mastery(student_id, kc_id, params.p_init)
    }

    /// A fresh state at mastery `p`.
    pub fn with_mastery(student_id: &str, kc_id: &str, p: f64) -> Self {
        KcState {
            student_id: student_id.to_string(),
            kc_id: kc_id.to_string(),
            p_mastery: p,
            p_unmastered: 1.0 - p,
            observations: 0,
            updated_at: None,
        }
    }
}

/// Conditions the belief `(mastered, unmastered)` on one observation.
/// `None` when the evidence has probability zero.
fn condition(belief: (f64, f64), params: &BktParams, correct: bool) -> Option<(f64, f64)> {
    let (s, g) = (params.p_slip, params.p_guess);
    let (m, u) = if correct {
        (belief.0 * (1.0 - s), belief.1 * g)
    } else {
        (belief.0 * s, belief.1 * (1.0 - g))
    };
    let den = m + u;
    (den != 0.0).then(|| (m / den, u / den))
}

/// One observation followed by the learning transition, on a belief pair.
/// Equal to the normalised forward pass of the two-state model.
fn step_belief(belief: (f64, f64), params: &BktParams, correct: bool) -> Option<(f64, f64)> {
    let t = params.p_transit;
    condition(belief, params, correct).map(|(m, u)| (m + u * t, u * (1.0 - t)))
}

/// P(mastered | observation). `None` when the evidence has probability zero.
pub fn posterior(p: f64, params: &BktParams, correct: bool) -> Option<f64> {
    condition((p, 1.0 - p), params, correct).map(|b| b.0)
}

/// Posterior followed by the learning transition.
pub fn bkt_step(p: f64, params: &BktParams, correct: bool) -> Option<f64> {
    step_belief((p, 1.0 - p), params, correct).map(|b| b.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BktUpdate {
    pub state: KcState,
    /// The evidence had probability zero; the state is unchanged.
    pub degenerate: bool,
}

/// Observation count always advances except on degenerate evidence.
pub fn bkt_update(state: &KcState, params: &BktParams, correct: bool) -> BktUpdate {
    match step_belief((state.p_mastery, state.p_unmastered), params, correct) {
        Some((m, u)) => BktUpdate {
            state: KcState {
                p_mastery: m.clamp(0.0, 1.0),
                p_unmastered: u.clamp(0.0, 1.0),
                observations: state.observations + 1,
                ..state.clone()
            },
            degenerate: false,
        },
        None => {
            log::warn!(
                "degenerate knowledge-tracing update for {}/{}; state left unchanged",
                state.student_id,
                state.kc_id
            );
            BktUpdate {
                state: state.clone(),
                degenerate: true,
            }
        }
    }
}

/// Probability the next attempt is correct.
pub fn predict_correct(state: &KcState, params: &BktParams) -> f64 {
    let p = state.p_mastery;
    p * (1.0 - params.p_slip) + (1.0 - p) * params.p_guess
}
