//! Choosing the next problem type: the weakest unmastered skill first.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domains::{Catalog, DomainError, SolvedProblem};
use crate::knowledge::MasteryStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Adaptive,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRequest {
    pub student_id: String,
    pub tutor_id: String,
    pub mode: Mode,
    #[serde(default)]
    pub problem_type: Option<String>,
    /// Drives the uniform choice once every skill is mastered.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub problem_type_id: String,
    pub rationale: String,
    /// Weakest component of the chosen type and its mastery (adaptive mode).
    pub kc_id: Option<String>,
    pub p_mastery: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("manual mode needs a problem type")]
    MissingType,
    #[error("problem type `{ty}` does not belong to tutor `{tutor}`")]
    WrongTutor { ty: String, tutor: String },
}

/// Weakest component of a problem type: lowest mastery, ties by id.
fn weakest(store: &MasteryStore, student: &str, kcs: impl IntoIterator<Item = String>) -> (String, f64) {
    kcs.into_iter()
        .map(|kc| {
            let p = store.mastery(student, &kc);
            (kc, p)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .expect("problem types have steps")
}

pub fn select(req: &SelectionRequest, store: &MasteryStore, catalog: &Catalog) -> Result<Selection, SelectError> {
    let types = catalog.tutor_types(&req.tutor_id)?;
    if req.mode == Mode::Manual {
        let ty = req.problem_type.as_deref().ok_or(SelectError::MissingType)?;
        catalog.problem_type(ty)?;
        if !types.iter().any(|t| t.id == ty) {
            return Err(SelectError::WrongTutor {
                ty: ty.to_string(),
                tutor: req.tutor_id.clone(),
            });
        }
        return Ok(Selection {
            problem_type_id: ty.to_string(),
            rationale: format!("manually selected {ty}"),
            kc_id: None,
            p_mastery: None,
        });
    }

    let threshold = store.config().threshold;
    let best = types
        .iter()
        .map(|t| {
            let (kc, p) = weakest(store, &req.student_id, t.kc_ids());
            let done = store.completed_count(&req.student_id, &t.id);
            (t, kc, p, done)
        })
        .filter(|(_, _, p, _)| *p < threshold)
        .min_by(|a, b| {
            a.2.total_cmp(&b.2)
                .then(a.3.cmp(&b.3))
                .then_with(|| a.0.id.cmp(&b.0.id))
        });
    if let Some((t, kc, p, _)) = best {
        return Ok(Selection {
            problem_type_id: t.id.clone(),
            rationale: format!("{kc} is the weakest unmastered skill (p = {p:.3})"),
            kc_id: Some(kc),
            p_mastery: Some(p),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let t = types.choose(&mut rng).expect("tutors have problem types");
    Ok(Selection {
        problem_type_id: t.id.clone(),
        rationale: "every skill in this tutor is mastered; practicing at random".into(),
        kc_id: None,
        p_mastery: None,
    })
}

/// Seed for a student's next problem: differs with every logged transaction.
pub fn derive_seed(student_id: &str, transaction_count: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(student_id.as_bytes());
    h.update([0]);
    h.update(transaction_count.to_be_bytes());
    let digest = h.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Select, then generate and solve an instance of the chosen type. The
/// request's own seed is replaced by the derived one.
pub fn next_problem(
    req: &SelectionRequest,
    store: &MasteryStore,
    catalog: &Catalog,
) -> Result<(Selection, SolvedProblem), SelectError> {
    let seed = derive_seed(&req.student_id, store.transaction_count(&req.student_id));
    let req = SelectionRequest { seed, ..req.clone() };
    let selection = select(&req, store, catalog)?;
    let problem = catalog.instantiate(&selection.problem_type_id, seed)?;
    Ok((selection, problem))
}
