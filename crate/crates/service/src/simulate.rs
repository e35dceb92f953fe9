//! Synthetic cohorts driven through the real [`Platform`] operations.
//!
//! Each simulated student holds a hidden mastered/unmastered state per
//! knowledge component, drawn from the true BKT parameters at first contact.
//! Every attempt is correct with probability `1 - slip` when mastered and
//! `guess` otherwise. After each step the student learns with probability
//! `transit`. Students ask for hints after some mistakes and copy the
//! bottom-out answer once it is shown.

use std::collections::BTreeMap;
use std::sync::Arc;

use apprentice_core::domains::{Catalog, DomainError};
use apprentice_core::expr::{canonicalize, Expr};
use apprentice_core::knowledge::{BktParams, MasteryConfig};
use apprentice_core::selector::Mode;
use apprentice_core::transactions::TransactionRecord;
use apprentice_core::value::Value;
use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::SteppingClock;
use crate::platform::{Platform, PlatformError, PlatformOptions};
use crate::storage::MemoryStorage;

/// Probability of asking for a hint after a wrong attempt.
const HINT_AFTER_MISS: f64 = 0.5;
/// Probability of asking for a hint before the first attempt at a step.
const HINT_FIRST: f64 = 0.05;
/// Wrong attempts after which a student walks the hints to the bottom-out.
const GIVE_UP_AFTER: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub students: usize,
    pub problems: usize,
    pub seed: u64,
    /// Parameters of the generative model, which may differ from the
    /// tracing parameters the platform uses.
    pub truth: BktParams,
    pub tracing: MasteryConfig,
    pub start: DateTime<Utc>,
}

impl CohortSpec {
    pub fn new(students: usize, problems: usize, seed: u64) -> Self {
        CohortSpec {
            students,
            problems,
            seed,
            truth: BktParams::default(),
            tracing: MasteryConfig::default(),
            start: Utc.with_ymd_and_hms(2024, 1, 8, 9, 0, 0).unwrap(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CohortOutcome {
    pub records: Vec<TransactionRecord>,
    /// Canonical JSON of the platform's live mastery store.
    pub store_json: String,
    /// Mean traced mastery over every (student, component) practised.
    pub mean_mastery: f64,
    /// Share of practised (student, component) pairs truly mastered at the end.
    pub truly_mastered: f64,
}

/// Input that is parseable for the step but never equivalent to `v`.
fn wrong_answer(v: &Value) -> String {
    let bump = |e: &Expr| canonicalize(&Expr::sum([e.clone(), Expr::int(1)]));
    match v {
        Value::Expr(e) => Value::Expr(bump(e)).to_plain(),
        Value::Tuple(items) => {
            let mut items = items.clone();
            items[0] = bump(&items[0]);
            Value::Tuple(items).to_plain()
        }
        Value::Equation(l, r) => Value::Equation(l.clone(), bump(r)).to_plain(),
        Value::Text(t) => format!("{t}?"),
    }
}

fn student_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub fn simulate(spec: &CohortSpec, catalog: Arc<Catalog>) -> Result<CohortOutcome, PlatformError> {
    let clock = Arc::new(SteppingClock::new(spec.start, Duration::seconds(7)));
    let mut platform = Platform::open(
        PlatformOptions {
            catalog: catalog.clone(),
            mastery: spec.tracing.clone(),
            session_ttl: Duration::days(365),
            clock: Box::new(SharedClock(clock.clone())),
            rng: Box::new(ChaCha8Rng::seed_from_u64(spec.seed)),
        },
        Box::new(MemoryStorage::default()),
    )?;
    let tutors: Vec<String> = catalog.tutors().iter().map(|t| t.id.clone()).collect();
    let truth = spec.truth;
    let mut practised: Vec<(String, String, bool)> = Vec::new();

    for i in 0..spec.students {
        let mut rng = student_rng(spec.seed, i);
        let student = format!("student-{i:04}");
        let token = platform.create_session(&student, true)?.token;
        let mut known: BTreeMap<String, bool> = BTreeMap::new();
        for j in 0..spec.problems {
            let tutor = &tutors[(i + j) % tutors.len()];
            let problem = platform.new_problem(&token, tutor, Mode::Adaptive, None)?.problem;
            let trace = catalog.solve(&catalog.regenerate(&problem.id)?)?;
            for step in &problem.steps {
                let mastered = *known.entry(step.kc_id.clone()).or_insert_with(|| rng.gen_bool(truth.p_init));
                let answer = trace.preferred(&step.slot).map_err(DomainError::from)?.value.clone();
                let mut revealed = false;
                if rng.gen_bool(HINT_FIRST) {
                    platform.hint(&token, &problem.id, &step.slot)?;
                }
                let mut misses = 0;
                loop {
                    let p_correct = if mastered { 1.0 - truth.p_slip } else { truth.p_guess };
                    let correct = revealed || rng.gen_bool(p_correct);
                    let input = if correct { answer.to_plain() } else { wrong_answer(&answer) };
                    if platform.attempt(&token, &problem.id, &step.slot, &input)?.correct {
                        break;
                    }
                    misses += 1;
                    if misses >= GIVE_UP_AFTER {
                        while platform.hint(&token, &problem.id, &step.slot)?.level < 3 {}
                        revealed = true;
                    } else if rng.gen_bool(HINT_AFTER_MISS) {
                        revealed = platform.hint(&token, &problem.id, &step.slot)?.level == 3;
                    }
                }
                if !mastered && rng.gen_bool(truth.p_transit) {
                    known.insert(step.kc_id.clone(), true);
                }
            }
            platform.done(&token, &problem.id)?;
        }
        for (kc, m) in known {
            practised.push((student.clone(), kc, m));
        }
        clock.advance(Duration::hours(1));
    }

    let store = platform.mastery_store();
    let n = practised.len().max(1) as f64;
    Ok(CohortOutcome {
        records: platform.read_log()?,
        store_json: store.to_json(),
        mean_mastery: practised.iter().map(|(s, kc, _)| store.mastery(s, kc)).sum::<f64>() / n,
        truly_mastered: practised.iter().filter(|p| p.2).count() as f64 / n,
    })
}

struct SharedClock(Arc<SteppingClock>);

impl crate::clock::Clock for SharedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0.now()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use apprentice_core::transactions::validate_log;

    #[test]
    fn small_cohort_is_valid_and_deterministic() {
        let catalog = Arc::new(Catalog::builtin());
        let spec = CohortSpec::new(4, 5, 11);
        let a = simulate(&spec, catalog.clone()).unwrap();
        let b = simulate(&spec, catalog.clone()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.store_json, b.store_json);
        assert_eq!(validate_log(&a.records, &catalog), []);
    }

    #[test]
    fn wrong_answers_are_wrong() {
        let catalog = Catalog::builtin();
        for pt in catalog.problem_types() {
            let p = catalog.instantiate(&pt.id, 3).unwrap();
            for step in &pt.steps {
                let right = p.trace.preferred(&step.slot).unwrap().value.clone();
                let wrong = Value::parse(step.input_mode, &wrong_answer(&right)).unwrap();
                assert!(!p.check(&step.slot, &wrong).unwrap().correct, "{}", step.slot);
            }
        }
    }
}
