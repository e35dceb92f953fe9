use std::sync::Arc;

use apprentice_core::analytics::TermWindow;
use apprentice_core::domains::Catalog;
use apprentice_core::knowledge::MasteryConfig;
use apprentice_core::selector::Mode;
use apprentice_core::transactions::{validate_log, Action, Outcome, TransactionRecord};
use apprentice_service::clock::{Clock, SteppingClock};
use apprentice_service::platform::{Platform, PlatformError, PlatformOptions, StepStatus};
use apprentice_service::storage::{DirStorage, Faults, FaultyStorage, MemoryStorage, Storage};
use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 2, 5, 10, 0, 0).unwrap()
}

struct Shared(Arc<SteppingClock>);

impl Clock for Shared {
    fn now(&self) -> DateTime<Utc> {
        self.0.now()
    }
}

fn platform_with(storage: Box<dyn Storage>, clock: Arc<SteppingClock>, seed: u64) -> Platform {
    let options = PlatformOptions {
        catalog: Arc::new(Catalog::builtin()),
        mastery: MasteryConfig::default(),
        session_ttl: Duration::hours(12),
        clock: Box::new(Shared(clock)),
        rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
    };
    Platform::open(options, storage).unwrap()
}

fn memory_platform() -> (Platform, Arc<SteppingClock>) {
    let clock = Arc::new(SteppingClock::new(start(), Duration::seconds(3)));
    (platform_with(Box::new(MemoryStorage::default()), clock.clone(), 1), clock)
}

fn answer(p: &Platform, id: &str, slot: &str) -> String {
    let cat = p.catalog();
    let trace = cat.solve(&cat.regenerate(id).unwrap()).unwrap();
    trace.preferred(slot).unwrap().value.to_plain()
}

/// Correct answers for every step, in order.
fn solve_all(p: &mut Platform, token: &str, id: &str) {
    let slots: Vec<String> = p.problem(token, id).unwrap().steps.into_iter().map(|s| s.slot).collect();
    for slot in slots {
        let a = answer(p, id, &slot);
        assert!(p.attempt(token, id, &slot, &a).unwrap().correct, "{slot} = {a}");
    }
}

fn new_problem(p: &mut Platform, token: &str, ty: &str) -> String {
    let tutor = p.catalog().problem_type(ty).unwrap().tutor_id.clone();
    p.new_problem(token, &tutor, Mode::Manual, Some(ty.into())).unwrap().problem.id
}

#[test]
fn sessions_without_consent_are_refused_tutors() {
    let (mut p, _) = memory_platform();
    let grant = p.create_session("s1", false).unwrap();
    assert!(!grant.consent);
    assert!(matches!(p.list_catalog(&grant.token), Err(PlatformError::NoConsent)));
    assert!(matches!(
        p.new_problem(&grant.token, "exponents", Mode::Adaptive, None),
        Err(PlatformError::NoConsent)
    ));
    let log = p.read_log().unwrap();
    assert_eq!(log.len(), 1, "only the session access is logged");
}

#[test]
fn unknown_and_expired_tokens_are_unauthorized() {
    let (mut p, clock) = memory_platform();
    assert!(matches!(p.list_catalog("nope"), Err(PlatformError::Unauthorized)));
    let token = p.create_session("s1", true).unwrap().token;
    assert!(p.list_catalog(&token).is_ok());
    clock.advance(Duration::hours(13));
    assert!(matches!(p.list_catalog(&token), Err(PlatformError::Unauthorized)));
}

#[test]
fn correct_steps_lock() {
    let (mut p, _) = memory_platform();
    let token = p.create_session("s1", true).unwrap().token;
    let id = new_problem(&mut p, &token, "exponent-product");
    let slot = p.problem(&token, &id).unwrap().steps[0].slot.clone();
    let wrong = p.attempt(&token, &id, &slot, "999").unwrap();
    assert!(!wrong.correct && !wrong.locked);
    let a = answer(&p, &id, &slot);
    let right = p.attempt(&token, &id, &slot, &a).unwrap();
    assert!(right.correct && right.locked);
    assert!(matches!(p.attempt(&token, &id, &slot, &a), Err(PlatformError::Locked(_))));
    assert!(matches!(p.hint(&token, &id, &slot), Err(PlatformError::Locked(_))));
    let view = p.problem(&token, &id).unwrap();
    assert_eq!(view.steps[0].status, StepStatus::Correct);
    assert!(view.steps[0].locked);
}

#[test]
fn hints_escalate_and_stop_at_the_bottom_out() {
    let (mut p, _) = memory_platform();
    let token = p.create_session("s1", true).unwrap().token;
    let id = new_problem(&mut p, &token, "radical-simplify");
    let slot = p.problem(&token, &id).unwrap().steps[0].slot.clone();
    let levels: Vec<u8> = (0..4).map(|_| p.hint(&token, &id, &slot).unwrap().level).collect();
    assert_eq!(levels, [1, 2, 3, 3]);
    let bottom = p.hint(&token, &id, &slot).unwrap();
    assert_eq!(bottom.bottom_out_value.as_deref(), Some(answer(&p, &id, &slot).as_str()));
    assert_eq!(bottom.highlight_slot, slot);
    assert_eq!(p.problem(&token, &id).unwrap().steps[0].hint_level, 3);

    // Tiers are per session: a new session starts again at 1.
    let again = p.create_session("s1", true).unwrap().token;
    assert_eq!(p.hint(&again, &id, &slot).unwrap().level, 1);
}

#[test]
fn done_requires_every_step_and_is_idempotent() {
    let (mut p, _) = memory_platform();
    let token = p.create_session("s1", true).unwrap().token;
    let id = new_problem(&mut p, &token, "factor-quadratic");
    assert!(!p.done(&token, &id).unwrap().complete);
    solve_all(&mut p, &token, &id);
    assert!(p.done(&token, &id).unwrap().complete);
    let n = p.read_log().unwrap().len();
    assert!(p.done(&token, &id).unwrap().complete);
    assert_eq!(p.read_log().unwrap().len(), n);
    let dones: Vec<Outcome> = p
        .read_log()
        .unwrap()
        .iter()
        .filter(|r| r.action == Action::Done)
        .map(|r| r.outcome)
        .collect();
    assert_eq!(dones, [Outcome::Incorrect, Outcome::Correct]);
}

#[test]
fn problems_are_private_to_their_student() {
    let (mut p, _) = memory_platform();
    let a = p.create_session("alice", true).unwrap().token;
    let b = p.create_session("bob", true).unwrap().token;
    let id = new_problem(&mut p, &a, "exponent-power");
    assert!(matches!(p.problem(&b, &id), Err(PlatformError::NotFound(_))));
    assert!(matches!(p.attempt(&b, &id, "product", "x"), Err(PlatformError::NotFound(_))));
    assert!(matches!(p.problem(&a, "exponent-power-00000000000000ff"), Err(PlatformError::NotFound(_))));
    assert!(matches!(p.attempt(&a, &id, "no-such-step", "x"), Err(PlatformError::NotFound(_))));
    assert!(matches!(p.new_problem(&a, "no-such-tutor", Mode::Adaptive, None), Err(PlatformError::NotFound(_))));
}

#[test]
fn unparseable_input_is_rejected_and_not_logged() {
    let (mut p, _) = memory_platform();
    let token = p.create_session("s1", true).unwrap().token;
    let id = new_problem(&mut p, &token, "exponent-product");
    let slot = p.problem(&token, &id).unwrap().steps[0].slot.clone();
    let n = p.read_log().unwrap().len();
    match p.attempt(&token, &id, &slot, "x^^2") {
        Err(PlatformError::Parse(e)) => assert_eq!(e.position, 2),
        other => panic!("{other:?}"),
    }
    assert_eq!(p.read_log().unwrap().len(), n);
}

#[test]
fn failed_appends_change_nothing() {
    let clock = Arc::new(SteppingClock::new(start(), Duration::seconds(3)));
    let faults = Faults::default();
    let storage = FaultyStorage {
        inner: MemoryStorage::default(),
        faults: faults.clone(),
    };
    let mut p = platform_with(Box::new(storage), clock, 1);
    let token = p.create_session("s1", true).unwrap().token;
    let id = new_problem(&mut p, &token, "exponent-product");
    let slot = p.problem(&token, &id).unwrap().steps[0].slot.clone();
    let a = answer(&p, &id, &slot);
    let before = (p.read_log().unwrap(), p.mastery_store().to_json(), p.problem(&token, &id).unwrap());

    faults.set_append(true);
    assert!(matches!(p.attempt(&token, &id, &slot, &a), Err(PlatformError::Storage(_))));
    assert!(matches!(p.hint(&token, &id, &slot), Err(PlatformError::Storage(_))));
    assert!(matches!(p.create_session("s2", true), Err(PlatformError::Storage(_))));
    let after = (p.read_log().unwrap(), p.mastery_store().to_json(), p.problem(&token, &id).unwrap());
    assert_eq!(before, after);

    faults.set_append(false);
    faults.set_save(true);
    // The access is logged, but a session that cannot be persisted is not granted.
    assert!(matches!(p.create_session("s3", true), Err(PlatformError::Storage(_))));
    faults.set_save(false);
    assert!(p.attempt(&token, &id, &slot, &a).unwrap().correct);
}

#[test]
fn restart_replays_to_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(SteppingClock::new(start(), Duration::seconds(3)));
    let (token, ids, store, views) = {
        let mut p = platform_with(Box::new(DirStorage::open(dir.path()).unwrap()), clock.clone(), 7);
        let token = p.create_session("s1", true).unwrap().token;
        let mut ids = Vec::new();
        for ty in ["exponent-product", "factor-quadratic", "rational-equation"] {
            let id = new_problem(&mut p, &token, ty);
            let slot = p.problem(&token, &id).unwrap().steps[0].slot.clone();
            p.attempt(&token, &id, &slot, "7").ok();
            p.hint(&token, &id, &slot).unwrap();
            ids.push(id);
        }
        solve_all(&mut p, &token, &ids[0]);
        p.done(&token, &ids[0]).unwrap();
        let views: Vec<_> = ids.iter().map(|id| p.problem(&token, id).unwrap()).collect();
        (token, ids, p.mastery_store().to_json(), views)
    };
    let p = platform_with(Box::new(DirStorage::open(dir.path()).unwrap()), clock, 99);
    assert_eq!(p.mastery_store().to_json(), store);
    let replayed: Vec<_> = ids.iter().map(|id| p.problem(&token, id).unwrap()).collect();
    assert_eq!(replayed, views);
    assert_eq!(validate_log(&p.read_log().unwrap(), p.catalog()), []);
}

#[test]
fn a_crash_after_append_heals_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(SteppingClock::new(start(), Duration::seconds(3)));
    let mut p = platform_with(Box::new(DirStorage::open(dir.path()).unwrap()), clock.clone(), 3);
    let token = p.create_session("s1", true).unwrap().token;
    let id = new_problem(&mut p, &token, "exponent-product");
    let step = p.problem(&token, &id).unwrap().steps[0].clone();
    let a = answer(&p, &id, &step.slot);
    let session_id = p.read_log().unwrap()[0].session_id.clone();
    drop(p);

    // The record reached the log, but the process died before applying it.
    let mut raw = DirStorage::open(dir.path()).unwrap();
    raw.append(&TransactionRecord {
        tutor_id: Some("exponents".into()),
        problem_type_id: Some("exponent-product".into()),
        problem_instance_id: Some(id.clone()),
        step_slot: Some(step.slot.clone()),
        kc_id: Some(step.kc_id.clone()),
        input: Some(a.clone()),
        ..TransactionRecord::new(clock.now(), "s1", &session_id, Action::Attempt, Outcome::Correct)
    })
    .unwrap();
    drop(raw);

    let mut p = platform_with(Box::new(DirStorage::open(dir.path()).unwrap()), clock, 4);
    assert_eq!(p.problem(&token, &id).unwrap().steps[0].status, StepStatus::Correct);
    assert!(matches!(p.attempt(&token, &id, &step.slot, &a), Err(PlatformError::Locked(_))));
    assert!(p.mastery_store().mastery("s1", &step.kc_id) > 0.3);
}

#[test]
fn funnel_reads_the_stored_log() {
    let (mut p, _) = memory_platform();
    for s in ["a", "b", "c"] {
        let token = p.create_session(s, true).unwrap().token;
        if s != "c" {
            let id = new_problem(&mut p, &token, "exponent-product");
            if s == "a" {
                solve_all(&mut p, &token, &id);
                p.done(&token, &id).unwrap();
            }
        }
    }
    let day = NaiveDate::from_ymd_opt(2024, 2, 5).unwrap();
    let window = TermWindow {
        cycle: 1,
        term: "t".into(),
        start: day,
        end: day,
        roster: 10,
        classes_deployed: None,
    };
    let f = p.funnel(&window).unwrap();
    assert_eq!((f.students_with_access, f.students_with_interaction, f.students_finished_one), (10, 3, 1));
    assert_eq!(f.histogram.0, [2, 1, 0, 0, 0, 0]);
}
