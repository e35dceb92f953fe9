use apprentice_core::analytics::{
    funnel, render_table, retention_summary, term_table, AnalyticsError, FunnelReport, Percent,
    RetentionSummary, TermWindow,
};
use apprentice_core::domains::Catalog;
use apprentice_core::knowledge::{BktParams, MasteryConfig, MasteryStore};
use apprentice_core::selector::{next_problem, select, Mode, SelectionRequest};
use apprentice_core::transactions::{Action, Outcome, TransactionRecord};
use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use num_rational::Ratio;
use proptest::prelude::*;

/// Half-up rounding of `100 n / d` to hundredths, by exact rational arithmetic.
fn percent_oracle(n: u64, d: u64) -> String {
    if d == 0 {
        return "0.00".into();
    }
    let hundredths = (Ratio::new(10_000 * n as i128, d as i128)).round().to_integer();
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

#[test]
fn published_table_reproduces() {
    let rows = [
        ((76, 47, 8), ("61.84", "17.02")),
        ((265, 71, 16), ("26.79", "22.54")),
        ((2054, 229, 30), ("11.15", "13.10")),
        ((1364, 188, 25), ("13.78", "13.30")),
    ];
    for ((access, used, finished), (p_used, p_finished)) in rows {
        let r = FunnelReport::from_counts(access, used, finished, 0);
        assert_eq!(r.percent_used.to_string(), p_used);
        assert_eq!(r.percent_users_finished_one.to_string(), p_finished);
    }
    assert_eq!(Percent::of(520, 3510).to_string(), "14.81");
    let overall = RetentionSummary::from_counts(520, 158, 81);
    assert_eq!(overall.percent_users_finished_one.to_string(), "30.38");
    assert_eq!(overall.percent_finishers_finished_five.to_string(), "51.27");
    assert_eq!(RetentionSummary::from_counts(0, 0, 0).percent_users_finished_one.to_string(), "0.00");
}

proptest! {
    #[test]
    fn percent_matches_exact_rounding(d in 1u64..100_000, frac in 0.0f64..=1.0) {
        let n = (d as f64 * frac) as u64;
        prop_assert_eq!(Percent::of(n, d).to_string(), percent_oracle(n, d));
    }
}

fn ts(day: u32, secs: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, day, 0, 0, 0).unwrap() + chrono::Duration::seconds(secs)
}

fn window(cycle: u32, from: u32, to: u32, roster: u64) -> TermWindow {
    TermWindow {
        cycle,
        term: format!("T{cycle}"),
        start: NaiveDate::from_ymd_opt(2024, 1, from).unwrap(),
        end: NaiveDate::from_ymd_opt(2024, 1, to).unwrap(),
        roster,
        classes_deployed: Some(cycle),
    }
}

/// A student working `solved` complete exponent-product problems, plus one
/// abandoned problem, on the given day.
fn session(student: &str, day: u32, solved: usize) -> Vec<TransactionRecord> {
    let mut out = vec![TransactionRecord {
        tutor_id: Some("exponents".into()),
        problem_type_id: Some("exponent-product".into()),
        problem_instance_id: Some(format!("{student}-open")),
        ..TransactionRecord::new(ts(day, 0), student, student, Action::Access, Outcome::NotApplicable)
    }];
    let mut t = 1;
    for i in 0..=solved {
        let inst = format!("{student}-{i}");
        let base = TransactionRecord {
            tutor_id: Some("exponents".into()),
            problem_type_id: Some("exponent-product".into()),
            problem_instance_id: Some(inst),
            ..TransactionRecord::new(ts(day, 0), student, student, Action::Done, Outcome::Correct)
        };
        let steps: &[(&str, &str)] = if i < solved {
            &[("exponent_sum", "add-exponents"), ("answer", "exponent-product")]
        } else {
            &[("exponent_sum", "add-exponents")]
        };
        for (slot, kc) in steps {
            t += 1;
            out.push(TransactionRecord {
                timestamp: ts(day, t),
                action: Action::Attempt,
                step_slot: Some(slot.to_string()),
                kc_id: Some(kc.to_string()),
                input: Some("1".into()),
                ..base.clone()
            });
        }
        t += 1;
        let complete = i < solved;
        out.push(TransactionRecord {
            timestamp: ts(day, t),
            outcome: Outcome::from_bool(complete),
            ..base
        });
    }
    out
}

#[test]
fn funnel_counts_finished_problems() {
    let c = Catalog::builtin();
    let mut log = Vec::new();
    for (s, n) in [("a", 0), ("b", 1), ("c", 2), ("d", 5), ("e", 7)] {
        log.extend(session(s, 3, n));
    }
    log.extend(session("late", 20, 3));
    let r = funnel(&log, &window(1, 1, 10, 12), &c);
    assert_eq!(r.students_with_interaction, 5);
    assert_eq!(r.students_finished_one, 4);
    assert_eq!(r.students_finished_five, 2);
    assert_eq!(r.histogram.0, [1, 1, 1, 0, 0, 2]);
    assert_eq!(r.histogram.total(), r.students_with_interaction);
    assert_eq!(r.percent_used.to_string(), "41.67");
    assert!(r.is_monotone());

    let all = retention_summary(&log, &c);
    assert_eq!((all.users, all.finished_one, all.finished_five), (6, 5, 2));
}

#[test]
fn done_without_every_step_does_not_finish() {
    let c = Catalog::builtin();
    let mut log = session("a", 2, 0);
    let last = log.last().unwrap().clone();
    log.push(TransactionRecord {
        outcome: Outcome::Correct,
        timestamp: last.timestamp + chrono::Duration::seconds(1),
        ..last
    });
    let r = funnel(&log, &window(1, 1, 5, 1), &c);
    assert_eq!(r.students_finished_one, 0);
}

#[test]
fn term_table_rejects_overlap_and_renders() {
    let c = Catalog::builtin();
    let log: Vec<_> = session("a", 2, 1).into_iter().chain(session("b", 12, 5)).collect();
    assert_eq!(
        term_table(&log, &[window(1, 1, 10, 5), window(2, 10, 20, 5)], &c),
        Err(AnalyticsError::Overlap(1, 2))
    );
    assert_eq!(term_table(&log, &[window(1, 5, 5, 5)], &c), Err(AnalyticsError::EmptyWindow(1)));
    let rows = term_table(&log, &[window(1, 1, 9, 4), window(2, 10, 20, 2)], &c).unwrap();
    assert_eq!(rows[0].report.students_finished_one, 1);
    assert_eq!(rows[1].report.students_finished_five, 1);
    let text = render_table(&rows);
    assert!(text.contains("25.00%") && text.contains("50.00%"), "{text}");
    assert_eq!(term_table(&log, &[window(1, 1, 9, 4)], &c), term_table(&log, &[window(1, 1, 9, 4)], &c));
}

#[test]
fn empty_window_is_zeroed() {
    let r = funnel(&[], &window(1, 1, 2, 0), &Catalog::builtin());
    assert_eq!(r, FunnelReport::from_counts(0, 0, 0, 0));
    assert_eq!(r.percent_used.to_string(), "0.00");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn funnel_is_monotone(students in prop::collection::vec(0usize..8, 0..12), extra in 0u64..20) {
        let c = Catalog::builtin();
        let mut log = Vec::new();
        for (i, n) in students.iter().enumerate() {
            log.extend(session(&format!("s{i}"), 4, *n));
        }
        let r = funnel(&log, &window(1, 1, 10, students.len() as u64 + extra), &c);
        prop_assert!(r.is_monotone());
        prop_assert_eq!(r.histogram.total(), r.students_with_interaction);
    }
}

fn request(seed: u64) -> SelectionRequest {
    SelectionRequest {
        student_id: "s".into(),
        tutor_id: "exponents".into(),
        mode: Mode::Adaptive,
        problem_type: None,
        seed,
    }
}

/// Store whose untouched components sit at per-component priors.
fn store_with_priors(c: &Catalog, priors: &[(String, f64)], threshold: f64) -> MasteryStore {
    let mut config = MasteryConfig {
        threshold,
        ..MasteryConfig::default()
    };
    for (kc, p) in priors {
        config.per_kc.insert(kc.clone(), BktParams { p_init: *p, ..BktParams::default() });
    }
    MasteryStore::for_catalog(c, config)
}

proptest! {
    #[test]
    fn selection_depends_only_on_mastery_order(ps in prop::collection::vec(0.01f64..0.99, 6), seed in any::<u64>()) {
        let c = Catalog::builtin();
        let kcs: Vec<String> = c.tutor_types("exponents").unwrap().iter().flat_map(|t| t.kc_ids()).collect();
        let priors: Vec<(String, f64)> = kcs.into_iter().zip(ps).collect();
        let base = select(&request(seed), &store_with_priors(&c, &priors, 0.95), &c).unwrap();
        for f in [|p: f64| p * p, |p: f64| p.sqrt(), |p: f64| 0.5 * p] {
            let moved: Vec<(String, f64)> = priors.iter().map(|(k, p)| (k.clone(), f(*p))).collect();
            let other = select(&request(seed), &store_with_priors(&c, &moved, f(0.95)), &c).unwrap();
            prop_assert_eq!(&other.problem_type_id, &base.problem_type_id);
        }
        // Never a fully mastered type while another still has work.
        let store = store_with_priors(&c, &priors, 0.95);
        let chosen = c.problem_type(&base.problem_type_id).unwrap();
        let open = |t: &apprentice_core::domains::ProblemType| t.kc_ids().iter().any(|k| !store.is_mastered("s", k));
        if c.tutor_types("exponents").unwrap().into_iter().any(open) {
            prop_assert!(open(chosen));
        }
    }
}

fn attempt(i: i64, ty: &str, inst: &str, slot: &str, kc: &str) -> TransactionRecord {
    TransactionRecord {
        tutor_id: Some("exponents".into()),
        problem_type_id: Some(ty.into()),
        problem_instance_id: Some(inst.into()),
        step_slot: Some(slot.into()),
        kc_id: Some(kc.into()),
        input: Some("1".into()),
        ..TransactionRecord::new(Utc.timestamp_opt(i, 0).unwrap(), "s", "x", Action::Attempt, Outcome::Correct)
    }
}

#[test]
fn practice_moves_selection_off_the_weak_type() {
    let c = Catalog::builtin();
    let mut store = MasteryStore::for_catalog(&c, MasteryConfig::default());
    let first = select(&request(0), &store, &c).unwrap();
    assert_eq!(first.problem_type_id, "exponent-power");
    for i in 0..10 {
        let inst = format!("power-{i}");
        store.observe(&attempt(2 * i, "exponent-power", &inst, "exponent_product", "multiply-exponents")).unwrap();
        store.observe(&attempt(2 * i + 1, "exponent-power", &inst, "answer", "exponent-power")).unwrap();
    }
    let after = select(&request(0), &store, &c).unwrap();
    assert_eq!(after.problem_type_id, "exponent-product");
    assert_eq!(after.kc_id.as_deref(), Some("add-exponents"));
}

#[test]
fn next_problem_seeds_move_with_the_log() {
    let c = Catalog::builtin();
    let mut store = MasteryStore::for_catalog(&c, MasteryConfig::default());
    let (sel, a) = next_problem(&request(0), &store, &c).unwrap();
    assert_eq!(a.instance.problem_type_id, sel.problem_type_id);
    store
        .observe(&TransactionRecord::new(Utc.timestamp_opt(0, 0).unwrap(), "s", "x", Action::Access, Outcome::NotApplicable))
        .unwrap();
    let (_, b) = next_problem(&request(0), &store, &c).unwrap();
    assert_ne!(a.instance.seed, b.instance.seed);
}
