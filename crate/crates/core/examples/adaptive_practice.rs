//! A student who always answers correctly on the first try, practicing the
//! exponents tutor in adaptive mode until every skill is mastered.

use apprentice_core::domains::Catalog;
use apprentice_core::knowledge::{MasteryConfig, MasteryStore};
use apprentice_core::selector::{next_problem, Mode, SelectionRequest};
use apprentice_core::transactions::{Action, Outcome, TransactionRecord};
use chrono::{Duration, TimeZone, Utc};

fn main() {
    let catalog = Catalog::builtin();
    let mut store = MasteryStore::for_catalog(&catalog, MasteryConfig::default());
    let request = SelectionRequest {
        student_id: "ada".into(),
        tutor_id: "exponents".into(),
        mode: Mode::Adaptive,
        problem_type: None,
        seed: 0,
    };
    let mut clock = Utc.with_ymd_and_hms(2024, 9, 2, 9, 0, 0).unwrap();
    for round in 1..=40 {
        let (selection, problem) = next_problem(&request, &store, &catalog).expect("exponents exists");
        if selection.kc_id.is_none() {
            println!("round {round}: {}", selection.rationale);
            break;
        }
        println!("round {round:>2}: {:<18} {} ({})", selection.problem_type_id, problem.instance.statement_text, selection.rationale);
        let pt = catalog.problem_type(&selection.problem_type_id).expect("selected");
        let inst = &problem.instance;
        let base = TransactionRecord {
            tutor_id: Some(inst.tutor_id.clone()),
            problem_type_id: Some(inst.problem_type_id.clone()),
            problem_instance_id: Some(inst.id.clone()),
            ..TransactionRecord::new(clock, "ada", "demo", Action::Access, Outcome::NotApplicable)
        };
        store.observe(&base).expect("valid record");
        for step in &pt.steps {
            clock += Duration::seconds(20);
            let answer = problem.trace.preferred(&step.slot).expect("solvable").value.to_plain();
            store
                .observe(&TransactionRecord {
                    timestamp: clock,
                    action: Action::Attempt,
                    outcome: Outcome::Correct,
                    step_slot: Some(step.slot.clone()),
                    kc_id: Some(step.kc_id.clone()),
                    input: Some(answer),
                    ..base.clone()
                })
                .expect("catalog kc");
        }
        clock += Duration::seconds(5);
        store
            .observe(&TransactionRecord {
                timestamp: clock,
                action: Action::Done,
                outcome: Outcome::Correct,
                ..base
            })
            .expect("valid record");
    }
    println!();
    for e in store.mastery_report("ada", &catalog).iter().filter(|e| e.problem_types.iter().any(|t| t.starts_with("exponent"))) {
        println!("{:<20} {:.3} {}", e.kc_id, e.p_mastery, if e.mastered { "mastered" } else { "" });
    }
}
