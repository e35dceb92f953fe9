//! Generate a problem, show the expert model's firing trace, then check a
//! few student inputs and walk the three hint tiers for each step.
//!
//! ```text
//! cargo run -p apprentice-core --example solve_problem -- rational-equation 11
//! ```

use apprentice_core::domains::Catalog;
use apprentice_core::value::Value;

fn main() {
    let mut args = std::env::args().skip(1);
    let ty = args.next().unwrap_or_else(|| "factor-quadratic".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let catalog = Catalog::builtin();
    let problem = match catalog.instantiate(&ty, seed) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let pt = catalog.problem_type(&ty).expect("instantiated above");
    println!("{} ({}): {}", pt.name, problem.instance.id, problem.instance.statement_text);

    println!("\nexpert trace:");
    for f in &problem.trace.firings {
        println!("  {:<24} [{}] {} := {}", f.rule_id, f.kc_id, f.derived.slot, f.derived.value.to_plain());
    }

    for step in &pt.steps {
        println!("\nstep {} ({}): {}", step.order, step.slot, step.prompt);
        for level in 1..=3 {
            let hint = catalog.hint(&problem, &step.slot, level, false).expect("valid step");
            println!("  hint {level}: {}", hint.text);
        }
        let answer = problem.trace.preferred(&step.slot).expect("solvable").value.to_plain();
        for input in [answer.as_str(), "0"] {
            let verdict = match Value::parse(step.input_mode, input) {
                Ok(v) => {
                    let r = problem.check(&step.slot, &v).expect("known step");
                    if r.correct { "correct" } else { "incorrect" }
                }
                Err(_) => "unparseable",
            };
            println!("  input {input:<14} -> {verdict}");
        }
    }
}
