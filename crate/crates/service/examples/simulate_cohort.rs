//! Simulated cohorts with slow and fast true learners, traced with the same
//! default parameters. Faster learners should end with higher traced mastery.

use std::sync::Arc;

use apprentice_core::domains::Catalog;
use apprentice_core::knowledge::BktParams;
use apprentice_service::simulate::{simulate, CohortSpec};

fn main() {
    let catalog = Arc::new(Catalog::builtin());
    println!("{:>9}  {:>8}  {:>13}  {:>14}", "p_transit", "records", "mean traced", "truly mastered");
    for p_transit in [0.02, 0.1, 0.2, 0.4] {
        let spec = CohortSpec {
            truth: BktParams { p_transit, ..BktParams::default() },
            ..CohortSpec::new(30, 8, 42)
        };
        let out = simulate(&spec, catalog.clone()).expect("simulation runs");
        println!(
            "{p_transit:>9}  {:>8}  {:>13.3}  {:>14.3}",
            out.records.len(),
            out.mean_mastery,
            out.truly_mastered
        );
    }
}
