//! Load a catalog from a directory instead of the embedded copy. Point it at
//! a copy of `crates/core/data` to try new problem types or rule sets without
//! recompiling.
//!
//! ```text
//! cargo run -p apprentice-core --example custom_catalog -- crates/core/data
//! ```

use std::path::PathBuf;

use apprentice_core::domains::Catalog;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    let catalog = match Catalog::from_dir(&dir) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", dir.display());
            std::process::exit(1);
        }
    };
    for tutor in catalog.list_catalog() {
        println!("{} ({})", tutor.name, tutor.id);
        for pt in &tutor.problem_types {
            let steps: Vec<&str> = pt.steps.iter().map(|s| s.slot.as_str()).collect();
            println!("  {:<20} steps: {}", pt.id, steps.join(" -> "));
        }
    }
}
