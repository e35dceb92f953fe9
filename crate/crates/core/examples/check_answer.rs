//! Two-tier answer checking: canonical comparison first, numeric sampling
//! second.
//!
//! ```text
//! cargo run -p apprentice-core --example check_answer -- "(x+2)(x+3)" "x^2+5x+6"
//! ```

use apprentice_core::expr::{canonicalize, check_equivalence, parse, render, Format};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (a, b) = match &args[..] {
        [a, b] => (a.as_str(), b.as_str()),
        _ => ("x^3*x^4", "x^7"),
    };
    let parsed = [a, b].map(|s| match parse(s) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{s}: {e} (at offset {})", e.position);
            std::process::exit(1);
        }
    });
    for (src, e) in [a, b].iter().zip(&parsed) {
        let c = canonicalize(e);
        println!("{src:>16}  canonical {:<20} latex {}", render(&c, Format::Plain), render(&c, Format::Latex));
    }
    println!("verdict: {:?}", check_equivalence(&parsed[0], &parsed[1]));
}
