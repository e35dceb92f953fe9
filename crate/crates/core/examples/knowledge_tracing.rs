//! Follow one student's mastery of a skill through a sequence of first
//! attempts, with the predicted chance of a correct next answer.

use apprentice_core::knowledge::{bkt_update, predict_correct, BktParams, KcState, DEFAULT_MASTERY_THRESHOLD};

fn main() {
    let params = BktParams::default();
    let mut state = KcState::prior("student-1", "add-exponents", &params);
    let attempts = [false, true, false, true, true, true, true, true, true, true, true];
    println!("{:>3} {:>9} {:>9} {:>9}", "n", "observed", "p(L)", "p(next)");
    println!("{:>3} {:>9} {:>9.4} {:>9.4}", 0, "-", state.p_mastery, predict_correct(&state, &params));
    for (i, correct) in attempts.into_iter().enumerate() {
        state = bkt_update(&state, &params, correct).state;
        let mark = if state.p_mastery >= DEFAULT_MASTERY_THRESHOLD { "  mastered" } else { "" };
        println!(
            "{:>3} {:>9} {:>9.4} {:>9.4}{mark}",
            i + 1,
            if correct { "correct" } else { "incorrect" },
            state.p_mastery,
            predict_correct(&state, &params)
        );
    }
}
