//! Deployment usage table computed from published per-cycle counts.

use apprentice_core::analytics::{FunnelReport, RetentionSummary};

fn main() {
    let cycles = [(1, 76, 47, 8), (2, 265, 71, 16), (3, 2054, 229, 30), (4, 1364, 188, 25)];
    println!("{:>5} {:>7} {:>11} {:>8} {:>11} {:>8}", "cycle", "access", "interaction", "% used", "finished>=1", "% users");
    for (cycle, access, used, finished) in cycles {
        let r = FunnelReport::from_counts(access, used, finished, 0);
        println!(
            "{cycle:>5} {access:>7} {used:>11} {:>7}% {finished:>11} {:>7}%",
            r.percent_used.to_string(),
            r.percent_users_finished_one.to_string()
        );
    }
    // Students recur across cycles, so the overall counts are distinct
    // students rather than column sums.
    let (access, used) = (3510, 520);
    let overall = FunnelReport::from_counts(access, used, 0, 0);
    let retention = RetentionSummary::from_counts(520, 158, 81);
    println!("\noverall use: {used}/{access} = {}%", overall.percent_used);
    println!(
        "finished one or more: {}/{} = {}%; five or more: {}/{} = {}%",
        retention.finished_one,
        retention.users,
        retention.percent_users_finished_one,
        retention.finished_five,
        retention.finished_one,
        retention.percent_finishers_finished_five
    );
}
