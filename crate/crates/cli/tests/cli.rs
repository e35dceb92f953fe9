use std::fs;
use std::io::Write;
use std::process::{Command, Stdio};

use apprentice_cli::{run, CliError, SimSummary};

fn cli(args: &[&str], stdin: &str) -> (Result<(), CliError>, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("apprentice").chain(args.iter().copied());
    let r = run(argv, &mut stdin.as_bytes(), &mut out);
    (r, String::from_utf8(out).unwrap())
}

fn ok(args: &[&str], stdin: &str) -> String {
    let (r, out) = cli(args, stdin);
    r.unwrap_or_else(|e| panic!("{args:?}: {e}"));
    out
}

fn code(args: &[&str], stdin: &str) -> i32 {
    cli(args, stdin).0.err().map_or(0, |e| e.exit_code())
}

#[test]
fn gen_is_deterministic() {
    let a = ok(&["gen", "--type", "exponent-product", "--seed", "1"], "");
    assert_eq!(a, ok(&["gen", "--type", "exponent-product", "--seed", "1"], ""));
    assert!(a.starts_with("exponent-product-0000000000000001\n"));
    let json = ok(&["gen", "--type", "factor-quadratic", "--seed", "4", "--count", "3", "--json"], "");
    assert_eq!(json.lines().count(), 3);
    for line in json.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(!v["trace"]["firings"].as_array().unwrap().is_empty());
    }
}

#[test]
fn exit_codes_separate_bad_input_from_failures() {
    assert_eq!(code(&["gen", "--type", "astrology", "--seed", "1"], ""), 2);
    assert_eq!(code(&["gen", "--seed", "1"], ""), 2);
    assert_eq!(code(&["frobnicate"], ""), 2);
    assert_eq!(code(&["validate", "--log", "/nonexistent/log.jsonl"], ""), 1);
    assert_eq!(code(&["validate"], "{not json\n"), 2);
    assert_eq!(code(&["replay"], "{\"timestamp\": 1}\n"), 2);
    assert_eq!(code(&["funnel"], ""), 2);
    assert!(ok(&["--help"], "").contains("simulate"));
}

#[test]
fn validate_flags_tampered_logs() {
    let log = ok(&["simulate", "--students", "2", "--problems", "2", "--seed", "3"], "");
    assert!(ok(&["validate"], &log).starts_with("ok: "));

    // Swap two records of one session: timestamps now run backwards.
    let mut lines: Vec<&str> = log.lines().collect();
    lines.swap(1, 2);
    let (r, out) = cli(&["validate"], &(lines.join("\n") + "\n"));
    assert_eq!(r.unwrap_err().exit_code(), 2);
    assert!(out.contains("record 2"), "{out}");

    let bad_kc = log.replacen("\"kc_id\":\"", "\"kc_id\":\"nonsense-", 1);
    assert_eq!(code(&["validate"], &bad_kc), 2);
}

#[test]
fn simulate_then_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let store = dir.path().join("store.json");
    ok(
        &[
            "simulate", "--students", "12", "--problems", "6", "--seed", "7",
            "--out", log.to_str().unwrap(), "--store", store.to_str().unwrap(),
        ],
        "",
    );
    let first = ok(&["replay", "--log", log.to_str().unwrap(), "--json"], "");
    let second = ok(&["replay", "--json"], &fs::read_to_string(&log).unwrap());
    assert_eq!(first, second);
    assert_eq!(first, fs::read_to_string(&store).unwrap());
    let report = ok(&["replay", "--log", log.to_str().unwrap()], "");
    assert!(report.starts_with("student-0000\n"));
}

#[test]
fn funnel_over_a_pipe_is_monotone() {
    let bin = env!("CARGO_BIN_EXE_apprentice");
    let sim = Command::new(bin)
        .args(["simulate", "--students", "15", "--problems", "6", "--seed", "7"])
        .output()
        .unwrap();
    assert!(sim.status.success());
    let mut funnel = Command::new(bin)
        .args(["funnel", "--roster", "500", "--json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    funnel.stdin.take().unwrap().write_all(&sim.stdout).unwrap();
    let out = funnel.wait_with_output().unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &rows[0]["report"];
    let counts: Vec<u64> = ["students_with_access", "students_with_interaction", "students_finished_one", "students_finished_five"]
        .iter()
        .map(|k| r[*k].as_u64().unwrap())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert_eq!(counts[..2], [500, 15]);
}

#[test]
fn funnel_takes_term_windows() {
    let dir = tempfile::tempdir().unwrap();
    let log = ok(&["simulate", "--students", "3", "--problems", "2", "--seed", "1"], "");
    let windows = dir.path().join("windows.json");
    fs::write(
        &windows,
        r#"[{"cycle": 1, "term": "Winter", "start": "2024-01-01", "end": "2024-01-31", "roster": 40, "classes_deployed": 2},
            {"cycle": 2, "term": "Spring", "start": "2024-02-01", "end": "2024-05-31", "roster": 60}]"#,
    )
    .unwrap();
    let table = ok(&["funnel", "--windows", windows.to_str().unwrap()], &log);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("Winter") && lines[1].contains("7.50%"), "{table}");
    assert!(lines[2].contains("Spring") && lines[2].contains("0.00%"), "{table}");

    fs::write(
        &windows,
        r#"[{"cycle": 1, "term": "a", "start": "2024-01-01", "end": "2024-01-31", "roster": 1},
            {"cycle": 2, "term": "b", "start": "2024-01-15", "end": "2024-02-28", "roster": 1}]"#,
    )
    .unwrap();
    assert_eq!(code(&["funnel", "--windows", windows.to_str().unwrap()], &log), 2);
}

fn mean_mastery(dir: &std::path::Path, params: &std::path::Path, seed: u64) -> f64 {
    let summary = dir.join(format!("summary-{seed}.json"));
    let out = dir.join("log.jsonl");
    ok(
        &[
            "simulate", "--students", "12", "--problems", "8", "--seed", &seed.to_string(),
            "--params", params.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--summary", summary.to_str().unwrap(),
        ],
        "",
    );
    let s: SimSummary = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    s.mean_mastery
}

/// Faster true learners end with higher traced mastery. Welch's t over ten
/// paired seeds must clear 3, far past any plausible noise at this size.
#[test]
fn faster_learners_reach_higher_mastery() {
    let dir = tempfile::tempdir().unwrap();
    let high = dir.path().join("high.toml");
    let low = dir.path().join("low.json");
    fs::write(&high, "[truth]\np_init = 0.3\np_transit = 0.4\np_slip = 0.1\np_guess = 0.2\n").unwrap();
    fs::write(&low, r#"{"truth": {"p_init": 0.3, "p_transit": 0.03, "p_slip": 0.1, "p_guess": 0.2}}"#).unwrap();
    let (mut hi, mut lo) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        hi.push(mean_mastery(dir.path(), &high, seed));
        lo.push(mean_mastery(dir.path(), &low, seed));
    }
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0), n)
    };
    let ((mh, vh, n), (ml, vl, _)) = (stats(&hi), stats(&lo));
    let t = (mh - ml) / (vh / n + vl / n).sqrt();
    assert!(t > 3.0, "high {hi:?} low {lo:?} t={t}");
    assert!(hi.iter().zip(&lo).all(|(h, l)| h > l));
}
