//! Operator commands behind the `apprentice` binary.
//!
//! [`run`] takes its arguments, input and output explicitly so the commands
//! can be driven in-process. Exit codes: 0 success, 2 invalid input or a
//! failed validation, 1 anything operational.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use apprentice_core::analytics::{self, render_table, TermRow, TermWindow};
use apprentice_core::domains::Catalog;
use apprentice_core::knowledge::{BktParams, MasteryConfig, MasteryStore};
use apprentice_core::transactions::{read_log, validate_log, write_log, LogError, TransactionRecord};
use apprentice_service::config::Config;
use apprentice_service::simulate::{simulate, CohortSpec};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, malformed input, or a validation failure.
    Invalid(String),
    /// I/O and everything else that is not the input's fault.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

fn failed(e: impl fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "apprentice", version, about = "Operator tools for the algebra tutors")]
pub struct Cli {
    /// Catalog directory to use instead of the built-in one.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate problem instances with their expert traces.
    Gen(GenArgs),
    /// Rebuild the mastery store from a log and report per student.
    Replay(ReplayArgs),
    /// Run a simulated cohort through the service and emit its log.
    Simulate(SimulateArgs),
    /// Usage funnel over a log, one row per term window.
    Funnel(FunnelArgs),
    /// Check a log's schema and invariants.
    Validate(ValidateArgs),
    /// Run the HTTP service until interrupted.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long = "type")]
    pub problem_type: String,
    #[arg(long)]
    pub seed: u64,
    /// Instances for seeds `seed..seed+count`.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// One JSON object per line instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Log file; standard input when absent or `-`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Mastery configuration (JSON, or TOML by extension); defaults otherwise.
    #[arg(long)]
    pub mastery: Option<PathBuf>,
    /// Print the canonical store JSON instead of per-student reports.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub students: usize,
    #[arg(long)]
    pub problems: usize,
    #[arg(long)]
    pub seed: u64,
    /// Cohort parameters (JSON, or TOML by extension): `truth` for the
    /// generative model, `tracing` for the platform.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Log destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the platform's live mastery store here.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Also write a JSON summary of the run here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FunnelArgs {
    /// Log file; standard input when absent or `-`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Students with access, for a single window spanning the whole log.
    #[arg(long, required_unless_present = "windows")]
    pub roster: Option<u64>,
    /// JSON list of term windows, each carrying its own roster.
    #[arg(long, conflicts_with = "roster")]
    pub windows: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Log file; standard input when absent or `-`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML or JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Both halves of a simulation, each defaulting when absent.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub truth: BktParams,
    pub tracing: MasteryConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    pub students: usize,
    pub problems: usize,
    pub seed: u64,
    pub records: usize,
    pub mean_mastery: f64,
    pub truly_mastered: f64,
}

pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return write!(out, "{e}").map_err(failed);
        }
        Err(e) => return Err(invalid(e.render())),
    };
    let catalog = || load_catalog(cli.catalog.as_deref());
    match cli.command {
        Command::Gen(a) => gen(&catalog()?, &a, out),
        Command::Replay(a) => replay(&catalog()?, &a, stdin, out),
        Command::Simulate(a) => run_simulation(catalog()?, &a, out),
        Command::Funnel(a) => funnel(&catalog()?, &a, stdin, out),
        Command::Validate(a) => validate(&catalog()?, &a, stdin, out),
        Command::Serve(a) => {
            let mut config = Config::load(a.config.as_deref()).map_err(invalid)?;
            if cli.catalog.is_some() {
                config.catalog_dir = cli.catalog;
            }
            apprentice_service::serve_blocking(config).map_err(failed)
        }
    }
}

fn load_catalog(dir: Option<&Path>) -> Result<Catalog, CliError> {
    match dir {
        Some(d) => Catalog::from_dir(d).map_err(invalid),
        None => Ok(Catalog::builtin()),
    }
}

/// JSON, or TOML when the file name ends in `.toml`.
fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn records(path: Option<&Path>, stdin: &mut dyn BufRead) -> Result<Vec<TransactionRecord>, CliError> {
    let parsed = match path {
        Some(p) if p != Path::new("-") => {
            let f = File::open(p).map_err(|e| failed(format!("{}: {e}", p.display())))?;
            read_log(BufReader::new(f))
        }
        _ => read_log(stdin),
    };
    parsed.map_err(|e| match e {
        LogError::Io(e) => failed(e),
        parse => invalid(parse),
    })
}

fn gen(catalog: &Catalog, a: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pt = catalog.problem_type(&a.problem_type).map_err(invalid)?;
    for seed in a.seed..a.seed.saturating_add(a.count) {
        let solved = catalog.instantiate(&pt.id, seed).map_err(failed)?;
        if a.json {
            serde_json::to_writer(&mut *out, &solved).map_err(failed)?;
            writeln!(out).map_err(failed)?;
            continue;
        }
        let inst = &solved.instance;
        let mut text = format!("{}\n  {}: {}\n  steps:\n", inst.id, pt.name, inst.statement_text);
        for step in &pt.steps {
            let value = solved.trace.preferred(&step.slot).map_err(failed)?.value.to_plain();
            text.push_str(&format!("    {}. {} = {}  [{}]\n", step.order, step.slot, value, step.kc_id));
        }
        text.push_str("  trace:\n");
        for f in &solved.trace.firings {
            text.push_str(&format!("    {} -> {} = {}\n", f.rule_id, f.derived.slot, f.derived.value.to_plain()));
        }
        writeln!(out, "{text}").map_err(failed)?;
    }
    Ok(())
}

fn replay(catalog: &Catalog, a: &ReplayArgs, stdin: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let config: MasteryConfig = match &a.mastery {
        Some(p) => read_config(p)?,
        None => MasteryConfig::default(),
    };
    config.validate().map_err(invalid)?;
    let log = records(a.log.as_deref(), stdin)?;
    let store =
        MasteryStore::replay(catalog, config, &log).map_err(|(i, e)| invalid(format!("record {i}: {e}")))?;
    if a.json {
        return writeln!(out, "{}", store.to_json()).map_err(failed);
    }
    let width = catalog.kc_ids().iter().map(String::len).max().unwrap_or(0);
    for student in store.students() {
        writeln!(out, "{student}").map_err(failed)?;
        for e in store.mastery_report(student, catalog) {
            let flag = if e.mastered { "  mastered" } else { "" };
            writeln!(out, "  {:<width$}  {:.4}{flag}", e.kc_id, e.p_mastery).map_err(failed)?;
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<io::BufWriter<File>, CliError> {
    File::create(path)
        .map(io::BufWriter::new)
        .map_err(|e| failed(format!("{}: {e}", path.display())))
}

fn run_simulation(catalog: Catalog, a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params: SimParams = match &a.params {
        Some(p) => read_config(p)?,
        None => SimParams::default(),
    };
    params.truth.validate().map_err(invalid)?;
    params.tracing.validate().map_err(invalid)?;
    let spec = CohortSpec {
        truth: params.truth,
        tracing: params.tracing,
        ..CohortSpec::new(a.students, a.problems, a.seed)
    };
    let outcome = simulate(&spec, Arc::new(catalog)).map_err(failed)?;
    match &a.out {
        Some(p) => {
            let mut f = create(p)?;
            write_log(&mut f, &outcome.records).and_then(|_| f.flush()).map_err(failed)?;
        }
        None => write_log(&mut &mut *out, &outcome.records).map_err(failed)?,
    }
    if let Some(p) = &a.store {
        fs::write(p, format!("{}\n", outcome.store_json)).map_err(failed)?;
    }
    let summary = SimSummary {
        students: a.students,
        problems: a.problems,
        seed: a.seed,
        records: outcome.records.len(),
        mean_mastery: outcome.mean_mastery,
        truly_mastered: outcome.truly_mastered,
    };
    log::info!("{}", serde_json::to_string(&summary).map_err(failed)?);
    if let Some(p) = &a.summary {
        fs::write(p, serde_json::to_string_pretty(&summary).map_err(failed)? + "\n").map_err(failed)?;
    }
    Ok(())
}

/// One window over every date the log touches.
fn whole_log_window(log: &[TransactionRecord], roster: u64) -> TermWindow {
    let dates = log.iter().map(|r| r.timestamp.date_naive());
    let start = dates.clone().min().unwrap_or_default();
    TermWindow {
        cycle: 1,
        term: "all".into(),
        start,
        end: dates.max().unwrap_or(start),
        roster,
        classes_deployed: None,
    }
}

fn funnel(catalog: &Catalog, a: &FunnelArgs, stdin: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let log = records(a.log.as_deref(), stdin)?;
    let rows = match (&a.windows, a.roster) {
        (Some(path), _) => {
            let windows: Vec<TermWindow> = read_config(path)?;
            analytics::term_table(&log, &windows, catalog).map_err(invalid)?
        }
        (None, Some(roster)) => {
            let window = whole_log_window(&log, roster);
            let report = analytics::funnel(&log, &window, catalog);
            vec![TermRow { window, report }]
        }
        (None, None) => return Err(invalid("either --roster or --windows is required")),
    };
    for r in &rows {
        if r.report.students_with_interaction > r.report.students_with_access {
            log::warn!("cycle {}: more interacting students than the roster", r.window.cycle);
        }
    }
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &rows).map_err(failed)?;
        writeln!(out).map_err(failed)
    } else {
        write!(out, "{}", render_table(&rows)).map_err(failed)
    }
}

fn validate(catalog: &Catalog, a: &ValidateArgs, stdin: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let log = records(a.log.as_deref(), stdin)?;
    let mut problems: Vec<String> = validate_log(&log, catalog)
        .into_iter()
        .map(|v| format!("record {}: {}", v.record, v.message))
        .collect();
    if problems.is_empty() {
        if let Err((i, e)) = MasteryStore::replay(catalog, MasteryConfig::default(), &log) {
            problems.push(format!("record {i}: {e}"));
        }
    }
    if problems.is_empty() {
        let students: std::collections::BTreeSet<&str> = log.iter().map(|r| r.student_id.as_str()).collect();
        return writeln!(out, "ok: {} records, {} students", log.len(), students.len()).map_err(failed);
    }
    for p in &problems {
        writeln!(out, "{p}").map_err(failed)?;
    }
    Err(invalid(format!("{} violation(s)", problems.len())))
}
