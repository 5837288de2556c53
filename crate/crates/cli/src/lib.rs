//! The `coalign` command line: validate nets, align logs, simulate logs and
//! export DOT.
//!
//! Exit codes: 0 ok, 1 deviations or structural violations, 2 bad input,
//! 3 search budget exhausted.

use clap::{Parser, Subcommand, ValueEnum};
use coalign_core::align::{align_log, AlignError, CostTable, SearchOptions};
use coalign_core::approx::{approximate_alignment, ApproxError, ApproxOptions};
use coalign_core::eventlog::{parse_csv, to_csv_string};
use coalign_core::format::dot::{log_to_dot, net_to_dot, report_to_dot};
use coalign_core::format::netfile::parse_net;
use coalign_core::format::report::AlignmentReport;
use coalign_core::rcnu::simulate::{simulate, Deviations};
use coalign_core::rcnu::{validate_structure, RcNuNet};
use serde_json::json;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DEVIATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coalign", version, about = "Alignments of event logs against resource-constrained nu-Petri nets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Approx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Net,
    Log,
    Report,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural restrictions of a net file.
    Validate {
        net: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Align a CSV log against a net and write a JSON report.
    Align {
        net: PathBuf,
        log: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Maximum number of search states (per case and per interval in approx mode).
        #[arg(long, default_value_t = 2_000_000)]
        node_budget: usize,
        /// Node budget of the reordering program in approx mode.
        #[arg(long, default_value_t = 20_000)]
        ilp_budget: usize,
        /// Spare fresh identifiers available to nu variables.
        #[arg(long, default_value_t = 1)]
        fresh_pool: usize,
        #[arg(long, default_value = "sync=0,tau=1,visible=10000")]
        costs: CostTable,
        /// Exit with 1 when the alignment cost is positive.
        #[arg(long)]
        fail_on_deviation: bool,
    },
    /// Simulate cases of a net into a CSV log.
    Simulate {
        net: PathBuf,
        #[arg(long, default_value_t = 2)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        drop_events: usize,
        #[arg(long, default_value_t = 0)]
        swap_resources: usize,
        #[arg(long, default_value_t = 0)]
        reorder_contention: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a net, a CSV log or an alignment report as GraphViz DOT.
    Dot {
        input: PathBuf,
        /// Defaults to `log` for .csv files, `report` for JSON with a schema version, else `net`.
        #[arg(long, value_enum)]
        kind: Option<InputKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn input(message: impl fmt::Display) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_net(path: &Path) -> Result<RcNuNet, Failure> {
    parse_net(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| input(format!("stdout: {e}"))),
    }
}

fn align_failure(e: &AlignError) -> Failure {
    match e {
        AlignError::Exhausted(_) => Failure { code: EXIT_BUDGET, message: e.to_string() },
        _ => input(e),
    }
}

/// Runs one command and returns its exit code.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Validate { net, out } => {
            let net = load_net(&net)?;
            let violations = validate_structure(&net);
            let report = json!({
                "valid": violations.is_empty(),
                "places": net.places.len(),
                "transitions": net.transitions.len(),
                "violations": violations
                    .iter()
                    .map(|v| json!({ "restriction": v.restriction(), "message": v.to_string() }))
                    .collect::<Vec<_>>(),
            });
            emit(&out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()), stdout)?;
            Ok(if violations.is_empty() { EXIT_OK } else { EXIT_DEVIATION })
        }
        Command::Align { net, log, mode, out, dot, node_budget, ilp_budget, fresh_pool, costs, fail_on_deviation } => {
            let net = load_net(&net)?;
            let violations = validate_structure(&net);
            if let Some(v) = violations.first() {
                return Err(input(format!("net violates its structural restrictions: {v}")));
            }
            let log = parse_csv(&read(&log)?).map_err(|e| input(format!("{}: {e}", log.display())))?;
            let search = SearchOptions { node_budget, spare_ids: fresh_pool, ..SearchOptions::default() };
            let report = match mode {
                Mode::Exact => {
                    let r = align_log(&net, &log, &costs, &search).map_err(|e| align_failure(&e))?;
                    AlignmentReport::from_alignment(&net, &r.alignment, &costs, "exact")
                }
                Mode::Approx => {
                    let opts = ApproxOptions { costs, search, ilp_nodes: ilp_budget, realign_nodes: node_budget };
                    let r = approximate_alignment(&net, &log, &opts).map_err(|e| match &e {
                        ApproxError::Case { source, .. } | ApproxError::Align(source) => {
                            Failure { code: align_failure(source).code, message: e.to_string() }
                        }
                        _ => input(e),
                    })?;
                    AlignmentReport::from_approx(&net, &r, &costs)
                }
            };
            emit(&out, &format!("{}\n", report.to_json()), stdout)?;
            if let Some(p) = dot {
                std::fs::write(&p, report_to_dot(&report)).map_err(|e| input(format!("{}: {e}", p.display())))?;
            }
            Ok(if fail_on_deviation && report.total_cost > 0 { EXIT_DEVIATION } else { EXIT_OK })
        }
        Command::Simulate { net, cases, seed, drop_events, swap_resources, reorder_contention, out } => {
            let net = load_net(&net)?;
            if let Some(v) = validate_structure(&net).first() {
                return Err(input(format!("net violates its structural restrictions: {v}")));
            }
            let dev = Deviations { drop_events, swap_resources, reorder_contention };
            let log = simulate(&net, cases, seed, dev).map_err(|e| Failure { code: EXIT_DEVIATION, message: e.to_string() })?;
            emit(&out, &to_csv_string(&log), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Dot { input: path, kind, out } => {
            let text = read(&path)?;
            let kind = kind.unwrap_or_else(|| {
                let csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
                let report = serde_json::from_str::<serde_json::Value>(&text).is_ok_and(|v| v.get("schema_version").is_some());
                match (csv, report) {
                    (true, _) => InputKind::Log,
                    (false, true) => InputKind::Report,
                    _ => InputKind::Net,
                }
            });
            let bad = |e: &dyn fmt::Display| input(format!("{}: {e}", path.display()));
            let dot = match kind {
                InputKind::Net => net_to_dot(&parse_net(&text).map_err(|e| bad(&e))?),
                InputKind::Log => log_to_dot(&parse_csv(&text).map_err(|e| bad(&e))?),
                InputKind::Report => report_to_dot(&AlignmentReport::parse(&text).map_err(|e| bad(&e))?),
            };
            emit(&out, &dot, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses arguments, runs the command and reports failures on `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {f}");
            f.code
        }
    }
}
