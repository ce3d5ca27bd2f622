//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::contract::{load_contract, TypedContract, VarKind};
use crate::corpus::check_seed;
use crate::engine::{check_realizability, write_depth_scripts, CheckResult, EngineOptions, Report, Validation};
use crate::eval::Trace;
use crate::oracle::{DomainSpec, GeneratorParams, Oracle};
use crate::smtlib::SolverCommand;

pub const EXIT_REALIZABLE: i32 = 0;
pub const EXIT_UNREALIZABLE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "viable", version, about = "Realizability checking for assume/guarantee contracts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Decide realizability of a contract with an SMT solver.
    Check {
        file: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decide realizability exactly on the finite domain given by the
    /// file's `-- @oracle-domain` annotation.
    Oracle {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write the base and extend scripts for one depth.
    DumpSmt {
        file: PathBuf,
        #[arg(short = 'n', long = "depth")]
        depth: usize,
        #[arg(short = 'o', long = "out", default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        simplify: bool,
    },
    /// Run the engine against the oracle on generated contracts.
    Corpus {
        /// Half-open seed range, `a..b`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Range<u64>,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Solver command line; defaults to $VIABLE_SOLVER or `z3 -in -smt2`.
    #[arg(long)]
    pub solver: Option<String>,
    /// Extra solver argument, repeatable.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    pub solver_args: Vec<String>,
    #[arg(long, default_value_t = 200)]
    pub max_depth: usize,
    /// Overall time limit in seconds.
    #[arg(long, default_value_t = 1000.0)]
    pub timeout: f64,
    /// Per-check solver time limit in seconds.
    #[arg(long, default_value_t = 20.0)]
    pub check_timeout: f64,
    #[arg(long)]
    pub no_parallel: bool,
    /// Write every issued query to this directory.
    #[arg(long)]
    pub dump_smt: Option<PathBuf>,
    #[arg(long)]
    pub simplify: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected `a..b`")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a >= b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..b)
}

fn seconds(name: &str, v: f64) -> Result<Duration, String> {
    if v.is_finite() && v > 0.0 {
        Ok(Duration::from_secs_f64(v))
    } else {
        Err(format!("--{name} must be a positive number of seconds"))
    }
}

impl EngineArgs {
    pub fn options(&self) -> Result<EngineOptions, String> {
        let base = match &self.solver {
            Some(s) => SolverCommand::parse(s).ok_or("--solver is empty")?,
            None => SolverCommand::from_env(),
        };
        Ok(EngineOptions {
            max_depth: self.max_depth,
            overall_timeout: seconds("timeout", self.timeout)?,
            per_check_timeout: seconds("check-timeout", self.check_timeout)?,
            parallel: !self.no_parallel,
            validate_counterexamples: true,
            simplify: self.simplify,
            solver: base.with_args(self.solver_args.iter().cloned()),
            dump_dir: self.dump_smt.clone(),
        })
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(io.err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn read_contract(path: &Path) -> Result<(String, TypedContract), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let contract = load_contract(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((text, contract))
}

fn dispatch(cmd: Cmd, io: &mut Io) -> Result<i32, String> {
    match cmd {
        Cmd::Check { file, engine, format } => {
            let opts = engine.options()?;
            let (_, contract) = read_contract(&file)?;
            let report = check_realizability(&contract, &opts).map_err(|e| e.to_string())?;
            let text = match format {
                Format::Text => render_text(&contract, &report),
                Format::Json => report_json(&report).to_string() + "\n",
            };
            io.out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
            Ok(exit_code(&report.result))
        }
        Cmd::Oracle { file, format } => {
            let (text, contract) = read_contract(&file)?;
            let dom = DomainSpec::from_source(&text)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("{}: no `-- @oracle-domain` annotation", file.display()))?;
            let oracle = Oracle::new(&contract, &dom).map_err(|e| e.to_string())?;
            let realizable = oracle.realizable();
            let viable = oracle.viable_states().len();
            let rendered = match format {
                Format::Text => format!(
                    "{}\nviable states: {viable} of {}\n",
                    if realizable { "REALIZABLE" } else { "UNREALIZABLE" },
                    oracle.num_states()
                ),
                Format::Json => {
                    let j = json!({
                        "result": if realizable { "realizable" } else { "unrealizable" },
                        "viable_states": viable,
                        "states": oracle.num_states(),
                    });
                    j.to_string() + "\n"
                }
            };
            io.out.write_all(rendered.as_bytes()).map_err(|e| e.to_string())?;
            Ok(if realizable { EXIT_REALIZABLE } else { EXIT_UNREALIZABLE })
        }
        Cmd::DumpSmt { file, depth, out, simplify } => {
            let (_, contract) = read_contract(&file)?;
            let paths = write_depth_scripts(&contract, depth, simplify, &out).map_err(|e| e.to_string())?;
            for p in paths {
                writeln!(io.out, "{}", p.display()).map_err(|e| e.to_string())?;
            }
            Ok(0)
        }
        Cmd::Corpus { seeds, engine } => {
            let opts = engine.options()?;
            let params = GeneratorParams::default();
            let (mut violations, mut unknown, mut total) = (0, 0, 0);
            for seed in seeds {
                let outcome = check_seed(seed, &params, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
                writeln!(io.out, "{outcome}").map_err(|e| e.to_string())?;
                total += 1;
                violations += outcome.violation.is_some() as usize;
                unknown += matches!(outcome.result, Some(CheckResult::Unknown { .. })) as usize;
            }
            writeln!(io.out, "{total} contracts, {violations} violations, {unknown} unknown").map_err(|e| e.to_string())?;
            Ok(if violations == 0 { 0 } else { 1 })
        }
    }
}

pub fn exit_code(result: &CheckResult) -> i32 {
    match result {
        CheckResult::Realizable { .. } => EXIT_REALIZABLE,
        CheckResult::Unrealizable { .. } => EXIT_UNREALIZABLE,
        CheckResult::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn depth_or_none(d: Option<usize>) -> String {
    d.map_or("none".to_string(), |d| d.to_string())
}

/// The JSON form of a report. The trace uses the same schema as
/// [`Trace::to_json`].
pub fn report_json(report: &Report) -> Json {
    let mut j = match &report.result {
        CheckResult::Realizable { n } => json!({ "result": "realizable", "n": n }),
        CheckResult::Unrealizable { n, trace, spurious_possible, no_initial_state, validation } => json!({
            "result": "unrealizable",
            "n": n,
            "spurious_possible": spurious_possible,
            "no_initial_state": no_initial_state,
            "validation": match validation {
                Validation::Confirmed => "confirmed".to_string(),
                Validation::Unconfirmed(r) => format!("unconfirmed: {r}"),
                Validation::Skipped => "skipped".to_string(),
            },
            "trace": serde_json::to_value(trace).expect("trace serializes"),
        }),
        CheckResult::Unknown { reason, .. } => json!({ "result": "unknown", "reason": reason.to_string() }),
    };
    j["base_depth_reached"] = json!(report.base_depth_reached);
    j["elapsed_seconds"] = json!(report.elapsed.as_secs_f64());
    j
}

/// Human-readable report: verdict, timing, and for unrealizable verdicts a
/// table with one row per step and the stuck input last.
pub fn render_text(contract: &TypedContract, report: &Report) -> String {
    let mut s = String::new();
    match &report.result {
        CheckResult::Realizable { n } => s.push_str(&format!("REALIZABLE (n={n})\n")),
        CheckResult::Unrealizable { n, .. } => s.push_str(&format!("UNREALIZABLE (n={n})\n")),
        CheckResult::Unknown { reason, .. } => s.push_str(&format!("UNKNOWN ({reason})\n")),
    }
    s.push_str(&format!("elapsed: {:.3}s\n", report.elapsed.as_secs_f64()));
    s.push_str(&format!("base check reached depth: {}\n", depth_or_none(report.base_depth_reached)));
    if let CheckResult::Unrealizable { trace, no_initial_state, validation, .. } = &report.result {
        if *no_initial_state {
            s.push_str("no state satisfies the initial guarantee\n");
        } else {
            s.push_str("counterexample:\n");
            s.push_str(&trace_table(contract, trace));
            match validation {
                Validation::Confirmed => s.push_str("the last state has no successor for the stuck input (confirmed)\n"),
                Validation::Unconfirmed(r) => s.push_str(&format!("stuck state could not be confirmed: {r}\n")),
                Validation::Skipped => {}
            }
        }
        s.push_str(
            "note: this counterexample may be spurious; the check used is exact only for realizable verdicts\n",
        );
    }
    s
}

/// Columns are the declared variables in order; the stuck input is the last
/// row, marked with `>>`.
pub fn trace_table(contract: &TypedContract, trace: &Trace) -> String {
    let names: Vec<&str> = contract.decls().iter().map(|d| d.name.as_str()).collect();
    let cell = |state: Option<&crate::eval::Valuation>, input: Option<&crate::eval::Valuation>, name: &str| {
        let kind = contract.decl(name).map(|d| d.kind);
        let src = if kind == Some(VarKind::Input) { input } else { state };
        src.and_then(|v| v.get(name)).map_or("-".to_string(), |v| v.to_string())
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["step".to_string()];
    header.extend(names.iter().map(|n| n.to_string()));
    rows.push(header);
    let mut first = vec!["0".to_string()];
    first.extend(names.iter().map(|n| cell(Some(&trace.initial), None, n)));
    rows.push(first);
    for (k, step) in trace.steps.iter().enumerate() {
        let mut row = vec![(k + 1).to_string()];
        row.extend(names.iter().map(|n| cell(Some(&step.next), Some(&step.input), n)));
        rows.push(row);
    }
    if let Some(input) = &trace.stuck_input {
        let mut row = vec![">> stuck".to_string()];
        row.extend(names.iter().map(|n| cell(None, Some(input), n)));
        rows.push(row);
    }
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        s.push_str("  ");
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}
