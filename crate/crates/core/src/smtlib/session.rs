//! A running SMT-LIB 2 solver process driven over stdin/stdout.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::emit;
use super::model::{parse_model, Assignment};
use super::sexp::{self, depth_delta, SExp};
use crate::contract::Sort;
use crate::error::SolverError;
use crate::unroll::{QueryFormula, StepVar, SymbolTable};

/// Environment variable overriding the default solver command line.
pub const SOLVER_ENV: &str = "VIABLE_SOLVER";

const DEFAULT_SOLVER: &str = "z3 -in -smt2";
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
/// Slack on top of the solver's own timeout before the process is killed.
const KILL_GRACE: Duration = Duration::from_secs(2);

/// Executable plus arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits a command line on whitespace.
    pub fn parse(line: &str) -> Option<SolverCommand> {
        let mut words = line.split_whitespace().map(str::to_string);
        let program = words.next()?;
        Some(SolverCommand { program, args: words.collect() })
    }

    /// `$VIABLE_SOLVER` if set and non-empty, otherwise `z3 -in -smt2`.
    pub fn from_env() -> SolverCommand {
        std::env::var(SOLVER_ENV)
            .ok()
            .and_then(|s| SolverCommand::parse(&s))
            .unwrap_or_default()
    }

    pub fn with_args(mut self, extra: impl IntoIterator<Item = String>) -> SolverCommand {
        self.args.extend(extra);
        self
    }
}

impl Default for SolverCommand {
    fn default() -> Self {
        SolverCommand::parse(DEFAULT_SOLVER).expect("default solver command")
    }
}

impl fmt::Display for SolverCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.program)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverVerdict {
    Sat(Assignment),
    Unsat,
    Unknown(String),
    Timeout,
}

/// Declarations and top-level assertions to add to a session.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fragment {
    pub declarations: Vec<(StepVar, Sort)>,
    pub assertions: Vec<String>,
}

/// Kills a session's process from another thread.
#[derive(Clone)]
pub struct SessionKiller {
    child: Arc<Mutex<Child>>,
    killed: Arc<AtomicBool>,
}

impl SessionKiller {
    pub fn kill(&self) {
        self.killed.store(true, Ordering::SeqCst);
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
        }
    }
}

pub struct Session {
    command: SolverCommand,
    child: Arc<Mutex<Child>>,
    stdin: ChildStdin,
    lines: Receiver<String>,
    declared: HashSet<StepVar>,
    depth: usize,
    check_timeout: Duration,
    solver_name: String,
    killed: Arc<AtomicBool>,
    dead: bool,
}

enum Reply {
    Line(String),
    TimedOut,
}

impl Session {
    /// Starts the solver and performs the handshake: print-success, model
    /// production, the per-check timeout (in milliseconds) and a name query.
    pub fn start(command: &SolverCommand, check_timeout: Duration) -> Result<Session, SolverError> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn { command: command.to_string(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut session = Session {
            command: command.clone(),
            child: Arc::new(Mutex::new(child)),
            stdin,
            lines,
            declared: HashSet::new(),
            depth: 0,
            check_timeout,
            solver_name: String::new(),
            killed: Arc::new(AtomicBool::new(false)),
            dead: false,
        };
        session.handshake().map_err(|e| {
            session.kill();
            match e {
                SolverError::Handshake(_) => e,
                other => SolverError::Handshake(other.to_string()),
            }
        })?;
        Ok(session)
    }

    fn handshake(&mut self) -> Result<(), SolverError> {
        let deadline = Some(Instant::now() + HANDSHAKE_TIMEOUT);
        self.command_with("(set-option :print-success true)", deadline)?;
        self.command_with("(set-option :produce-models true)", deadline)?;
        let ms = self.check_timeout.as_millis().max(1);
        self.write(&format!("(set-option :timeout {ms})"))?;
        match self.read_reply(deadline)? {
            SExp::Atom(a) if a == "success" || a == "unsupported" => {}
            other => return Err(SolverError::Handshake(format!("unexpected reply `{other}` to timeout option"))),
        }
        self.write("(get-info :name)")?;
        match self.read_reply(deadline)? {
            SExp::List(items) if items.len() == 2 && items[0].atom() == Some(":name") => {
                self.solver_name = match &items[1] {
                    SExp::Str(s) => s.clone(),
                    other => other.to_string(),
                };
                Ok(())
            }
            other => Err(SolverError::Handshake(format!("unexpected reply `{other}` to get-info"))),
        }
    }

    pub fn solver_name(&self) -> &str {
        &self.solver_name
    }

    pub fn solver_command(&self) -> &SolverCommand {
        &self.command
    }

    pub fn stack_depth(&self) -> usize {
        self.depth
    }

    pub fn is_declared(&self, var: &StepVar) -> bool {
        self.declared.contains(var)
    }

    pub fn killer(&self) -> SessionKiller {
        SessionKiller { child: Arc::clone(&self.child), killed: Arc::clone(&self.killed) }
    }

    pub fn kill(&mut self) {
        self.killer().kill();
        self.dead = true;
    }

    fn write(&mut self, text: &str) -> Result<(), SolverError> {
        if self.dead || self.killed.load(Ordering::SeqCst) {
            self.dead = true;
            return Err(SolverError::Dead);
        }
        let res = writeln!(self.stdin, "{text}").and_then(|_| self.stdin.flush());
        res.map_err(|e| {
            self.dead = true;
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                SolverError::Dead
            } else {
                SolverError::Io(e)
            }
        })
    }

    fn next_line(&mut self, deadline: Option<Instant>) -> Result<Reply, SolverError> {
        let received = match deadline {
            None => self.lines.recv().map_err(|_| RecvTimeoutError::Disconnected),
            Some(d) => {
                let left = d.saturating_duration_since(Instant::now());
                self.lines.recv_timeout(left)
            }
        };
        match received {
            Ok(line) => Ok(Reply::Line(line)),
            Err(RecvTimeoutError::Timeout) => Ok(Reply::TimedOut),
            Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                Err(SolverError::Dead)
            }
        }
    }

    /// Reads one complete S-expression reply, possibly spanning lines.
    /// Expiry of `deadline` kills the process.
    fn read_reply_or_timeout(&mut self, deadline: Option<Instant>) -> Result<Option<SExp>, SolverError> {
        let mut text = String::new();
        let mut depth = 0;
        loop {
            let line = match self.next_line(deadline)? {
                Reply::Line(l) => l,
                Reply::TimedOut => {
                    self.kill();
                    return Ok(None);
                }
            };
            let trimmed = line.trim();
            if text.is_empty() && (trimmed.is_empty() || trimmed.starts_with(';')) {
                continue;
            }
            depth = depth_delta(&line, depth);
            text.push_str(&line);
            text.push('\n');
            if depth <= 0 {
                return sexp::parse(&text)
                    .map(Some)
                    .map_err(|e| SolverError::Protocol(format!("{e} in reply `{}`", text.trim())));
            }
        }
    }

    fn read_reply(&mut self, deadline: Option<Instant>) -> Result<SExp, SolverError> {
        self.read_reply_or_timeout(deadline)?
            .ok_or_else(|| SolverError::Protocol("solver did not reply in time".into()))
    }

    fn command_with(&mut self, text: &str, deadline: Option<Instant>) -> Result<(), SolverError> {
        self.write(text)?;
        match self.read_reply(deadline)? {
            SExp::Atom(a) if a == "success" => Ok(()),
            other => Err(SolverError::Protocol(format!("`{text}` answered `{other}`"))),
        }
    }

    /// Sends a command that must answer `success`.
    pub fn send(&mut self, text: &str) -> Result<(), SolverError> {
        self.command_with(text, None)
    }

    /// Declares `var` unless this session already has it.
    pub fn declare(&mut self, var: &StepVar, sort: Sort) -> Result<(), SolverError> {
        if self.declared.contains(var) {
            return Ok(());
        }
        self.send(&emit::declare(var, sort))?;
        self.declared.insert(var.clone());
        Ok(())
    }

    pub fn assert(&mut self, formula: &str) -> Result<(), SolverError> {
        self.send(&format!("(assert {formula})"))
    }

    pub fn push(&mut self) -> Result<(), SolverError> {
        self.send("(push 1)")?;
        self.depth += 1;
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SolverError> {
        if self.depth == 0 {
            return Err(SolverError::Protocol("pop on an empty assertion stack".into()));
        }
        self.send("(pop 1)")?;
        self.depth -= 1;
        Ok(())
    }

    /// Adds a fragment's declarations and assertions at the current level.
    pub fn add(&mut self, fragment: &Fragment) -> Result<(), SolverError> {
        for (v, s) in &fragment.declarations {
            self.declare(v, *s)?;
        }
        for a in &fragment.assertions {
            self.assert(a)?;
        }
        Ok(())
    }

    /// Runs `check-sat` and, on `sat`, reads the model over `symbols`. The
    /// wall-clock guard is the per-check timeout plus a grace period, capped
    /// by `deadline`; on expiry the process is killed and `Timeout` returned.
    pub fn check_sat(&mut self, symbols: &SymbolTable, deadline: Option<Instant>) -> Result<SolverVerdict, SolverError> {
        let guard = Instant::now() + self.check_timeout + KILL_GRACE;
        let deadline = Some(deadline.map_or(guard, |d| d.min(guard)));
        self.write("(check-sat)")?;
        let reply = match self.read_reply_or_timeout(deadline)? {
            Some(r) => r,
            None => return Ok(SolverVerdict::Timeout),
        };
        match reply.atom() {
            Some("unsat") => Ok(SolverVerdict::Unsat),
            Some("sat") => {
                self.write("(get-model)")?;
                let model = self.read_reply(deadline)?;
                if let Some([SExp::Atom(e), ..]) = model.list() {
                    if e == "error" {
                        return Err(SolverError::Protocol(format!("get-model failed: {model}")));
                    }
                }
                Ok(SolverVerdict::Sat(parse_model(&model.to_string(), symbols)?))
            }
            Some("unknown") => {
                self.write("(get-info :reason-unknown)")?;
                let reason = match self.read_reply(deadline)? {
                    SExp::List(items) if items.len() == 2 => match &items[1] {
                        SExp::Str(s) => s.clone(),
                        other => other.to_string(),
                    },
                    other => other.to_string(),
                };
                let lower = reason.to_lowercase();
                if lower.contains("timeout") || lower.contains("canceled") || lower.contains("cancelled") {
                    Ok(SolverVerdict::Timeout)
                } else {
                    Ok(SolverVerdict::Unknown(reason))
                }
            }
            _ => Err(SolverError::Protocol(format!("check-sat answered `{reply}`"))),
        }
    }

    /// Keeps `base` asserted at the top level for later calls and checks
    /// `base ∧ delta` with `delta` isolated under `push`/`pop`.
    pub fn check_incremental(
        &mut self,
        base: &Fragment,
        delta: &Fragment,
        symbols: &SymbolTable,
        deadline: Option<Instant>,
    ) -> Result<SolverVerdict, SolverError> {
        self.add(base)?;
        for (v, s) in &delta.declarations {
            self.declare(v, *s)?;
        }
        self.push()?;
        for a in &delta.assertions {
            self.assert(a)?;
        }
        let verdict = self.check_sat(symbols, deadline)?;
        if verdict == SolverVerdict::Timeout {
            return Ok(verdict);
        }
        self.pop()?;
        Ok(verdict)
    }

    /// Declares and asserts a whole query in this session, then checks it.
    pub fn check_query(&mut self, q: &QueryFormula, deadline: Option<Instant>) -> Result<SolverVerdict, SolverError> {
        let fragment = Fragment {
            declarations: q
                .exists
                .iter()
                .map(|v| (v.clone(), q.sort_of(v).expect("existential in symbol table")))
                .collect(),
            assertions: vec![emit::assertion(q)],
        };
        self.check_incremental(&Fragment::default(), &fragment, &existential_symbols(q), deadline)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if !self.dead {
            let _ = writeln!(self.stdin, "(exit)");
            let _ = self.stdin.flush();
        }
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// The part of a query's symbol table a model is read over.
pub fn existential_symbols(q: &QueryFormula) -> SymbolTable {
    q.exists
        .iter()
        .filter_map(|v| q.symbols.get(v).map(|s| (v.clone(), *s)))
        .collect()
}

/// Checks `q` in a fresh session that is shut down afterwards.
pub fn check_monolithic(
    command: &SolverCommand,
    q: &QueryFormula,
    check_timeout: Duration,
    deadline: Option<Instant>,
) -> Result<SolverVerdict, SolverError> {
    Session::start(command, check_timeout)?.check_query(q, deadline)
}
