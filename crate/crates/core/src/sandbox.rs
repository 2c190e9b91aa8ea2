//! Out-of-process candidate execution over a line-delimited JSON ask/tell protocol.
//!
//! The harness writes one `init` message, then answers every `ask` with a `tell` until the
//! candidate sends `done` or exits. The harness owns the evaluation counter; an `ask` after
//! the budget is spent terminates the candidate.
//!
//! ```text
//! -> {"type":"init","dim":2,"budget":3,"lb":[0.0,0.0],"ub":[1.0,1.0],"seed":7}
//! <- {"type":"ask","x":[0.25,0.5]}
//! -> {"type":"tell","fitness":0.125,"remaining":2}
//! <- {"type":"done"}
//! ```

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use crate::problems::{Budgeted, EvalError, Objective, ProblemError, RunTrajectory};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const STDERR_LIMIT: usize = 8 * 1024;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("empty candidate command")]
    EmptyCommand,
    #[error("failed to start `{program}`: {source}")]
    Spawn { program: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Ok,
    Crashed,
    Timeout,
    BudgetViolation,
    ProtocolError,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Crashed => "crashed",
            RunStatus::Timeout => "timeout",
            RunStatus::BudgetViolation => "budget-violation",
            RunStatus::ProtocolError => "protocol-error",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRunResult {
    /// Every evaluation the harness performed, including those before a failure.
    pub trajectory: RunTrajectory,
    pub status: RunStatus,
    /// Tail of the candidate's stderr, at most `STDERR_LIMIT` bytes.
    pub stderr_capture: String,
    /// Harness-side explanation for non-ok statuses.
    pub detail: Option<String>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandboxConfig {
    pub timeout: Duration,
    pub stderr_limit: usize,
    pub working_dir: Option<PathBuf>,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self { timeout: DEFAULT_TIMEOUT, stderr_limit: STDERR_LIMIT, working_dir: None }
    }
}

/// What a candidate is asked to optimize.
pub struct Task<'a> {
    pub objective: &'a dyn Objective,
    pub instance_id: &'a str,
    pub budget: usize,
    pub seed: u64,
}

pub fn init_message(task: &Task) -> String {
    let b = task.objective.bounds();
    json!({
        "type": "init",
        "dim": b.dim(),
        "budget": task.budget,
        "lb": b.lower(),
        "ub": b.upper(),
        "seed": task.seed,
    })
    .to_string()
}

pub fn tell_message(fitness: f64, remaining: usize) -> String {
    json!({ "type": "tell", "fitness": fitness, "remaining": remaining }).to_string()
}

/// A parsed candidate line.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidateMessage {
    Ask(Vec<f64>),
    Done,
}

pub fn parse_candidate_line(line: &str) -> Result<CandidateMessage, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    match v.get("type").and_then(Value::as_str) {
        Some("done") => Ok(CandidateMessage::Done),
        Some("ask") => {
            let xs = v.get("x").and_then(Value::as_array).ok_or("ask without an `x` array")?;
            xs.iter()
                .map(|e| e.as_f64().ok_or_else(|| format!("non-numeric coordinate {e}")))
                .collect::<Result<Vec<f64>, String>>()
                .map(CandidateMessage::Ask)
        }
        Some(other) => Err(format!("unknown message type `{other}`")),
        None => Err("message without a `type` field".into()),
    }
}

enum Line {
    Text(String),
    Eof,
    Failed(std::io::Error),
}

fn spawn_stdout_reader(stdout: impl Read + Send + 'static) -> (Receiver<Line>, JoinHandle<()>) {
    let (tx, rx) = mpsc::channel();
    let handle = thread::spawn(move || {
        let mut reader = BufReader::new(stdout);
        loop {
            let mut buf = String::new();
            match reader.read_line(&mut buf) {
                Ok(0) => {
                    let _ = tx.send(Line::Eof);
                    return;
                }
                Ok(_) => {
                    if tx.send(Line::Text(buf)).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Line::Failed(e));
                    return;
                }
            }
        }
    });
    (rx, handle)
}

/// Reads stderr to the end, keeping only the last `limit` bytes.
fn spawn_stderr_reader(mut stderr: impl Read + Send + 'static, limit: usize) -> JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut chunk = [0u8; 4096];
        while let Ok(n) = stderr.read(&mut chunk) {
            if n == 0 {
                break;
            }
            kept.extend_from_slice(&chunk[..n]);
            if kept.len() > 2 * limit.max(1) {
                kept.drain(..kept.len() - limit);
            }
        }
        kept
    })
}

pub(crate) fn tail_utf8(bytes: &[u8], limit: usize) -> String {
    let mut start = bytes.len().saturating_sub(limit);
    // Skip UTF-8 continuation bytes so the tail starts on a character boundary.
    while start < bytes.len() && (bytes[start] & 0xC0) == 0x80 {
        start += 1;
    }
    String::from_utf8_lossy(&bytes[start..]).into_owned()
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        if let Ok(pid) = i32::try_from(child.id()) {
            // The child leads its own process group, so this also reaches grandchildren.
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
        }
    }
    let _ = child.kill();
}

fn wait_until(child: &mut Child, deadline: Instant) -> Option<ExitStatus> {
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Some(status),
            Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
            _ => return None,
        }
    }
}

struct Session<'a> {
    stdin: Option<ChildStdin>,
    f: Budgeted<'a>,
}

impl Session<'_> {
    fn send(&mut self, line: &str) {
        // A closed pipe means the candidate is gone; its exit status tells the rest.
        if let Some(stdin) = self.stdin.as_mut() {
            let ok = stdin.write_all(line.as_bytes()).and_then(|_| stdin.write_all(b"\n")).and_then(|_| stdin.flush());
            if ok.is_err() {
                self.stdin = None;
            }
        }
    }
}

enum Outcome {
    Finished(RunStatus, Option<String>),
    /// stdout closed; the exit status decides.
    Eof,
}

/// Runs one candidate process against `task` and classifies how it ended.
pub fn run_candidate(command: &[String], task: &Task, cfg: &SandboxConfig) -> Result<CandidateRunResult, SandboxError> {
    let program = command.first().ok_or(SandboxError::EmptyCommand)?;
    let start = Instant::now();
    let deadline = start + cfg.timeout;
    let mut cmd = Command::new(program);
    cmd.args(&command[1..]).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    if let Some(dir) = &cfg.working_dir {
        cmd.current_dir(dir);
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(|source| SandboxError::Spawn { program: program.clone(), source })?;
    let (lines, stdout_handle) = spawn_stdout_reader(child.stdout.take().expect("piped stdout"));
    let stderr_handle = spawn_stderr_reader(child.stderr.take().expect("piped stderr"), cfg.stderr_limit);

    let mut session = Session { stdin: child.stdin.take(), f: Budgeted::new(task.objective, task.budget, task.instance_id) };
    session.send(&init_message(task));

    let outcome = loop {
        let wait = deadline.saturating_duration_since(Instant::now());
        let line = match lines.recv_timeout(wait) {
            Ok(Line::Text(t)) => t,
            Ok(Line::Eof) | Err(RecvTimeoutError::Disconnected) => break Outcome::Eof,
            Ok(Line::Failed(e)) => break Outcome::Finished(RunStatus::ProtocolError, Some(format!("reading stdout: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                break Outcome::Finished(RunStatus::Timeout, Some(format!("no completion within {:?}", cfg.timeout)))
            }
        };
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        match parse_candidate_line(line) {
            Err(e) => break Outcome::Finished(RunStatus::ProtocolError, Some(e)),
            Ok(CandidateMessage::Done) => break Outcome::Finished(RunStatus::Ok, None),
            Ok(CandidateMessage::Ask(x)) => {
                if session.f.remaining() == 0 {
                    break Outcome::Finished(
                        RunStatus::BudgetViolation,
                        Some(format!("ask after all {} evaluations were used", task.budget)),
                    );
                }
                match session.f.call(&x) {
                    Ok(y) => {
                        let msg = tell_message(y, session.f.remaining());
                        session.send(&msg);
                    }
                    Err(EvalError::Problem(e @ (ProblemError::DimensionMismatch { .. } | ProblemError::OutOfBounds { .. }))) => {
                        break Outcome::Finished(RunStatus::ProtocolError, Some(e.to_string()))
                    }
                    Err(e) => break Outcome::Finished(RunStatus::ProtocolError, Some(format!("objective failed: {e}"))),
                }
            }
        }
    };

    session.stdin = None;
    let (status, detail) = match outcome {
        Outcome::Finished(RunStatus::Ok, _) => {
            // Give a well-behaved candidate a moment to exit on its own.
            let grace = (Instant::now() + Duration::from_secs(2)).min(deadline.max(Instant::now()));
            if wait_until(&mut child, grace).is_none() {
                kill_tree(&mut child);
            }
            (RunStatus::Ok, None)
        }
        Outcome::Finished(status, detail) => {
            kill_tree(&mut child);
            (status, detail)
        }
        Outcome::Eof => match wait_until(&mut child, deadline) {
            Some(exit) if exit.success() => (RunStatus::Ok, None),
            Some(exit) => (RunStatus::Crashed, Some(format!("exited before done: {exit}"))),
            None => {
                kill_tree(&mut child);
                (RunStatus::Timeout, Some(format!("no exit within {:?}", cfg.timeout)))
            }
        },
    };
    kill_tree(&mut child);
    let _ = child.wait();
    drop(lines);
    let _ = stdout_handle.join();
    let stderr = stderr_handle.join().unwrap_or_default();

    Ok(CandidateRunResult {
        trajectory: session.f.into_trajectory(),
        status,
        stderr_capture: tail_utf8(&stderr, cfg.stderr_limit),
        detail,
        wall_time: start.elapsed(),
    })
}
