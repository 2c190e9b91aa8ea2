//! Ask/tell protocol fixture: `ask_tell_fixture MODE`.
//!
//! Modes: `random-search` asks exactly `budget` uniform points then sends done;
//! `budget-violator` asks one point too many; `crasher` exits with status 3 halfway through;
//! `slowpoke` asks once and then sleeps for an hour.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn read_json(lines: &mut impl Iterator<Item = io::Result<String>>) -> Result<Value, String> {
    let line = lines.next().ok_or("channel closed")?.map_err(|e| e.to_string())?;
    serde_json::from_str(&line).map_err(|e| format!("bad message `{line}`: {e}"))
}

fn main() -> ExitCode {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "random-search".into());
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut out = io::stdout().lock();

    let init = match read_json(&mut lines) {
        Ok(v) if v["type"] == "init" => v,
        Ok(v) => {
            eprintln!("expected init, got {v}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let floats = |key: &str| -> Vec<f64> { init[key].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default() };
    let (lb, ub) = (floats("lb"), floats("ub"));
    let budget = init["budget"].as_u64().unwrap_or(0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(init["seed"].as_u64().unwrap_or(0));

    let asks = match mode.as_str() {
        "random-search" => budget,
        "budget-violator" => budget + 1,
        "crasher" => budget / 2,
        "slowpoke" => 1,
        other => {
            eprintln!("unknown mode {other}");
            return ExitCode::from(2);
        }
    };
    for _ in 0..asks {
        let x: Vec<f64> = lb.iter().zip(&ub).map(|(l, u)| rng.random_range(*l..=*u)).collect();
        if writeln!(out, "{}", json!({ "type": "ask", "x": x })).and_then(|_| out.flush()).is_err() {
            return ExitCode::from(0);
        }
        match read_json(&mut lines) {
            Ok(v) if v["type"] == "tell" => {}
            // The harness stops answering once it has seen a violation.
            _ => return ExitCode::from(0),
        }
    }
    match mode.as_str() {
        "crasher" => {
            eprintln!("Traceback (most recent call last):\n  File \"fixture\", line 1, in <module>\nRuntimeError: fixture crash after {asks} evaluations");
            ExitCode::from(3)
        }
        "slowpoke" => {
            std::thread::sleep(Duration::from_secs(3600));
            ExitCode::from(0)
        }
        _ => {
            let _ = writeln!(out, "{}", json!({ "type": "done" }));
            ExitCode::from(0)
        }
    }
}
