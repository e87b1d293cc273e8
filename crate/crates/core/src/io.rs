//! Long-format CSV for sequences of states: one `k,component,value` row per
//! entry, values printed with 17 significant digits.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numerics::StateVector;

pub const STATES_HEADER: &str = "k,component,value";

pub fn write_states_csv<W: Write>(mut out: W, states: &[StateVector]) -> std::io::Result<()> {
    writeln!(out, "{STATES_HEADER}")?;
    for (k, state) in states.iter().enumerate() {
        for (i, v) in state.iter().enumerate() {
            writeln!(out, "{k},{i},{v:.16e}")?;
        }
    }
    Ok(())
}

/// Inverse of [`write_states_csv`]. Rows must be sorted by `k` then
/// `component` with no gaps.
pub fn read_states_csv<R: BufRead>(input: R) -> Result<Vec<StateVector>> {
    let bad = |line: usize, what: &str| Error::Config(format!("states csv line {line}: {what}"));
    let mut states: Vec<StateVector> = Vec::new();
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == STATES_HEADER => {}
        _ => return Err(bad(1, &format!("expected header `{STATES_HEADER}`"))),
    }
    for (n, line) in lines {
        let line = line.map_err(|e| bad(n + 1, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [k, i, v] = fields[..] else {
            return Err(bad(n + 1, "expected 3 fields"));
        };
        let k: usize = k.parse().map_err(|_| bad(n + 1, "bad k"))?;
        let i: usize = i.parse().map_err(|_| bad(n + 1, "bad component"))?;
        let v: f64 = v.parse().map_err(|_| bad(n + 1, "bad value"))?;
        if k == states.len() && i == 0 {
            states.push(Vec::new());
        }
        let count = states.len();
        match states.last_mut() {
            Some(s) if k + 1 == count && i == s.len() => s.push(v),
            _ => return Err(bad(n + 1, "rows out of order")),
        }
    }
    if let Some(first) = states.first() {
        if states.iter().any(|s| s.len() != first.len()) {
            return Err(Error::Config("states csv: states differ in length".into()));
        }
    }
    Ok(states)
}
