// SPDX-License-Identifier: Apache-2.0

//! Runs a DIMACS solver binary on a temporary CNF file.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::SatError;

use super::cnf::{ClauseSink, CnfFormula};

/// Environment variable naming the external solver command line.
pub const SOLVER_ENV: &str = "PITREC_SAT_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
}

static FILE_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ExternalSolver {
    /// Splits a command line on whitespace; the CNF path is appended.
    pub fn from_cmdline(cmdline: &str) -> Option<Self> {
        let mut parts = cmdline.split_whitespace().map(str::to_owned);
        let program = parts.next()?;
        Some(Self {
            program,
            args: parts.collect(),
        })
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV)
            .ok()
            .and_then(|s| Self::from_cmdline(&s))
    }

    /// `Some(model)` over all variables, or `None` when unsatisfiable.
    pub fn solve(&self, f: &CnfFormula) -> Result<Option<Vec<bool>>, SatError> {
        let path: PathBuf = std::env::temp_dir().join(format!(
            "pitrec-{}-{}.cnf",
            std::process::id(),
            FILE_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&path, f.to_dimacs())?;
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(&path)
            .output();
        let _ = std::fs::remove_file(&path);
        let out = out?;
        let text = String::from_utf8_lossy(&out.stdout);
        parse_output(&text, f.num_vars())
    }
}

/// Accepts competition output (`s ...` / `v ...` lines) as well as the bare
/// `SAT` / `UNSAT` header followed by a line of signed integers.
pub fn parse_output(text: &str, num_vars: usize) -> Result<Option<Vec<bool>>, SatError> {
    let mut status = None;
    let mut model = vec![false; num_vars];
    for line in text.lines() {
        let line = line.trim();
        let body = match line.split_once(char::is_whitespace) {
            Some(("s", rest)) => {
                status = Some(rest.trim().to_owned());
                continue;
            }
            Some(("v", rest)) => rest,
            Some(("c", _)) => continue,
            _ if line == "c" || line.is_empty() => continue,
            _ if line.chars().all(|c| c.is_ascii_alphabetic()) => {
                status = Some(line.to_owned());
                continue;
            }
            _ => line,
        };
        for tok in body.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| SatError::External(format!("unexpected token {tok:?}")))?;
            if v == 0 {
                continue;
            }
            let idx = v.unsigned_abs() as usize - 1;
            if idx < num_vars {
                model[idx] = v > 0;
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE" | "SAT") => Ok(Some(model)),
        Some("UNSATISFIABLE" | "UNSAT") => Ok(None),
        Some("UNKNOWN" | "INDET" | "INDETERMINATE") => Err(SatError::ResourceExhausted),
        Some(other) => Err(SatError::External(format!("unrecognized status {other:?}"))),
        None => Err(SatError::External("no status line".into())),
    }
}
