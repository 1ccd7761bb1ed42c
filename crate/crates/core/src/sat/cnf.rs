// SPDX-License-Identifier: Apache-2.0

use std::fmt::{self, Write as _};
use std::ops::Not;

/// A propositional variable, 0-based. DIMACS index is `index() + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub(crate) u32);

impl Var {
    pub fn new(index: usize) -> Self {
        Var(index as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn pos(self) -> Lit {
        Lit(self.0 << 1)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit(self.0 << 1 | 1)
    }

    #[inline]
    pub fn lit(self, positive: bool) -> Lit {
        if positive {
            self.pos()
        } else {
            self.neg()
        }
    }
}

/// A signed variable occurrence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(pub(crate) u32);

impl Lit {
    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_dimacs(v: i64) -> Self {
        assert!(v != 0, "0 is not a DIMACS literal");
        Var::new(v.unsigned_abs() as usize - 1).lit(v > 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().index() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Anything clauses can be written into: a formula under construction or a
/// live solver.
pub trait ClauseSink {
    fn new_var(&mut self) -> Var;
    fn add_clause(&mut self, lits: &[Lit]);
    fn num_vars(&self) -> usize;
}

/// A clause list over variables `0..num_vars`. Circuit inputs occupy the
/// first `num_inputs` variables in input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    num_inputs: usize,
    clauses: Vec<Vec<Lit>>,
}

impl CnfFormula {
    pub fn with_inputs(num_inputs: usize) -> Self {
        Self {
            num_vars: num_inputs,
            num_inputs,
            clauses: Vec::new(),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Vec::is_empty)
    }

    /// DIMACS CNF text.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len()).unwrap();
        for c in &self.clauses {
            for l in c {
                write!(s, "{} ", l.to_dimacs()).unwrap();
            }
            s.push_str("0\n");
        }
        s
    }

    /// Brute-force evaluation under a full assignment, for testing.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| assignment[l.var().index()] == l.is_positive())
        })
    }
}

impl ClauseSink for CnfFormula {
    fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var::new(self.num_vars - 1)
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.clauses.push(lits.to_vec());
    }

    fn num_vars(&self) -> usize {
        self.num_vars
    }
}
