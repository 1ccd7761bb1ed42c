// SPDX-License-Identifier: Apache-2.0

//! Constraint systems over the input variables `x_1..x_n` (variables
//! `0..n`): the complement of a PIT, distance balls around its cubes, and the
//! incremental candidate search that combines them.

use crate::cube::{Cube, Minterm, Pit};
use crate::error::SatError;

use super::cnf::{ClauseSink, CnfFormula, Lit, Var};
use super::external::ExternalSolver;
use super::solver::{SolveResult, Solver};

/// Literal that is true when input `i` differs from the fixed bit `b`.
#[inline]
pub fn mismatch_lit(i: usize, b: bool) -> Lit {
    Var::new(i).lit(!b)
}

/// Mismatch literals over the fixed positions of `cube`.
pub fn mismatch_lits(cube: &Cube) -> Vec<Lit> {
    cube.fixed_positions()
        .map(|(i, b)| mismatch_lit(i, b))
        .collect()
}

#[cfg(test)]
fn match_lit(i: usize, b: bool) -> Lit {
    Var::new(i).lit(b)
}

/// Clause excluding the single minterm `m`.
pub fn blocking_clause(m: &Minterm) -> Vec<Lit> {
    m.iter()
        .enumerate()
        .map(|(i, b)| mismatch_lit(i, b))
        .collect()
}

/// Minterms outside every cube of `t`: one clause per cube asking for at
/// least one violated fixed position.
pub fn encode_pit_offset(t: &Pit) -> CnfFormula {
    let mut f = CnfFormula::with_inputs(t.width());
    for cube in t {
        f.add_clause(&mismatch_lits(cube));
    }
    f
}

/// Sequential counter over a literal list with upward-only implications:
/// register `s(i, j)` is forced true whenever at least `j` of the first
/// `i + 1` literals are true. Columns are added on demand, so a radius can
/// grow without re-encoding.
#[derive(Debug, Clone)]
pub struct SeqCounter {
    lits: Vec<Lit>,
    /// `cols[j - 1][i]` is `s(i, j)`; absent while `j > i + 1`.
    cols: Vec<Vec<Option<Var>>>,
}

impl SeqCounter {
    pub fn new(lits: Vec<Lit>) -> Self {
        Self {
            lits,
            cols: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    fn reg(&self, i: usize, j: usize) -> Option<Var> {
        if j == 0 {
            return None;
        }
        self.cols.get(j - 1).and_then(|c| c[i])
    }

    /// Makes registers available up to threshold `k`.
    pub fn extend<S: ClauseSink>(&mut self, sink: &mut S, k: usize) {
        let n = self.lits.len();
        let k = k.min(n);
        while self.cols.len() < k {
            let j = self.cols.len() + 1;
            let mut col = Vec::with_capacity(n);
            for i in 0..n {
                if j > i + 1 {
                    col.push(None);
                    continue;
                }
                let s = sink.new_var();
                let l = self.lits[i];
                if j == 1 {
                    sink.add_clause(&[!l, s.pos()]);
                } else if let Some(prev) = self.reg(i - 1, j - 1) {
                    sink.add_clause(&[!l, prev.neg(), s.pos()]);
                }
                if i > 0 {
                    if let Some(prev) = col[i - 1] {
                        sink.add_clause(&[Var::neg(prev), s.pos()]);
                    }
                }
                col.push(Some(s));
            }
            self.cols.push(col);
        }
    }

    /// A literal that can be true only when at most `d` literals are true,
    /// or `None` when that holds unconditionally (`d >= len`).
    pub fn at_most<S: ClauseSink>(&mut self, sink: &mut S, d: usize) -> Option<Lit> {
        let n = self.lits.len();
        if d >= n {
            return None;
        }
        self.extend(sink, d + 1);
        self.reg(n - 1, d + 1).map(Var::neg)
    }
}

/// Minterms within distance `d` of at least one cube of `t`.
///
/// Each cube gets explicit mismatch indicators `z_i <-> (x_i != b_i)`, an
/// "at most `d`" counter over them and a selector; one clause asks for some
/// selector.
pub fn encode_distance_ball(t: &Pit, d: usize) -> Result<CnfFormula, SatError> {
    let n = t.width();
    if d > n {
        return Err(SatError::DistanceOutOfRange { d, n });
    }
    if t.is_empty() {
        return Err(SatError::EmptyTable);
    }
    let mut f = CnfFormula::with_inputs(n);
    let mut selectors = Vec::with_capacity(t.len());
    for cube in t {
        let mut zs = Vec::new();
        for (i, b) in cube.fixed_positions() {
            let z = f.new_var();
            let m = mismatch_lit(i, b);
            f.add_clause(&[z.neg(), m]);
            f.add_clause(&[z.pos(), !m]);
            zs.push(z.pos());
        }
        let sel = f.new_var();
        let mut counter = SeqCounter::new(zs);
        if let Some(ball) = counter.at_most(&mut f, d) {
            f.add_clause(&[sel.neg(), ball]);
        }
        selectors.push(sel.pos());
    }
    f.add_clause(&selectors);
    Ok(f)
}

/// Conjunction of two formulas over the same inputs; the auxiliary
/// variables of `b` are renumbered after those of `a`.
pub fn conjoin(a: &CnfFormula, b: &CnfFormula) -> CnfFormula {
    assert_eq!(a.num_inputs(), b.num_inputs(), "input count");
    let n = a.num_inputs();
    let mut f = a.clone();
    let offset = f.num_vars() - n;
    let extra = b.num_vars() - n;
    for _ in 0..extra {
        f.new_var();
    }
    let shift = |l: Lit| {
        if l.var().index() < n {
            l
        } else {
            Var::new(l.var().index() + offset).lit(l.is_positive())
        }
    };
    for c in b.clauses() {
        let c: Vec<Lit> = c.iter().map(|&l| shift(l)).collect();
        f.add_clause(&c);
    }
    f
}

/// Minterms outside `t` within distance `d` of it.
pub fn encode_search(t: &Pit, d: usize) -> Result<CnfFormula, SatError> {
    Ok(conjoin(&encode_pit_offset(t), &encode_distance_ball(t, d)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatOutcome {
    Sat(Minterm),
    Unsat,
}

fn model_minterm(model: &[bool], n: usize) -> Minterm {
    Minterm::from_bools(&model[..n])
}

/// A built-in solver loaded with a fixed formula; blocked minterms
/// accumulate across calls.
pub struct IncrementalSolve {
    solver: Solver,
    n: usize,
}

impl IncrementalSolve {
    pub fn new(f: &CnfFormula, seed: u64) -> Self {
        let mut solver = Solver::new(seed);
        for _ in 0..f.num_vars() {
            solver.new_var();
        }
        for c in f.clauses() {
            solver.add_clause(c);
        }
        Self {
            solver,
            n: f.num_inputs(),
        }
    }

    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.solver.set_conflict_budget(budget);
    }

    pub fn block(&mut self, m: &Minterm) {
        assert_eq!(m.width(), self.n, "blocked minterm width");
        self.solver.add_clause(&blocking_clause(m));
    }

    pub fn solve(&mut self) -> Result<SatOutcome, SatError> {
        match self.solver.solve(&[]) {
            SolveResult::Sat => Ok(SatOutcome::Sat(model_minterm(self.solver.model(), self.n))),
            SolveResult::Unsat => Ok(SatOutcome::Unsat),
            SolveResult::Unknown => Err(SatError::ResourceExhausted),
        }
    }
}

/// One-shot solve of `f` with every minterm in `blocked` excluded. Uses the
/// external solver named by `PITREC_SAT_SOLVER` when set.
pub fn solve(f: &CnfFormula, blocked: &[Minterm]) -> Result<SatOutcome, SatError> {
    solve_with_budget(f, blocked, None)
}

pub fn solve_with_budget(
    f: &CnfFormula,
    blocked: &[Minterm],
    conflicts: Option<u64>,
) -> Result<SatOutcome, SatError> {
    if let Some(ext) = ExternalSolver::from_env() {
        let mut g = f.clone();
        for m in blocked {
            g.add_clause(&blocking_clause(m));
        }
        return Ok(match ext.solve(&g)? {
            Some(model) => SatOutcome::Sat(model_minterm(&model, f.num_inputs())),
            None => SatOutcome::Unsat,
        });
    }
    let mut s = IncrementalSolve::new(f, 0);
    s.set_conflict_budget(conflicts);
    for m in blocked {
        s.block(m);
    }
    s.solve()
}

struct Ball {
    counter: SeqCounter,
}

/// The incremental candidate search of one cone: a single solver holds the
/// PIT complement, every blocked OFF-set minterm and the distance counters
/// of all cubes. The radius constraint is switched through a fresh
/// activation literal, so growing the table or the radius never discards
/// learnt clauses.
pub struct SearchSpace {
    solver: Solver,
    n: usize,
    balls: Vec<Ball>,
    radius: usize,
    active: Option<Lit>,
    dirty: bool,
    blocked: usize,
}

impl SearchSpace {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut solver = Solver::new(seed);
        for _ in 0..n {
            solver.new_var();
        }
        Self {
            solver,
            n,
            balls: Vec::new(),
            radius: 0,
            active: None,
            dirty: true,
            blocked: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn num_cubes(&self) -> usize {
        self.balls.len()
    }

    pub fn num_blocked(&self) -> usize {
        self.blocked
    }

    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.solver.set_conflict_budget(budget);
    }

    /// Adds a cube to the table: its minterms leave the search space and its
    /// ball joins the radius disjunction.
    pub fn add_cube(&mut self, cube: &Cube) {
        assert_eq!(cube.width(), self.n, "cube width");
        let lits = mismatch_lits(cube);
        self.solver.add_clause(&lits);
        self.balls.push(Ball {
            counter: SeqCounter::new(lits),
        });
        self.dirty = true;
    }

    /// Permanently excludes `m`.
    pub fn block(&mut self, m: &Minterm) {
        assert_eq!(m.width(), self.n, "minterm width");
        self.solver.add_clause(&blocking_clause(m));
        self.blocked += 1;
    }

    pub fn set_radius(&mut self, d: usize) -> Result<(), SatError> {
        if d > self.n {
            return Err(SatError::DistanceOutOfRange { d, n: self.n });
        }
        if d != self.radius {
            self.radius = d;
            self.dirty = true;
        }
        Ok(())
    }

    fn rebuild(&mut self) -> Result<(), SatError> {
        if self.balls.is_empty() {
            return Err(SatError::EmptyTable);
        }
        if let Some(old) = self.active.take() {
            self.solver.add_clause(&[!old]);
        }
        let act = self.solver.new_var();
        let mut clause = vec![act.neg()];
        let mut unconstrained = false;
        for ball in &mut self.balls {
            match ball.counter.at_most(&mut self.solver, self.radius) {
                Some(l) => clause.push(l),
                None => unconstrained = true,
            }
        }
        if !unconstrained {
            self.solver.add_clause(&clause);
        }
        self.active = Some(act.pos());
        self.dirty = false;
        Ok(())
    }

    /// Next minterm outside the table, not blocked, within the current
    /// radius of some cube. `None` once the ball is exhausted.
    pub fn next_candidate(&mut self) -> Result<Option<Minterm>, SatError> {
        if self.dirty {
            self.rebuild()?;
        }
        let act = self.active.expect("activation literal");
        match self.solver.solve(&[act]) {
            SolveResult::Sat => Ok(Some(model_minterm(self.solver.model(), self.n))),
            SolveResult::Unsat => Ok(None),
            SolveResult::Unknown => Err(SatError::ResourceExhausted),
        }
    }
}
