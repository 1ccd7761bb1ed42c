// SPDX-License-Identifier: Apache-2.0

//! Incremental CDCL solver: two watched literals, first-UIP learning with
//! local minimization, VSIDS branching with phase saving, Luby restarts and
//! LBD-guided learnt-clause reduction. Solving under assumptions keeps every
//! clause and learnt fact, so callers can keep adding clauses between calls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnf::{ClauseSink, Lit, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// The conflict budget ran out.
    Unknown,
}

const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    removed: bool,
    lbd: u32,
    activity: f32,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    var_inc: f64,
    cla_inc: f32,
    max_learnts: f64,
    ok: bool,
    model: Vec<bool>,
    conflict_budget: Option<u64>,
    rng: ChaCha8Rng,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new(0)
    }
}

impl Solver {
    /// A fresh solver. `seed` randomizes initial phases so repeated runs on
    /// the same formula are reproducible but not biased toward all-zero
    /// models.
    pub fn new(seed: u64) -> Self {
        Self {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            phase: Vec::new(),
            activity: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 2000.0,
            ok: true,
            model: Vec::new(),
            conflict_budget: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: SolverStats::default(),
        }
    }

    /// Caps conflicts per `solve` call; exceeding it yields
    /// [`SolveResult::Unknown`].
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len() - self.learnts.len()
    }

    /// False once the clause set is unsatisfiable without assumptions.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (l.0 & 1) as u8
        }
    }

    #[inline]
    fn is_true(&self, l: Lit) -> bool {
        self.lit_value(l) == 1
    }

    #[inline]
    fn is_false(&self, l: Lit) -> bool {
        self.lit_value(l) == 0
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Value of `v` in the last satisfying assignment.
    pub fn model_value(&self, v: Var) -> bool {
        self.model[v.index()]
    }

    pub fn model(&self) -> &[bool] {
        &self.model
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = l.is_positive() as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[a.code()].push(Watcher { cref, blocker: b });
        self.watches[b.code()].push(Watcher { cref, blocker: a });
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.is_true(w.blocker) {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].removed {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.is_true(first) {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if !self.is_false(l) {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.code()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.is_false(first) {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut pathc = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            let cref = confl as usize;
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        pathc += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            let v = pl.var().index();
            confl = self.reason[v];
            self.seen[v] = false;
            p = Some(pl);
            pathc -= 1;
            if pathc == 0 {
                break;
            }
        }
        learnt[0] = !p.expect("conflict has a UIP");

        // Local minimization: drop literals implied by other learnt literals.
        let mut keep = vec![learnt[0]];
        for &q in &learnt[1..] {
            let r = self.reason[q.var().index()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|l| {
                    let v = l.var().index();
                    self.seen[v] || self.level[v] == 0
                });
            if !redundant {
                keep.push(q);
            }
        }
        for &q in &learnt[1..] {
            self.seen[q.var().index()] = false;
        }
        let mut learnt = keep;

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    fn lbd(&mut self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var().index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var().index();
            self.phase[v] = l.is_positive();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop_max(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(Var::new(v).lit(self.phase[v]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let l = self.clauses[cref as usize].lits[0];
        let v = l.var().index();
        self.reason[v] == cref && self.is_true(l)
    }

    fn reduce_db(&mut self) {
        let mut order = std::mem::take(&mut self.learnts);
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(
                ca.activity
                    .partial_cmp(&cb.activity)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        });
        let half = order.len() / 2;
        let mut kept = Vec::with_capacity(order.len());
        for (k, cref) in order.into_iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if k < half && c.lbd > 2 && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.removed = true;
                c.lits = Vec::new();
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
    }

    fn search(
        &mut self,
        nof_conflicts: u64,
        assumptions: &[Lit],
        conflicts_left: &mut Option<u64>,
    ) -> SolveResult {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if let Some(left) = conflicts_left {
                    if *left == 0 {
                        return SolveResult::Unknown;
                    }
                    *left -= 1;
                }
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let lbd = self.lbd(&learnt);
                    let cref = self.clauses.len() as u32;
                    let asserting = learnt[0];
                    self.clauses.push(Clause {
                        lits: learnt,
                        learnt: true,
                        removed: false,
                        lbd,
                        activity: 0.0,
                    });
                    self.learnts.push(cref);
                    self.attach(cref);
                    self.bump_clause(cref as usize);
                    self.enqueue(asserting, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
            } else {
                if conflicts >= nof_conflicts {
                    self.cancel_until(0);
                    self.stats.restarts += 1;
                    return SolveResult::Unknown;
                }
                if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    if self.is_true(a) {
                        self.trail_lim.push(self.trail.len());
                    } else if self.is_false(a) {
                        return SolveResult::Unsat;
                    } else {
                        next = Some(a);
                        break;
                    }
                }
                let next = match next {
                    Some(a) => a,
                    None => match self.pick_branch() {
                        Some(l) => {
                            self.stats.decisions += 1;
                            l
                        }
                        None => return SolveResult::Sat,
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }

    /// Solves under `assumptions`. On `Sat` the model is available through
    /// [`Solver::model_value`]. The solver is back at level 0 afterwards.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        if !self.ok {
            return SolveResult::Unsat;
        }
        let mut conflicts_left = self.conflict_budget;
        let mut restart = 0u32;
        let result = loop {
            let budget = (luby(restart) * 100.0) as u64;
            match self.search(budget, assumptions, &mut conflicts_left) {
                SolveResult::Unknown if conflicts_left != Some(0) => restart += 1,
                r => break r,
            }
        };
        if result == SolveResult::Sat {
            self.model = self.assigns.iter().map(|&a| a == 1).collect();
        }
        self.cancel_until(0);
        result
    }
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> Var {
        let v = self.assigns.len();
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.phase.push(self.rng.gen());
        self.activity.push(0.0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        Var::new(v)
    }

    /// Adds a clause at level 0, simplifying against level-0 facts.
    fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        for w in c.windows(2) {
            if w[0] == !w[1] {
                return;
            }
        }
        if c.iter().any(|&l| self.is_true(l)) {
            return;
        }
        c.retain(|&l| !self.is_false(l));
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.clauses.len() as u32;
                self.clauses.push(Clause {
                    lits: c,
                    learnt: false,
                    removed: false,
                    lbd: 0,
                    activity: 0.0,
                });
                self.attach(cref);
            }
        }
    }

    fn num_vars(&self) -> usize {
        self.assigns.len()
    }
}

fn luby(mut x: u32) -> f64 {
    let (mut size, mut seq) = (1u32, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    2f64.powi(seq as i32)
}

/// Binary max-heap over variable indices keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<usize>,
}

const NOT_IN_HEAP: usize = usize::MAX;

impl VarHeap {
    fn contains(&self, v: usize) -> bool {
        v < self.pos.len() && self.pos[v] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if v >= self.pos.len() {
            self.pos.resize(v + 1, NOT_IN_HEAP);
        }
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len();
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn increase(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v], act);
        }
    }

    fn pop_max(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent]] >= act[v] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let child = if r < self.heap.len() && act[self.heap[r]] > act[self.heap[l]] {
                r
            } else {
                l
            };
            if act[self.heap[child]] <= act[v] {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i]] = i;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(s: &mut Solver, n: usize) -> Vec<Var> {
        (0..n).map(|_| s.new_var()).collect()
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut s = Solver::new(1);
        let x = vars(&mut s, 1);
        s.add_clause(&[x[0].pos()]);
        s.add_clause(&[x[0].neg()]);
        assert_eq!(s.solve(&[]), SolveResult::Unsat);
    }

    #[test]
    fn unit_propagation_forces_model() {
        let mut s = Solver::new(2);
        let x = vars(&mut s, 2);
        s.add_clause(&[x[0].pos(), x[1].pos()]);
        s.add_clause(&[x[0].neg()]);
        assert_eq!(s.solve(&[]), SolveResult::Sat);
        assert!(!s.model_value(x[0]));
        assert!(s.model_value(x[1]));
    }

    #[test]
    fn assumptions_are_temporary() {
        let mut s = Solver::new(3);
        let x = vars(&mut s, 2);
        s.add_clause(&[x[0].neg(), x[1].pos()]);
        assert_eq!(s.solve(&[x[0].pos(), x[1].neg()]), SolveResult::Unsat);
        assert_eq!(s.solve(&[x[0].pos()]), SolveResult::Sat);
        assert!(s.model_value(x[1]));
        assert!(s.is_ok());
    }

    /// Pigeonhole PHP(n+1, n) needs real conflict analysis.
    #[allow(clippy::needless_range_loop)]
    fn pigeonhole(s: &mut Solver, holes: usize) {
        let pigeons = holes + 1;
        let p: Vec<Vec<Var>> = (0..pigeons).map(|_| vars(s, holes)).collect();
        for row in &p {
            s.add_clause(&row.iter().map(|v| v.pos()).collect::<Vec<_>>());
        }
        for h in 0..holes {
            for a in 0..pigeons {
                for b in a + 1..pigeons {
                    s.add_clause(&[p[a][h].neg(), p[b][h].neg()]);
                }
            }
        }
    }

    #[test]
    fn pigeonhole_is_unsat() {
        let mut s = Solver::new(4);
        pigeonhole(&mut s, 6);
        assert_eq!(s.solve(&[]), SolveResult::Unsat);
    }

    #[test]
    fn conflict_budget_yields_unknown() {
        let mut s = Solver::new(5);
        pigeonhole(&mut s, 8);
        s.set_conflict_budget(Some(10));
        assert_eq!(s.solve(&[]), SolveResult::Unknown);
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<f64> = (0..9).map(luby).collect();
        assert_eq!(seq, vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0, 1.0, 1.0]);
    }

    #[test]
    fn random_3sat_models_check_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for round in 0..40 {
            let n = 20;
            let mut s = Solver::new(round);
            let x = vars(&mut s, n);
            let mut clauses = Vec::new();
            for _ in 0..80 {
                let c: Vec<Lit> = (0..3)
                    .map(|_| x[rng.gen_range(0..n)].lit(rng.gen()))
                    .collect();
                s.add_clause(&c);
                clauses.push(c);
            }
            let brute = (0..1u32 << n).any(|a| {
                clauses.iter().all(|c| {
                    c.iter()
                        .any(|l| ((a >> l.var().index()) & 1 == 1) == l.is_positive())
                })
            });
            match s.solve(&[]) {
                SolveResult::Sat => {
                    assert!(brute);
                    for c in &clauses {
                        assert!(c.iter().any(|l| s.model_value(l.var()) == l.is_positive()));
                    }
                }
                SolveResult::Unsat => assert!(!brute),
                SolveResult::Unknown => unreachable!(),
            }
        }
    }
}
