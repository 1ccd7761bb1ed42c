// SPDX-License-Identifier: Apache-2.0

//! Miter-based equivalence checking between a netlist output and a
//! sum-of-products PIT, or between two netlist outputs.

use crate::cube::{Minterm, Pit};
use crate::error::{Error, NetlistError, Result};
use crate::netlist::{GateKind, Netlist};

use super::cnf::{ClauseSink, CnfFormula, Lit, Var};
use super::encode::{solve_with_budget, SatOutcome};
use crate::error::SatError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    /// An input assignment where the two sides disagree.
    Counterexample(Minterm),
    /// The conflict budget ran out.
    Unknown,
}

/// Tseitin encoder sharing one constant-true variable.
struct Tseitin<'a, S: ClauseSink> {
    sink: &'a mut S,
    truth: Option<Lit>,
}

impl<'a, S: ClauseSink> Tseitin<'a, S> {
    fn new(sink: &'a mut S) -> Self {
        Self { sink, truth: None }
    }

    fn constant(&mut self, value: bool) -> Lit {
        let t = match self.truth {
            Some(t) => t,
            None => {
                let v = self.sink.new_var();
                self.sink.add_clause(&[v.pos()]);
                self.truth = Some(v.pos());
                v.pos()
            }
        };
        if value {
            t
        } else {
            !t
        }
    }

    fn and(&mut self, ins: &[Lit]) -> Lit {
        match ins {
            [] => self.constant(true),
            [a] => *a,
            _ => {
                let y = self.sink.new_var();
                let mut big = vec![y.pos()];
                for &a in ins {
                    self.sink.add_clause(&[y.neg(), a]);
                    big.push(!a);
                }
                self.sink.add_clause(&big);
                y.pos()
            }
        }
    }

    fn or(&mut self, ins: &[Lit]) -> Lit {
        let neg: Vec<Lit> = ins.iter().map(|&l| !l).collect();
        !self.and(&neg)
    }

    fn xor2(&mut self, a: Lit, b: Lit) -> Lit {
        let y = self.sink.new_var().pos();
        self.sink.add_clause(&[!y, a, b]);
        self.sink.add_clause(&[!y, !a, !b]);
        self.sink.add_clause(&[y, !a, b]);
        self.sink.add_clause(&[y, a, !b]);
        y
    }

    fn xor(&mut self, ins: &[Lit]) -> Lit {
        match ins.split_first() {
            None => self.constant(false),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &l| self.xor2(acc, l)),
        }
    }

    /// Literal for output `w` of `nl`, inputs mapped to variables `0..n`.
    fn cone(&mut self, nl: &Netlist, w: usize) -> Result<Lit, NetlistError> {
        let mut net_lit: Vec<Option<Lit>> = vec![None; nl.num_nets()];
        for i in 0..nl.num_inputs() {
            net_lit[nl.input_net(i)] = Some(Var::new(i).pos());
        }
        for &gi in nl.cone_gates(w)? {
            let g = &nl.gates()[gi];
            let ins: Vec<Lit> = g
                .inputs
                .iter()
                .map(|&n| net_lit[n].expect("topological order"))
                .collect();
            let out = match g.kind {
                GateKind::And => self.and(&ins),
                GateKind::Nand => !self.and(&ins),
                GateKind::Or => self.or(&ins),
                GateKind::Nor => !self.or(&ins),
                GateKind::Xor => self.xor(&ins),
                GateKind::Xnor => !self.xor(&ins),
                GateKind::Not => !ins[0],
                GateKind::Buff => ins[0],
                GateKind::Gnd => self.constant(false),
                GateKind::Vdd => self.constant(true),
            };
            net_lit[g.output] = Some(out);
        }
        Ok(net_lit[nl.output_net(w)].expect("output driven"))
    }

    fn sop(&mut self, t: &Pit) -> Lit {
        let terms: Vec<Lit> = t
            .iter()
            .map(|cube| {
                let lits: Vec<Lit> = cube
                    .fixed_positions()
                    .map(|(i, b)| Var::new(i).lit(b))
                    .collect();
                self.and(&lits)
            })
            .collect();
        if terms.is_empty() {
            return self.constant(false);
        }
        self.or(&terms)
    }
}

/// CNF whose models are the inputs where output `w` of `nl` and the SOP of
/// `t` disagree.
pub fn encode_miter(nl: &Netlist, w: usize, t: &Pit) -> Result<CnfFormula> {
    let n = nl.num_inputs();
    if t.width() != n {
        return Err(Error::Interface(format!(
            "PIT width {} against {} circuit inputs",
            t.width(),
            n
        )));
    }
    let mut f = CnfFormula::with_inputs(n);
    let mut enc = Tseitin::new(&mut f);
    let a = enc.cone(nl, w)?;
    let b = enc.sop(t);
    let x = enc.xor2(a, b);
    f.add_clause(&[x]);
    Ok(f)
}

fn decide(f: &CnfFormula, conflicts: Option<u64>) -> Result<Equivalence> {
    match solve_with_budget(f, &[], conflicts) {
        Ok(SatOutcome::Unsat) => Ok(Equivalence::Equal),
        Ok(SatOutcome::Sat(m)) => Ok(Equivalence::Counterexample(m)),
        Err(SatError::ResourceExhausted) => Ok(Equivalence::Unknown),
        Err(e) => Err(e.into()),
    }
}

/// Whether output `w` of `nl` computes the sum of products of `t`.
pub fn check_equivalence(nl: &Netlist, w: usize, t: &Pit) -> Result<Equivalence> {
    check_equivalence_with_budget(nl, w, t, None)
}

pub fn check_equivalence_with_budget(
    nl: &Netlist,
    w: usize,
    t: &Pit,
    conflicts: Option<u64>,
) -> Result<Equivalence> {
    decide(&encode_miter(nl, w, t)?, conflicts)
}

/// Whether output `wa` of `a` and output `wb` of `b` agree everywhere. Both
/// netlists must have the same number of inputs; inputs match by position.
pub fn check_outputs_equivalent(
    a: &Netlist,
    wa: usize,
    b: &Netlist,
    wb: usize,
    conflicts: Option<u64>,
) -> Result<Equivalence> {
    if a.num_inputs() != b.num_inputs() {
        return Err(Error::Interface(format!(
            "{} inputs against {}",
            a.num_inputs(),
            b.num_inputs()
        )));
    }
    let mut f = CnfFormula::with_inputs(a.num_inputs());
    let mut enc = Tseitin::new(&mut f);
    let la = enc.cone(a, wa)?;
    let lb = enc.cone(b, wb)?;
    let x = enc.xor2(la, lb);
    f.add_clause(&[x]);
    decide(&f, conflicts)
}
