// SPDX-License-Identifier: Apache-2.0

//! Brute-force reference computations and circuit generators for tests.
//!
//! Everything here deliberately avoids the fast paths of `pitrec`: circuits
//! are evaluated by a memoized recursive walk, cubes are compared
//! character by character, and prime implicants are found by enumerating
//! every cube.

use std::collections::BTreeSet;

use pitrec::{Cube, GateKind, Minterm, Netlist, NetlistBuilder, Pit};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

mod circuits;

pub use circuits::*;

pub const TABLE_MAX_INPUTS: usize = 20;
pub const CANDIDATE_MAX_INPUTS: usize = 12;
pub const PRIME_MAX_INPUTS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TestkitError {
    #[error("{found} inputs exceed the cap of {cap}")]
    TooWide { found: usize, cap: usize },
    #[error("width mismatch: {0} against {1}")]
    Width(usize, usize),
}

fn cap(n: usize, limit: usize) -> Result<(), TestkitError> {
    if n > limit {
        Err(TestkitError::TooWide {
            found: n,
            cap: limit,
        })
    } else {
        Ok(())
    }
}

/// Evaluates every output of `nl` at `m` by recursive descent from the
/// outputs, memoizing nets.
pub fn eval_recursive(nl: &Netlist, m: &Minterm) -> Vec<bool> {
    let mut driver = vec![usize::MAX; nl.num_nets()];
    for (g, gate) in nl.gates().iter().enumerate() {
        driver[gate.output] = g;
    }
    let mut memo: Vec<Option<bool>> = vec![None; nl.num_nets()];
    for i in 0..nl.num_inputs() {
        memo[nl.input_net(i)] = Some(m.get(i));
    }
    fn net(nl: &Netlist, driver: &[usize], memo: &mut Vec<Option<bool>>, id: usize) -> bool {
        if let Some(v) = memo[id] {
            return v;
        }
        let gate = &nl.gates()[driver[id]];
        let ins: Vec<bool> = gate
            .inputs
            .iter()
            .map(|&i| net(nl, driver, memo, i))
            .collect();
        let v = match gate.kind {
            GateKind::And => ins.iter().all(|&b| b),
            GateKind::Nand => !ins.iter().all(|&b| b),
            GateKind::Or => ins.iter().any(|&b| b),
            GateKind::Nor => !ins.iter().any(|&b| b),
            GateKind::Xor => ins.iter().filter(|&&b| b).count() % 2 == 1,
            GateKind::Xnor => ins.iter().filter(|&&b| b).count() % 2 == 0,
            GateKind::Not => !ins[0],
            GateKind::Buff => ins[0],
            GateKind::Gnd => false,
            GateKind::Vdd => true,
        };
        memo[id] = Some(v);
        v
    }
    (0..nl.num_outputs())
        .map(|w| net(nl, &driver, &mut memo, nl.output_net(w)))
        .collect()
}

/// Complete truth table; row `i` is the minterm with index `i` (input 1 is
/// the most significant bit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    n: usize,
    outputs: Vec<Vec<bool>>,
}

impl TruthTable {
    pub fn from_netlist(nl: &Netlist) -> Result<Self, TestkitError> {
        let n = nl.num_inputs();
        cap(n, TABLE_MAX_INPUTS)?;
        let mut outputs = vec![Vec::with_capacity(1 << n); nl.num_outputs()];
        for i in 0..1u64 << n {
            let row = eval_recursive(nl, &Minterm::from_index(i, n));
            for (w, v) in row.into_iter().enumerate() {
                outputs[w].push(v);
            }
        }
        Ok(Self { n, outputs })
    }

    pub fn from_fn(n: usize, f: impl Fn(&[bool]) -> bool) -> Result<Self, TestkitError> {
        cap(n, TABLE_MAX_INPUTS)?;
        let col = (0..1u64 << n)
            .map(|i| {
                let bits: Vec<bool> = (0..n).map(|j| i >> (n - 1 - j) & 1 == 1).collect();
                f(&bits)
            })
            .collect();
        Ok(Self {
            n,
            outputs: vec![col],
        })
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn rows(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, w: usize, row: u64) -> bool {
        self.outputs[w][row as usize]
    }

    pub fn at(&self, w: usize, m: &Minterm) -> bool {
        self.get(w, m.to_index())
    }

    pub fn on_count(&self, w: usize) -> usize {
        self.outputs[w].iter().filter(|&&b| b).count()
    }
}

/// Cube membership by text comparison.
pub fn text_covers(cube: &str, m: &str) -> bool {
    cube.chars().zip(m.chars()).all(|(c, b)| c == '-' || c == b)
}

/// Cube distance by text comparison.
pub fn text_distance(a: &str, b: &str) -> usize {
    a.chars()
        .zip(b.chars())
        .filter(|&(x, y)| x != '-' && y != '-' && x != y)
        .count()
}

fn pit_text(t: &Pit) -> Vec<String> {
    t.iter().map(|c| c.to_string()).collect()
}

fn pit_value(cubes: &[String], m: &str) -> bool {
    cubes.iter().any(|c| text_covers(c, m))
}

/// Whether the sum of products of `t` equals output `w` of `tt`; the first
/// disagreeing minterm otherwise.
pub fn brute_pit_equivalent(
    t: &Pit,
    tt: &TruthTable,
    w: usize,
) -> Result<(bool, Option<Minterm>), TestkitError> {
    cap(t.width(), TABLE_MAX_INPUTS)?;
    if t.width() != tt.n {
        return Err(TestkitError::Width(t.width(), tt.n));
    }
    let cubes = pit_text(t);
    for i in 0..1u64 << tt.n {
        let m = Minterm::from_index(i, tt.n);
        if pit_value(&cubes, &m.to_string()) != tt.get(w, i) {
            return Ok((false, Some(m)));
        }
    }
    Ok((true, None))
}

/// Minterms outside `t` whose distance to the nearest cube is in `1..=d`.
pub fn brute_candidate_set(t: &Pit, d: usize) -> Result<BTreeSet<Minterm>, TestkitError> {
    let n = t.width();
    cap(n, CANDIDATE_MAX_INPUTS)?;
    let cubes = pit_text(t);
    let mut out = BTreeSet::new();
    for i in 0..1u64 << n {
        let m = Minterm::from_index(i, n);
        let s = m.to_string();
        if pit_value(&cubes, &s) {
            continue;
        }
        if let Some(min) = cubes.iter().map(|c| text_distance(c, &s)).min() {
            if (1..=d).contains(&min) {
                out.insert(m);
            }
        }
    }
    Ok(out)
}

/// Every minterm covered by `cube`, as text.
pub fn expand_cube_text(cube: &str) -> Vec<String> {
    let mut acc = vec![String::new()];
    for ch in cube.chars() {
        let opts: &[char] = if ch == '-' {
            &['0', '1']
        } else if ch == '0' {
            &['0']
        } else {
            &['1']
        };
        acc = acc
            .into_iter()
            .flat_map(|p| opts.iter().map(move |&o| format!("{p}{o}")))
            .collect();
    }
    acc
}

fn row_of(text: &str) -> u64 {
    u64::from_str_radix(text, 2).unwrap_or(0)
}

/// Every covered minterm is ON.
pub fn is_implicant(cube: &Cube, tt: &TruthTable, w: usize) -> bool {
    if cube.width() == 0 {
        return tt.get(w, 0);
    }
    expand_cube_text(&cube.to_string())
        .iter()
        .all(|m| tt.get(w, row_of(m)))
}

/// An implicant where freeing any fixed literal covers an OFF minterm.
pub fn is_prime(cube: &Cube, tt: &TruthTable, w: usize) -> bool {
    if !is_implicant(cube, tt, w) {
        return false;
    }
    let text: Vec<char> = cube.to_string().chars().collect();
    (0..text.len()).filter(|&i| text[i] != '-').all(|i| {
        let mut wider = text.clone();
        wider[i] = '-';
        let wider: String = wider.into_iter().collect();
        expand_cube_text(&wider)
            .iter()
            .any(|m| !tt.get(w, row_of(m)))
    })
}

/// All prime implicants by enumerating the `3^n` cubes.
pub fn brute_prime_implicants(tt: &TruthTable, w: usize) -> Result<BTreeSet<String>, TestkitError> {
    let n = tt.n;
    cap(n, PRIME_MAX_INPUTS)?;
    let mut out = BTreeSet::new();
    let total = 3u64.pow(n as u32);
    for mut code in 0..total {
        let mut s = String::with_capacity(n);
        for _ in 0..n {
            s.push(['0', '1', '-'][(code % 3) as usize]);
            code /= 3;
        }
        let cube: Cube = if n == 0 {
            Cube::universe(0)
        } else {
            s.parse().unwrap()
        };
        if is_prime(&cube, tt, w) {
            out.insert(s);
        }
    }
    Ok(out)
}

/// Exact PIT of output `w`, as a table.
pub fn exact_pit(tt: &TruthTable, w: usize) -> Result<Pit, TestkitError> {
    let primes = brute_prime_implicants(tt, w)?;
    let cubes = primes.iter().map(|s| s.parse::<Cube>().unwrap());
    Ok(Pit::from_cubes(tt.n, cubes).unwrap())
}

/// A random PIT of width `n` with up to `max_cubes` cubes; each position is
/// fixed with probability `fixed`.
pub fn random_pit<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cubes: usize, fixed: f64) -> Pit {
    let k = rng.gen_range(1..=max_cubes.max(1));
    let mut t = Pit::new(n);
    for _ in 0..k {
        let s: String = (0..n)
            .map(|_| {
                if rng.gen_bool(fixed) {
                    if rng.gen() {
                        '1'
                    } else {
                        '0'
                    }
                } else {
                    '-'
                }
            })
            .collect();
        t.insert(s.parse().unwrap()).unwrap();
    }
    t
}

/// Random combinational circuit over `n` inputs with `gates` gates; outputs
/// are taken from the last `outputs` gates.
pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    gates: usize,
    outputs: usize,
) -> Netlist {
    const KINDS: [GateKind; 7] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
    ];
    let mut b = NetlistBuilder::new();
    let mut nets: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    for name in &nets {
        b.input(name.clone());
    }
    let gates = gates.max(outputs).max(1);
    for g in 0..gates {
        let kind = *KINDS.choose(rng).unwrap();
        let fanin = if kind == GateKind::Not {
            1
        } else {
            rng.gen_range(2..=3)
        };
        // Favor recent nets so depth grows.
        let ins: Vec<String> = (0..fanin)
            .map(|_| {
                let lo = nets.len().saturating_sub(n + 4);
                nets[rng.gen_range(lo..nets.len())].clone()
            })
            .collect();
        let out = format!("g{g}");
        b.gate(out.clone(), kind, ins);
        nets.push(out);
    }
    for k in 0..outputs {
        b.output(format!("g{}", gates - 1 - k));
    }
    b.build().expect("generated netlist is valid")
}
