// SPDX-License-Identifier: Apache-2.0

//! Expansion of an ON-set minterm into a predicted prime implicant.
//!
//! Positions are visited in ascending order. At each position the current
//! literal is flipped and the cube's don't-cares are filled at random; if
//! every probe answers 1 the position becomes a don't-care, otherwise the
//! literal from the seed minterm is kept.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::cube::{Cube, Literal, Minterm, Pit};
use crate::error::{Error, Result};
use crate::oracle::OracleSession;

/// Limits the number of probes per position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionBudget {
    /// Linear limitation parameter: a position with `k` don't-cares gets up
    /// to `ceil(p * k)` probes.
    pub p: f64,
    /// Constant limit for hard don't-care positions.
    pub p0: u64,
    /// Probe every covered minterm (`2^k` probes) instead.
    pub verify_exhaustively: bool,
    /// Minimum table size before hard don't-cares are trusted.
    pub harden_after: usize,
}

impl Default for ExpansionBudget {
    fn default() -> Self {
        Self {
            p: 1.1,
            p0: 8,
            verify_exhaustively: false,
            harden_after: 1,
        }
    }
}

/// Exhaustive verification enumerates fills by index, so the don't-care
/// count must stay below this.
const MAX_EXHAUSTIVE_DC: usize = 40;

impl ExpansionBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::Param(format!("p must be positive, got {}", self.p)));
        }
        if self.p0 == 0 {
            return Err(Error::Param("p0 must be at least 1".into()));
        }
        Ok(())
    }

    /// Probe limit at a regular position with `num_dc` don't-cares.
    pub fn iter_limit(&self, num_dc: usize) -> u64 {
        let all = pow2(num_dc);
        if self.verify_exhaustively {
            return all;
        }
        let linear = (self.p * num_dc as f64).ceil() as u64;
        linear.min(all).max(1)
    }

    /// Probe limit at a hard don't-care position.
    pub fn hard_iter_limit(&self, num_dc: usize) -> u64 {
        let all = pow2(num_dc);
        if self.verify_exhaustively {
            return all;
        }
        self.p0.min(all)
    }
}

fn pow2(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        1u64 << k
    }
}

/// What happened at one position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageTrace {
    pub position: usize,
    pub num_dc: usize,
    pub hard: bool,
    pub limit: u64,
    /// Oracle calls issued, cached or not.
    pub probes: u64,
    /// Calls that reached the oracle backend.
    pub distinct: u64,
    pub became_dc: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionTrace {
    pub stages: Vec<StageTrace>,
}

impl ExpansionTrace {
    pub fn probes(&self) -> u64 {
        self.stages.iter().map(|s| s.probes).sum()
    }

    pub fn distinct_queries(&self) -> u64 {
        self.stages.iter().map(|s| s.distinct).sum()
    }

    pub fn hard_positions(&self) -> usize {
        self.stages.iter().filter(|s| s.hard).count()
    }

    /// Probe count per position, in order.
    pub fn stage_probes(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.probes).collect()
    }
}

/// Positions that are don't-care in every cube of `current`, once the
/// table holds at least `harden_after` cubes.
pub fn hard_dont_cares(current: &Pit, harden_after: usize) -> Vec<bool> {
    if current.is_empty() || current.len() < harden_after {
        return vec![false; current.width()];
    }
    current.always_dc()
}

/// Expands `m0` with the regular limit at every position.
pub fn expand_minterm_to_pi<R: Rng + ?Sized>(
    s: &mut OracleSession,
    w: usize,
    m0: &Minterm,
    b: &ExpansionBudget,
    rng: &mut R,
) -> Result<Cube> {
    expand_traced(s, w, m0, None, b, rng).map(|(c, _)| c)
}

/// Expands `m0`, giving hard don't-care positions of `current` the constant
/// limit. Identical to [`expand_minterm_to_pi`] when `current` is empty.
pub fn expand_scalably<R: Rng + ?Sized>(
    s: &mut OracleSession,
    w: usize,
    m0: &Minterm,
    current: &Pit,
    b: &ExpansionBudget,
    rng: &mut R,
) -> Result<Cube> {
    expand_traced(s, w, m0, Some(current), b, rng).map(|(c, _)| c)
}

/// Expansion with a per-position record. `current = None` disables hard
/// don't-cares.
pub fn expand_traced<R: Rng + ?Sized>(
    s: &mut OracleSession,
    w: usize,
    m0: &Minterm,
    current: Option<&Pit>,
    b: &ExpansionBudget,
    rng: &mut R,
) -> Result<(Cube, ExpansionTrace)> {
    b.validate()?;
    let n = m0.width();
    let hard = match current {
        Some(t) => {
            if t.width() != n {
                return Err(crate::error::CubeError::WidthMismatch {
                    expected: n,
                    found: t.width(),
                }
                .into());
            }
            hard_dont_cares(t, b.harden_after)
        }
        None => vec![false; n],
    };
    if !s.query(m0, w)? {
        return Err(Error::NotOnSet(m0.to_string()));
    }
    let mut cube = m0.to_cube();
    let mut dcs: Vec<usize> = Vec::new();
    let mut trace = ExpansionTrace::default();
    for (index, &is_hard) in hard.iter().enumerate() {
        let num_dc = dcs.len();
        let limit = if is_hard {
            b.hard_iter_limit(num_dc)
        } else {
            b.iter_limit(num_dc)
        };
        let before = s.distinct_queries(w);
        let (all_on, probes) = probe_position(s, w, m0, index, &dcs, limit, rng)?;
        if all_on {
            cube.set(index, Literal::DontCare);
            dcs.push(index);
        }
        trace.stages.push(StageTrace {
            position: index,
            num_dc,
            hard: hard[index],
            limit,
            probes,
            distinct: s.distinct_queries(w) - before,
            became_dc: all_on,
        });
    }
    Ok((cube, trace))
}

/// Issues up to `limit` probes with `index` flipped. Returns whether all
/// answered 1, and how many were issued.
fn probe_position<R: Rng + ?Sized>(
    s: &mut OracleSession,
    w: usize,
    m0: &Minterm,
    index: usize,
    dcs: &[usize],
    limit: u64,
    rng: &mut R,
) -> Result<(bool, u64)> {
    let mut probe = m0.clone();
    probe.flip(index);
    let k = dcs.len();
    let mut issued = 0u64;
    let exhaustive = pow2(k) <= limit;
    if exhaustive {
        if k > MAX_EXHAUSTIVE_DC {
            return Err(Error::Param(format!(
                "exhaustive verification over {k} don't-cares"
            )));
        }
        let total = 1u64 << k;
        let mut order: Vec<u64> = (0..total).collect();
        order.shuffle(rng);
        for fill in order {
            for (j, &pos) in dcs.iter().enumerate() {
                probe.set(pos, fill >> j & 1 == 1);
            }
            issued += 1;
            if !s.query(&probe, w)? {
                return Ok((false, issued));
            }
        }
    } else {
        for _ in 0..limit {
            for &pos in dcs {
                probe.set(pos, rng.gen());
            }
            issued += 1;
            if !s.query(&probe, w)? {
                return Ok((false, issued));
            }
        }
    }
    Ok((true, issued))
}

/// Worst-case distinct queries of one regular expansion over `n` inputs:
/// `p (n^2 + n) / 2` probes plus one for each position whose limit is
/// floored to 1.
pub fn expansion_query_bound(p: f64, n: usize) -> f64 {
    let n = n as f64;
    p * (n * n + n) / 2.0 + n
}

/// Worst-case distinct queries of a scalable expansion with `n_r` regular
/// positions and `n - n_r` hard ones.
pub fn scalable_query_bound(p: f64, p0: u64, n: usize, n_r: usize) -> f64 {
    let nr = n_r as f64;
    p * (nr * nr + nr) / 2.0 + p0 as f64 * (n - n_r) as f64 + n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::oracle::{NetlistOracle, OracleSession};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    const EXAMPLE_F: &str = "INPUT(a1)\nINPUT(a2)\nINPUT(a3)\nINPUT(a4)\nINPUT(a5)\nINPUT(a6)\nOUTPUT(f)\n\
        n4 = NOT(a4)\nn6 = NOT(a6)\nn1 = NOT(a1)\nt1 = AND(a1, a2, n4)\nt2 = AND(a4, n6)\nt3 = AND(n1, a6)\nf = OR(t1, t2, t3)\n";

    fn session(text: &str) -> OracleSession {
        let nl = Arc::new(parse_bench(text).unwrap());
        OracleSession::new(Box::new(NetlistOracle::new(nl)), 1 << 16)
    }

    #[test]
    fn limits() {
        let b = ExpansionBudget::default();
        let got: Vec<u64> = (0..6).map(|k| b.iter_limit(k)).collect();
        assert_eq!(got, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(b.hard_iter_limit(2), 4);
        assert_eq!(b.hard_iter_limit(10), 8);
        let ex = ExpansionBudget {
            verify_exhaustively: true,
            ..b
        };
        assert_eq!(ex.iter_limit(5), 32);
        assert_eq!(ex.hard_iter_limit(5), 32);
    }

    #[test]
    fn bad_budget() {
        let b = ExpansionBudget {
            p: 0.0,
            ..Default::default()
        };
        assert!(matches!(b.validate(), Err(Error::Param(_))));
        let b = ExpansionBudget {
            p0: 0,
            ..Default::default()
        };
        assert!(matches!(b.validate(), Err(Error::Param(_))));
    }

    #[test]
    fn example_expansion_reaches_the_figure_cube_for_most_seeds() {
        let mut hits = 0;
        for seed in 0..64 {
            let mut s = session(EXAMPLE_F);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m0: Minterm = "000110".parse().unwrap();
            let (cube, trace) =
                expand_traced(&mut s, 0, &m0, None, &Default::default(), &mut rng).unwrap();
            let p = trace.stage_probes();
            assert_eq!(&p[..3], &[1, 2, 3]);
            if cube.to_string() == "---1-0" {
                hits += 1;
                assert_eq!(p[4], 4);
            }
        }
        assert!(hits >= 60, "{hits}");
    }

    #[test]
    fn and3_keeps_every_literal() {
        let mut s = session("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\ny = AND(a, b, c)\n");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = expand_minterm_to_pi(
            &mut s,
            0,
            &"111".parse().unwrap(),
            &Default::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(c.to_string(), "111");
    }

    #[test]
    fn tautology_expands_to_universe() {
        let mut s = session("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\ny = VDD()\n");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = ExpansionBudget {
            verify_exhaustively: true,
            ..Default::default()
        };
        let c = expand_minterm_to_pi(&mut s, 0, &"010".parse().unwrap(), &b, &mut rng).unwrap();
        assert!(c.is_universe());
    }

    #[test]
    fn off_seed_is_rejected() {
        let mut s = session(EXAMPLE_F);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = expand_minterm_to_pi(
            &mut s,
            0,
            &"000000".parse().unwrap(),
            &Default::default(),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::NotOnSet(_))));
    }

    #[test]
    fn hard_positions_follow_the_table() {
        let t = Pit::parse(6, "---1-0").unwrap();
        assert_eq!(
            hard_dont_cares(&t, 1),
            vec![true, true, true, false, true, false]
        );
        assert_eq!(hard_dont_cares(&t, 2), vec![false; 6]);
        assert_eq!(hard_dont_cares(&Pit::new(6), 1), vec![false; 6]);
    }

    #[test]
    fn empty_table_matches_plain_expansion() {
        for seed in 0..8 {
            let m0: Minterm = "011001".parse().unwrap();
            let mut s1 = session(EXAMPLE_F);
            let mut s2 = session(EXAMPLE_F);
            let mut r1 = ChaCha8Rng::seed_from_u64(seed);
            let mut r2 = ChaCha8Rng::seed_from_u64(seed);
            let a = expand_minterm_to_pi(&mut s1, 0, &m0, &Default::default(), &mut r1).unwrap();
            let b = expand_scalably(&mut s2, 0, &m0, &Pit::new(6), &Default::default(), &mut r2)
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn scalable_expansion_caps_hard_positions() {
        let t = Pit::parse(6, "---1-0").unwrap();
        let mut s = session(EXAMPLE_F);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m0: Minterm = "011001".parse().unwrap();
        let (c, trace) =
            expand_traced(&mut s, 0, &m0, Some(&t), &Default::default(), &mut rng).unwrap();
        assert!(c.covers(&m0).unwrap());
        for st in &trace.stages {
            if st.hard {
                assert!(st.probes <= 8);
            }
        }
    }

    #[test]
    fn bounds() {
        assert!((expansion_query_bound(1.1, 6) - 29.1).abs() < 1e-9);
        assert!((scalable_query_bound(1.1, 8, 40, 4) - (11.0 + 288.0 + 40.0)).abs() < 1e-9);
    }
}
