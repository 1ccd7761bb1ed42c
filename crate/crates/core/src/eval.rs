// SPDX-License-Identifier: Apache-2.0

//! Measurements on recovered circuits: simulation accuracy, formal
//! equivalence, exact prime-implicant extraction, distance statistics and
//! accuracy/time sweeps.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{pit_to_sop_netlist, predict_circuit};
use crate::cone::AttackParams;
use crate::cube::{Cube, Literal, Minterm, Pit};
use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::oracle::OracleSource;
use crate::par;
use crate::sat::{check_outputs_equivalent, Equivalence};

/// Default samples per output when enumeration is too large.
pub const DEFAULT_SAMPLES: u64 = 10_000;
/// Largest input count enumerated exhaustively.
pub const EXHAUSTIVE_MAX_INPUTS: usize = 20;
/// Default effective-input cap for exact extraction.
pub const DEFAULT_EXTRACTION_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    /// Percentage of agreeing minterms per output.
    pub per_output: Vec<f64>,
    pub mean: f64,
    /// Minterms compared per output.
    pub samples: u64,
    pub exhaustive: bool,
    pub seed: u64,
}

fn check_interface(a: &Netlist, b: &Netlist) -> Result<()> {
    if a.num_inputs() != b.num_inputs() || a.num_outputs() != b.num_outputs() {
        return Err(Error::Interface(format!(
            "{}x{} against {}x{} (inputs x outputs)",
            a.num_inputs(),
            a.num_outputs(),
            b.num_inputs(),
            b.num_outputs()
        )));
    }
    Ok(())
}

/// Input words for 64 consecutive minterm indices starting at `base`,
/// input 1 being the most significant index bit.
fn enumeration_words(n: usize, base: u64) -> Vec<u64> {
    (0..n)
        .map(|i| {
            let bit = n - 1 - i;
            let mut w = 0u64;
            for lane in 0..64u64 {
                if (base + lane) >> bit & 1 == 1 {
                    w |= 1 << lane;
                }
            }
            w
        })
        .collect()
}

const CHUNK_WORDS: usize = 64;

/// Agreement of `orig` and `pred` per output. Inputs and outputs are
/// matched by position. With `n <= 20` every minterm is compared; otherwise
/// `samples` random minterms shared by all outputs.
pub fn simulation_accuracy(
    orig: &Netlist,
    pred: &Netlist,
    samples: u64,
    seed: u64,
) -> Result<AccuracyReport> {
    simulation_accuracy_jobs(orig, pred, samples, seed, 1)
}

pub fn simulation_accuracy_jobs(
    orig: &Netlist,
    pred: &Netlist,
    samples: u64,
    seed: u64,
    jobs: usize,
) -> Result<AccuracyReport> {
    check_interface(orig, pred)?;
    let n = orig.num_inputs();
    let m = orig.num_outputs();
    let exhaustive = n <= EXHAUSTIVE_MAX_INPUTS;
    let total = if exhaustive { 1u64 << n } else { samples };
    if total == 0 {
        return Err(Error::Param("sample count must be positive".into()));
    }
    let words = total.div_ceil(64) as usize;
    let chunks = words.div_ceil(CHUNK_WORDS);
    let counts = par::map_indexed(chunks, jobs, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let mut matches = vec![0u64; m];
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for wi in c * CHUNK_WORDS..((c + 1) * CHUNK_WORDS).min(words) {
            let base = wi as u64 * 64;
            let lanes = (total - base).min(64);
            let mask = if lanes == 64 {
                u64::MAX
            } else {
                (1u64 << lanes) - 1
            };
            let inputs: Vec<u64> = if exhaustive {
                enumeration_words(n, base)
            } else {
                (0..n).map(|_| rng.gen()).collect()
            };
            let a = orig.simulate_words(&inputs, &mut s1);
            let b = pred.simulate_words(&inputs, &mut s2);
            for w in 0..m {
                matches[w] += (!(a[w] ^ b[w]) & mask).count_ones() as u64;
            }
        }
        matches
    });
    let mut matches = vec![0u64; m];
    for c in counts {
        for (acc, v) in matches.iter_mut().zip(c) {
            *acc += v;
        }
    }
    let per_output: Vec<f64> = matches
        .iter()
        .map(|&k| k as f64 * 100.0 / total as f64)
        .collect();
    let mean = if m == 0 {
        100.0
    } else {
        per_output.iter().sum::<f64>() / m as f64
    };
    Ok(AccuracyReport {
        per_output,
        mean,
        samples: total,
        exhaustive,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "witness")]
pub enum OutputVerdict {
    Equal,
    /// A minterm where the outputs differ, confirmed by simulation.
    Counterexample(String),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub verdicts: Vec<OutputVerdict>,
    /// Percentage of outputs proven equal. Unknown verdicts count as not
    /// equal.
    pub rate: f64,
    pub unknown: usize,
}

/// Miter check of every output pair.
pub fn equivalence_rate(
    orig: &Netlist,
    pred: &Netlist,
    conflicts: Option<u64>,
    jobs: usize,
) -> Result<EquivalenceReport> {
    check_interface(orig, pred)?;
    let m = orig.num_outputs();
    let verdicts = par::map_indexed(m, jobs, |w| -> Result<OutputVerdict> {
        Ok(
            match check_outputs_equivalent(orig, w, pred, w, conflicts)? {
                Equivalence::Equal => OutputVerdict::Equal,
                Equivalence::Unknown => OutputVerdict::Unknown,
                Equivalence::Counterexample(x) => {
                    let a = orig.simulate(&x)?[w];
                    let b = pred.simulate(&x)?[w];
                    if a == b {
                        return Err(Error::Param(format!(
                            "spurious counterexample {x} on output {w}"
                        )));
                    }
                    OutputVerdict::Counterexample(x.to_string())
                }
            },
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let equal = verdicts
        .iter()
        .filter(|v| **v == OutputVerdict::Equal)
        .count();
    let unknown = verdicts
        .iter()
        .filter(|v| **v == OutputVerdict::Unknown)
        .count();
    let rate = if m == 0 {
        100.0
    } else {
        equal as f64 * 100.0 / m as f64
    };
    Ok(EquivalenceReport {
        verdicts,
        rate,
        unknown,
    })
}

/// Truth table of output `w` over its structural inputs `eff` (first of
/// `eff` is the most significant bit), other inputs held at 0.
fn cone_table(nl: &Netlist, w: usize, eff: &[usize]) -> Vec<bool> {
    let k = eff.len();
    let n = nl.num_inputs();
    let rows = 1u64 << k;
    let mut table = Vec::with_capacity(rows as usize);
    let mut scratch = Vec::new();
    let mut base = 0u64;
    while base < rows {
        let local = enumeration_words(k, base);
        let mut inputs = vec![0u64; n];
        for (j, &i) in eff.iter().enumerate() {
            inputs[i] = local[j];
        }
        let out = nl.simulate_words(&inputs, &mut scratch)[w];
        for lane in 0..(rows - base).min(64) {
            table.push(out >> lane & 1 == 1);
        }
        base += 64;
    }
    table
}

/// All prime implicants of a `k`-variable function given as an ON-set of
/// row indices, by iterated merging. A term is `(value, dc_mask)` with bit
/// `k-1-j` standing for variable `j`.
pub fn quine_mccluskey(k: usize, on: &[u32]) -> Vec<(u32, u32)> {
    let mut level: HashSet<(u32, u32)> = on.iter().map(|&v| (v, 0)).collect();
    let mut primes = Vec::new();
    while !level.is_empty() {
        let mut next = HashSet::new();
        let mut merged: HashSet<(u32, u32)> = HashSet::new();
        for &(v, mask) in &level {
            for bit in 0..k {
                let b = 1u32 << bit;
                if mask & b != 0 || v & b != 0 {
                    continue;
                }
                let partner = (v | b, mask);
                if level.contains(&partner) {
                    next.insert((v, mask | b));
                    merged.insert((v, mask));
                    merged.insert(partner);
                }
            }
        }
        primes.extend(level.iter().filter(|t| !merged.contains(t)).copied());
        level = next;
    }
    primes.sort_unstable_by_key(|&(v, m)| (std::cmp::Reverse(m.count_ones()), m, v));
    primes
}

/// The complete prime-implicant set of output `w`, computed over its
/// structural inputs and lifted to full width with don't-cares elsewhere.
/// Refuses cones with more than `cap` structural inputs.
pub fn extract_prime_implicants_exhaustive(nl: &Netlist, w: usize, cap: usize) -> Result<Pit> {
    let eff = nl.effective_inputs(w)?;
    let k = eff.len();
    if k > cap || k > 30 {
        return Err(Error::CapExceeded { found: k, cap });
    }
    let table = cone_table(nl, w, &eff);
    let on: Vec<u32> = (0..table.len() as u32)
        .filter(|&i| table[i as usize])
        .collect();
    let n = nl.num_inputs();
    let mut pit = Pit::new(n);
    for (v, mask) in quine_mccluskey(k, &on) {
        let mut lits = vec![Literal::DontCare; n];
        for (j, &i) in eff.iter().enumerate() {
            let bit = 1u32 << (k - 1 - j);
            if mask & bit == 0 {
                lits[i] = if v & bit != 0 {
                    Literal::One
                } else {
                    Literal::Zero
                };
            }
        }
        pit.insert(Cube::from_literals(&lits))?;
    }
    Ok(pit)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DistanceSurvey {
    /// Distance between every pair of cubes within a table.
    pub pairwise: BTreeMap<usize, u64>,
    /// Distance from each cube to its nearest sibling, over tables with at
    /// least two cubes.
    pub min_distance: BTreeMap<usize, u64>,
    pub pairs: u64,
    pub pis: u64,
    pub tables: usize,
    /// Cones left out by the caller, e.g. above the extraction cap.
    pub skipped: usize,
}

impl DistanceSurvey {
    /// Share of per-PI minima at or below `d`, in percent.
    pub fn min_share_at_most(&self, d: usize) -> f64 {
        if self.pis == 0 {
            return 0.0;
        }
        let k: u64 = self.min_distance.range(..=d).map(|(_, c)| c).sum();
        k as f64 * 100.0 / self.pis as f64
    }
}

pub fn distance_survey<'a, I: IntoIterator<Item = &'a Pit>>(pits: I) -> DistanceSurvey {
    let mut s = DistanceSurvey::default();
    for t in pits {
        s.tables += 1;
        let cubes = t.cubes();
        let k = cubes.len();
        for i in 0..k {
            for j in i + 1..k {
                *s.pairwise
                    .entry(cubes[i].distance_unchecked(&cubes[j]))
                    .or_default() += 1;
                s.pairs += 1;
            }
        }
        if k >= 2 {
            for i in 0..k {
                let min = (0..k)
                    .filter(|&j| j != i)
                    .map(|j| cubes[i].distance_unchecked(&cubes[j]))
                    .min()
                    .expect("two or more cubes");
                *s.min_distance.entry(min).or_default() += 1;
                s.pis += 1;
            }
        }
    }
    s
}

/// Extracts every cone within `cap` and surveys the resulting tables.
pub fn survey_circuit(
    nl: &Netlist,
    cap: usize,
    jobs: usize,
) -> Result<(DistanceSurvey, Vec<Option<Pit>>)> {
    let pits =
        par::map_indexed(
            nl.num_outputs(),
            jobs,
            |w| match extract_prime_implicants_exhaustive(nl, w, cap) {
                Ok(p) => Ok(Some(p)),
                Err(Error::CapExceeded { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut survey = distance_survey(pits.iter().flatten());
    survey.skipped = pits.iter().filter(|p| p.is_none()).count();
    Ok((survey, pits))
}

/// Bound on the ON-ratio of a ball after `p_conv` consecutive OFF-set
/// candidates, at confidence `c`: `1 - c^(1/p_conv)`.
pub fn convergence_bound(p_conv: u64, c: f64) -> Result<f64> {
    if p_conv < 1 {
        return Err(Error::Param("p_conv must be at least 1".into()));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Param(format!(
            "confidence must lie in (0, 1], got {c}"
        )));
    }
    Ok(1.0 - c.powf(1.0 / p_conv as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub time_limit_s: f64,
    pub mean_accuracy: f64,
    /// Population standard deviation over repeats.
    pub stddev: f64,
    pub runs: usize,
    pub failures: usize,
}

/// Seed for repeat `k` of a sweep.
pub fn repeat_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Accuracy of the prediction against the original behind `source`: by
/// simulation when it is a netlist, by oracle queries otherwise.
pub fn accuracy_against_source(
    source: &OracleSource,
    pred: &Netlist,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if let Some(orig) = source.netlist() {
        return Ok(simulation_accuracy(orig, pred, samples, seed)?.mean);
    }
    let mut s = source.open()?;
    let (n, m) = (s.num_inputs(), s.num_outputs());
    if pred.num_inputs() != n || pred.num_outputs() != m {
        return Err(Error::Interface(
            "prediction does not match the oracle".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0u64;
    for _ in 0..samples {
        let x = Minterm::random(n, &mut rng);
        let out = pred.simulate(&x)?;
        for (w, &bit) in out.iter().enumerate() {
            if s.query(&x, w)? == bit {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 * 100.0 / (samples * m as u64).max(1) as f64)
}

/// Runs a full prediction per time limit and repeat and summarizes the
/// accuracy of each limit.
pub fn tradeoff_sweep(
    source: &OracleSource,
    params: &AttackParams,
    time_limits: &[Duration],
    repeats: usize,
    samples: u64,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if repeats < 1 {
        return Err(Error::Param("repeats must be at least 1".into()));
    }
    if time_limits.is_empty() || time_limits.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Param(
            "time limits must be non-empty and ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(time_limits.len());
    for &t in time_limits {
        let mut acc = Vec::with_capacity(repeats);
        let mut failures = 0;
        for k in 0..repeats {
            let p = AttackParams {
                time_limit: t,
                seed: repeat_seed(params.seed, k),
                ..params.clone()
            };
            let run = predict_circuit(source, &p, jobs)
                .and_then(|rep| pit_to_sop_netlist(&rep))
                .and_then(|pred| accuracy_against_source(source, &pred, samples, p.seed));
            match run {
                Ok(a) => acc.push(a),
                Err(_) => failures += 1,
            }
        }
        let (mean, stddev) = mean_stddev(&acc);
        rows.push(SweepRow {
            time_limit_s: t.as_secs_f64(),
            mean_accuracy: mean,
            stddev,
            runs: acc.len(),
            failures,
        });
    }
    Ok(rows)
}

/// Mean and population standard deviation; `(NaN, NaN)` when empty.
pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Convenience: an in-process source over `nl`.
pub fn netlist_source(nl: Netlist) -> OracleSource {
    OracleSource::Netlist(Arc::new(nl))
}
