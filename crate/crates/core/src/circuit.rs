// SPDX-License-Identifier: Apache-2.0

//! Whole-circuit recovery: one cone predictor per output on a worker pool,
//! then conversion of the tables into BENCH and PLA artifacts.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cone::{predict_cone_until, AttackParams, ConeResult, ConeStatus, ExpansionRecord};
use crate::cube::{Cube, Pit};
use crate::error::{Error, Result};
use crate::netlist::{GateKind, Netlist, NetlistBuilder};
use crate::oracle::OracleSource;
use crate::par;

#[derive(Debug, Clone)]
pub struct PredictionReport {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// One result per output, in output order.
    pub cones: Vec<ConeResult>,
    pub params: AttackParams,
    pub jobs: usize,
    /// Measured wall clock of the whole run.
    pub wall_clock: Duration,
    pub merge_time: Duration,
}

impl PredictionReport {
    pub fn num_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn pits(&self) -> Vec<&Pit> {
        self.cones.iter().map(|c| &c.pit).collect()
    }

    /// Longest cone plus merge time.
    pub fn total_time(&self) -> Duration {
        self.cones
            .iter()
            .map(|c| c.elapsed)
            .max()
            .unwrap_or_default()
            + self.merge_time
    }

    pub fn total_queries(&self) -> u64 {
        self.cones.iter().map(|c| c.queries).sum()
    }

    pub fn to_json_value(&self) -> ReportJson {
        ReportJson {
            seed: self.params.seed,
            jobs: self.jobs,
            params: ParamsJson::from(&self.params),
            num_inputs: self.num_inputs(),
            num_outputs: self.output_names.len(),
            wall_clock_s: self.wall_clock.as_secs_f64(),
            merge_time_s: self.merge_time.as_secs_f64(),
            total_time_s: self.total_time().as_secs_f64(),
            total_queries: self.total_queries(),
            cones: self
                .cones
                .iter()
                .map(|c| ConeJson {
                    output: c.output,
                    name: self.output_names[c.output].clone(),
                    status: c.status.name(),
                    reason: match &c.status {
                        ConeStatus::Failed(r) => Some(r.clone()),
                        _ => None,
                    },
                    pi_count: c.pi_count(),
                    queries: c.queries,
                    first_probes: c.first_probes,
                    candidates: c.candidates,
                    off_candidates: c.off_candidates,
                    d_reached: c.d_reached,
                    elapsed_s: c.elapsed.as_secs_f64(),
                    max_expansion_queries: c
                        .expansions
                        .iter()
                        .map(|e| e.distinct_queries)
                        .max()
                        .unwrap_or(0),
                    expansions: c.expansions.clone(),
                    pit: c.pit.iter().map(Cube::to_string).collect(),
                })
                .collect(),
        }
    }
}

/// Every effective attack parameter, as written to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsJson {
    pub d0: usize,
    pub p: f64,
    pub p0: u64,
    /// `null` means unlimited.
    pub p_conv: Option<u64>,
    pub r: u64,
    #[serde(rename = "T_s")]
    pub time_limit_s: f64,
    pub global_time_limit_s: Option<f64>,
    pub seed: u64,
    pub scalable_expansion: bool,
    pub verify_exhaustively: bool,
    pub harden_after: usize,
    pub sat_conflict_budget: Option<u64>,
}

impl From<&AttackParams> for ParamsJson {
    fn from(p: &AttackParams) -> Self {
        Self {
            d0: p.d0,
            p: p.p,
            p0: p.p0,
            p_conv: p.p_conv,
            r: p.r,
            time_limit_s: p.time_limit.as_secs_f64(),
            global_time_limit_s: p.global_time_limit.map(|g| g.as_secs_f64()),
            seed: p.seed,
            scalable_expansion: p.scalable_expansion,
            verify_exhaustively: p.verify_exhaustively,
            harden_after: p.harden_after,
            sat_conflict_budget: p.sat_conflict_budget,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeJson {
    pub output: usize,
    pub name: String,
    pub status: &'static str,
    pub reason: Option<String>,
    pub pi_count: usize,
    pub queries: u64,
    pub first_probes: u64,
    pub candidates: u64,
    pub off_candidates: u64,
    pub d_reached: usize,
    pub elapsed_s: f64,
    pub max_expansion_queries: u64,
    pub expansions: Vec<ExpansionRecord>,
    pub pit: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub seed: u64,
    pub jobs: usize,
    pub params: ParamsJson,
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub wall_clock_s: f64,
    pub merge_time_s: f64,
    pub total_time_s: f64,
    pub total_queries: u64,
    pub cones: Vec<ConeJson>,
}

/// Predicts every output with at most `jobs` cones in flight. Each cone
/// gets its own oracle session and a generator derived from the seed and
/// its index, so results do not depend on `jobs`.
pub fn predict_circuit(
    source: &OracleSource,
    params: &AttackParams,
    jobs: usize,
) -> Result<PredictionReport> {
    if jobs < 1 {
        return Err(Error::Param("jobs must be at least 1".into()));
    }
    params.validate()?;
    let start = Instant::now();
    let probe = source.open()?;
    let input_names = probe.input_names();
    let output_names = probe.output_names();
    let m = probe.num_outputs();
    drop(probe);
    let global_end = params.global_time_limit.map(|g| start + g);

    let cones = par::map_indexed(m, jobs, |w| {
        let cone_start = Instant::now();
        let mut deadline = cone_start + params.time_limit;
        if let Some(g) = global_end {
            deadline = deadline.min(g);
        }
        match source.open() {
            Ok(mut s) => predict_cone_until(&mut s, w, params, cone_start, deadline),
            Err(e) => ConeResult {
                output: w,
                status: ConeStatus::Failed(e.to_string()),
                pit: Pit::new(input_names.len()),
                queries: 0,
                elapsed: cone_start.elapsed(),
                d_reached: 0,
                candidates: 0,
                off_candidates: 0,
                first_probes: 0,
                expansions: Vec::new(),
            },
        }
    });
    let merge_start = Instant::now();
    // Cones are already duplicate-free; merging is assembling the report.
    let merge_time = merge_start.elapsed();
    Ok(PredictionReport {
        input_names,
        output_names,
        cones,
        params: params.clone(),
        jobs,
        wall_clock: start.elapsed(),
        merge_time,
    })
}

/// Picks names for generated nets that clash with nothing in `taken`.
struct Namer {
    taken: HashSet<String>,
}

impl Namer {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 1;
        while self.taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Two-level netlist computing `pits[w]` as output `w`: an AND per cube over
/// its literals, an OR per output. An empty table becomes `x1 AND NOT x1`
/// and a table holding the universal cube becomes `x1 OR NOT x1`.
pub fn sop_netlist(
    input_names: &[String],
    output_names: &[String],
    pits: &[&Pit],
) -> Result<Netlist> {
    let n = input_names.len();
    if output_names.len() != pits.len() {
        return Err(Error::Interface(format!(
            "{} output names for {} tables",
            output_names.len(),
            pits.len()
        )));
    }
    for t in pits {
        if t.width() != n {
            return Err(Error::Interface(format!(
                "table width {} against {n} inputs",
                t.width()
            )));
        }
    }
    let mut namer = Namer {
        taken: input_names.iter().cloned().collect(),
    };
    let mut b = NetlistBuilder::new();
    for name in input_names {
        b.input(name.clone());
    }
    // Output names that collide with inputs or earlier outputs are renamed.
    let outs: Vec<String> = output_names.iter().map(|o| namer.fresh(o)).collect();
    for o in &outs {
        b.output(o.clone());
    }
    let mut inverted: Vec<Option<String>> = vec![None; n];
    let mut inv = |b: &mut NetlistBuilder, namer: &mut Namer, i: usize| -> String {
        inverted[i]
            .get_or_insert_with(|| {
                let name = namer.fresh(&format!("inv_{}", input_names[i]));
                b.gate(name.clone(), GateKind::Not, [input_names[i].clone()]);
                name
            })
            .clone()
    };
    for (w, t) in pits.iter().enumerate() {
        let out = outs[w].clone();
        let constant = if t.is_empty() {
            Some(false)
        } else if t.iter().any(Cube::is_universe) {
            Some(true)
        } else {
            None
        };
        if let Some(value) = constant {
            if n == 0 {
                let kind = if value { GateKind::Vdd } else { GateKind::Gnd };
                b.gate(out, kind, Vec::<String>::new());
            } else {
                let neg = inv(&mut b, &mut namer, 0);
                let kind = if value { GateKind::Or } else { GateKind::And };
                b.gate(out, kind, [input_names[0].clone(), neg]);
            }
            continue;
        }
        let mut terms = Vec::with_capacity(t.len());
        for (k, cube) in t.iter().enumerate() {
            let lits: Vec<String> = cube
                .fixed_positions()
                .map(|(i, v)| {
                    if v {
                        input_names[i].clone()
                    } else {
                        inv(&mut b, &mut namer, i)
                    }
                })
                .collect();
            let term = namer.fresh(&format!("{out}_pi{k}"));
            let kind = if lits.len() == 1 {
                GateKind::Buff
            } else {
                GateKind::And
            };
            b.gate(term.clone(), kind, lits);
            terms.push(term);
        }
        let kind = if terms.len() == 1 {
            GateKind::Buff
        } else {
            GateKind::Or
        };
        b.gate(out, kind, terms);
    }
    Ok(b.build()?)
}

/// The merged prediction as a netlist with the oracle's interface.
pub fn pit_to_sop_netlist(report: &PredictionReport) -> Result<Netlist> {
    sop_netlist(&report.input_names, &report.output_names, &report.pits())
}

/// Single-output PLA text.
pub fn write_pla(t: &Pit) -> String {
    let mut s = String::new();
    writeln!(s, ".i {}", t.width()).unwrap();
    writeln!(s, ".o 1").unwrap();
    writeln!(s, ".p {}", t.len()).unwrap();
    for c in t {
        writeln!(s, "{c} 1").unwrap();
    }
    s.push_str(".e\n");
    s
}

/// Reads a single-output PLA: `.i`, `.o 1`, optional `.p`, cube lines with
/// output `1`, and `.e`.
pub fn read_pla(text: &str) -> Result<Pit> {
    let mut width: Option<usize> = None;
    let mut declared: Option<usize> = None;
    let mut pit: Option<Pit> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Pla(format!("line {}: {msg}", ln + 1));
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or("");
        let arg = parts.next();
        let number = |a: Option<&str>| {
            a.and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| err(format!("`{head}` needs a number")))
        };
        match head {
            ".i" => {
                let n = number(arg)?;
                width = Some(n);
                pit = Some(Pit::new(n));
            }
            ".o" => {
                let o = number(arg)?;
                if o != 1 {
                    return Err(err(format!(
                        "only single-output PLA supported, found .o {o}"
                    )));
                }
            }
            ".p" => declared = Some(number(arg)?),
            ".e" | ".end" => break,
            _ if head.starts_with('.') => {}
            _ => {
                let t = pit.as_mut().ok_or_else(|| err("cube before .i".into()))?;
                let out = arg.ok_or_else(|| err("missing output column".into()))?;
                let cube: Cube = head.parse().map_err(|e| err(format!("{e}")))?;
                if Some(cube.width()) != width {
                    return Err(err(format!(
                        "cube width {} against .i {}",
                        cube.width(),
                        width.unwrap_or(0)
                    )));
                }
                match out {
                    "1" => {
                        t.insert(cube)?;
                    }
                    "0" | "-" | "~" => {}
                    other => return Err(err(format!("bad output column {other:?}"))),
                }
            }
        }
    }
    let pit = pit.ok_or_else(|| Error::Pla("missing .i".into()))?;
    if let Some(p) = declared {
        if p < pit.len() {
            return Err(Error::Pla(format!(".p {p} but {} cubes", pit.len())));
        }
    }
    Ok(pit)
}
