// SPDX-License-Identifier: Apache-2.0

//! Gate-level combinational netlists in ISCAS BENCH syntax.
//!
//! ```text
//! # comment
//! INPUT(a)
//! OUTPUT(y)
//! y = NAND(a, b)
//! ```
//!
//! Simulation is bit-parallel: every net carries a `u64`, so one pass
//! evaluates 64 independent assignments.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use crate::cube::Minterm;
use crate::error::NetlistError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
    /// Constant 0 (`GND()`), accepted on input only.
    Gnd,
    /// Constant 1 (`VDD()`), accepted on input only.
    Vdd,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buff => "BUFF",
            GateKind::Gnd => "GND",
            GateKind::Vdd => "VDD",
        }
    }

    fn check_arity(self, found: usize) -> Result<(), &'static str> {
        match self {
            GateKind::Not | GateKind::Buff if found != 1 => Err("exactly 1"),
            GateKind::Gnd | GateKind::Vdd if found != 0 => Err("0"),
            GateKind::Not | GateKind::Buff | GateKind::Gnd | GateKind::Vdd => Ok(()),
            _ if found == 0 => Err("at least 1"),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval_words(self, ins: impl Iterator<Item = u64>) -> u64 {
        let mut ins = ins;
        match self {
            GateKind::And => ins.fold(u64::MAX, |a, b| a & b),
            GateKind::Nand => !ins.fold(u64::MAX, |a, b| a & b),
            GateKind::Or => ins.fold(0, |a, b| a | b),
            GateKind::Nor => !ins.fold(0, |a, b| a | b),
            GateKind::Xor => ins.fold(0, |a, b| a ^ b),
            GateKind::Xnor => !ins.fold(0, |a, b| a ^ b),
            GateKind::Not => !ins.next().unwrap_or(0),
            GateKind::Buff => ins.next().unwrap_or(0),
            GateKind::Gnd => 0,
            GateKind::Vdd => u64::MAX,
        }
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "NAND" => GateKind::Nand,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUFF" | "BUF" => GateKind::Buff,
            "GND" | "CONST0" => GateKind::Gnd,
            "VDD" | "CONST1" => GateKind::Vdd,
            _ => return Err(()),
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A gate driving net `output` from nets `inputs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub output: usize,
    pub kind: GateKind,
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Cone {
    gates: Vec<usize>,
    inputs: Vec<usize>,
}

/// A validated, topologically ordered combinational netlist.
#[derive(Debug)]
pub struct Netlist {
    nets: Vec<String>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    gates: Vec<Gate>,
    /// Input position of each net, if it is a primary input.
    input_pos: Vec<Option<usize>>,
    /// Gate index driving each net.
    driver: Vec<Option<usize>>,
    cones: Vec<OnceLock<Cone>>,
}

impl Clone for Netlist {
    fn clone(&self) -> Self {
        Self {
            nets: self.nets.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            gates: self.gates.clone(),
            input_pos: self.input_pos.clone(),
            driver: self.driver.clone(),
            cones: (0..self.outputs.len()).map(|_| OnceLock::new()).collect(),
        }
    }
}

impl Netlist {
    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn num_nets(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, net: usize) -> &str {
        &self.nets[net]
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|&n| self.nets[n].as_str()).collect()
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs
            .iter()
            .map(|&n| self.nets[n].as_str())
            .collect()
    }

    pub fn input_net(&self, i: usize) -> usize {
        self.inputs[i]
    }

    pub fn output_net(&self, w: usize) -> usize {
        self.outputs[w]
    }

    /// Primary-input position of `net`, if any.
    pub fn input_position(&self, net: usize) -> Option<usize> {
        self.input_pos[net]
    }

    /// Gates in topological order.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn check_output(&self, w: usize) -> Result<(), NetlistError> {
        if w < self.outputs.len() {
            Ok(())
        } else {
            Err(NetlistError::InvalidOutput {
                index: w,
                count: self.outputs.len(),
            })
        }
    }

    fn cone(&self, w: usize) -> &Cone {
        self.cones[w].get_or_init(|| {
            let mut mark = vec![false; self.nets.len()];
            let mut stack = vec![self.outputs[w]];
            while let Some(net) = stack.pop() {
                if std::mem::replace(&mut mark[net], true) {
                    continue;
                }
                if let Some(g) = self.driver[net] {
                    stack.extend(self.gates[g].inputs.iter().copied());
                }
            }
            let gates = (0..self.gates.len())
                .filter(|&g| mark[self.gates[g].output])
                .collect();
            let inputs = (0..self.inputs.len())
                .filter(|&i| mark[self.inputs[i]])
                .collect();
            Cone { gates, inputs }
        })
    }

    /// Gate indices of the transitive fan-in of output `w`, topologically
    /// ordered.
    pub fn cone_gates(&self, w: usize) -> Result<&[usize], NetlistError> {
        self.check_output(w)?;
        Ok(&self.cone(w).gates)
    }

    /// Structural cone of influence of output `w`: ascending input positions
    /// reachable backwards from the output. A superset of the inputs the
    /// output functionally depends on.
    pub fn effective_inputs(&self, w: usize) -> Result<Vec<usize>, NetlistError> {
        self.check_output(w)?;
        Ok(self.cone(w).inputs.clone())
    }

    /// Evaluates all outputs at one assignment.
    pub fn simulate(&self, assignment: &Minterm) -> Result<Vec<bool>, NetlistError> {
        self.check_width(assignment.width())?;
        let words: Vec<u64> = assignment
            .iter()
            .map(|b| if b { u64::MAX } else { 0 })
            .collect();
        let mut scratch = Vec::new();
        let out = self.simulate_words(&words, &mut scratch);
        Ok(out.into_iter().map(|w| w & 1 == 1).collect())
    }

    fn check_width(&self, found: usize) -> Result<(), NetlistError> {
        if found == self.inputs.len() {
            Ok(())
        } else {
            Err(NetlistError::WidthMismatch {
                expected: self.inputs.len(),
                found,
            })
        }
    }

    /// 64-lane simulation. `inputs[i]` carries input `i` for every lane; the
    /// result carries every output. `scratch` is reused across calls.
    pub fn simulate_words(&self, inputs: &[u64], scratch: &mut Vec<u64>) -> Vec<u64> {
        assert_eq!(inputs.len(), self.inputs.len(), "input word count");
        scratch.clear();
        scratch.resize(self.nets.len(), 0);
        for (i, &net) in self.inputs.iter().enumerate() {
            scratch[net] = inputs[i];
        }
        for g in &self.gates {
            let v = g.kind.eval_words(g.inputs.iter().map(|&n| scratch[n]));
            scratch[g.output] = v;
        }
        self.outputs.iter().map(|&n| scratch[n]).collect()
    }

    /// Evaluates only output `w`, touching only its cone.
    pub fn eval_output(
        &self,
        w: usize,
        assignment: &Minterm,
        scratch: &mut Vec<u64>,
    ) -> Result<bool, NetlistError> {
        self.check_output(w)?;
        self.check_width(assignment.width())?;
        let cone = self.cone(w);
        scratch.resize(self.nets.len(), 0);
        for &i in &cone.inputs {
            scratch[self.inputs[i]] = assignment.get(i) as u64;
        }
        for &gi in &cone.gates {
            let g = &self.gates[gi];
            let v = g.kind.eval_words(g.inputs.iter().map(|&n| scratch[n]));
            scratch[g.output] = v;
        }
        Ok(scratch[self.outputs[w]] & 1 == 1)
    }

    /// BENCH text that [`parse_bench`] reads back to an equivalent netlist.
    pub fn to_bench(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# {} inputs, {} outputs, {} gates",
            self.inputs.len(),
            self.outputs.len(),
            self.gates.len()
        )
        .unwrap();
        for &n in &self.inputs {
            writeln!(s, "INPUT({})", self.nets[n]).unwrap();
        }
        for &n in &self.outputs {
            writeln!(s, "OUTPUT({})", self.nets[n]).unwrap();
        }
        for g in &self.gates {
            let args: Vec<&str> = g.inputs.iter().map(|&n| self.nets[n].as_str()).collect();
            writeln!(
                s,
                "{} = {}({})",
                self.nets[g.output],
                g.kind,
                args.join(", ")
            )
            .unwrap();
        }
        s
    }
}

impl FromStr for Netlist {
    type Err = NetlistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bench(s)
    }
}

/// Incremental netlist construction; [`NetlistBuilder::build`] validates.
#[derive(Debug, Default, Clone)]
pub struct NetlistBuilder {
    inputs: Vec<(String, usize)>,
    outputs: Vec<(String, usize)>,
    gates: Vec<(String, GateKind, Vec<String>, usize)>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        let line = self.next_line();
        self.inputs.push((name.into(), line));
        self
    }

    pub fn output(&mut self, name: impl Into<String>) -> &mut Self {
        let line = self.next_line();
        self.outputs.push((name.into(), line));
        self
    }

    pub fn gate<S: Into<String>>(
        &mut self,
        output: impl Into<String>,
        kind: GateKind,
        inputs: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        let line = self.next_line();
        self.gates.push((
            output.into(),
            kind,
            inputs.into_iter().map(Into::into).collect(),
            line,
        ));
        self
    }

    fn next_line(&self) -> usize {
        self.inputs.len() + self.outputs.len() + self.gates.len() + 1
    }

    pub fn build(&self) -> Result<Netlist, NetlistError> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut nets: Vec<String> = Vec::new();

        // Definitions come from INPUT declarations and gate outputs; visit
        // them in line order so redefinition errors name the later line.
        let mut defs: Vec<(usize, &str)> = self
            .inputs
            .iter()
            .map(|(n, l)| (*l, n.as_str()))
            .chain(self.gates.iter().map(|(n, _, _, l)| (*l, n.as_str())))
            .collect();
        defs.sort_by_key(|d| d.0);
        for (line, name) in defs {
            if ids.insert(name, nets.len()).is_some() {
                return Err(NetlistError::Redefined {
                    line,
                    name: name.to_string(),
                });
            }
            nets.push(name.to_string());
        }

        let mut input_pos = vec![None; nets.len()];
        let inputs: Vec<usize> = self
            .inputs
            .iter()
            .enumerate()
            .map(|(pos, (n, _))| {
                let id = ids[n.as_str()];
                input_pos[id] = Some(pos);
                id
            })
            .collect();

        let lookup = |name: &str, line: usize| {
            ids.get(name)
                .copied()
                .ok_or_else(|| NetlistError::UndefinedNet {
                    line,
                    name: name.to_string(),
                })
        };

        let mut raw_gates = Vec::with_capacity(self.gates.len());
        for (out, kind, ins, line) in &self.gates {
            kind.check_arity(ins.len())
                .map_err(|expected| NetlistError::Arity {
                    line: *line,
                    kind: kind.name().to_string(),
                    expected,
                    found: ins.len(),
                })?;
            let ins = ins
                .iter()
                .map(|n| lookup(n, *line))
                .collect::<Result<Vec<_>, _>>()?;
            raw_gates.push((
                Gate {
                    output: ids[out.as_str()],
                    kind: *kind,
                    inputs: ins,
                },
                *line,
            ));
        }
        let outputs = self
            .outputs
            .iter()
            .map(|(n, line)| lookup(n, *line))
            .collect::<Result<Vec<_>, _>>()?;

        // Kahn's algorithm over gate dependencies.
        let mut driver = vec![None; nets.len()];
        for (gi, (g, _)) in raw_gates.iter().enumerate() {
            driver[g.output] = Some(gi);
        }
        let mut pending = vec![0usize; raw_gates.len()];
        let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); raw_gates.len()];
        for (gi, (g, _)) in raw_gates.iter().enumerate() {
            for &n in &g.inputs {
                if let Some(src) = driver[n] {
                    pending[gi] += 1;
                    fanout[src].push(gi);
                }
            }
        }
        let mut ready: Vec<usize> = (0..raw_gates.len())
            .filter(|&g| pending[g] == 0)
            .rev()
            .collect();
        let mut order = Vec::with_capacity(raw_gates.len());
        while let Some(g) = ready.pop() {
            order.push(g);
            for &succ in fanout[g].iter().rev() {
                pending[succ] -= 1;
                if pending[succ] == 0 {
                    ready.push(succ);
                }
            }
        }
        if order.len() != raw_gates.len() {
            let stuck = (0..raw_gates.len())
                .find(|&g| pending[g] > 0)
                .expect("some gate is left over");
            let (g, line) = &raw_gates[stuck];
            return Err(NetlistError::Cycle {
                line: *line,
                net: nets[g.output].clone(),
            });
        }

        let mut gates = Vec::with_capacity(order.len());
        let mut driver = vec![None; nets.len()];
        for g in order {
            driver[raw_gates[g].0.output] = Some(gates.len());
            gates.push(raw_gates[g].0.clone());
        }
        Ok(Netlist {
            cones: (0..outputs.len()).map(|_| OnceLock::new()).collect(),
            nets,
            inputs,
            outputs,
            gates,
            input_pos,
            driver,
        })
    }
}

/// Parses ISCAS BENCH text. Input and output order follow declaration order.
pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    let mut b = NetlistBuilder::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |msg: &str| NetlistError::Syntax {
            line,
            msg: msg.to_string(),
        };
        if let Some((lhs, rhs)) = content.split_once('=') {
            let out = lhs.trim();
            check_name(out).map_err(|m| syntax(&m))?;
            let (kind, args) = call(rhs.trim()).ok_or_else(|| syntax("expected GATE(args)"))?;
            let kind: GateKind = kind.parse().map_err(|_| NetlistError::UnknownGate {
                line,
                kind: kind.to_string(),
            })?;
            for a in &args {
                check_name(a).map_err(|m| syntax(&m))?;
            }
            b.gates.push((out.to_string(), kind, args, line));
        } else {
            let (kw, args) = call(content)
                .ok_or_else(|| syntax("expected INPUT(x), OUTPUT(y) or y = GATE(...)"))?;
            let [name] = args.as_slice() else {
                return Err(syntax("declaration takes exactly one net"));
            };
            check_name(name).map_err(|m| syntax(&m))?;
            match kw.to_ascii_uppercase().as_str() {
                "INPUT" => b.inputs.push((name.clone(), line)),
                "OUTPUT" => b.outputs.push((name.clone(), line)),
                _ => return Err(syntax(&format!("unknown declaration `{kw}`"))),
            }
        }
    }
    b.build()
}

fn call(s: &str) -> Option<(&str, Vec<String>)> {
    let open = s.find('(')?;
    let close = s.rfind(')')?;
    if close < open || !s[close + 1..].trim().is_empty() {
        return None;
    }
    let head = s[..open].trim();
    if head.is_empty() {
        return None;
    }
    let inner = s[open + 1..close].trim();
    let args = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| a.trim().to_string()).collect()
    };
    Some((head, args))
}

fn check_name(name: &str) -> Result<(), String> {
    if name.is_empty() {
        return Err("empty net name".into());
    }
    if name
        .chars()
        .any(|c| c.is_whitespace() || "(),=".contains(c))
    {
        return Err(format!("invalid net name `{name}`"));
    }
    Ok(())
}
