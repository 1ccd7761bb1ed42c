// SPDX-License-Identifier: Apache-2.0

//! The black-box query boundary.
//!
//! An [`OracleSession`] answers "output `w` at minterm `m`", caching answers
//! per output and counting distinct backend queries. Backends are either an
//! in-process [`Netlist`] or an external process speaking a line protocol on
//! its standard streams:
//!
//! ```text
//! oracle -> HELLO <n> <m>
//! client -> Q <w> <bits>      (w is 0-based; bits[0] is input 1)
//! oracle -> A <0|1>
//! client -> BYE
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;

use crate::cube::Minterm;
use crate::error::OracleError;
use crate::netlist::{parse_bench, Netlist};

/// Per-output cache capacity used when none is configured.
pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 22;

/// Something that can answer single-output queries.
pub trait OracleBackend: Send {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn query(&mut self, m: &Minterm, w: usize) -> Result<bool, OracleError>;
    fn output_names(&self) -> Vec<String> {
        (1..=self.num_outputs()).map(|k| format!("y{k}")).collect()
    }
    fn input_names(&self) -> Vec<String> {
        (1..=self.num_inputs()).map(|k| format!("x{k}")).collect()
    }
}

/// In-process backend evaluating a shared netlist.
pub struct NetlistOracle {
    netlist: Arc<Netlist>,
    scratch: Vec<u64>,
}

impl NetlistOracle {
    pub fn new(netlist: Arc<Netlist>) -> Self {
        Self {
            netlist,
            scratch: Vec::new(),
        }
    }
}

impl OracleBackend for NetlistOracle {
    fn num_inputs(&self) -> usize {
        self.netlist.num_inputs()
    }

    fn num_outputs(&self) -> usize {
        self.netlist.num_outputs()
    }

    fn query(&mut self, m: &Minterm, w: usize) -> Result<bool, OracleError> {
        Ok(self.netlist.eval_output(w, m, &mut self.scratch)?)
    }

    fn output_names(&self) -> Vec<String> {
        self.netlist
            .output_names()
            .into_iter()
            .map(String::from)
            .collect()
    }

    fn input_names(&self) -> Vec<String> {
        self.netlist
            .input_names()
            .into_iter()
            .map(String::from)
            .collect()
    }
}

/// External process backend.
pub struct ProcessOracle {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    inputs: usize,
    outputs: usize,
    line: String,
}

impl ProcessOracle {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, OracleError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut line = String::new();
        stdout.read_line(&mut line)?;
        let mut parts = line.split_whitespace();
        let parsed = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("HELLO"), Some(n), Some(m), None) => {
                n.parse::<usize>().ok().zip(m.parse::<usize>().ok())
            }
            _ => None,
        };
        let Some((inputs, outputs)) = parsed else {
            let _ = child.kill();
            let _ = child.wait();
            return Err(OracleError::Handshake(format!(
                "expected `HELLO <n> <m>`, got {:?}",
                line.trim_end()
            )));
        };
        Ok(Self {
            child,
            stdin,
            stdout,
            inputs,
            outputs,
            line,
        })
    }
}

impl OracleBackend for ProcessOracle {
    fn num_inputs(&self) -> usize {
        self.inputs
    }

    fn num_outputs(&self) -> usize {
        self.outputs
    }

    fn query(&mut self, m: &Minterm, w: usize) -> Result<bool, OracleError> {
        writeln!(self.stdin, "Q {w} {m}")
            .map_err(|e| OracleError::Protocol(format!("write failed: {e}")))?;
        self.stdin
            .flush()
            .map_err(|e| OracleError::Protocol(format!("flush failed: {e}")))?;
        self.line.clear();
        let read = self.stdout.read_line(&mut self.line)?;
        if read == 0 {
            return Err(OracleError::Protocol("oracle closed its output".into()));
        }
        match self.line.trim_end() {
            "A 0" => Ok(false),
            "A 1" => Ok(true),
            other => Err(OracleError::Protocol(format!(
                "expected `A <0|1>`, got {other:?}"
            ))),
        }
    }
}

impl Drop for ProcessOracle {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "BYE");
        let _ = self.stdin.flush();
        if self.child.try_wait().ok().flatten().is_none() {
            // Give a well-behaved oracle the chance to exit on BYE.
            for _ in 0..50 {
                if self.child.try_wait().ok().flatten().is_some() {
                    return;
                }
                std::thread::sleep(std::time::Duration::from_millis(2));
            }
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// Serves the line protocol for `netlist` over the given streams until `BYE`
/// or end of input.
pub fn serve_protocol<R: BufRead, W: Write>(
    netlist: &Netlist,
    input: R,
    mut output: W,
) -> Result<u64, OracleError> {
    writeln!(
        output,
        "HELLO {} {}",
        netlist.num_inputs(),
        netlist.num_outputs()
    )?;
    output.flush()?;
    let mut scratch = Vec::new();
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some("BYE"), None, None) | (None, None, None) => break,
            (Some("Q"), Some(w), Some(bits)) => {
                let w: usize = w
                    .parse()
                    .map_err(|_| OracleError::Protocol(format!("bad output index in {line:?}")))?;
                let m: Minterm = bits
                    .parse()
                    .map_err(|_| OracleError::Protocol(format!("bad bit string in {line:?}")))?;
                let bit = netlist.eval_output(w, &m, &mut scratch)?;
                writeln!(output, "A {}", bit as u8)?;
                output.flush()?;
                served += 1;
            }
            _ => {
                return Err(OracleError::Protocol(format!(
                    "unexpected request {line:?}"
                )))
            }
        }
    }
    Ok(served)
}

/// How to reach an oracle.
#[derive(Debug, Clone)]
pub enum OracleConfig {
    /// BENCH file simulated in process.
    Bench(PathBuf),
    /// External command speaking the line protocol.
    Command { program: String, args: Vec<String> },
    /// Already-parsed netlist, simulated in process.
    Netlist(Arc<Netlist>),
}

impl OracleConfig {
    /// Splits a shell-like command line on whitespace.
    pub fn command(cmdline: &str) -> Self {
        let mut parts = cmdline.split_whitespace().map(String::from);
        let program = parts.next().unwrap_or_default();
        OracleConfig::Command {
            program,
            args: parts.collect(),
        }
    }

    /// Resolves file-backed configurations once, so many sessions can share
    /// the parsed netlist.
    pub fn load(&self) -> Result<OracleSource, OracleError> {
        Ok(match self {
            OracleConfig::Bench(path) => {
                let text = fs::read_to_string(path)?;
                OracleSource::Netlist(Arc::new(parse_bench(&text)?))
            }
            OracleConfig::Netlist(nl) => OracleSource::Netlist(nl.clone()),
            OracleConfig::Command { program, args } => OracleSource::Command {
                program: program.clone(),
                args: args.clone(),
            },
        })
    }
}

/// A loaded oracle that can open independent sessions.
#[derive(Debug, Clone)]
pub enum OracleSource {
    Netlist(Arc<Netlist>),
    Command { program: String, args: Vec<String> },
}

impl OracleSource {
    pub fn open(&self) -> Result<OracleSession, OracleError> {
        self.open_with_capacity(DEFAULT_CACHE_CAPACITY)
    }

    pub fn open_with_capacity(&self, cache_capacity: usize) -> Result<OracleSession, OracleError> {
        let backend: Box<dyn OracleBackend> = match self {
            OracleSource::Netlist(nl) => Box::new(NetlistOracle::new(nl.clone())),
            OracleSource::Command { program, args } => {
                Box::new(ProcessOracle::spawn(program, args)?)
            }
        };
        Ok(OracleSession::new(backend, cache_capacity))
    }

    pub fn netlist(&self) -> Option<&Arc<Netlist>> {
        match self {
            OracleSource::Netlist(nl) => Some(nl),
            OracleSource::Command { .. } => None,
        }
    }
}

/// Opens a single session for `config`.
pub fn open_oracle(config: &OracleConfig) -> Result<OracleSession, OracleError> {
    config.load()?.open()
}

/// A caching, counting query session. Not meant for concurrent use; open
/// one session per worker.
pub struct OracleSession {
    backend: Box<dyn OracleBackend>,
    inputs: usize,
    outputs: usize,
    caches: Vec<LruCache>,
    distinct: Vec<u64>,
    capacity: usize,
}

impl OracleSession {
    pub fn new(backend: Box<dyn OracleBackend>, cache_capacity: usize) -> Self {
        let inputs = backend.num_inputs();
        let outputs = backend.num_outputs();
        Self {
            backend,
            inputs,
            outputs,
            caches: (0..outputs)
                .map(|_| LruCache::new(cache_capacity))
                .collect(),
            distinct: vec![0; outputs],
            capacity: cache_capacity,
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs
    }

    pub fn input_names(&self) -> Vec<String> {
        self.backend.input_names()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.backend.output_names()
    }

    /// Output `w` at `m`. Cache misses reach the backend and count as
    /// distinct queries.
    pub fn query(&mut self, m: &Minterm, w: usize) -> Result<bool, OracleError> {
        if w >= self.outputs {
            return Err(OracleError::InvalidOutput {
                index: w,
                count: self.outputs,
            });
        }
        if m.width() != self.inputs {
            return Err(OracleError::WidthMismatch {
                expected: self.inputs,
                found: m.width(),
            });
        }
        if let Some(bit) = self.caches[w].get(m) {
            return Ok(bit);
        }
        let bit = self.backend.query(m, w)?;
        self.distinct[w] += 1;
        self.caches[w].put(m.clone(), bit);
        Ok(bit)
    }

    /// Cached answer without touching the backend.
    pub fn peek(&self, m: &Minterm, w: usize) -> Option<bool> {
        self.caches.get(w)?.peek(m)
    }

    /// Zero for an out-of-range output.
    pub fn distinct_queries(&self, w: usize) -> u64 {
        self.distinct.get(w).copied().unwrap_or(0)
    }

    pub fn total_distinct_queries(&self) -> u64 {
        self.distinct.iter().sum()
    }

    pub fn cache_capacity(&self) -> usize {
        self.capacity
    }
}

const NIL: usize = usize::MAX;

struct Node {
    key: Minterm,
    bit: bool,
    prev: usize,
    next: usize,
}

/// Fixed-capacity least-recently-used map from minterm to answer.
struct LruCache {
    map: HashMap<Minterm, usize>,
    nodes: Vec<Node>,
    head: usize,
    tail: usize,
    capacity: usize,
}

impl LruCache {
    fn new(capacity: usize) -> Self {
        Self {
            map: HashMap::new(),
            nodes: Vec::new(),
            head: NIL,
            tail: NIL,
            capacity: capacity.max(1),
        }
    }

    fn unlink(&mut self, i: usize) {
        let (prev, next) = (self.nodes[i].prev, self.nodes[i].next);
        if prev == NIL {
            self.head = next;
        } else {
            self.nodes[prev].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.nodes[next].prev = prev;
        }
    }

    fn push_front(&mut self, i: usize) {
        self.nodes[i].prev = NIL;
        self.nodes[i].next = self.head;
        if self.head != NIL {
            self.nodes[self.head].prev = i;
        }
        self.head = i;
        if self.tail == NIL {
            self.tail = i;
        }
    }

    fn get(&mut self, key: &Minterm) -> Option<bool> {
        let i = *self.map.get(key)?;
        if self.head != i {
            self.unlink(i);
            self.push_front(i);
        }
        Some(self.nodes[i].bit)
    }

    fn peek(&self, key: &Minterm) -> Option<bool> {
        self.map.get(key).map(|&i| self.nodes[i].bit)
    }

    fn put(&mut self, key: Minterm, bit: bool) {
        if let Some(&i) = self.map.get(&key) {
            self.nodes[i].bit = bit;
            return;
        }
        let slot = if self.nodes.len() < self.capacity {
            self.nodes.push(Node {
                key: key.clone(),
                bit,
                prev: NIL,
                next: NIL,
            });
            self.nodes.len() - 1
        } else {
            let victim = self.tail;
            self.unlink(victim);
            let old = std::mem::replace(&mut self.nodes[victim].key, key.clone());
            self.map.remove(&old);
            self.nodes[victim].bit = bit;
            victim
        };
        self.push_front(slot);
        self.map.insert(key, slot);
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.map.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_f() -> Arc<Netlist> {
        let text = "INPUT(a1)\nINPUT(a2)\nINPUT(a3)\nINPUT(a4)\nINPUT(a5)\nINPUT(a6)\nOUTPUT(f)\nOUTPUT(z)\n\
                    na1 = NOT(a1)\nna4 = NOT(a4)\nna6 = NOT(a6)\nt1 = AND(a1, a2, na4)\nt2 = AND(a4, na6)\n\
                    t3 = AND(na1, a6)\nf = OR(t1, t2, t3)\nz = GND()\n";
        Arc::new(parse_bench(text).unwrap())
    }

    #[test]
    fn query_and_cache() {
        let mut s = OracleSource::Netlist(example_f()).open().unwrap();
        let m: Minterm = "000110".parse().unwrap();
        assert!(s.query(&m, 0).unwrap());
        assert!(s.query(&m, 0).unwrap());
        assert_eq!(s.distinct_queries(0), 1);
        assert!(!s.query(&"100101".parse().unwrap(), 0).unwrap());
        assert_eq!(s.distinct_queries(0), 2);
        assert!(!s.query(&m, 1).unwrap());
        assert_eq!(s.total_distinct_queries(), 3);
        assert!(matches!(
            s.query(&m, 2),
            Err(OracleError::InvalidOutput { .. })
        ));
        assert!(matches!(
            s.query(&"01".parse().unwrap(), 0),
            Err(OracleError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn lru_evicts_least_recent() {
        let mut c = LruCache::new(2);
        let k = |i| Minterm::from_index(i, 4);
        c.put(k(1), true);
        c.put(k(2), false);
        assert_eq!(c.get(&k(1)), Some(true));
        c.put(k(3), true);
        assert_eq!(c.len(), 2);
        assert_eq!(c.peek(&k(2)), None);
        assert_eq!(c.peek(&k(1)), Some(true));
        assert_eq!(c.peek(&k(3)), Some(true));
    }

    #[test]
    fn small_cache_recounts_evicted_queries() {
        let mut s = OracleSource::Netlist(example_f())
            .open_with_capacity(1)
            .unwrap();
        let a: Minterm = "000110".parse().unwrap();
        let b: Minterm = "000111".parse().unwrap();
        s.query(&a, 0).unwrap();
        s.query(&b, 0).unwrap();
        s.query(&a, 0).unwrap();
        assert_eq!(s.distinct_queries(0), 3);
    }

    #[test]
    fn serve_protocol_round_trip() {
        let nl = example_f();
        let input = "Q 0 000110\nQ 0 100101\nQ 1 111111\nBYE\n";
        let mut out = Vec::new();
        let served = serve_protocol(&nl, input.as_bytes(), &mut out).unwrap();
        assert_eq!(served, 3);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "HELLO 6 2\nA 1\nA 0\nA 0\n"
        );
        let bad = serve_protocol(&nl, "Z\n".as_bytes(), Vec::new());
        assert!(matches!(bad, Err(OracleError::Protocol(_))));
    }

    #[test]
    fn bench_config_errors_propagate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cyc.bench");
        fs::write(&path, "INPUT(a)\nOUTPUT(y)\nx = AND(a, y)\ny = OR(x, a)\n").unwrap();
        assert!(matches!(
            open_oracle(&OracleConfig::Bench(path)),
            Err(OracleError::Netlist(_))
        ));
        let missing = dir.path().join("missing.bench");
        assert!(matches!(
            open_oracle(&OracleConfig::Bench(missing)),
            Err(OracleError::Io(_))
        ));
    }
}
