// SPDX-License-Identifier: Apache-2.0

//! `pitrec` command-line front end.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use pitrec::eval::{
    equivalence_rate, simulation_accuracy_jobs, survey_circuit, tradeoff_sweep, AccuracyReport,
    EquivalenceReport, DEFAULT_EXTRACTION_CAP, DEFAULT_SAMPLES,
};
use pitrec::oracle::serve_protocol;
use pitrec::par::default_jobs;
use pitrec::{
    parse_bench, pit_to_sop_netlist, predict_circuit, read_pla, sop_netlist, write_pla,
    AttackParams, Netlist, OracleConfig, OracleSource, Pit,
};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_ORACLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "pitrec",
    version,
    about = "Recover the function of a black-box combinational circuit by oracle queries"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Predict every output and write pred.bench, per-output PLA files and report.json.
    Attack(AttackArgs),
    /// Compare a prediction with the original circuit.
    Eval(EvalArgs),
    /// Histogram the distances between exact prime implicants of each cone.
    Survey(SurveyArgs),
    /// Accuracy against per-cone time limit, over repeated runs.
    Sweep(SweepArgs),
    /// Merge single-output PLA files into a BENCH netlist.
    Pla2bench(Pla2BenchArgs),
    /// Answer oracle queries for a BENCH file on stdin/stdout.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Oracle simulated in process from a BENCH file.
    #[arg(
        long,
        conflicts_with = "oracle_cmd",
        required_unless_present = "oracle_cmd"
    )]
    bench: Option<PathBuf>,
    /// External oracle command speaking the line protocol.
    #[arg(long)]
    oracle_cmd: Option<String>,
}

impl OracleArgs {
    fn config(&self) -> OracleConfig {
        match (&self.bench, &self.oracle_cmd) {
            (Some(p), _) => OracleConfig::Bench(p.clone()),
            (None, Some(c)) => OracleConfig::command(c),
            (None, None) => unreachable!("clap enforces one oracle"),
        }
    }
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Initial search radius.
    #[arg(long, default_value_t = 2)]
    d0: usize,
    /// Linear limitation parameter of the expansion.
    #[arg(long, default_value_t = 1.1)]
    p: f64,
    /// Constant limitation parameter for hard don't-cares.
    #[arg(long, default_value_t = 8)]
    p0: u64,
    /// Consecutive OFF-set candidates before the radius grows, or `inf`.
    #[arg(long, default_value = "50", value_parser = parse_limit)]
    pconv: Limit,
    /// Random probes for the first ON-set minterm.
    #[arg(long, default_value_t = 1000)]
    r: u64,
    /// Per-cone time limit in seconds.
    #[arg(long, default_value_t = 900.0, value_parser = parse_secs)]
    time_limit: f64,
    /// Time limit for the whole run in seconds.
    #[arg(long, value_parser = parse_secs)]
    global_time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Expand with the linear limit only, never using hard don't-cares.
    #[arg(long)]
    no_scalable: bool,
    /// Test every fill of each don't-care set.
    #[arg(long)]
    verify_exhaustively: bool,
    /// SAT conflicts per call before the radius is abandoned, or `inf`.
    #[arg(long, default_value = "200000", value_parser = parse_limit)]
    sat_conflicts: Limit,
}

impl ParamArgs {
    fn params(&self) -> AttackParams {
        AttackParams {
            d0: self.d0,
            p: self.p,
            p0: self.p0,
            p_conv: self.pconv.0,
            r: self.r,
            time_limit: Duration::from_secs_f64(self.time_limit),
            global_time_limit: self.global_time_limit.map(Duration::from_secs_f64),
            seed: self.seed,
            scalable_expansion: !self.no_scalable,
            verify_exhaustively: self.verify_exhaustively,
            sat_conflict_budget: self.sat_conflicts.0,
            ..AttackParams::default()
        }
    }
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Cones predicted concurrently; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(short = 'o', long = "out", default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    orig: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Random minterms per output when exhaustive comparison is too large.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// SAT conflicts per equivalence check, or `inf`.
    #[arg(long, default_value = "1000000", value_parser = parse_limit)]
    conflicts: Limit,
    /// Skip the equivalence check.
    #[arg(long)]
    no_equiv: bool,
    /// Write the reports as JSON.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurveyArgs {
    #[arg(long)]
    bench: PathBuf,
    /// Largest structural cone extracted exactly.
    #[arg(long, default_value_t = DEFAULT_EXTRACTION_CAP)]
    cap: usize,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for pairwise.csv and min_distance.csv.
    #[arg(short = 'o', long = "out", default_value = "survey")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Ascending per-cone time limits in seconds.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_secs)]
    limits: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV file to write.
    #[arg(short = 'o', long = "out", default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Pla2BenchArgs {
    /// One single-output PLA per output, in output order.
    #[arg(required = true)]
    plas: Vec<PathBuf>,
    /// Comma-separated input names; `x1..xn` by default.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<String>>,
    /// Comma-separated output names; the file stems by default.
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<String>>,
    #[arg(short = 'o', long = "out", default_value = "pred.bench")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    bench: PathBuf,
}

/// A count where `inf` means unlimited.
#[derive(Debug, Clone, Copy)]
struct Limit(Option<u64>);

fn parse_limit(s: &str) -> Result<Limit, String> {
    match s {
        "inf" | "infinity" | "none" => Ok(Limit(None)),
        _ => s
            .parse::<u64>()
            .map(|v| Limit(Some(v)))
            .map_err(|e| e.to_string()),
    }
}

fn parse_secs(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number of seconds, got {s}"))
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn new(code: u8, err: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            err: err.into(),
        }
    }
}

fn code_of(e: &pitrec::Error) -> u8 {
    match e {
        pitrec::Error::Io(_)
        | pitrec::Error::Netlist(_)
        | pitrec::Error::Pla(_)
        | pitrec::Error::Cube(_) => EXIT_IO,
        pitrec::Error::Oracle(_) | pitrec::Error::Sat(_) => EXIT_ORACLE,
        pitrec::Error::Param(_) | pitrec::Error::Interface(_) => EXIT_USAGE,
        pitrec::Error::NotOnSet(_) | pitrec::Error::CapExceeded { .. } => EXIT_ORACLE,
    }
}

impl From<pitrec::Error> for Failure {
    fn from(e: pitrec::Error) -> Self {
        Self::new(code_of(&e), e)
    }
}

impl From<pitrec::error::OracleError> for Failure {
    fn from(e: pitrec::error::OracleError) -> Self {
        pitrec::Error::from(e).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn io_err(what: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::new(EXIT_IO, anyhow!(e).context(format!("{}", what.display())))
}

fn read_bench(path: &Path) -> CliResult<Netlist> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_bench(&text)
        .map_err(|e| Failure::new(EXIT_IO, anyhow!(e).context(format!("{}", path.display()))))
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult {
    fs::write(path, contents).map_err(io_err(path))
}

fn jobs_or_default(j: Option<usize>) -> usize {
    j.unwrap_or_else(default_jobs).max(1)
}

fn load_source(args: &OracleArgs) -> CliResult<OracleSource> {
    let cfg = args.config();
    // Loading only reads files; a running oracle fails later, during queries.
    cfg.load().map_err(|e| {
        let err = anyhow!(e);
        match &cfg {
            OracleConfig::Bench(p) => {
                Failure::new(EXIT_IO, err.context(format!("{}", p.display())))
            }
            _ => Failure::new(EXIT_IO, err),
        }
    })
}

fn file_stem_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn attack(a: AttackArgs) -> CliResult {
    let params = a.params.params();
    params.validate()?;
    let source = load_source(&a.oracle)?;
    let jobs = jobs_or_default(a.jobs);
    let report = predict_circuit(&source, &params, jobs)?;
    let pred = pit_to_sop_netlist(&report)?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    write_file(&a.out.join("pred.bench"), pred.to_bench().as_bytes())?;
    for (w, cone) in report.cones.iter().enumerate() {
        let name = format!("{w}_{}.pla", file_stem_safe(&report.output_names[w]));
        write_file(&a.out.join(name), write_pla(&cone.pit).as_bytes())?;
    }
    let json = serde_json::to_string_pretty(&report.to_json_value())
        .map_err(|e| Failure::new(EXIT_IO, e))?;
    write_file(&a.out.join("report.json"), json.as_bytes())?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for c in &report.cones {
        let _ = writeln!(
            out,
            "{:>4} {:<16} {:<13} PIs {:>5}  queries {:>9}  {:.2}s",
            c.output,
            report.output_names[c.output],
            c.status.name(),
            c.pi_count(),
            c.queries,
            c.elapsed.as_secs_f64()
        );
    }
    let _ = writeln!(
        out,
        "total time {:.2}s, queries {}, wrote {}",
        report.total_time().as_secs_f64(),
        report.total_queries(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalJson<'a> {
    accuracy: &'a AccuracyReport,
    equivalence: Option<&'a EquivalenceReport>,
}

fn eval(a: EvalArgs) -> CliResult {
    let orig = read_bench(&a.orig)?;
    let pred = read_bench(&a.pred)?;
    let jobs = jobs_or_default(a.jobs);
    let acc = simulation_accuracy_jobs(&orig, &pred, a.samples, a.seed, jobs)?;
    let eq = if a.no_equiv {
        None
    } else {
        Some(equivalence_rate(&orig, &pred, a.conflicts.0, jobs)?)
    };
    let names = orig.output_names();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (w, v) in acc.per_output.iter().enumerate() {
        let verdict = eq
            .as_ref()
            .map(|e| format!("{:?}", e.verdicts[w]))
            .unwrap_or_default();
        let _ = writeln!(out, "{:>4} {:<16} AC {:>6.2}%  {verdict}", w, names[w], v);
    }
    let mode = if acc.exhaustive {
        "exhaustive"
    } else {
        "sampled"
    };
    let _ = writeln!(
        out,
        "AC {:.2}% ({mode}, {} minterms per output)",
        acc.mean, acc.samples
    );
    if let Some(e) = &eq {
        let _ = writeln!(
            out,
            "equivalence rate {:.2}% ({} unknown)",
            e.rate, e.unknown
        );
    }
    if let Some(path) = &a.out {
        let json = serde_json::to_string_pretty(&EvalJson {
            accuracy: &acc,
            equivalence: eq.as_ref(),
        })
        .map_err(|e| Failure::new(EXIT_IO, e))?;
        write_file(path, json.as_bytes())?;
    }
    Ok(())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::new(EXIT_IO, anyhow!(e).context(format!("{}", path.display())))
}

fn write_histogram(path: &Path, hist: &std::collections::BTreeMap<usize, u64>) -> CliResult {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["distance", "count"])
        .map_err(csv_err(path))?;
    for (d, c) in hist {
        w.write_record([d.to_string(), c.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn survey(a: SurveyArgs) -> CliResult {
    let nl = read_bench(&a.bench)?;
    let (s, pits) = survey_circuit(&nl, a.cap, jobs_or_default(a.jobs))?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    write_histogram(&a.out.join("pairwise.csv"), &s.pairwise)?;
    write_histogram(&a.out.join("min_distance.csv"), &s.min_distance)?;
    let cones = a.out.join("cones.csv");
    let mut w = csv::Writer::from_path(&cones).map_err(csv_err(&cones))?;
    w.write_record(["output", "name", "effective_inputs", "pis"])
        .map_err(csv_err(&cones))?;
    for (i, p) in pits.iter().enumerate() {
        let k = nl.effective_inputs(i).map(|e| e.len()).unwrap_or(0);
        let count = p
            .as_ref()
            .map_or("skipped".to_string(), |p| p.len().to_string());
        w.write_record([
            i.to_string(),
            nl.output_names()[i].to_string(),
            k.to_string(),
            count,
        ])
        .map_err(csv_err(&cones))?;
    }
    w.flush().map_err(io_err(&cones))?;
    println!(
        "tables {}, skipped {}, PIs {}, pairs {}, minimum distance <= 2: {:.2}%",
        s.tables,
        s.skipped,
        s.pis,
        s.pairs,
        s.min_share_at_most(2)
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult {
    let params = a.params.params();
    params.validate()?;
    let source = load_source(&a.oracle)?;
    let limits: Vec<Duration> = a
        .limits
        .iter()
        .map(|&s| Duration::from_secs_f64(s))
        .collect();
    let rows = tradeoff_sweep(
        &source,
        &params,
        &limits,
        a.repeats,
        a.samples,
        jobs_or_default(a.jobs),
    )?;
    let mut w = csv::Writer::from_path(&a.out).map_err(csv_err(&a.out))?;
    for r in &rows {
        w.serialize(r).map_err(csv_err(&a.out))?;
        println!(
            "T {:>8.1}s  AC {:>6.2}%  stddev {:.2}  runs {}  failures {}",
            r.time_limit_s, r.mean_accuracy, r.stddev, r.runs, r.failures
        );
    }
    w.flush().map_err(io_err(&a.out))
}

fn pla2bench(a: Pla2BenchArgs) -> CliResult {
    let mut pits: Vec<Pit> = Vec::with_capacity(a.plas.len());
    for path in &a.plas {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let pit = read_pla(&text).map_err(|e| {
            Failure::new(EXIT_IO, anyhow!(e).context(format!("{}", path.display())))
        })?;
        pits.push(pit);
    }
    let n = pits[0].width();
    if let Some((p, _)) = a.plas.iter().zip(&pits).find(|(_, t)| t.width() != n) {
        return Err(Failure::new(
            EXIT_USAGE,
            anyhow!("{} has a different input count", p.display()),
        ));
    }
    let inputs = a
        .inputs
        .unwrap_or_else(|| (1..=n).map(|i| format!("x{i}")).collect());
    let outputs = a.outputs.unwrap_or_else(|| {
        a.plas
            .iter()
            .map(|p| {
                p.file_stem()
                    .map_or("y".into(), |s| s.to_string_lossy().into_owned())
            })
            .collect()
    });
    if inputs.len() != n || outputs.len() != pits.len() {
        return Err(Failure::new(
            EXIT_USAGE,
            anyhow!(
                "name lists do not match {n} inputs and {} outputs",
                pits.len()
            ),
        ));
    }
    let refs: Vec<&Pit> = pits.iter().collect();
    let nl = sop_netlist(&inputs, &outputs, &refs)?;
    write_file(&a.out, nl.to_bench().as_bytes())
}

fn serve(a: ServeArgs) -> CliResult {
    let nl = Arc::new(read_bench(&a.bench)?);
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve_protocol(&nl, stdin.lock(), BufWriter::new(stdout.lock()))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.cmd {
        Command::Attack(a) => attack(a),
        Command::Eval(a) => eval(a),
        Command::Survey(a) => survey(a),
        Command::Sweep(a) => sweep(a),
        Command::Pla2bench(a) => pla2bench(a),
        Command::Serve(a) => serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            // Library errors often repeat their source in their own message.
            let mut msg = String::new();
            for cause in f.err.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(f.code)
        }
    }
}
