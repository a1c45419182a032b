//! The `sclab` command line. Each command returns its main report plus any
//! extra files; the binary decides whether they go to stdout or a directory.
//! Reports carry no timestamps or timings unless asked, so the same
//! arguments always give byte-identical output.

use crate::attacks::{
    bisection_protocol, build_adversary, build_attack, execute_attack, find_confusable_inputs, pad_to_multiple_of_five,
    AdversaryKind, AdversarySpec, AttackError, AttackReport, RoundProtocol,
};
use crate::base::RandomAlternating;
use crate::channel::{BudgetLedger, RoundRecord};
use crate::coding::instrument::{check_run, trace_csv, Invariant, RoundTrace};
use crate::coding::large::{simulate, SimConfig};
use crate::coding::small::{check_reduction, small_rate, SmallScheme};
use crate::coding::{rounds_for, run_scheme, Codec, CodingError, SchemeRun};
use crate::formula::{verify_resilience, CorruptionBudget, EnumerationLimits, Formula, FormulaError, VerifyMode};
use crate::frac::Frac;
use crate::hardening::{certify_protocol_resilience, harden, HardenError, DEFAULT_WORKLOAD_CAP};
use crate::kw::{KwError, ProtocolTree};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

/// Default cap on evaluated (pattern, input) pairs for exhaustive checks.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("bad protocol file {path}: {source}")]
    Protocol { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Kw(#[from] KwError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Harden(#[from] HardenError),
}

#[derive(Debug, Parser)]
#[command(name = "sclab", version, about = "Noise-resilient formulas and coded interactive protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write reports into this directory instead of printing the summary.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a coding scheme against an adversary over many seeded trials.
    Simulate(SimulateArgs),
    /// Build and run the confusion attack on a short parity KW protocol.
    Attack(AttackArgs),
    /// Balance a formula, code its KW protocol, and certify the result.
    Harden(HardenArgs),
    /// Check a formula against short-circuit noise.
    Verify(VerifyArgs),
    /// Report the round overhead of both schemes.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Large,
    Small,
}

fn parse_kind(s: &str) -> Result<AdversaryKind, String> {
    AdversaryKind::parse(s).ok_or_else(|| format!("unknown adversary `{s}` (null, random, burst, chain_forker)"))
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "large")]
    pub scheme: SchemeKind,
    #[arg(long, default_value = "0.1")]
    pub eps: Frac,
    /// Length of the random alternating base protocols.
    #[arg(long, default_value_t = 4)]
    pub len: usize,
    /// Number of distinct base protocols, used round robin.
    #[arg(long, default_value_t = 1)]
    pub protocols: usize,
    #[arg(long, value_parser = parse_kind, default_value = "null")]
    pub adversary: AdversaryKind,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Bisection,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct AttackArgs {
    /// Protocol tree in JSON.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub protocol: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    #[arg(long, default_value_t = 12)]
    pub nbits: u32,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct HardenArgs {
    #[arg(long)]
    pub formula: PathBuf,
    #[arg(long)]
    pub eps: Frac,
    /// Largest materialization workload attempted.
    #[arg(long, default_value_t = DEFAULT_WORKLOAD_CAP as u64)]
    pub cap: u64,
    /// Certification runs per adversary.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub formula: PathBuf,
    #[arg(long, default_value = "0")]
    pub alpha: Frac,
    #[arg(long, default_value = "0")]
    pub beta: Frac,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Required with `--mode sampled`.
    #[arg(long, required_if_eq("mode", "sampled"))]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub max_evaluations: u64,
    #[arg(long, default_value_t = 4096)]
    pub max_nodes: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value = "0.1")]
    pub eps: Frac,
    #[arg(long, default_value_t = 100)]
    pub len: usize,
    /// Noiseless runs per scheme.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add wall-clock columns (makes the report nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

/// A command's result: the summary, extra named files, and whether every
/// checked property held.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<(String, String)>,
    pub ok: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Harden(a) => cmd_harden(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn header(command: &str, config: &impl Serialize) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    m
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })
}

fn read_formula(path: &PathBuf) -> Result<Formula, CliError> {
    Ok(Formula::parse(read(path)?.trim())?)
}

#[derive(Serialize)]
struct TranscriptDump<'a, S> {
    trial: usize,
    protocol_seed: u64,
    x: u64,
    y: u64,
    adversary: &'a AdversarySpec,
    records: &'a [RoundRecord<S>],
}

#[derive(Default)]
struct Tally {
    runs: usize,
    failures: usize,
    violations: BTreeMap<String, usize>,
    info: BTreeMap<String, usize>,
    max_used: [usize; 2],
    corruptions: usize,
    downgrades: usize,
    transcripts: Vec<Value>,
    trace: String,
}

impl Tally {
    fn record<C: Codec>(
        &mut self,
        trial: usize,
        proto: u64,
        spec: &AdversarySpec,
        run: &SchemeRun<C>,
        trace: &[RoundTrace],
    ) {
        self.runs += 1;
        self.failures += usize::from(!run.correct());
        self.max_used[0] = self.max_used[0].max(run.ledger.used_a);
        self.max_used[1] = self.max_used[1].max(run.ledger.used_b);
        self.corruptions += run.corruptions();
        self.downgrades += run.ledger.downgrades.len();
        let dump = TranscriptDump {
            trial,
            protocol_seed: proto,
            x: run.x,
            y: run.y,
            adversary: spec,
            records: &run.state.records,
        };
        self.transcripts.push(serde_json::to_value(&dump).expect("transcript serializes"));
        for line in trace_csv(trace).lines().skip(1) {
            let _ = writeln!(self.trace, "{trial},{line}");
        }
    }

    fn violation(&mut self, name: &str) {
        *self.violations.entry(name.to_string()).or_default() += 1;
    }
}

fn invariant_name(i: Invariant) -> String {
    serde_json::to_value(i).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    if a.len == 0 || a.protocols == 0 {
        return Err(CliError::Config("--len and --protocols must be positive".into()));
    }
    let (n, cap) = match a.scheme {
        SchemeKind::Large => {
            let cfg = SimConfig::new(a.len, a.eps)?;
            (cfg.n, cfg.cap())
        }
        SchemeKind::Small => {
            let n = rounds_for(a.len, a.eps);
            (n, small_rate(a.eps)?.floor_mul(n as u64) as usize)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let protos: Vec<u64> = (0..a.protocols).map(|_| rng.gen()).collect();
    let mut t = Tally::default();
    for trial in 0..a.trials {
        let proto = protos[trial % protos.len()];
        let base = RandomAlternating::new(a.len, proto);
        let (x, y) = (rng.gen::<u64>(), rng.gen::<u64>());
        let spec = a.adversary.spec(rng.gen(), n, cap);
        match a.scheme {
            SchemeKind::Large => {
                let mut adv = build_adversary(&spec, ());
                let run = simulate(&base, a.eps, x, y, &mut adv)?;
                let report = check_run(&run, cap);
                for v in &report.violations {
                    t.violation(&invariant_name(v.invariant));
                }
                t.record(trial, proto, &spec, &run, &report.trace);
            }
            SchemeKind::Small => {
                let scheme = SmallScheme::for_epsilon(a.eps);
                let mut adv = build_adversary(&spec, scheme.c);
                let run = crate::coding::small::simulate_small(&base, a.eps, x, y, &mut adv)?;
                let red = check_reduction(&run, &base);
                if red.fragments > red.fragment_cap {
                    t.violation("fragment_bound");
                }
                if red.parse_mismatch.is_some() || red.speaker_mismatch.is_some() {
                    t.violation("parse_equality");
                }
                let report = check_run(&red.large, red.large_cap);
                for v in &report.violations {
                    *t.info.entry(invariant_name(v.invariant)).or_default() += 1;
                }
                t.record(trial, proto, &spec, &run, &report.trace);
            }
        }
    }
    let mut m = header("simulate", a);
    m.insert("rounds".into(), json!(n));
    m.insert("cap".into(), json!(cap));
    m.insert("runs".into(), json!(t.runs));
    m.insert("failures".into(), json!(t.failures));
    m.insert("invariant_violations".into(), json!(t.violations));
    if a.scheme == SchemeKind::Small {
        m.insert("large_instance_violations".into(), json!(t.info));
    }
    m.insert(
        "budget_usage".into(),
        json!({ "cap": cap, "max_used": t.max_used, "corruptions": t.corruptions, "downgrades": t.downgrades }),
    );
    let ok = t.failures == 0 && t.violations.is_empty();
    let files = vec![
        ("transcripts.json".to_string(), pretty(&Value::Array(t.transcripts))),
        (
            "trace.csv".to_string(),
            format!("trial,index,speaker,corrupted,t_len,skip_a,skip_b,chain_a,chain_b\n{}", t.trace),
        ),
    ];
    Ok(Outcome { summary: Value::Object(m), files, ok })
}

fn attack_on<P: RoundProtocol>(p: P) -> (usize, Result<AttackReport, AttackError>) {
    let padded = pad_to_multiple_of_five(p);
    let rounds = padded.rounds();
    let report = find_confusable_inputs(&padded)
        .and_then(|c| build_attack(&padded, &c))
        .and_then(|plan| execute_attack(&padded, &plan));
    (rounds, report)
}

pub fn cmd_attack(a: &AttackArgs) -> Result<Outcome, CliError> {
    let (name, rounds, padded, alphabet, result) = match (&a.protocol, a.builtin) {
        (Some(path), _) => {
            let tree: ProtocolTree = serde_json::from_str(&read(path)?)
                .map_err(|source| CliError::Protocol { path: path.clone(), source })?;
            if tree.n_vars != a.nbits {
                return Err(CliError::Config(format!(
                    "protocol has {} variables, --nbits is {}",
                    tree.n_vars, a.nbits
                )));
            }
            let (r, al) = (tree.rounds(), tree.alphabet());
            let (padded, res) = attack_on(&tree);
            (path.display().to_string(), r, padded, al, res)
        }
        (None, _) => {
            let b = bisection_protocol(a.nbits);
            let (padded, res) = attack_on(b);
            ("bisection".to_string(), b.rounds(), padded, b.alphabet(), res)
        }
    };
    let mut m = header("attack", a);
    m.insert("protocol".into(), json!(name));
    m.insert("rounds".into(), json!(rounds));
    m.insert("padded_rounds".into(), json!(padded));
    m.insert("alphabet".into(), json!(alphabet));
    let ok = match result {
        Ok(r) => {
            m.insert("verdict".into(), json!({ "applicable": true, "success": r.success, "confused": r.confused }));
            m.insert("report".into(), serde_json::to_value(&r).expect("report serializes"));
            r.success
        }
        Err(e) => {
            m.insert("verdict".into(), json!({ "applicable": false, "success": false, "reason": e.to_string() }));
            false
        }
    };
    Ok(Outcome { summary: Value::Object(m), files: Vec::new(), ok })
}

pub fn cmd_harden(a: &HardenArgs) -> Result<Outcome, CliError> {
    let f = read_formula(&a.formula)?;
    let art = harden(&f, a.eps, a.cap as u128)?;
    let cert = certify_protocol_resilience(&art, &AdversaryKind::ALL, a.trials, a.seed);
    let mut m = header("harden", a);
    m.insert("source".into(), json!(f.to_string()));
    m.insert("balanced".into(), json!(art.balanced.to_string()));
    m.insert("balance_checked".into(), json!(art.balance_checked));
    m.insert("accounting".into(), serde_json::to_value(&art.accounting).expect("accounting serializes"));
    m.insert("workload".into(), serde_json::to_value(&art.workload).expect("workload serializes"));
    m.insert("note".into(), json!(art.note));
    m.insert("certification".into(), serde_json::to_value(&cert).expect("certification serializes"));
    let mut files = Vec::new();
    let mut ok = cert.ok();
    match &art.materialized {
        Some(g) => {
            let same = g.truth_table()? == f.truth_table()?;
            ok &= same;
            m.insert(
                "materialized".into(),
                json!({ "file": "hardened.formula", "size": g.size(), "depth": g.depth(), "truth_table_ok": same }),
            );
            files.push(("hardened.formula".to_string(), format!("{g}\n")));
        }
        None => {
            m.insert("materialized".into(), Value::Null);
        }
    }
    Ok(Outcome { summary: Value::Object(m), files, ok })
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let f = read_formula(&a.formula)?;
    if a.alpha > Frac::ONE || a.beta > Frac::ONE {
        return Err(CliError::Config("--alpha and --beta must be at most 1".into()));
    }
    let mode = match a.mode {
        Mode::Exhaustive => VerifyMode::Exhaustive,
        Mode::Sampled => VerifyMode::Sampled { seed: a.seed.unwrap_or_default(), trials: a.trials },
    };
    let limits = EnumerationLimits { max_nodes: a.max_nodes, max_evaluations: a.max_evaluations as u128 };
    let table = f.truth_table()?;
    let report = verify_resilience(&f, &table, CorruptionBudget::new(a.alpha, a.beta), mode, limits)?;
    let mut m = header("verify", a);
    m.insert("formula".into(), json!(f.to_string()));
    m.insert("report".into(), serde_json::to_value(&report).expect("report serializes"));
    Ok(Outcome { summary: Value::Object(m), files: Vec::new(), ok: report.ok })
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub scheme: SchemeKind,
    pub base_len: usize,
    pub rounds: usize,
    pub ratio: Frac,
    pub ratio_f64: f64,
    /// Whether the ratio is exactly `1/eps`.
    pub ratio_exact: bool,
    pub alphabet: u64,
    pub runs: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

pub fn cmd_bench(a: &BenchArgs) -> Result<Outcome, CliError> {
    if a.len == 0 || a.eps == Frac::ZERO || a.eps >= Frac::new(1, 5) {
        return Err(CliError::Config("need --len > 0 and 0 < --eps < 1/5".into()));
    }
    let n = rounds_for(a.len, a.eps);
    let ratio = Frac::new(n as u64, a.len as u64);
    let inverse = Frac::new(a.eps.denom(), a.eps.numer());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::new();
    let mut schemes = vec![SchemeKind::Large];
    if a.eps <= Frac::new(1, 10) {
        schemes.push(SchemeKind::Small);
    }
    for scheme in schemes {
        let started = Instant::now();
        let mut failures = 0;
        for _ in 0..a.trials {
            let base = RandomAlternating::new(a.len, rng.gen());
            let (x, y) = (rng.gen(), rng.gen());
            let ledger = BudgetLedger::symmetric(n, Frac::ZERO);
            let mut null = crate::channel::NullAdversary;
            let correct = match scheme {
                SchemeKind::Large => {
                    run_scheme(&crate::coding::large::LargeScheme, &base, a.eps, n, x, y, ledger, &mut null).correct()
                }
                SchemeKind::Small => {
                    run_scheme(&SmallScheme::for_epsilon(a.eps), &base, a.eps, n, x, y, ledger, &mut null).correct()
                }
            };
            failures += usize::from(!correct);
        }
        let alphabet = match scheme {
            SchemeKind::Large => 3 * (n as u64 + 1),
            SchemeKind::Small => SmallScheme::for_epsilon(a.eps).alphabet_size(),
        };
        rows.push(BenchRow {
            scheme,
            base_len: a.len,
            rounds: n,
            ratio,
            ratio_f64: ratio.to_f64(),
            ratio_exact: ratio == inverse,
            alphabet,
            runs: a.trials,
            failures,
            elapsed_ms: a.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
        });
    }
    let mut csv = String::from("scheme,base_len,rounds,ratio,alphabet,runs,failures\n");
    for r in &rows {
        let scheme = if r.scheme == SchemeKind::Large { "large" } else { "small" };
        let _ =
            writeln!(csv, "{scheme},{},{},{},{},{},{}", r.base_len, r.rounds, r.ratio, r.alphabet, r.runs, r.failures);
    }
    let ok = rows.iter().all(|r| r.failures == 0);
    let mut m = header("bench", a);
    m.insert("rows".into(), serde_json::to_value(&rows).expect("rows serialize"));
    Ok(Outcome { summary: Value::Object(m), files: vec![("bench.csv".to_string(), csv)], ok })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("sclab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn simulate_null_and_empty() {
        let out = run(&parse(&["simulate", "--adversary", "null", "--trials", "5", "--seed", "1"])).unwrap();
        assert!(out.ok);
        assert_eq!(out.summary["budget_usage"]["corruptions"], 0);
        let empty = run(&parse(&["simulate", "--trials", "0", "--seed", "1"])).unwrap();
        assert!(empty.ok);
        assert_eq!(empty.summary["runs"], 0);
        assert_eq!(empty.exit_code(), 0);
    }

    #[test]
    fn seed_is_required_for_simulate() {
        assert!(Cli::try_parse_from(["sclab", "simulate"]).is_err());
        assert!(Cli::try_parse_from(["sclab", "verify", "--formula", "f", "--mode", "sampled"]).is_err());
    }

    #[test]
    fn deterministic_reports() {
        let args = [
            "simulate",
            "--scheme",
            "small",
            "--eps",
            "0.05",
            "--adversary",
            "chain_forker",
            "--trials",
            "30",
            "--seed",
            "7",
        ];
        let a = run(&parse(&args)).unwrap();
        let b = run(&parse(&args)).unwrap();
        assert_eq!(pretty(&a.summary), pretty(&b.summary));
        assert_eq!(a.files, b.files);
        assert_eq!(a.summary["failures"], 0);
        assert!(a.ok);
    }

    #[test]
    fn bench_ratio() {
        let out = run(&parse(&["bench", "--eps", "0.1", "--len", "100", "--trials", "2"])).unwrap();
        for row in out.summary["rows"].as_array().unwrap() {
            assert_eq!(row["ratio"], "10");
            assert_eq!(row["ratio_exact"], true);
        }
    }

    #[test]
    fn builtin_attack() {
        let out = run(&parse(&["attack", "--builtin", "bisection", "--nbits", "12"])).unwrap();
        assert!(out.ok);
        assert_eq!(out.summary["padded_rounds"], 10);
        let short = run(&parse(&["attack", "--builtin", "bisection", "--nbits", "8"])).unwrap();
        assert!(!short.ok);
        assert_eq!(short.summary["verdict"]["applicable"], false);
    }
}
