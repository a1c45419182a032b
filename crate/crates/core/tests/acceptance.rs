//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --release --test acceptance`, or
//! pass criterion numbers after `--` to run only those.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shortcircuit_lab::attacks::confusion::View;
use shortcircuit_lab::attacks::{
    bisection_protocol, build_adversary, build_attack, execute_attack, find_confusable_inputs, pad_to_multiple_of_five,
    AdversaryKind, RoundProtocol,
};
use shortcircuit_lab::base::RandomAlternating;
use shortcircuit_lab::channel::Party;
use shortcircuit_lab::coding::instrument::{check_run, Invariant};
use shortcircuit_lab::coding::large::{simulate, SimConfig};
use shortcircuit_lab::coding::rounds_for;
use shortcircuit_lab::coding::small::{check_reduction, simulate_small, small_rate, SmallScheme};
use shortcircuit_lab::formula::{
    for_each_corruption, parity_formula, verify_resilience, Compiled, CorruptionBudget, EnumerationLimits, Formula,
    GateKind, Literal, VerifyMode,
};
use shortcircuit_lab::frac::Frac;
use shortcircuit_lab::hardening::{
    brute_force_tree, certify_protocol_resilience, harden, materialize_tree, synthetic_protocol, PathBudget, TreeModel,
};
use shortcircuit_lab::kw::{
    check_kw_resilience, formula_to_protocol, protocol_to_formula, resilient_formula_to_protocol, ChannelNoisePattern,
    KwError, PNode,
};
use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::process::ExitCode;
use std::time::Instant;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

const SWEEP_RUNS: usize = 10_000;
const SWEEP_PROTOCOLS: usize = 20;
const SWEEP_LENGTHS: [usize; 3] = [2, 4, 6];

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("large-alphabet scheme", large_scheme),
        ("small-alphabet scheme", small_scheme),
        ("confusion attack", tightness_attack),
        ("KW transforms", kw_transforms),
        ("noisy KW", noisy_kw),
        ("reachability", reach_oracle),
        ("hardening pipeline", pipeline),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let started = Instant::now();
        let verdict = check();
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn tally_line(t: &BTreeMap<String, usize>) -> String {
    if t.is_empty() {
        return "none".into();
    }
    t.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn invariant_name(i: Invariant) -> String {
    serde_json::to_value(i).unwrap().as_str().unwrap().to_string()
}

/// Seeds every (length, adversary) configuration independently so each
/// one can be rerun alone.
fn config_rng(tag: u64, len: usize, kind: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(tag << 32 | (len as u64) << 8 | kind as u64)
}

fn protocols(rng: &mut ChaCha8Rng, len: usize) -> Vec<RandomAlternating> {
    (0..SWEEP_PROTOCOLS).map(|_| RandomAlternating::new(len, rng.gen())).collect()
}

fn large_scheme() -> Verdict {
    let eps = Frac::new(1, 10);
    let (mut runs, mut failures) = (0, 0);
    let mut violations = BTreeMap::new();
    for len in SWEEP_LENGTHS {
        let cfg = SimConfig::new(len, eps).map_err(|e| e.to_string())?;
        // full budget: floor((1/5 - eps) n) per party
        let cap = (cfg.n as u64 / 10) as usize;
        if cfg.cap() != cap || cfg.n != 10 * len {
            return Err(format!("len {len}: rounds {} cap {}, expected {} and {cap}", cfg.n, cfg.cap(), 10 * len));
        }
        for (k, &kind) in AdversaryKind::ALL.iter().enumerate() {
            let mut rng = config_rng(1, len, k);
            let bases = protocols(&mut rng, len);
            for t in 0..SWEEP_RUNS {
                let base = &bases[t % bases.len()];
                let (x, y) = (rng.gen::<u64>(), rng.gen::<u64>());
                let mut adv = build_adversary(&kind.spec(rng.gen(), cfg.n, cap), ());
                let run = simulate(base, eps, x, y, &mut adv).map_err(|e| e.to_string())?;
                runs += 1;
                failures += usize::from(!run.correct());
                for v in check_run(&run, cap).violations {
                    *violations.entry(format!("{}/{}", kind.name(), invariant_name(v.invariant))).or_insert(0) += 1;
                }
            }
        }
    }
    let line = format!("{runs} runs, {failures} output failures, violations: {}", tally_line(&violations));
    if failures == 0 && violations.is_empty() {
        Ok(line)
    } else {
        Err(line)
    }
}

fn small_scheme() -> Verdict {
    let eps = Frac::new(1, 20);
    let rate = small_rate(eps).map_err(|e| e.to_string())?;
    if rate != Frac::new(1, 10) {
        return Err(format!("budget rate {rate}, expected 1/10"));
    }
    let c = SmallScheme::for_epsilon(eps).c;
    let (mut runs, mut failures, mut over, mut parse) = (0, 0, 0, 0);
    let mut info = BTreeMap::new();
    for len in SWEEP_LENGTHS {
        let n = rounds_for(len, eps);
        let cap = n / 10;
        for (k, &kind) in AdversaryKind::ALL.iter().enumerate() {
            let mut rng = config_rng(2, len, k);
            let bases = protocols(&mut rng, len);
            for t in 0..SWEEP_RUNS {
                let base = &bases[t % bases.len()];
                let (x, y) = (rng.gen::<u64>(), rng.gen::<u64>());
                let mut adv = build_adversary(&kind.spec(rng.gen(), n, cap), c);
                let run = simulate_small(base, eps, x, y, &mut adv).map_err(|e| e.to_string())?;
                runs += 1;
                failures += usize::from(!run.correct());
                let red = check_reduction(&run, base);
                // uncorrupted non-standard rounds at most eps * n = n / 20
                over += usize::from(red.fragments > n / 20);
                parse += usize::from(red.parse_mismatch.is_some() || red.speaker_mismatch.is_some());
                for v in check_run(&red.large, red.large_cap).violations {
                    *info.entry(invariant_name(v.invariant)).or_insert(0) += 1;
                }
            }
        }
    }
    let line = format!(
        "{runs} runs, {failures} failures, {over} over the fragment bound, {parse} parse mismatches; \
         rewritten-run invariant notes: {}",
        tally_line(&info)
    );
    if failures == 0 && over == 0 && parse == 0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn tightness_attack() -> Verdict {
    let p = pad_to_multiple_of_five(bisection_protocol(12));
    if p.rounds() != 10 || p.bits() != 12 {
        return Err(format!("padded protocol has {} rounds over {} bits", p.rounds(), p.bits()));
    }
    let attempt = || {
        let c = find_confusable_inputs(&p)?;
        let plan = build_attack(&p, &c)?;
        execute_attack(&p, &plan)
    };
    let report = attempt().map_err(|e| e.to_string())?;
    if attempt().map_err(|e| e.to_string())? != report {
        return Err("two attempts differ".into());
    }
    let who = report.confused;
    let views = report.runs.each_ref().map(|r| {
        let input = if who == Party::Alice { r.x.clone() } else { r.y.clone() };
        serde_json::to_vec(&View { party: who, input, received: r.received.clone() }).unwrap()
    });
    if views[0] != views[1] {
        return Err(format!("{who}'s views differ"));
    }
    let n = 12;
    let parse = |s: &str| u64::from_str_radix(&s.chars().rev().collect::<String>(), 2).unwrap();
    let mut invalid = 0;
    for r in &report.runs {
        let (x, y) = (parse(&r.x), parse(&r.y));
        if x.count_ones() % 2 != 0 || y.count_ones() % 2 != 1 || r.x.len() != n {
            return Err(format!("inputs {} {} are not a parity KW pair", r.x, r.y));
        }
        let l = r.outputs[who.index()];
        let sep = l.var >= 1 && l.var <= n as u32 && !l.eval_mask(x) && l.eval_mask(y);
        invalid += usize::from(!sep);
        let mut used = [0, 0];
        for &i in &r.corrupted {
            if r.sent[i - 1] == r.received[i - 1] {
                return Err(format!("round {i} marked corrupted but unchanged"));
            }
            let speaker = report.plan.speakers[i - 1];
            used[speaker.index()] += 1;
        }
        let changed = r.sent.iter().zip(&r.received).filter(|(a, b)| a != b).count();
        if used != r.used || changed != r.corrupted.len() || used.iter().any(|&u| u > 2) {
            return Err(format!("budget audit: used {used:?}, reported {:?}, changed {changed}", r.used));
        }
    }
    let used = report.runs.each_ref().map(|r| r.used);
    if invalid == 0 {
        return Err(format!("{who} answers correctly in both runs"));
    }
    Ok(format!("{who} confused with identical views, {invalid} invalid literal(s), corruptions per run {used:?}"))
}

fn kw_transforms() -> Verdict {
    let family = common::fan_in_two_family(3);
    let none = ChannelNoisePattern::new();
    let (mut pairs, mut constants, mut patterns) = (0u64, 0, 0u64);
    let mut scratch = Vec::new();
    for f in &family {
        let table = f.truth_table().map_err(|e| e.to_string())?;
        match formula_to_protocol(f) {
            Err(KwError::ConstantFunction) => {
                constants += 1;
                continue;
            }
            Err(e) => return Err(format!("{f}: {e}")),
            Ok(p) => {
                for &x in &p.alice_domain {
                    for &y in &p.bob_domain {
                        if f.eval_mask(x) || !f.eval_mask(y) {
                            return Err(format!("{f}: domains hold {x:03b} and {y:03b}"));
                        }
                        let l = p.run(x, y, &none).map_err(|e| format!("{f}: {e}"))?.leaf;
                        if l.eval_mask(x) || !l.eval_mask(y) {
                            return Err(format!("{f}: {l} does not separate {x:03b} {y:03b}"));
                        }
                        pairs += 1;
                    }
                }
                let back = protocol_to_formula(&p).map_err(|e| e.to_string())?;
                if back.truth_table().map_err(|e| e.to_string())? != table {
                    return Err(format!("{f}: reverse transform computes a different function"));
                }
            }
        }
        // shorting AND gates can only raise the output and OR gates only lower it
        let c = Compiled::new(f);
        let mut bad = None;
        let all = CorruptionBudget::new(Frac::ONE, Frac::ONE);
        let mut only_and = vec![0u8; c.gates()];
        let mut only_or = vec![0u8; c.gates()];
        let _ = for_each_corruption(&c, all, |d| {
            patterns += 1;
            for g in 0..d.len() {
                let and = c.gate_kind(g) == GateKind::And;
                only_and[g] = if and { d[g] } else { 0 };
                only_or[g] = if and { 0 } else { d[g] };
            }
            let v = c.table_word(Some(d), &mut scratch);
            let a = c.table_word(Some(&only_and), &mut scratch);
            let o = c.table_word(Some(&only_or), &mut scratch);
            if v & !a != 0 || o & !v != 0 {
                bad = Some(c.sparse(d));
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        if let Some(e) = bad {
            return Err(format!("{f}: one-sided noise fails under {e:?}"));
        }
    }
    let gates = family.iter().map(Formula::gate_count).max().unwrap_or(0);
    Ok(format!(
        "{} formulas (at most {gates} gates, {constants} constant), {pairs} KW pairs, {patterns} noise patterns",
        family.len()
    ))
}

fn budgets() -> Vec<CorruptionBudget> {
    let rates = [Frac::ZERO, Frac::new(1, 4), Frac::new(1, 2), Frac::ONE];
    rates.iter().flat_map(|&a| rates.iter().map(move |&b| CorruptionBudget::new(a, b))).collect()
}

/// Every leaf a run on (x, y) can end at when the adversary may force at
/// most `caps` moves of each party along the path. Forcing nodes off the
/// path never matters, so this covers every budget-valid pattern.
fn forced_leaves(node: &PNode, x: u64, y: u64, caps: (usize, usize), out: &mut Vec<Option<Literal>>) {
    match node {
        PNode::Leaf(l) => out.push(Some(*l)),
        PNode::Unlabeled => out.push(None),
        PNode::Internal { owner, children, moves } => {
            let input = if *owner == Party::Alice { x } else { y };
            let Some(&honest) = moves.get(&input) else { return out.push(None) };
            forced_leaves(&children[honest], x, y, caps, out);
            let left = match owner {
                Party::Alice => caps.0.checked_sub(1).map(|a| (a, caps.1)),
                Party::Bob => caps.1.checked_sub(1).map(|b| (caps.0, b)),
            };
            if let Some(rest) = left {
                for (c, child) in children.iter().enumerate() {
                    if c != honest {
                        forced_leaves(child, x, y, rest, out);
                    }
                }
            }
        }
    }
}

fn noisy_kw() -> Verdict {
    let (mut checked, mut runs, mut paths) = (0, 0u64, 0usize);
    for f in common::dup_chains(4) {
        for budget in budgets() {
            let p = resilient_formula_to_protocol(&f, budget).map_err(|e| format!("{f}: {e}"))?;
            let caps = budget.caps(p.depth());
            for &x in &p.alice_domain {
                for &y in &p.bob_domain {
                    let mut leaves = Vec::new();
                    forced_leaves(&p.root, x, y, caps, &mut leaves);
                    paths += leaves.len();
                    if let Some(l) = leaves.iter().find(|l| !l.is_some_and(|l| !l.eval_mask(x) && l.eval_mask(y))) {
                        return Err(format!("{f} under {budget:?}: ({x:b}, {y:b}) can end at {l:?}"));
                    }
                }
            }
            // literal pattern enumeration is exponential in the tree size
            if f.depth() <= 3 {
                let r = check_kw_resilience(&p, budget, 1 << 26).map_err(|e| format!("{f}: {e}"))?;
                if let Some(fail) = r.failure {
                    return Err(format!("{f} under {budget:?}: {fail:?}"));
                }
                runs += r.runs;
            }
            checked += 1;
        }
    }
    let f = Formula::parse("(and x1 x2)").unwrap();
    let budget = CorruptionBudget::new(Frac::ONE, Frac::ONE);
    let cx = match resilient_formula_to_protocol(&f, budget) {
        Err(KwError::NotResilient(cx)) => cx,
        other => return Err(format!("AND(z1,z2) gave {other:?} instead of a witness")),
    };
    let z = shortcircuit_lab::formula::bits_to_mask(&cx.input);
    if !f.is_ab_corruption(&cx.pattern, budget) || f.eval_noisy_mask(&cx.pattern, z) == f.eval_mask(z) {
        return Err(format!("witness {cx:?} does not flip the output"));
    }
    Ok(format!(
        "{checked} chain/budget pairs, {paths} adversarial paths, {runs} pattern runs; AND(z1,z2) witness at z={:?}",
        cx.input
    ))
}

fn reach_oracle() -> Verdict {
    let (mut trees, mut nodes, mut seed) = (0, 0, 0u64);
    // ten protocols for each length and alphabet, skipping seeds
    // whose tree comes out shorter than asked
    for depth in 1..=3 {
        for alphabet in 2..=3 {
            let mut kept = 0;
            while kept < 10 {
                seed += 1;
                let tree = synthetic_protocol(seed, depth, alphabet);
                if tree.depth() != depth {
                    continue;
                }
                tree.validate().map_err(|e| e.to_string())?;
                let d = depth as u64;
                let model = TreeModel::new(&tree);
                let mut paths = Vec::new();
                collect_paths(&tree.root, &mut Vec::new(), &mut paths);
                for a in 0..=d {
                    for b in 0..=d {
                        let budget = CorruptionBudget::new(Frac::new(a, d), Frac::new(b, d));
                        let phi = PathBudget::from_rates(budget, depth);
                        let truth = brute_force_tree(&tree, budget);
                        for p in &paths {
                            if model.reach(&phi, p) != truth.contains(p) {
                                return Err(format!("seed {seed} caps ({a},{b}) node {p:?}"));
                            }
                            nodes += 1;
                        }
                    }
                }
                kept += 1;
                trees += 1;
            }
        }
    }
    Ok(format!("{trees} protocols, {nodes} (node, budget) checks agree"))
}

fn collect_paths(n: &PNode, path: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    out.push(path.clone());
    for (i, c) in n.children().iter().enumerate() {
        path.push(i as u16);
        collect_paths(c, path, out);
        path.pop();
    }
}

fn pipeline() -> Verdict {
    let mut lines = Vec::new();
    for (eps, c) in [(Frac::new(1, 20), 32u64), (Frac::new(1, 10), 16)] {
        for n in [2u32, 4, 8] {
            let f = parity_formula(n);
            let art = harden(&f, eps, 0).map_err(|e| e.to_string())?;
            let acc = &art.accounting;
            let depth = 2 * n.next_power_of_two().trailing_zeros() as usize;
            let rounds = (depth as u64 * eps.denom()).div_ceil(eps.numer()) as usize;
            let fan_in = (c + 1) * 4 * (c + 3);
            let inverse = Frac::new(eps.denom(), eps.numer());
            if acc.balanced_depth != depth || acc.base_len != depth || acc.rounds != rounds {
                return Err(format!("parity({n}) eps {eps}: depth {} rounds {}", acc.balanced_depth, acc.rounds));
            }
            if u64::from(acc.c) != c || acc.fan_in != fan_in || acc.round_ratio != inverse {
                return Err(format!(
                    "parity({n}) eps {eps}: C {} fan-in {} ratio {}",
                    acc.c, acc.fan_in, acc.round_ratio
                ));
            }
            let cert = certify_protocol_resilience(&art, &AdversaryKind::ALL, 500, u64::from(n));
            if !cert.ok() {
                return Err(format!("parity({n}) eps {eps}: certification {}", serde_json::to_string(&cert).unwrap()));
            }
            lines.push(format!("parity({n})@{eps}: {rounds} rounds fan-in {fan_in}"));
        }
    }
    let mut micro = 0;
    for f in common::dup_chains(3) {
        for budget in budgets() {
            let p = resilient_formula_to_protocol(&f, budget).map_err(|e| format!("{f}: {e}"))?;
            let g = materialize_tree(&p, &PathBudget::from_rates(budget, p.depth()), true)
                .map_err(|e| format!("{f}: {e}"))?;
            let table = f.truth_table().map_err(|e| e.to_string())?;
            let limits = EnumerationLimits { max_nodes: 1 << 12, max_evaluations: 10_000_000 };
            let r = verify_resilience(&g, &table, budget, VerifyMode::Exhaustive, limits).map_err(|e| e.to_string())?;
            if !r.ok {
                return Err(format!("{f} materialized as {g} fails under {budget:?}"));
            }
            micro += 1;
        }
    }
    Ok(format!("{}; certification clean; {micro} micro-materializations resilient", lines.join(", ")))
}
