use super::{
    for_each_corruption, mask_to_bits, Compiled, CorruptionBudget, EnumerationLimits, Formula, FormulaError, GateKind,
    Node, NodePath, ShortCircuitPattern, TruthTable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::ControlFlow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum VerifyMode {
    Exhaustive,
    Sampled { seed: u64, trials: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub pattern: ShortCircuitPattern,
    pub input: Vec<bool>,
    pub expected: bool,
    pub got: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub ok: bool,
    pub patterns_checked: u64,
    pub evaluations: u128,
    pub counterexample: Option<Counterexample>,
}

/// Checks `eval_noisy(F, E, z) == reference(z)` over budget-valid `E`.
///
/// Exhaustive mode compares whole bitsliced tables per pattern; sampled mode
/// draws a random admissible pattern and a random input per trial.
pub fn verify_resilience(
    f: &Formula,
    reference: &TruthTable,
    budget: CorruptionBudget,
    mode: VerifyMode,
    limits: EnumerationLimits,
) -> Result<ResilienceReport, FormulaError> {
    if reference.n_vars() != f.n_vars() {
        return Err(FormulaError::DimensionMismatch { expected: f.n_vars(), got: reference.n_vars() as usize });
    }
    let c = Compiled::new(f);
    match mode {
        VerifyMode::Exhaustive => {
            if f.size() > limits.max_nodes {
                return Err(FormulaError::TooLarge { nodes: f.size(), cap: limits.max_nodes });
            }
            TruthTable::check_vars(f.n_vars())?;
            let per = 1u128 << f.n_vars();
            let mut report = ResilienceReport { ok: true, patterns_checked: 0, evaluations: 0, counterexample: None };
            let mut scratch = Vec::new();
            let mut capped = false;
            let _ = for_each_corruption(&c, budget, |d| {
                if report.evaluations + per > limits.max_evaluations {
                    capped = true;
                    return ControlFlow::Break(());
                }
                report.patterns_checked += 1;
                report.evaluations += per;
                let words = c.table_words(Some(d), &mut scratch);
                if let Some(z) = reference.first_difference(&words) {
                    report.ok = false;
                    report.counterexample = Some(Counterexample {
                        pattern: c.sparse(d),
                        input: mask_to_bits(z, f.n_vars()),
                        expected: reference.get(z),
                        got: !reference.get(z),
                    });
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            });
            if capped {
                return Err(FormulaError::WorkCapExceeded {
                    needed: report.evaluations + per,
                    cap: limits.max_evaluations,
                });
            }
            Ok(report)
        }
        VerifyMode::Sampled { seed, trials } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (ca, cb) = budget.caps(c.depth());
            let mut report = ResilienceReport { ok: true, patterns_checked: 0, evaluations: 0, counterexample: None };
            let mut dense = vec![0u8; c.gates()];
            let mut counts = vec![(0usize, 0usize); c.gates()];
            for _ in 0..trials {
                sample_pattern(&c, (ca, cb), &mut rng, &mut dense, &mut counts);
                let z = if f.n_vars() >= 64 { rng.gen() } else { rng.gen_range(0..(1u64 << f.n_vars())) };
                report.patterns_checked += 1;
                report.evaluations += 1;
                let got = c.eval(Some(&dense), z);
                if got != reference.get(z) {
                    report.ok = false;
                    report.counterexample = Some(Counterexample {
                        pattern: c.sparse(&dense),
                        input: mask_to_bits(z, f.n_vars()),
                        expected: !got,
                        got,
                    });
                    break;
                }
            }
            Ok(report)
        }
    }
}

/// Draws an admissible pattern gate by gate in preorder. Each gate is
/// corrupted with probability 1/2 when its path still has budget.
fn sample_pattern(
    c: &Compiled,
    caps: (usize, usize),
    rng: &mut ChaCha8Rng,
    dense: &mut [u8],
    counts: &mut [(usize, usize)],
) {
    for g in 0..c.gates() {
        let base = c.gate_parent(g).map(|p| counts[p]).unwrap_or((0, 0));
        let bumped = match c.gate_kind(g) {
            GateKind::And => (base.0 + 1, base.1),
            GateKind::Or => (base.0, base.1 + 1),
        };
        if bumped.0 <= caps.0 && bumped.1 <= caps.1 && rng.gen_bool(0.5) {
            dense[g] = rng.gen_range(1..=c.gate_arity(g)) as u8;
            counts[g] = bumped;
        } else {
            dense[g] = 0;
            counts[g] = base;
        }
    }
}

/// Can an adversary with per-path residual budget `(a, b)` make `node`
/// evaluate to `target` on input `z`?
///
/// Subtrees are independent, so the answer composes: an uncorrupted gate
/// needs all (AND, target 1) or one (AND, target 0) child to comply, and a
/// corrupted gate needs just one child to comply with one less unit.
pub fn can_force(node: &Node, z: u64, a: usize, b: usize, target: bool) -> bool {
    match node {
        Node::Leaf(l) => l.eval_mask(z) == target,
        Node::Gate { kind, children } => {
            let natural = match (kind, target) {
                (GateKind::And, true) | (GateKind::Or, false) => children.iter().all(|c| can_force(c, z, a, b, target)),
                _ => children.iter().any(|c| can_force(c, z, a, b, target)),
            };
            if natural {
                return true;
            }
            let (a2, b2) = match kind {
                GateKind::And if a > 0 => (a - 1, b),
                GateKind::Or if b > 0 => (a, b - 1),
                _ => return false,
            };
            children.iter().any(|c| can_force(c, z, a2, b2, target))
        }
    }
}

/// Builds a concrete pattern realizing [`can_force`], or `None`.
fn force_pattern(
    node: &Node,
    z: u64,
    a: usize,
    b: usize,
    target: bool,
    path: &mut Vec<u16>,
    out: &mut ShortCircuitPattern,
) -> bool {
    match node {
        Node::Leaf(l) => l.eval_mask(z) == target,
        Node::Gate { kind, children } => {
            let all_needed = matches!((kind, target), (GateKind::And, true) | (GateKind::Or, false));
            let natural = if all_needed {
                children.iter().all(|c| can_force(c, z, a, b, target))
            } else {
                children.iter().any(|c| can_force(c, z, a, b, target))
            };
            if natural {
                for (i, c) in children.iter().enumerate() {
                    if can_force(c, z, a, b, target) {
                        path.push(i as u16);
                        force_pattern(c, z, a, b, target, path, out);
                        path.pop();
                        if !all_needed {
                            break;
                        }
                    }
                }
                return true;
            }
            let (a2, b2) = match kind {
                GateKind::And if a > 0 => (a - 1, b),
                GateKind::Or if b > 0 => (a, b - 1),
                _ => return false,
            };
            for (i, c) in children.iter().enumerate() {
                if can_force(c, z, a2, b2, target) {
                    out.set(NodePath(path.clone()), i);
                    path.push(i as u16);
                    force_pattern(c, z, a2, b2, target, path, out);
                    path.pop();
                    return true;
                }
            }
            false
        }
    }
}

/// Exact resilience decision by dynamic programming instead of enumeration.
/// Returns the first (input, pattern) in input order that flips the output.
pub fn resilience_witness(f: &Formula, budget: CorruptionBudget) -> Result<Option<Counterexample>, FormulaError> {
    TruthTable::check_vars(f.n_vars())?;
    let (ca, cb) = budget.caps(f.depth());
    for z in 0..(1u64 << f.n_vars()) {
        let expected = f.eval_mask(z);
        if can_force(f.root(), z, ca, cb, !expected) {
            let mut pattern = ShortCircuitPattern::new();
            let ok = force_pattern(f.root(), z, ca, cb, !expected, &mut Vec::new(), &mut pattern);
            debug_assert!(ok);
            return Ok(Some(Counterexample { pattern, input: mask_to_bits(z, f.n_vars()), expected, got: !expected }));
        }
    }
    Ok(None)
}
