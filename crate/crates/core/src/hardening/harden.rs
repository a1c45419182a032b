//! The end-to-end pipeline: balance, play the KW game, wrap the protocol in
//! the small-alphabet scheme, and (for tiny instances) read the coded
//! protocol back as a formula.

use super::materialize::{materialize_scheme, MaterializeError};
use super::reach::{PathBudget, SchemeModel};
use crate::attacks::{build_adversary, check_preconditions, AdversaryKind, AttackError};
use crate::base::{BaseError, BaseProtocol, TreeBase};
use crate::channel::{BudgetLedger, Party};
use crate::coding::instrument::{check_run, Invariant};
use crate::coding::small::{check_reduction, SmallScheme};
use crate::coding::{rounds_for, run_scheme};
use crate::formula::{balance, Formula, FormulaError};
use crate::frac::Frac;
use crate::kw::{formula_to_protocol, separates, KwError, PNode, ProtocolTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Default cap on materialization work, in symbol expansions.
pub const DEFAULT_WORKLOAD_CAP: u128 = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum HardenError {
    #[error("epsilon {0} is outside (0, 1/10]")]
    BadEpsilon(Frac),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Kw(#[from] KwError),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error(transparent)]
    Materialize(#[from] MaterializeError),
}

/// Drops every branch no input pair reaches without noise: a node with a
/// single used child is replaced by that child.
pub fn prune(tree: &ProtocolTree) -> ProtocolTree {
    fn go(node: &PNode, xs: &[u64], ys: &[u64]) -> PNode {
        let PNode::Internal { owner, children, moves } = node else { return node.clone() };
        let mine = if *owner == Party::Alice { xs } else { ys };
        let used: Vec<usize> = (0..children.len()).filter(|c| mine.iter().any(|z| moves.get(z) == Some(c))).collect();
        let split = |c: usize| -> Vec<u64> { mine.iter().copied().filter(|z| moves.get(z) == Some(&c)).collect() };
        let sub = |c: usize| {
            let part = split(c);
            if *owner == Party::Alice {
                go(&children[c], &part, ys)
            } else {
                go(&children[c], xs, &part)
            }
        };
        if used.len() == 1 {
            return sub(used[0]);
        }
        PNode::Internal { owner: *owner, children: (0..children.len()).map(sub).collect(), moves: moves.clone() }
    }
    let xs: Vec<u64> = tree.alice_domain.iter().copied().collect();
    let ys: Vec<u64> = tree.bob_domain.iter().copied().collect();
    ProtocolTree { root: go(&tree.root, &xs, &ys), ..tree.clone() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Accounting {
    pub eps: Frac,
    pub balanced_depth: usize,
    /// Length of the base protocol after pruning and padding.
    pub base_len: usize,
    /// `ceil(base_len / eps)`, the depth of the coded protocol.
    pub rounds: usize,
    pub round_ratio: Frac,
    pub c: u32,
    /// `(C+1) * 4 * (C+3)`, the fan-in of the materialized formula.
    pub fan_in: u64,
    /// Per-party corruption rate `1/5 - 2 eps` and the resulting cap.
    pub rate: Frac,
    pub cap: usize,
    /// `log2(fan_in ^ rounds)`, the size bound of the materialized formula.
    pub log2_size_bound: f64,
    #[serde(serialize_with = "opt_decimal")]
    pub size_bound: Option<u128>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Workload {
    #[serde(serialize_with = "decimal")]
    pub estimate: u128,
    #[serde(serialize_with = "decimal")]
    pub cap: u128,
    pub within: bool,
}

#[derive(Clone, Debug)]
pub struct HardenedArtifact {
    pub source: Formula,
    pub balanced: Formula,
    pub balance_checked: bool,
    pub base: TreeBase,
    pub scheme: SmallScheme,
    pub accounting: Accounting,
    pub workload: Workload,
    pub materialized: Option<Formula>,
    pub note: String,
}

// Counts can pass the range JSON numbers hold, so they go out as strings.
fn decimal<S: serde::Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn opt_decimal<S: serde::Serializer>(v: &Option<u128>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

fn checked_pow(base: u64, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

pub fn harden(f: &Formula, eps: Frac, workload_cap: u128) -> Result<HardenedArtifact, HardenError> {
    if eps == Frac::ZERO || eps > Frac::new(1, 10) {
        return Err(HardenError::BadEpsilon(eps));
    }
    let balanced = balance(f)?;
    let tree = prune(&formula_to_protocol(&balanced.formula)?);
    let base = TreeBase::new(tree)?;
    let scheme = SmallScheme::for_epsilon(eps);
    let rounds = rounds_for(base.len(), eps);
    let rate = eps.fifth_minus(2).expect("eps at most 1/10");
    let cap = rate.floor_mul(rounds as u64) as usize;
    let fan_in = scheme.alphabet_size();
    let accounting = Accounting {
        eps,
        balanced_depth: balanced.formula.depth(),
        base_len: base.len(),
        rounds,
        round_ratio: Frac::new(rounds as u64, base.len() as u64),
        c: scheme.c,
        fan_in,
        rate,
        cap,
        log2_size_bound: rounds as f64 * (fan_in as f64).log2(),
        size_bound: checked_pow(fan_in, rounds),
    };
    // Without corruptions every input pair traces one path, and each node on
    // it tries every symbol. With corruptions the tree is as large as the
    // size bound allows.
    let pairs = (base.tree().alice_domain.len() * base.tree().bob_domain.len()) as u128;
    let estimate =
        if cap == 0 { pairs * rounds as u128 * fan_in as u128 } else { accounting.size_bound.unwrap_or(u128::MAX) };
    let workload = Workload { estimate, cap: workload_cap, within: estimate <= workload_cap };
    let (materialized, note) = if workload.within {
        let xs = base.tree().alice_domain.iter().copied().collect();
        let ys = base.tree().bob_domain.iter().copied().collect();
        let model = SchemeModel::new(scheme, &base, rounds, xs, ys);
        let g = materialize_scheme(&model, &PathBudget::new(cap, cap), &scheme.alphabet())?;
        (Some(g), "materialized: reachable tree within the workload cap".to_string())
    } else {
        let note = format!(
            "not materialized: estimated workload {estimate} exceeds cap {workload_cap}; \
             resilience rests on certifying the coded protocol"
        );
        (None, note)
    };
    Ok(HardenedArtifact {
        source: f.clone(),
        balanced: balanced.formula,
        balance_checked: balanced.equivalence_checked,
        base,
        scheme,
        accounting,
        workload,
        materialized,
        note,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KindSummary {
    pub adversary: String,
    pub runs: usize,
    /// Runs where some output misses the noiseless transcript.
    pub failures: usize,
    /// Runs where some party's decoded literal does not separate the inputs.
    pub wrong_literal: usize,
    /// Runs with more uncorrupted fragment rounds than `eps * n`.
    pub fragment_excess: usize,
    /// Runs whose rewrite to the large alphabet parses differently.
    pub parse_mismatch: usize,
    pub corruptions: usize,
    /// Invariant violations on the rewritten runs, by invariant.
    pub violations: BTreeMap<Invariant, usize>,
}

impl KindSummary {
    pub fn clean(&self) -> bool {
        self.failures == 0 && self.wrong_literal == 0 && self.fragment_excess == 0 && self.parse_mismatch == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub rounds: usize,
    pub cap: usize,
    pub pairs: usize,
    pub seed: u64,
    pub by_adversary: Vec<KindSummary>,
    /// Why the confusion attack does not apply to the coded protocol.
    pub attack_precondition: String,
    pub attack_rejected: bool,
}

impl Certification {
    pub fn failures(&self) -> usize {
        self.by_adversary.iter().map(|k| k.failures + k.wrong_literal).sum()
    }

    pub fn ok(&self) -> bool {
        self.attack_rejected && self.by_adversary.iter().all(KindSummary::clean)
    }
}

/// Runs the coded protocol `trials` times per adversary kind, cycling
/// through all input pairs, at the artifact's full budget.
pub fn certify_protocol_resilience(
    art: &HardenedArtifact,
    kinds: &[AdversaryKind],
    trials: usize,
    seed: u64,
) -> Certification {
    let tree = art.base.tree();
    let pairs: Vec<(u64, u64)> =
        tree.alice_domain.iter().flat_map(|&x| tree.bob_domain.iter().map(move |&y| (x, y))).collect();
    let acc = &art.accounting;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_adversary = Vec::new();
    for &kind in kinds {
        let mut s = KindSummary { adversary: kind.name().to_string(), ..Default::default() };
        for t in 0..trials {
            let (x, y) = pairs[t % pairs.len()];
            let spec = kind.spec(rng.gen(), acc.rounds, acc.cap);
            let mut adv = build_adversary(&spec, art.scheme.c);
            let ledger = BudgetLedger::symmetric(acc.rounds, acc.rate);
            let run = run_scheme(&art.scheme, &art.base, acc.eps, acc.rounds, x, y, ledger, &mut adv);
            s.runs += 1;
            s.corruptions += run.corruptions();
            s.failures += usize::from(!run.correct());
            let separated = [Party::Alice, Party::Bob]
                .into_iter()
                .all(|p| matches!(art.base.leaf_of(run.output(p)), Some(PNode::Leaf(l)) if separates(*l, x, y)));
            s.wrong_literal += usize::from(!separated);
            let red = check_reduction(&run, &art.base);
            s.fragment_excess += usize::from(red.fragments > red.fragment_cap);
            s.parse_mismatch += usize::from(red.parse_mismatch.is_some() || red.speaker_mismatch.is_some());
            for v in check_run(&red.large, red.large_cap).violations {
                *s.violations.entry(v.invariant).or_default() += 1;
            }
        }
        by_adversary.push(s);
    }
    let n_bits = tree.n_vars;
    let padded = acc.rounds.div_ceil(5) * 5;
    let verdict = check_preconditions(n_bits, padded, acc.fan_in.min(u32::MAX as u64) as u32);
    let attack_rejected = matches!(verdict, Err(AttackError::TooManyRounds { .. }));
    let attack_precondition = match verdict {
        Ok(()) => "applies".to_string(),
        Err(e) => e.to_string(),
    };
    Certification {
        rounds: acc.rounds,
        cap: acc.cap,
        pairs: pairs.len(),
        seed,
        by_adversary,
        attack_precondition,
        attack_rejected,
    }
}
