use super::{bitstring, owner_of, separates, ChannelNoisePattern, KwError, PNode, ProtocolTree, MAX_KW_VARS};
use crate::channel::Party;
use crate::formula::{can_force, resilience_witness, CorruptionBudget, Formula, Literal, Node, NodePath};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::ControlFlow;

/// KW protocol for a resilient formula whose moves stay correct under every
/// budget-valid channel pattern.
///
/// Nodes are fixed in breadth-first order. For a node `v` and owner input
/// `z`, the relevant noise is every pattern that steers some run on `z` to
/// `v`; its effect on a child subtree is captured by how many AND/OR
/// forcings the ancestors used, so the child is safe iff the adversary
/// cannot flip it with the residual per-path budget under any achievable
/// ancestor count.
pub fn resilient_formula_to_protocol(f: &Formula, budget: CorruptionBudget) -> Result<ProtocolTree, KwError> {
    if f.n_vars() > MAX_KW_VARS {
        return Err(KwError::TooManyVars { n_vars: f.n_vars(), max: MAX_KW_VARS });
    }
    if let Some(cx) = resilience_witness(f, budget)? {
        return Err(KwError::NotResilient(Box::new(cx)));
    }
    let mut tree = super::formula_to_protocol(f)?;
    clear_moves(&mut tree.root);
    let xs: Vec<u64> = tree.alice_domain.iter().copied().collect();
    let ys: Vec<u64> = tree.bob_domain.iter().copied().collect();
    let (cap_a, cap_b) = budget.caps(f.depth());

    type State = (u32, u32, u16, u16);
    let mut level: BTreeMap<Vec<u16>, HashSet<State>> = BTreeMap::new();
    let all: HashSet<State> =
        (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i as u32, j as u32, 0, 0))).collect();
    level.insert(Vec::new(), all);

    while !level.is_empty() {
        let mut next: BTreeMap<Vec<u16>, HashSet<State>> = BTreeMap::new();
        for (path, states) in level {
            let node = f.root().at(&path).expect("states only visit formula nodes");
            let Node::Gate { kind, children } = node else { continue };
            let owner = owner_of(*kind);
            let input = |s: &State| match owner {
                Party::Alice => xs[s.0 as usize],
                Party::Bob => ys[s.1 as usize],
            };
            // the value the adversary would like this subtree to take
            let wrong = owner == Party::Alice;

            let mut by_input: BTreeMap<u64, BTreeSet<(usize, usize)>> = BTreeMap::new();
            for s in &states {
                by_input.entry(input(s)).or_default().insert((s.2 as usize, s.3 as usize));
            }
            let mut chosen = BTreeMap::new();
            for (z, counts) in &by_input {
                let flips = |n: &Node| counts.iter().any(|&(a, b)| can_force(n, *z, cap_a - a, cap_b - b, wrong));
                let unsafe_err = || KwError::NoSafeChild {
                    path: NodePath(path.clone()),
                    party: owner,
                    input: bitstring(*z, f.n_vars()),
                    counts: counts.iter().copied().collect(),
                };
                if flips(node) {
                    return Err(unsafe_err());
                }
                let c = (0..children.len()).find(|&i| !flips(&children[i])).ok_or_else(unsafe_err)?;
                chosen.insert(*z, c);
            }

            for s in states {
                let c = chosen[&input(&s)];
                for (i, _) in children.iter().enumerate() {
                    let mut t = s;
                    if i != c {
                        match owner {
                            Party::Alice if (t.2 as usize) < cap_a => t.2 += 1,
                            Party::Bob if (t.3 as usize) < cap_b => t.3 += 1,
                            _ => continue,
                        }
                    }
                    let mut p = path.clone();
                    p.push(i as u16);
                    next.entry(p).or_default().insert(t);
                }
            }
            if let Some(PNode::Internal { moves, .. }) = tree.root.at_mut(&path) {
                *moves = chosen;
            }
        }
        level = next;
    }
    Ok(tree)
}

fn clear_moves(n: &mut PNode) {
    if let PNode::Internal { moves, children, .. } = n {
        moves.clear();
        children.iter_mut().for_each(clear_moves);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KwFailure {
    pub x: String,
    pub y: String,
    pub pattern: ChannelNoisePattern,
    pub leaf: Option<Literal>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KwCheckReport {
    pub patterns: u64,
    pub runs: u64,
    pub failure: Option<KwFailure>,
}

/// Runs `p` on every domain pair under every budget-valid channel pattern
/// and reports the first run whose leaf does not separate the inputs.
pub fn check_kw_resilience(
    p: &ProtocolTree,
    budget: CorruptionBudget,
    max_runs: u128,
) -> Result<KwCheckReport, KwError> {
    let pairs = (p.alice_domain.len() * p.bob_domain.len()) as u128;
    let mut report = KwCheckReport { patterns: 0, runs: 0, failure: None };
    let mut over = false;
    let _ = p.for_each_noise_pattern(budget, |e| {
        if (report.runs as u128) + pairs > max_runs {
            over = true;
            return ControlFlow::Break(());
        }
        report.patterns += 1;
        for &x in &p.alice_domain {
            for &y in &p.bob_domain {
                report.runs += 1;
                let (leaf, error) = match p.run(x, y, e) {
                    Ok(r) if separates(r.leaf, x, y) => continue,
                    Ok(r) => (Some(r.leaf), None),
                    Err(err) => (None, Some(err.to_string())),
                };
                report.failure = Some(KwFailure {
                    x: bitstring(x, p.n_vars),
                    y: bitstring(y, p.n_vars),
                    pattern: e.clone(),
                    leaf,
                    error,
                });
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });
    if over {
        return Err(KwError::WorkCapExceeded { needed: (report.runs as u128) + pairs, cap: max_runs });
    }
    Ok(report)
}
