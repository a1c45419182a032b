//! Which protocol-tree nodes can some input and some admissible noise
//! pattern lead to?
//!
//! Both models walk the node's path once, keeping every way of explaining
//! it so far: which earlier transmissions were corrupted, and which of each
//! party's inputs are still consistent with the symbols seen. Each party's
//! behaviour depends only on its own input and the shared received
//! transcript, so the consistent inputs always form a product set and can
//! be narrowed one side at a time. A node is reachable iff some branch
//! survives with both sides nonempty.

use crate::base::BaseProtocol;
use crate::channel::{Party, RoundRecord};
use crate::coding::{Codec, Stepper};
use crate::formula::CorruptionBudget;
use crate::formula::Literal;
use crate::kw::{PNode, ProtocolTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

/// A family of noise patterns, given per path: `allows(marks)` says whether
/// corrupting transmissions by the listed speakers (in path order) is
/// admissible. Families must be closed under dropping marks, so branches
/// can be cut as soon as a prefix is rejected.
pub trait Phi {
    fn allows(&self, marks: &[Party]) -> bool;
}

/// At most `alice` corrupted Alice transmissions and `bob` corrupted Bob
/// transmissions on a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PathBudget {
    pub alice: usize,
    pub bob: usize,
}

impl PathBudget {
    pub const ZERO: PathBudget = PathBudget { alice: 0, bob: 0 };

    pub fn new(alice: usize, bob: usize) -> Self {
        PathBudget { alice, bob }
    }

    /// Caps for paths of length `depth` at the given rates.
    pub fn from_rates(budget: CorruptionBudget, depth: usize) -> Self {
        let (alice, bob) = budget.caps(depth);
        PathBudget { alice, bob }
    }

    pub fn within(&self, other: &PathBudget) -> bool {
        self.alice <= other.alice && self.bob <= other.bob
    }
}

impl Phi for PathBudget {
    fn allows(&self, marks: &[Party]) -> bool {
        let a = marks.iter().filter(|&&p| p == Party::Alice).count();
        a <= self.alice && marks.len() - a <= self.bob
    }
}

fn with_mark(marks: &[Party], p: Party) -> Vec<Party> {
    let mut m = marks.to_vec();
    m.push(p);
    m
}

/// Inputs of both parties still consistent with a branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidates {
    pub xs: Vec<u64>,
    pub ys: Vec<u64>,
}

impl Candidates {
    fn side(&self, p: Party) -> &[u64] {
        match p {
            Party::Alice => &self.xs,
            Party::Bob => &self.ys,
        }
    }

    fn with_side(&self, p: Party, v: Vec<u64>) -> Option<Candidates> {
        if v.is_empty() {
            return None;
        }
        let mut c = self.clone();
        match p {
            Party::Alice => c.xs = v,
            Party::Bob => c.ys = v,
        }
        Some(c)
    }
}

/// One way of explaining a tree path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeBranch {
    pub marks: Vec<Party>,
    pub cands: Candidates,
}

/// Reachability over an explicit protocol tree. A corrupted node forwards
/// whichever child the noise picks, even one the owner would have chosen,
/// and it counts against the budget either way.
pub struct TreeModel<'a> {
    pub tree: &'a ProtocolTree,
}

impl<'a> TreeModel<'a> {
    pub fn new(tree: &'a ProtocolTree) -> Self {
        TreeModel { tree }
    }

    pub fn root(&self) -> Vec<TreeBranch> {
        let cands = Candidates {
            xs: self.tree.alice_domain.iter().copied().collect(),
            ys: self.tree.bob_domain.iter().copied().collect(),
        };
        vec![TreeBranch { marks: Vec::new(), cands }]
    }

    /// Branches explaining the step from `node` to its child `c`.
    pub fn advance(&self, phi: &dyn Phi, node: &PNode, branches: &[TreeBranch], c: usize) -> Vec<TreeBranch> {
        let PNode::Internal { owner, children, moves } = node else { return Vec::new() };
        if c >= children.len() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for b in branches {
            let keep: Vec<u64> = b.cands.side(*owner).iter().copied().filter(|z| moves.get(z) == Some(&c)).collect();
            if let Some(cands) = b.cands.with_side(*owner, keep) {
                out.push(TreeBranch { marks: b.marks.clone(), cands });
            }
            let marks = with_mark(&b.marks, *owner);
            if phi.allows(&marks) {
                out.push(TreeBranch { marks, cands: b.cands.clone() });
            }
        }
        out
    }

    pub fn branches(&self, phi: &dyn Phi, path: &[u16]) -> Vec<TreeBranch> {
        let mut node = &self.tree.root;
        let mut branches = self.root();
        for &c in path {
            branches = self.advance(phi, node, &branches, c as usize);
            if branches.is_empty() {
                return branches;
            }
            node = &node.children()[c as usize];
        }
        branches
    }

    pub fn reach(&self, phi: &dyn Phi, path: &[u16]) -> bool {
        self.tree.node_at(path).is_some() && !self.branches(phi, path).is_empty()
    }

    /// Every reachable node, found breadth first.
    pub fn reachable(&self, phi: &dyn Phi) -> BTreeSet<Vec<u16>> {
        let mut out = BTreeSet::new();
        let mut frontier = vec![(Vec::<u16>::new(), &self.tree.root, self.root())];
        while let Some((path, node, branches)) = frontier.pop() {
            for (c, child) in node.children().iter().enumerate() {
                let next = self.advance(phi, node, &branches, c);
                if !next.is_empty() {
                    let mut p = path.clone();
                    p.push(c as u16);
                    frontier.push((p, child, next));
                }
            }
            out.insert(path);
        }
        out
    }
}

/// A random protocol tree over 3 variables for exercising reachability:
/// Alice holds the inputs with an even number of ones, Bob the rest. Arities
/// are at most `alphabet`, leaves carry random literals, and paths stop early
/// now and then.
pub fn synthetic_protocol(seed: u64, depth: usize, alphabet: usize) -> ProtocolTree {
    fn grow(rng: &mut ChaCha8Rng, d: usize, k: usize, a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> PNode {
        if d == 0 || rng.gen_bool(0.15) {
            return PNode::Leaf(Literal { var: rng.gen_range(1..=3), negated: rng.gen() });
        }
        let owner = if rng.gen() { Party::Alice } else { Party::Bob };
        let arity = rng.gen_range(1..=k);
        let dom = if owner == Party::Alice { a } else { b };
        let moves: BTreeMap<u64, usize> = dom.iter().map(|&z| (z, rng.gen_range(0..arity))).collect();
        let children = (0..arity).map(|_| grow(rng, d - 1, k, a, b)).collect();
        PNode::Internal { owner, children, moves }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alice: BTreeSet<u64> = (0..8u64).filter(|z| z.count_ones() % 2 == 0).collect();
    let bob: BTreeSet<u64> = (0..8u64).filter(|z| z.count_ones() % 2 == 1).collect();
    let root = grow(&mut rng, depth, alphabet.max(1), &alice, &bob);
    ProtocolTree { n_vars: 3, alphabet: alphabet.max(1), alice_domain: alice, bob_domain: bob, root }
}

/// Reference answer: run the tree on every input pair under every channel
/// pattern whose per-path counts fit `budget`, collecting visited nodes.
pub fn brute_force_tree(tree: &ProtocolTree, budget: CorruptionBudget) -> BTreeSet<Vec<u16>> {
    let mut seen = BTreeSet::new();
    let _ = tree.for_each_noise_pattern(budget, |e| {
        for &x in &tree.alice_domain {
            for &y in &tree.bob_domain {
                if let Ok(run) = tree.run(x, y, e) {
                    for k in 0..=run.path.len() {
                        seen.insert(run.path[..k].iter().map(|&c| c as u16).collect());
                    }
                }
            }
        }
        ControlFlow::Continue(())
    });
    seen
}

/// One way of explaining a symbol path of a coding scheme run.
#[derive(Clone, Debug)]
pub struct SchemeBranch<C: Codec> {
    pub marks: Vec<Party>,
    pub cands: Candidates,
    pub state: Stepper<C>,
}

/// Reachability over the tree of a coding scheme wrapped around a base
/// protocol, addressed by received symbols. Here a transmission counts as
/// corrupted exactly when the received symbol differs from the sent one,
/// as on the simulated channel.
pub struct SchemeModel<'a, C: Codec, B: ?Sized> {
    pub codec: C,
    pub base: &'a B,
    pub n: usize,
    pub xs: Vec<u64>,
    pub ys: Vec<u64>,
}

impl<'a, C: Codec, B: BaseProtocol + ?Sized> SchemeModel<'a, C, B>
where
    C::Sym: Eq,
{
    pub fn new(codec: C, base: &'a B, n: usize, xs: Vec<u64>, ys: Vec<u64>) -> Self {
        SchemeModel { codec, base, n, xs, ys }
    }

    pub fn root(&self) -> Vec<SchemeBranch<C>> {
        let cands = Candidates { xs: self.xs.clone(), ys: self.ys.clone() };
        vec![SchemeBranch { marks: Vec::new(), cands, state: Stepper::new(self.n) }]
    }

    /// Branches explaining `sym` as the next received symbol.
    pub fn advance(&self, phi: &dyn Phi, branches: &[SchemeBranch<C>], sym: &C::Sym) -> Vec<SchemeBranch<C>> {
        let mut out = Vec::new();
        for b in branches {
            if b.state.done() {
                continue;
            }
            let mut st = b.state.clone();
            let p = st.speaker();
            let prefix = st.base_prefix(p);
            let owns = self.base.owner(&prefix) == Some(p);
            // Group the speaker's candidates by the symbol they would send.
            let mut groups: Vec<(C::Sym, C::Enc, Vec<u64>)> = Vec::new();
            let classes: Vec<Option<bool>> = if owns { vec![Some(false), Some(true)] } else { vec![None] };
            for class in classes {
                let members: Vec<u64> = b
                    .cands
                    .side(p)
                    .iter()
                    .copied()
                    .filter(|&z| class.is_none_or(|bit| self.base.bit(z, &prefix) == bit))
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let (sent, enc) = st.compose(&self.codec, p, &mut || class);
                match groups.iter_mut().find(|g| g.0 == sent) {
                    Some(g) => g.2.extend(members),
                    None => groups.push((sent, enc, members)),
                }
            }
            let marked = with_mark(&b.marks, p);
            let may_corrupt = phi.allows(&marked);
            for (sent, enc, mut members) in groups {
                let corrupted = sent != *sym;
                if corrupted && !may_corrupt {
                    continue;
                }
                members.sort_unstable();
                let Some(cands) = b.cands.with_side(p, members) else { continue };
                let mut next = st.clone();
                let rec =
                    RoundRecord { index: next.state.rounds() + 1, speaker: p, sent, received: sym.clone(), corrupted };
                next.commit(&self.codec, enc, rec);
                let marks = if corrupted { marked.clone() } else { b.marks.clone() };
                out.push(SchemeBranch { marks, cands, state: next });
            }
        }
        out
    }

    /// The only symbols that can follow when no branch may corrupt the next
    /// transmission; `None` when every symbol has to be tried.
    pub fn honest_symbols(&self, phi: &dyn Phi, branches: &[SchemeBranch<C>]) -> Option<Vec<C::Sym>> {
        let mut out: Vec<C::Sym> = Vec::new();
        for b in branches {
            if b.state.done() {
                continue;
            }
            let mut st = b.state.clone();
            let p = st.speaker();
            if phi.allows(&with_mark(&b.marks, p)) {
                return None;
            }
            let prefix = st.base_prefix(p);
            let owns = self.base.owner(&prefix) == Some(p);
            let classes: Vec<Option<bool>> = if owns { vec![Some(false), Some(true)] } else { vec![None] };
            for class in classes {
                let any = b.cands.side(p).iter().any(|&z| class.is_none_or(|bit| self.base.bit(z, &prefix) == bit));
                if any {
                    let (sent, _) = st.compose(&self.codec, p, &mut || class);
                    if !out.contains(&sent) {
                        out.push(sent);
                    }
                }
            }
        }
        Some(out)
    }

    pub fn branches(&self, phi: &dyn Phi, path: &[C::Sym]) -> Vec<SchemeBranch<C>> {
        let mut branches = self.root();
        for s in path {
            branches = self.advance(phi, &branches, s);
            if branches.is_empty() {
                break;
            }
        }
        branches
    }

    pub fn reach(&self, phi: &dyn Phi, path: &[C::Sym]) -> bool {
        path.len() <= self.n && !self.branches(phi, path).is_empty()
    }

    /// Reference answer: every received-symbol prefix of length at most
    /// `depth` produced by some input pair and some adversary that replaces
    /// transmissions with symbols from `alphabet` within `budget`.
    pub fn brute_force(&self, budget: PathBudget, alphabet: &[C::Sym], depth: usize) -> BTreeSet<Vec<usize>> {
        let mut seen = BTreeSet::new();
        for &x in &self.xs {
            for &y in &self.ys {
                let mut stack = vec![(Stepper::<C>::new(self.n), Vec::<usize>::new(), [0usize; 2])];
                while let Some((mut st, path, used)) = stack.pop() {
                    seen.insert(path.clone());
                    if path.len() >= depth || st.done() {
                        continue;
                    }
                    let p = st.speaker();
                    let prefix = st.base_prefix(p);
                    let z = if p == Party::Alice { x } else { y };
                    let mut bit = || match self.base.owner(&prefix) {
                        Some(o) if o == p => Some(self.base.bit(z, &prefix)),
                        _ => None,
                    };
                    let (sent, enc) = st.compose(&self.codec, p, &mut bit);
                    let cap = if p == Party::Alice { budget.alice } else { budget.bob };
                    for (k, sym) in alphabet.iter().enumerate() {
                        let corrupted = *sym != sent;
                        if corrupted && used[p.index()] >= cap {
                            continue;
                        }
                        let mut next = st.clone();
                        let index = next.state.rounds() + 1;
                        let rec =
                            RoundRecord { index, speaker: p, sent: sent.clone(), received: sym.clone(), corrupted };
                        next.commit(&self.codec, enc.clone(), rec);
                        let mut u = used;
                        u[p.index()] += usize::from(corrupted);
                        let mut path = path.clone();
                        path.push(k);
                        stack.push((next, path, u));
                    }
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::TreeBase;
    use crate::coding::small::SmallScheme;
    use crate::formula::{parity_formula, Formula};
    use crate::frac::Frac;
    use crate::kw::formula_to_protocol;

    fn all_paths(n: &PNode, path: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        out.push(path.clone());
        for (i, c) in n.children().iter().enumerate() {
            path.push(i as u16);
            all_paths(c, path, out);
            path.pop();
        }
    }

    #[test]
    fn tree_reach_matches_brute_force() {
        let rates = [(0, 1), (1, 3), (1, 2), (2, 3), (1, 1)];
        for seed in 0..40 {
            let tree = synthetic_protocol(seed, 3, 3);
            tree.validate().unwrap();
            let model = TreeModel::new(&tree);
            let mut paths = Vec::new();
            all_paths(&tree.root, &mut Vec::new(), &mut paths);
            for &(a, b) in &rates {
                let budget = CorruptionBudget::new(Frac::new(a, b), Frac::new(b - a, b.max(1) * 2));
                let phi = PathBudget::from_rates(budget, tree.depth());
                let truth = brute_force_tree(&tree, budget);
                for p in &paths {
                    assert_eq!(model.reach(&phi, p), truth.contains(p), "seed {seed} budget {budget:?} path {p:?}");
                }
                assert_eq!(model.reachable(&phi), truth);
            }
        }
    }

    #[test]
    fn root_always_reachable() {
        let tree = synthetic_protocol(3, 2, 2);
        assert!(TreeModel::new(&tree).reach(&PathBudget::ZERO, &[]));
    }

    #[test]
    fn zero_budget_keeps_only_noiseless_runs() {
        let tree = formula_to_protocol(&parity_formula(3)).unwrap();
        let model = TreeModel::new(&tree);
        let got = model.reachable(&PathBudget::ZERO);
        let want = brute_force_tree(&tree, CorruptionBudget::zero());
        assert_eq!(got, want);
    }

    #[test]
    fn scheme_reach_matches_brute_force() {
        let f = Formula::parse("(or (and x1 x2) (and (not x1) (not x2)))").unwrap();
        let base = TreeBase::new(formula_to_protocol(&f).unwrap()).unwrap();
        let xs: Vec<u64> = base.tree().alice_domain.iter().copied().collect();
        let ys: Vec<u64> = base.tree().bob_domain.iter().copied().collect();
        let scheme = SmallScheme::with_c(2).unwrap();
        let alphabet = scheme.alphabet();
        let model = SchemeModel::new(scheme, &base, 8, xs, ys);
        let depth = 4;
        for budget in [PathBudget::ZERO, PathBudget::new(1, 0), PathBudget::new(0, 1), PathBudget::new(1, 1)] {
            let truth = model.brute_force(budget, &alphabet, depth);
            let to_syms = |p: &[usize]| p.iter().map(|&k| alphabet[k]).collect::<Vec<_>>();
            let mut checked = 0;
            for p in truth.iter().filter(|p| p.len() < depth) {
                for k in 0..alphabet.len() {
                    let mut q = p.clone();
                    q.push(k);
                    assert_eq!(model.reach(&budget, &to_syms(&q)), truth.contains(&q), "{budget:?} {q:?}");
                    checked += 1;
                }
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn larger_budgets_reach_more() {
        for seed in 0..20 {
            let tree = synthetic_protocol(100 + seed, 3, 3);
            let model = TreeModel::new(&tree);
            let budgets = [PathBudget::ZERO, PathBudget::new(1, 0), PathBudget::new(1, 1), PathBudget::new(2, 1)];
            for w in budgets.windows(2) {
                assert!(model.reachable(&w[0]).is_subset(&model.reachable(&w[1])));
            }
        }
    }
}
