//! Protocol trees for Karchmer-Wigderson games and the formula/protocol
//! correspondence: AND gates are Alice's moves, OR gates are Bob's.

mod json;
mod resilient;

pub use resilient::{check_kw_resilience, resilient_formula_to_protocol, KwCheckReport, KwFailure};

use crate::channel::Party;
use crate::formula::{
    for_each_corruption, mask_to_bits, Compiled, CorruptionBudget, Counterexample, Formula, FormulaError, GateKind,
    Literal, Node, NodePath, ShortCircuitPattern, TruthTable,
};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

/// Default cap on variables for enumerated domains.
pub const MAX_KW_VARS: u32 = 12;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KwError {
    #[error("x and y are equal, so no literal separates them")]
    SameInput,
    #[error("the function is constant, so one of the domains is empty")]
    ConstantFunction,
    #[error("{n_vars} variables exceeds the domain cap of {max}")]
    TooManyVars { n_vars: u32, max: u32 },
    #[error("{party}'s input {input} is outside the declared domain")]
    NotInDomain { party: Party, input: String },
    #[error("no move defined at `{path}` for {party}'s input {input}")]
    MoveUndefined { path: NodePath, party: Party, input: String },
    #[error("leaf at `{0}` carries no literal")]
    UnlabeledLeaf(NodePath),
    #[error("malformed protocol: {0}")]
    Malformed(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("formula is not resilient at this budget: pattern {} flips input {:?}", serde_json::to_string(&.0.pattern).unwrap_or_default(), .0.input)]
    NotResilient(Box<Counterexample>),
    #[error("no child of `{path}` is safe for {party}'s input {input} (ancestor corruption counts {counts:?})")]
    NoSafeChild { path: NodePath, party: Party, input: String, counts: Vec<(usize, usize)> },
    #[error("node `{path}` does not separate x={x} from y={y} under the generating pattern")]
    InvariantBroken { path: NodePath, x: String, y: String },
    #[error("exhaustive check needs {needed} runs, above the cap of {cap}")]
    WorkCapExceeded { needed: u128, cap: u128 },
}

pub fn bitstring(z: u64, n: u32) -> String {
    mask_to_bits(z, n).into_iter().map(|b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Option<u64> {
    if s.len() > 64 {
        return None;
    }
    s.chars().enumerate().try_fold(0u64, |m, (i, c)| match c {
        '0' => Some(m),
        '1' => Some(m | (1 << i)),
        _ => None,
    })
}

/// Literals `l` with `l(x) = 0` and `l(y) = 1`.
pub fn kw_valid_outputs(x: &[bool], y: &[bool]) -> Result<BTreeSet<Literal>, KwError> {
    if x.len() != y.len() {
        return Err(KwError::Formula(FormulaError::DimensionMismatch { expected: x.len() as u32, got: y.len() }));
    }
    if x == y {
        return Err(KwError::SameInput);
    }
    Ok(x.iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, (&a, _))| Literal { var: i as u32 + 1, negated: a })
        .collect())
}

/// `l(x) = 0` and `l(y) = 1` on packed inputs.
pub fn separates(l: Literal, x: u64, y: u64) -> bool {
    !l.eval_mask(x) && l.eval_mask(y)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PNode {
    Internal { owner: Party, children: Vec<PNode>, moves: BTreeMap<u64, usize> },
    Leaf(Literal),
    Unlabeled,
}

impl PNode {
    pub fn depth(&self) -> usize {
        match self {
            PNode::Internal { children, .. } => 1 + children.iter().map(PNode::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            PNode::Internal { children, .. } => 1 + children.iter().map(PNode::size).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn at(&self, path: &[u16]) -> Option<&PNode> {
        let mut cur = self;
        for &i in path {
            match cur {
                PNode::Internal { children, .. } => cur = children.get(i as usize)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    pub fn at_mut(&mut self, path: &[u16]) -> Option<&mut PNode> {
        let mut cur = self;
        for &i in path {
            match cur {
                PNode::Internal { children, .. } => cur = children.get_mut(i as usize)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    pub fn owner(&self) -> Option<Party> {
        match self {
            PNode::Internal { owner, .. } => Some(*owner),
            _ => None,
        }
    }

    pub fn children(&self) -> &[PNode] {
        match self {
            PNode::Internal { children, .. } => children,
            _ => &[],
        }
    }

    /// Same tree with owners and arities only; move maps are left empty.
    fn skeleton(node: &Node) -> PNode {
        match node {
            Node::Leaf(l) => PNode::Leaf(*l),
            Node::Gate { kind, children } => PNode::Internal {
                owner: owner_of(*kind),
                children: children.iter().map(PNode::skeleton).collect(),
                moves: BTreeMap::new(),
            },
        }
    }
}

pub fn owner_of(kind: GateKind) -> Party {
    match kind {
        GateKind::And => Party::Alice,
        GateKind::Or => Party::Bob,
    }
}

pub fn kind_of(owner: Party) -> GateKind {
    match owner {
        Party::Alice => GateKind::And,
        Party::Bob => GateKind::Or,
    }
}

/// A protocol tree with explicit input domains for both players.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolTree {
    pub n_vars: u32,
    pub alphabet: usize,
    pub alice_domain: BTreeSet<u64>,
    pub bob_domain: BTreeSet<u64>,
    pub root: PNode,
}

/// Per-node forced symbols. Nodes not listed follow their move map.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct ChannelNoisePattern(pub BTreeMap<NodePath, usize>);

impl ChannelNoisePattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn force(&mut self, path: NodePath, child: usize) {
        self.0.insert(path, child);
    }

    pub fn forced_at(&self, path: &[u16]) -> Option<usize> {
        self.0.get(path).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&ShortCircuitPattern> for ChannelNoisePattern {
    fn from(e: &ShortCircuitPattern) -> Self {
        ChannelNoisePattern(e.iter().map(|(p, i)| (p.clone(), i)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Run {
    pub leaf: Literal,
    /// Child index taken at each internal node.
    pub path: Vec<usize>,
}

impl ProtocolTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn node_at(&self, path: &[u16]) -> Option<&PNode> {
        self.root.at(path)
    }

    /// Structural checks: arities within the alphabet, move targets in range,
    /// move keys inside the owner's domain, disjoint domains.
    pub fn validate(&self) -> Result<(), KwError> {
        if self.n_vars == 0 || self.n_vars > 64 {
            return Err(KwError::Malformed(format!("{} variables", self.n_vars)));
        }
        let limit = if self.n_vars == 64 { u64::MAX } else { (1u64 << self.n_vars) - 1 };
        if self.alice_domain.iter().chain(&self.bob_domain).any(|&z| z > limit) {
            return Err(KwError::Malformed("domain element wider than n_vars".into()));
        }
        if self.alice_domain.intersection(&self.bob_domain).next().is_some() {
            return Err(KwError::Malformed("Alice's and Bob's domains intersect".into()));
        }
        fn go(t: &ProtocolTree, node: &PNode, path: &mut Vec<u16>) -> Result<(), KwError> {
            match node {
                PNode::Leaf(l) if l.var == 0 || l.var > t.n_vars => {
                    Err(KwError::Malformed(format!("leaf at `{}` uses x{}", NodePath(path.clone()), l.var)))
                }
                PNode::Internal { owner, children, moves } => {
                    let at = NodePath(path.clone());
                    if children.is_empty() || children.len() > t.alphabet {
                        return Err(KwError::Malformed(format!(
                            "node `{at}` has {} children with alphabet {}",
                            children.len(),
                            t.alphabet
                        )));
                    }
                    let dom = match owner {
                        Party::Alice => &t.alice_domain,
                        Party::Bob => &t.bob_domain,
                    };
                    for (z, &c) in moves {
                        if c >= children.len() || !dom.contains(z) {
                            return Err(KwError::Malformed(format!("bad move at `{at}`")));
                        }
                    }
                    for (i, c) in children.iter().enumerate() {
                        path.push(i as u16);
                        go(t, c, path)?;
                        path.pop();
                    }
                    Ok(())
                }
                _ => Ok(()),
            }
        }
        go(self, &self.root, &mut Vec::new())
    }

    /// Walks from the root. Forced nodes take the forced child, other nodes
    /// the owner's move. Both sides see the realized path (feedback).
    pub fn run(&self, x: u64, y: u64, e: &ChannelNoisePattern) -> Result<Run, KwError> {
        if !self.alice_domain.contains(&x) {
            return Err(KwError::NotInDomain { party: Party::Alice, input: bitstring(x, self.n_vars) });
        }
        if !self.bob_domain.contains(&y) {
            return Err(KwError::NotInDomain { party: Party::Bob, input: bitstring(y, self.n_vars) });
        }
        self.run_unchecked(x, y, e, |_| Ok(()))
    }

    fn run_unchecked(
        &self,
        x: u64,
        y: u64,
        e: &ChannelNoisePattern,
        mut at_node: impl FnMut(&[u16]) -> Result<(), KwError>,
    ) -> Result<Run, KwError> {
        let mut node = &self.root;
        let mut path: Vec<u16> = Vec::new();
        loop {
            at_node(&path)?;
            match node {
                PNode::Leaf(l) => return Ok(Run { leaf: *l, path: path.iter().map(|&i| i as usize).collect() }),
                PNode::Unlabeled => return Err(KwError::UnlabeledLeaf(NodePath(path))),
                PNode::Internal { owner, children, moves } => {
                    let c = match e.forced_at(&path) {
                        Some(c) if c < children.len() => c,
                        Some(c) => {
                            return Err(KwError::Malformed(format!(
                                "forced symbol {c} at `{}` exceeds arity",
                                NodePath(path)
                            )))
                        }
                        None => {
                            let z = if *owner == Party::Alice { x } else { y };
                            *moves.get(&z).ok_or_else(|| KwError::MoveUndefined {
                                path: NodePath(path.clone()),
                                party: *owner,
                                input: bitstring(z, self.n_vars),
                            })?
                        }
                    };
                    path.push(c as u16);
                    node = &children[c];
                }
            }
        }
    }

    /// The tree's shape as a formula with placeholder leaves, for enumerating
    /// channel patterns with the formula machinery.
    fn shape(&self) -> Formula {
        fn go(n: &PNode) -> Node {
            match n {
                PNode::Internal { owner, children, .. } => {
                    Node::Gate { kind: kind_of(*owner), children: children.iter().map(go).collect() }
                }
                _ => Node::var(1),
            }
        }
        Formula::from_root(go(&self.root)).expect("shape formula is well formed")
    }

    /// Visits every channel pattern with at most `floor(alpha*depth)` forced
    /// Alice nodes and `floor(beta*depth)` forced Bob nodes on any path.
    pub fn for_each_noise_pattern(
        &self,
        budget: CorruptionBudget,
        mut visit: impl FnMut(&ChannelNoisePattern) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let c = Compiled::new(&self.shape());
        for_each_corruption(&c, budget, |d| visit(&ChannelNoisePattern::from(&c.sparse(d))))
    }
}

fn domains(f: &Formula) -> Result<(TruthTable, BTreeSet<u64>, BTreeSet<u64>), KwError> {
    if f.n_vars() > MAX_KW_VARS {
        return Err(KwError::TooManyVars { n_vars: f.n_vars(), max: MAX_KW_VARS });
    }
    let t = f.truth_table()?;
    if t.is_constant() {
        return Err(KwError::ConstantFunction);
    }
    let zeros = t.preimage(false).into_iter().collect();
    let ones = t.preimage(true).into_iter().collect();
    Ok((t, zeros, ones))
}

/// Moves pick the left-most child that is 0 on `x` (AND) or 1 on `y` (OR).
/// Inputs where no child qualifies go to child 0, so the maps are total.
pub fn formula_to_protocol(f: &Formula) -> Result<ProtocolTree, KwError> {
    noisy_formula_to_protocol(f, &ShortCircuitPattern::new())
}

/// The transform of `F_E`: child values are taken under the pattern `e`,
/// and the domains are `F_E`'s preimages.
pub fn noisy_formula_to_protocol(f: &Formula, e: &ShortCircuitPattern) -> Result<ProtocolTree, KwError> {
    e.validate(f)?;
    if f.n_vars() > MAX_KW_VARS {
        return Err(KwError::TooManyVars { n_vars: f.n_vars(), max: MAX_KW_VARS });
    }
    let (alice, bob): (BTreeSet<u64>, BTreeSet<u64>) = if e.is_empty() {
        let (_, a, b) = domains(f)?;
        (a, b)
    } else {
        let all = 0..(1u64 << f.n_vars());
        let (a, b): (Vec<u64>, Vec<u64>) = all.partition(|&z| !f.eval_noisy_mask(e, z));
        if a.is_empty() || b.is_empty() {
            return Err(KwError::ConstantFunction);
        }
        (a.into_iter().collect(), b.into_iter().collect())
    };
    let mut root = PNode::skeleton(f.root());
    fill_moves(f, e, &mut root, &mut Vec::new(), &alice, &bob);
    Ok(ProtocolTree { n_vars: f.n_vars(), alphabet: max_arity(f.root()), alice_domain: alice, bob_domain: bob, root })
}

fn max_arity(n: &Node) -> usize {
    n.children().iter().map(max_arity).max().unwrap_or(0).max(n.children().len()).max(1)
}

fn fill_moves(
    f: &Formula,
    e: &ShortCircuitPattern,
    node: &mut PNode,
    path: &mut Vec<u16>,
    alice: &BTreeSet<u64>,
    bob: &BTreeSet<u64>,
) {
    let PNode::Internal { owner, children, moves } = node else {
        return;
    };
    let (dom, want) = match owner {
        Party::Alice => (alice, false),
        Party::Bob => (bob, true),
    };
    for &z in dom {
        let pick = (0..children.len())
            .find(|&i| {
                path.push(i as u16);
                let v = f.eval_noisy_at(&NodePath(path.clone()), e, z);
                path.pop();
                v == Some(want)
            })
            .unwrap_or(0);
        moves.insert(z, pick);
    }
    for (i, c) in children.iter_mut().enumerate() {
        path.push(i as u16);
        fill_moves(f, e, c, path, alice, bob);
        path.pop();
    }
}

/// Alice nodes become AND gates, Bob nodes OR gates, leaves keep literals.
pub fn protocol_to_formula(p: &ProtocolTree) -> Result<Formula, KwError> {
    fn go(n: &PNode, path: &mut Vec<u16>) -> Result<Node, KwError> {
        match n {
            PNode::Leaf(l) => Ok(Node::Leaf(*l)),
            PNode::Unlabeled => Err(KwError::UnlabeledLeaf(NodePath(path.clone()))),
            PNode::Internal { owner, children, .. } => {
                let mut out = Vec::with_capacity(children.len());
                for (i, c) in children.iter().enumerate() {
                    path.push(i as u16);
                    out.push(go(c, path)?);
                    path.pop();
                }
                Ok(Node::Gate { kind: kind_of(*owner), children: out })
            }
        }
    }
    Ok(Formula::new(go(&p.root, &mut Vec::new())?, p.n_vars)?)
}

/// Runs the `F_E` protocol under the channel noise induced by `e`, checking
/// at every visited node that its noisy subformula is 0 on `x` and 1 on `y`.
pub fn run_noisy_checked(
    f: &Formula,
    e: &ShortCircuitPattern,
    p: &ProtocolTree,
    x: u64,
    y: u64,
) -> Result<Run, KwError> {
    let noise = ChannelNoisePattern::from(e);
    if !p.alice_domain.contains(&x) || !p.bob_domain.contains(&y) {
        return p.run(x, y, &noise);
    }
    p.run_unchecked(x, y, &noise, |path| {
        let at = NodePath(path.to_vec());
        let ok = f.eval_noisy_at(&at, e, x) == Some(false) && f.eval_noisy_at(&at, e, y) == Some(true);
        if ok {
            Ok(())
        } else {
            Err(KwError::InvariantBroken { path: at, x: bitstring(x, f.n_vars()), y: bitstring(y, f.n_vars()) })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{enumerate_corruptions, parity_formula};
    use crate::frac::Frac;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn valid_outputs() {
        let v = |x: &str, y: &str| kw_valid_outputs(&bits(x), &bits(y)).unwrap();
        assert_eq!(v("00", "01"), BTreeSet::from([Literal::pos(2)]));
        assert_eq!(v("00", "11"), BTreeSet::from([Literal::pos(1), Literal::pos(2)]));
        assert_eq!(v("01", "10"), BTreeSet::from([Literal::pos(1), Literal::neg(2)]));
        assert_eq!(kw_valid_outputs(&bits("01"), &bits("01")), Err(KwError::SameInput));
    }

    #[test]
    fn leaf_and_and2() {
        let p = formula_to_protocol(&Formula::parse("x1").unwrap()).unwrap();
        assert_eq!(p.depth(), 0);
        assert_eq!(p.run(0, 1, &ChannelNoisePattern::new()).unwrap().leaf, Literal::pos(1));

        let p = formula_to_protocol(&Formula::parse("(and x1 x2)").unwrap()).unwrap();
        // x = 01 as z1 z2, i.e. z1 = 0
        let x = parse_bitstring("01").unwrap();
        let PNode::Internal { moves, .. } = &p.root else { panic!() };
        assert_eq!(moves[&x], 0);
        assert!(formula_to_protocol(&Formula::parse("(or x1 (not x1))").unwrap()).is_err());
    }

    #[test]
    fn parity2_exhaustive() {
        let f = parity_formula(2);
        let p = formula_to_protocol(&f).unwrap();
        let none = ChannelNoisePattern::new();
        for &x in &p.alice_domain {
            for &y in &p.bob_domain {
                let r = p.run(x, y, &none).unwrap();
                assert!(separates(r.leaf, x, y));
            }
        }
        // a single forced move can change the answer
        let budget = CorruptionBudget::new(Frac::new(1, 2), Frac::ZERO);
        let mut changed = false;
        let _ = p.for_each_noise_pattern(budget, |e| {
            for &x in &p.alice_domain {
                for &y in &p.bob_domain {
                    let noisy = p.run(x, y, e).unwrap().leaf;
                    changed |= noisy != p.run(x, y, &none).unwrap().leaf;
                }
            }
            ControlFlow::Continue(())
        });
        assert!(changed);
    }

    #[test]
    fn forced_root() {
        let p = formula_to_protocol(&parity_formula(2)).unwrap();
        let mut e = ChannelNoisePattern::new();
        e.force(NodePath::root(), 1);
        for &x in &p.alice_domain {
            for &y in &p.bob_domain {
                assert_eq!(p.run(x, y, &e).unwrap().path[0], 1);
            }
        }
    }

    #[test]
    fn reverse_examples() {
        let f = Formula::parse("(and x1 x2)").unwrap();
        assert_eq!(protocol_to_formula(&formula_to_protocol(&f).unwrap()).unwrap(), f);
        let mut p = formula_to_protocol(&f).unwrap();
        *p.root.at_mut(&[1]).unwrap() = PNode::Unlabeled;
        assert!(matches!(protocol_to_formula(&p), Err(KwError::UnlabeledLeaf(_))));
    }

    #[test]
    fn noisy_transform_keeps_invariant() {
        let f = Formula::parse("(or (and x1 (or x2 x3)) (and (not x1) x3))").unwrap();
        let budget = CorruptionBudget::new(Frac::ONE, Frac::ONE);
        for e in enumerate_corruptions(&f, budget, Default::default()).unwrap() {
            let Ok(p) = noisy_formula_to_protocol(&f, &e) else { continue };
            for &x in &p.alice_domain {
                for &y in &p.bob_domain {
                    let r = run_noisy_checked(&f, &e, &p, x, y).unwrap();
                    assert!(separates(r.leaf, x, y));
                }
            }
        }
    }
}
