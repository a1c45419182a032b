//! Boolean formulas over AND/OR gates with literal leaves, and the
//! short-circuit fault model.
//!
//! A short-circuited gate ignores its own function and forwards the value of
//! one chosen child. Gates are addressed by the child-index path from the
//! root, so patterns stay sparse even on very large formulas.

mod balance;
mod compiled;
mod enumerate;
mod parity;
mod pattern;
mod resilience;
mod table;
mod text;

pub use balance::{balance, Balanced};
pub use compiled::Compiled;
pub use enumerate::{enumerate_corruptions, for_each_corruption, EnumerationLimits};
pub use parity::parity_formula;
pub use pattern::{CorruptionBudget, Directive, NodePath, ShortCircuitPattern};
pub use resilience::{can_force, resilience_witness, verify_resilience, Counterexample, ResilienceReport, VerifyMode};
pub use table::TruthTable;

use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest variable count whose truth tables we are willing to materialize.
pub const MAX_TABLE_VARS: u32 = 20;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("input has {got} bits but the formula has {expected} variables")]
    DimensionMismatch { expected: u32, got: usize },
    #[error("gate at `{0}` has no children")]
    EmptyGate(NodePath),
    #[error("literal x{var} exceeds the declared {n_vars} variables")]
    LiteralOutOfRange { var: u32, n_vars: u32 },
    #[error("pattern addresses `{0}`, which is not a gate of this formula")]
    NoSuchGate(NodePath),
    #[error("directive Child({index}) at `{path}` exceeds arity {arity}")]
    DirectiveOutOfRange { path: NodePath, index: usize, arity: usize },
    #[error("formula has {nodes} nodes, above the enumeration cap of {cap}")]
    TooLarge { nodes: usize, cap: usize },
    #[error("exhaustive check needs {needed} evaluations, above the cap of {cap}")]
    WorkCapExceeded { needed: u128, cap: u128 },
    #[error("{n_vars} variables is too many for a truth table (max {max})")]
    TooManyVars { n_vars: u32, max: u32 },
    #[error("gate at `{0}` has fan-in other than 2")]
    NotBinary(NodePath),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("balanced depth {depth} exceeds 3·log2({size})")]
    DepthBound { depth: usize, size: usize },
    #[error("balancing changed the truth table")]
    BalanceMismatch,
}

/// `z_var` or its negation. Variables are 1-indexed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: u32,
    pub negated: bool,
}

impl Literal {
    pub const fn pos(var: u32) -> Self {
        Literal { var, negated: false }
    }

    pub const fn neg(var: u32) -> Self {
        Literal { var, negated: true }
    }

    pub fn negate(self) -> Self {
        Literal { var: self.var, negated: !self.negated }
    }

    /// Value on an assignment packed as a bitmask (`z1` is bit 0).
    #[inline]
    pub fn eval_mask(self, z: u64) -> bool {
        ((z >> (self.var - 1)) & 1 == 1) != self.negated
    }

    pub fn eval_bits(self, z: &[bool]) -> bool {
        z[self.var as usize - 1] != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬z{}", self.var)
        } else {
            write!(f, "z{}", self.var)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    And,
    Or,
}

impl GateKind {
    pub fn dual(self) -> Self {
        match self {
            GateKind::And => GateKind::Or,
            GateKind::Or => GateKind::And,
        }
    }

    #[inline]
    pub fn identity(self) -> bool {
        matches!(self, GateKind::And)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Gate { kind: GateKind, children: Vec<Node> },
    Leaf(Literal),
}

impl Node {
    pub fn and(children: Vec<Node>) -> Node {
        Node::Gate { kind: GateKind::And, children }
    }

    pub fn or(children: Vec<Node>) -> Node {
        Node::Gate { kind: GateKind::Or, children }
    }

    pub fn lit(l: Literal) -> Node {
        Node::Leaf(l)
    }

    pub fn var(v: u32) -> Node {
        Node::Leaf(Literal::pos(v))
    }

    pub fn not_var(v: u32) -> Node {
        Node::Leaf(Literal::neg(v))
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Gate { children, .. } => 1 + children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Gate { children, .. } => 1 + children.iter().map(Node::size).sum::<usize>(),
        }
    }

    pub fn gate_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Gate { children, .. } => 1 + children.iter().map(Node::gate_count).sum::<usize>(),
        }
    }

    pub fn max_var(&self) -> u32 {
        match self {
            Node::Leaf(l) => l.var,
            Node::Gate { children, .. } => children.iter().map(Node::max_var).max().unwrap_or(0),
        }
    }

    pub fn eval_mask(&self, z: u64) -> bool {
        match self {
            Node::Leaf(l) => l.eval_mask(z),
            Node::Gate { kind: GateKind::And, children } => children.iter().all(|c| c.eval_mask(z)),
            Node::Gate { kind: GateKind::Or, children } => children.iter().any(|c| c.eval_mask(z)),
        }
    }

    pub fn at(&self, path: &[u16]) -> Option<&Node> {
        let mut cur = self;
        for &i in path {
            match cur {
                Node::Gate { children, .. } => cur = children.get(i as usize)?,
                Node::Leaf(_) => return None,
            }
        }
        Some(cur)
    }

    pub fn kind(&self) -> Option<GateKind> {
        match self {
            Node::Gate { kind, .. } => Some(*kind),
            Node::Leaf(_) => None,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Gate { children, .. } => children,
            Node::Leaf(_) => &[],
        }
    }
}

/// A formula together with its declared variable count.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    root: Node,
    n_vars: u32,
}

impl Formula {
    pub fn new(root: Node, n_vars: u32) -> Result<Self, FormulaError> {
        fn check(node: &Node, n_vars: u32, path: &mut Vec<u16>) -> Result<(), FormulaError> {
            match node {
                Node::Leaf(l) => {
                    if l.var == 0 || l.var > n_vars {
                        return Err(FormulaError::LiteralOutOfRange { var: l.var, n_vars });
                    }
                }
                Node::Gate { children, .. } => {
                    if children.is_empty() {
                        return Err(FormulaError::EmptyGate(NodePath(path.clone())));
                    }
                    for (i, c) in children.iter().enumerate() {
                        path.push(i as u16);
                        check(c, n_vars, path)?;
                        path.pop();
                    }
                }
            }
            Ok(())
        }
        check(&root, n_vars, &mut Vec::new())?;
        Ok(Formula { root, n_vars })
    }

    /// Builds a formula whose variable count is the largest index used.
    pub fn from_root(root: Node) -> Result<Self, FormulaError> {
        let n = root.max_var();
        Formula::new(root, n)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn n_vars(&self) -> u32 {
        self.n_vars
    }

    pub fn with_n_vars(mut self, n_vars: u32) -> Result<Self, FormulaError> {
        if n_vars < self.root.max_var() {
            return Err(FormulaError::LiteralOutOfRange { var: self.root.max_var(), n_vars });
        }
        self.n_vars = n_vars;
        Ok(self)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Node count `|F|`.
    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn gate_count(&self) -> usize {
        self.root.gate_count()
    }

    pub fn node_at(&self, path: &NodePath) -> Option<&Node> {
        self.root.at(&path.0)
    }

    fn check_dim(&self, z: &[bool]) -> Result<(), FormulaError> {
        if z.len() != self.n_vars as usize {
            return Err(FormulaError::DimensionMismatch { expected: self.n_vars, got: z.len() });
        }
        Ok(())
    }

    pub fn eval(&self, z: &[bool]) -> Result<bool, FormulaError> {
        self.check_dim(z)?;
        Ok(self.root.eval_mask(bits_to_mask(z)))
    }

    pub fn eval_mask(&self, z: u64) -> bool {
        self.root.eval_mask(z)
    }

    /// Evaluation with every gate in `e` short-circuited to its chosen child.
    pub fn eval_noisy(&self, e: &ShortCircuitPattern, z: &[bool]) -> Result<bool, FormulaError> {
        self.check_dim(z)?;
        e.validate(self)?;
        Ok(self.eval_noisy_mask(e, bits_to_mask(z)))
    }

    /// Same as [`Formula::eval_noisy`] without validation; unknown paths are ignored.
    pub fn eval_noisy_mask(&self, e: &ShortCircuitPattern, z: u64) -> bool {
        if e.is_empty() {
            return self.root.eval_mask(z);
        }
        noisy(&self.root, e, z, &mut Vec::new())
    }

    /// Noisy value of the subformula at `at`. Pattern paths stay absolute.
    pub fn eval_noisy_at(&self, at: &NodePath, e: &ShortCircuitPattern, z: u64) -> Option<bool> {
        let node = self.node_at(at)?;
        Some(noisy(node, e, z, &mut at.0.clone()))
    }

    /// True iff every root-to-leaf path carries at most `floor(alpha*depth)`
    /// corrupted AND gates and `floor(beta*depth)` corrupted OR gates.
    pub fn is_ab_corruption(&self, e: &ShortCircuitPattern, budget: CorruptionBudget) -> bool {
        let (ca, cb) = budget.caps(self.depth());
        fn go(
            node: &Node,
            e: &ShortCircuitPattern,
            path: &mut Vec<u16>,
            a: usize,
            b: usize,
            ca: usize,
            cb: usize,
        ) -> bool {
            let Node::Gate { kind, children } = node else {
                return true;
            };
            let (mut a, mut b) = (a, b);
            if e.child_at(path).is_some() {
                match kind {
                    GateKind::And => a += 1,
                    GateKind::Or => b += 1,
                }
            }
            if a > ca || b > cb {
                return false;
            }
            for (i, c) in children.iter().enumerate() {
                path.push(i as u16);
                let ok = go(c, e, path, a, b, ca, cb);
                path.pop();
                if !ok {
                    return false;
                }
            }
            true
        }
        go(&self.root, e, &mut Vec::new(), 0, 0, ca, cb)
    }

    /// Keeps only the directives that sit on gates of `kind`.
    pub fn restrict(&self, e: &ShortCircuitPattern, kind: GateKind) -> ShortCircuitPattern {
        let mut out = ShortCircuitPattern::new();
        for (path, i) in e.iter() {
            if self.node_at(path).and_then(Node::kind) == Some(kind) {
                out.set(path.clone(), i);
            }
        }
        out
    }

    pub fn truth_table(&self) -> Result<TruthTable, FormulaError> {
        Compiled::new(self).table(None)
    }

    /// Parenthesized prefix text, e.g. `(and (or x1 (not x2)) x3)`.
    pub fn to_text(&self) -> String {
        text::render(&self.root)
    }

    pub fn parse(s: &str) -> Result<Formula, FormulaError> {
        text::parse(s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn noisy(node: &Node, e: &ShortCircuitPattern, z: u64, path: &mut Vec<u16>) -> bool {
    match node {
        Node::Leaf(l) => l.eval_mask(z),
        Node::Gate { kind, children } => {
            if let Some(i) = e.child_at(path) {
                path.push(i as u16);
                let v = noisy(&children[i], e, z, path);
                path.pop();
                return v;
            }
            let mut acc = kind.identity();
            for (i, c) in children.iter().enumerate() {
                path.push(i as u16);
                let v = noisy(c, e, z, path);
                path.pop();
                acc = match kind {
                    GateKind::And => acc && v,
                    GateKind::Or => acc || v,
                };
            }
            acc
        }
    }
}

pub fn bits_to_mask(z: &[bool]) -> u64 {
    z.iter().enumerate().fold(0u64, |m, (i, &b)| m | ((b as u64) << i))
}

pub fn mask_to_bits(z: u64, n: u32) -> Vec<bool> {
    (0..n).map(|i| (z >> i) & 1 == 1).collect()
}
