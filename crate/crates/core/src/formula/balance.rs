//! Depth reduction for fan-in-2 formulas.
//!
//! Two rewrites are combined and the shallower result kept:
//! same-kind clusters are rebuilt as Huffman trees over their operand depths,
//! and a separator step rewrites `F` as `(G ∧ F[G:=1]) ∨ F[G:=0]` for a
//! subformula `G` holding between a third and two thirds of the nodes.

use super::{Formula, FormulaError, GateKind, Node, NodePath};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Largest variable count for which the output is checked by truth table.
pub const BALANCE_CHECK_VARS: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Balanced {
    pub formula: Formula,
    /// False when the variable count was too large for the table comparison.
    pub equivalence_checked: bool,
}

/// `3 * log2(size)`, the depth target.
pub fn depth_bound(size: usize) -> f64 {
    3.0 * (size as f64).log2()
}

pub fn balance(f: &Formula) -> Result<Balanced, FormulaError> {
    check_binary(f.root(), &mut Vec::new())?;
    let bound = depth_bound(f.size());
    let out = if f.depth() as f64 <= bound {
        f.clone()
    } else {
        let root = bal(f.root());
        let root = if root.depth() < f.depth() { root } else { f.root().clone() };
        Formula::new(root, f.n_vars())?
    };
    if out.depth() as f64 > bound {
        return Err(FormulaError::DepthBound { depth: out.depth(), size: f.size() });
    }
    let checked = f.n_vars() <= BALANCE_CHECK_VARS;
    if checked {
        let a = f.truth_table()?;
        let b = out.truth_table()?;
        if a != b {
            return Err(FormulaError::BalanceMismatch);
        }
    }
    Ok(Balanced { formula: out, equivalence_checked: checked })
}

fn check_binary(node: &Node, path: &mut Vec<u16>) -> Result<(), FormulaError> {
    if let Node::Gate { children, .. } = node {
        if children.len() != 2 {
            return Err(FormulaError::NotBinary(NodePath(path.clone())));
        }
        for (i, c) in children.iter().enumerate() {
            path.push(i as u16);
            check_binary(c, path)?;
            path.pop();
        }
    }
    Ok(())
}

fn bal(node: &Node) -> Node {
    let clustered = cluster(node);
    if node.size() <= 7 {
        return clustered;
    }
    match separator_step(node) {
        Some(s) if s.depth() < clustered.depth() => s,
        _ => clustered,
    }
}

/// Rebuilds maximal same-kind clusters as depth-optimal binary trees.
fn cluster(node: &Node) -> Node {
    let Node::Gate { kind, .. } = node else {
        return node.clone();
    };
    let mut operands = Vec::new();
    collect_operands(node, *kind, &mut operands);
    let balanced: Vec<Node> = operands.into_iter().map(cluster).collect();
    huffman(*kind, balanced)
}

fn collect_operands<'a>(node: &'a Node, kind: GateKind, out: &mut Vec<&'a Node>) {
    match node {
        Node::Gate { kind: k, children } if *k == kind => {
            for c in children {
                collect_operands(c, kind, out);
            }
        }
        other => out.push(other),
    }
}

fn huffman(kind: GateKind, operands: Vec<Node>) -> Node {
    let mut heap: BinaryHeap<(Reverse<usize>, Reverse<usize>)> = BinaryHeap::new();
    let mut slots: Vec<Option<Node>> = Vec::new();
    for n in operands {
        heap.push((Reverse(n.depth()), Reverse(slots.len())));
        slots.push(Some(n));
    }
    while heap.len() > 1 {
        let (Reverse(da), Reverse(ia)) = heap.pop().unwrap();
        let (Reverse(db), Reverse(ib)) = heap.pop().unwrap();
        let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
        let a = slots[lo].take().unwrap();
        let b = slots[hi].take().unwrap();
        let merged = Node::Gate { kind, children: vec![a, b] };
        heap.push((Reverse(da.max(db) + 1), Reverse(slots.len())));
        slots.push(Some(merged));
    }
    let (_, Reverse(i)) = heap.pop().unwrap();
    slots[i].take().unwrap()
}

enum Simp {
    Const(bool),
    Node(Node),
}

fn separator_step(node: &Node) -> Option<Node> {
    let s = node.size();
    let mut path = Vec::new();
    let mut cur = node;
    while cur.size() * 3 > 2 * s {
        let kids = cur.children();
        if kids.is_empty() {
            break;
        }
        let i = if kids[0].size() >= kids[1].size() { 0 } else { 1 };
        path.push(i);
        cur = &kids[i];
    }
    if path.is_empty() {
        return None;
    }
    let g = bal(cur);
    let f1 = substitute(node, &path, true);
    let f0 = substitute(node, &path, false);
    let left = match f1 {
        Simp::Const(true) => Simp::Node(g),
        Simp::Const(false) => Simp::Const(false),
        Simp::Node(n) => Simp::Node(Node::and(vec![g, bal(&n)])),
    };
    match (left, f0) {
        (Simp::Node(l), Simp::Const(false)) => Some(l),
        (Simp::Node(l), Simp::Node(r)) => Some(Node::or(vec![l, bal(&r)])),
        (Simp::Const(false), Simp::Node(r)) => Some(bal(&r)),
        _ => None,
    }
}

fn substitute(node: &Node, path: &[usize], value: bool) -> Simp {
    let Some((&first, rest)) = path.split_first() else {
        return Simp::Const(value);
    };
    let Node::Gate { kind, children } = node else {
        unreachable!("separator path runs through gates");
    };
    let sub = substitute(&children[first], rest, value);
    let other = &children[1 - first];
    match (kind, sub) {
        (GateKind::And, Simp::Const(false)) => Simp::Const(false),
        (GateKind::Or, Simp::Const(true)) => Simp::Const(true),
        (_, Simp::Const(_)) => Simp::Node(other.clone()),
        (_, Simp::Node(n)) => {
            let mut kids = children.clone();
            kids[first] = n;
            Simp::Node(Node::Gate { kind: *kind, children: kids })
        }
    }
}
