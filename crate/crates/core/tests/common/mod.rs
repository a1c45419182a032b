//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use shortcircuit_lab::formula::{Formula, GateKind, Literal, Node};
use std::collections::HashMap;

pub const FAMILY_VARS: u32 = 3;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum G {
    /// `2 * var + negated`, variables counted from 0.
    Lit(u8),
    Gate(bool, u32, u32),
}

struct Table {
    nodes: Vec<G>,
    depth: Vec<u8>,
    index: HashMap<G, u32>,
}

impl Table {
    fn push(&mut self, g: G, d: u8) {
        self.index.insert(g, self.nodes.len() as u32);
        self.nodes.push(g);
        self.depth.push(d);
    }

    fn gate(is_and: bool, a: u32, b: u32) -> G {
        G::Gate(is_and, a.min(b), a.max(b))
    }

    fn node(&self, id: u32) -> Node {
        match self.nodes[id as usize] {
            G::Lit(l) => Node::lit(Literal { var: u32::from(l / 2) + 1, negated: l % 2 == 1 }),
            G::Gate(is_and, a, b) => {
                let ch = vec![self.node(a), self.node(b)];
                if is_and {
                    Node::and(ch)
                } else {
                    Node::or(ch)
                }
            }
        }
    }
}

/// The 48 renamings and negations of three variables, as literal maps.
fn symmetries() -> Vec<[u8; 6]> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::new();
    for p in perms {
        for flip in 0..8u8 {
            let mut m = [0u8; 6];
            for l in 0..6u8 {
                let v = l / 2;
                m[l as usize] = 2 * p[v as usize] + ((l % 2) ^ ((flip >> v) & 1));
            }
            out.push(m);
        }
    }
    out
}

/// Every formula of depth at most `max_depth` (up to 3) whose gates all have two children,
/// over the literals of three variables, one per class of commutative
/// reordering and renaming or negating variables. The properties checked
/// on it are invariant under those symmetries.
pub fn fan_in_two_family(max_depth: u8) -> Vec<Formula> {
    assert!(max_depth <= 3);
    let mut t = Table { nodes: Vec::new(), depth: Vec::new(), index: HashMap::new() };
    for l in 0..6 {
        t.push(G::Lit(l), 0);
    }
    for d in 1..=2u8 {
        let n = t.nodes.len() as u32;
        for is_and in [true, false] {
            for b in 0..n {
                for a in 0..=b {
                    if t.depth[a as usize].max(t.depth[b as usize]) == d - 1 {
                        t.push(G::Gate(is_and, a, b), d);
                    }
                }
            }
        }
    }
    let n2 = t.nodes.len();
    let syms = symmetries();
    // image of every depth <= 2 node under each symmetry; children come first
    let images: Vec<Vec<u32>> = syms
        .iter()
        .map(|m| {
            let mut img = vec![0u32; n2];
            for id in 0..n2 {
                img[id] = match t.nodes[id] {
                    G::Lit(l) => u32::from(m[l as usize]),
                    G::Gate(k, a, b) => t.index[&Table::gate(k, img[a as usize], img[b as usize])],
                };
            }
            img
        })
        .collect();

    let mut out = Vec::new();
    for id in 0..n2 as u32 {
        if t.depth[id as usize] <= max_depth && images.iter().all(|img| img[id as usize] >= id) {
            out.push(Formula::new(t.node(id), FAMILY_VARS).expect("family formula"));
        }
    }
    if max_depth < 3 {
        return out;
    }
    for is_and in [true, false] {
        for b in 0..n2 as u32 {
            for a in 0..=b {
                if t.depth[a as usize].max(t.depth[b as usize]) != 2 {
                    continue;
                }
                let minimal = images.iter().all(|img| {
                    let (x, y) = (img[a as usize], img[b as usize]);
                    (x.max(y), x.min(y)) >= (b, a)
                });
                if minimal {
                    let ch = vec![t.node(a), t.node(b)];
                    let root = if is_and { Node::and(ch) } else { Node::or(ch) };
                    out.push(Formula::new(root, FAMILY_VARS).expect("family formula"));
                }
            }
        }
    }
    out
}

/// `lit` under one gate per entry of `kinds`, innermost last, each gate
/// holding two copies of the level below.
pub fn dup_chain(kinds: &[GateKind], lit: Literal) -> Formula {
    let mut node = Node::lit(lit);
    for &k in kinds.iter().rev() {
        node = Node::Gate { kind: k, children: vec![node.clone(), node] };
    }
    Formula::from_root(node).expect("chain")
}

/// Every chain of depth 1 to `max_depth`, over `x1` and `not x2`.
pub fn dup_chains(max_depth: usize) -> Vec<Formula> {
    let mut out = Vec::new();
    for d in 1..=max_depth {
        for bits in 0..1u32 << d {
            let kinds: Vec<GateKind> =
                (0..d).map(|i| if bits >> i & 1 == 1 { GateKind::Or } else { GateKind::And }).collect();
            for lit in [Literal::pos(1), Literal::neg(2)] {
                out.push(dup_chain(&kinds, lit));
            }
        }
    }
    out
}
