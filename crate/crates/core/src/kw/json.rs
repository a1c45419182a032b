//! JSON form: `{owner, children, moves: {"0110": child}}` for internal nodes
//! and `{leaf: "x2"}` or `{leaf: "(not x2)"}` for leaves. Bitstrings list
//! `z1` first.

use super::{bitstring, parse_bitstring, PNode, ProtocolTree};
use crate::channel::Party;
use crate::formula::Literal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Serialize, Deserialize)]
struct RawNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    owner: Option<Party>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<RawNode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    moves: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    n_vars: u32,
    alphabet: usize,
    alice_domain: Vec<String>,
    bob_domain: Vec<String>,
    root: RawNode,
}

pub fn literal_text(l: Literal) -> String {
    if l.negated {
        format!("(not x{})", l.var)
    } else {
        format!("x{}", l.var)
    }
}

pub fn parse_literal(s: &str) -> Option<Literal> {
    let s = s.trim();
    let (inner, negated) = match s.strip_prefix("(not").and_then(|r| r.strip_suffix(')')) {
        Some(r) => (r.trim(), true),
        None => (s, false),
    };
    let var = inner.strip_prefix('x')?.parse().ok().filter(|&v| v >= 1)?;
    Some(Literal { var, negated })
}

fn to_raw(n: &PNode, n_vars: u32) -> RawNode {
    match n {
        PNode::Internal { owner, children, moves } => RawNode {
            owner: Some(*owner),
            children: children.iter().map(|c| to_raw(c, n_vars)).collect(),
            moves: moves.iter().map(|(&z, &c)| (bitstring(z, n_vars), c)).collect(),
            leaf: None,
        },
        PNode::Leaf(l) => {
            RawNode { owner: None, children: vec![], moves: BTreeMap::new(), leaf: Some(literal_text(*l)) }
        }
        PNode::Unlabeled => RawNode { owner: None, children: vec![], moves: BTreeMap::new(), leaf: None },
    }
}

fn from_raw(r: RawNode, n_vars: u32) -> Result<PNode, String> {
    let key = |s: &str| {
        parse_bitstring(s).filter(|_| s.len() == n_vars as usize).ok_or_else(|| format!("bad input bitstring `{s}`"))
    };
    match (r.owner, r.leaf) {
        (Some(_), Some(_)) => Err("node has both an owner and a leaf label".into()),
        (Some(owner), None) => {
            let mut moves = BTreeMap::new();
            for (k, c) in r.moves {
                moves.insert(key(&k)?, c);
            }
            let children = r.children.into_iter().map(|c| from_raw(c, n_vars)).collect::<Result<_, _>>()?;
            Ok(PNode::Internal { owner, children, moves })
        }
        (None, Some(l)) if r.children.is_empty() => {
            Ok(PNode::Leaf(parse_literal(&l).ok_or_else(|| format!("bad literal `{l}`"))?))
        }
        (None, None) if r.children.is_empty() => Ok(PNode::Unlabeled),
        _ => Err("leaf with children".into()),
    }
}

impl Serialize for ProtocolTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let dom = |d: &BTreeSet<u64>| d.iter().map(|&z| bitstring(z, self.n_vars)).collect();
        RawTree {
            n_vars: self.n_vars,
            alphabet: self.alphabet,
            alice_domain: dom(&self.alice_domain),
            bob_domain: dom(&self.bob_domain),
            root: to_raw(&self.root, self.n_vars),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProtocolTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawTree::deserialize(d)?;
        let n = raw.n_vars;
        let dom = |v: Vec<String>| -> Result<BTreeSet<u64>, D::Error> {
            v.iter()
                .map(|s| {
                    parse_bitstring(s)
                        .filter(|_| s.len() == n as usize)
                        .ok_or_else(|| D::Error::custom(format!("bad input bitstring `{s}`")))
                })
                .collect()
        };
        let tree = ProtocolTree {
            n_vars: n,
            alphabet: raw.alphabet,
            alice_domain: dom(raw.alice_domain)?,
            bob_domain: dom(raw.bob_domain)?,
            root: from_raw(raw.root, n).map_err(D::Error::custom)?,
        };
        tree.validate().map_err(D::Error::custom)?;
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parity_formula, Formula};
    use crate::kw::formula_to_protocol;

    #[test]
    fn round_trip() {
        for f in [parity_formula(3), Formula::parse("(and x1 (or (not x2) x3))").unwrap()] {
            let p = formula_to_protocol(&f).unwrap();
            let s = serde_json::to_string(&p).unwrap();
            let back: ProtocolTree = serde_json::from_str(&s).unwrap();
            assert_eq!(back, p);
            assert_eq!(serde_json::to_string(&back).unwrap(), s);
        }
    }

    #[test]
    fn literals() {
        assert_eq!(parse_literal("x3"), Some(Literal::pos(3)));
        assert_eq!(parse_literal("(not x12)"), Some(Literal::neg(12)));
        assert_eq!(parse_literal("x0"), None);
        assert_eq!(parse_literal("y1"), None);
    }

    #[test]
    fn rejects_overlapping_domains() {
        let s = r#"{"n_vars":1,"alphabet":1,"alice_domain":["1"],"bob_domain":["1"],"root":{"leaf":"x1"}}"#;
        assert!(serde_json::from_str::<ProtocolTree>(s).is_err());
    }
}
