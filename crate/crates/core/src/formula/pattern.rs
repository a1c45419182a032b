use super::{Formula, FormulaError, Node};
use crate::frac::Frac;
use serde::{Deserialize, Serialize};
use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Child-index path from the root; the root itself is the empty path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(pub Vec<u16>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(i as u16);
        NodePath(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Borrow<[u16]> for NodePath {
    fn borrow(&self) -> &[u16] {
        &self.0
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(NodePath::root());
        }
        s.split('.')
            .map(|p| p.parse::<u16>())
            .collect::<Result<Vec<_>, _>>()
            .map(NodePath)
            .map_err(|_| FormulaError::Parse { pos: 0, msg: format!("bad node path `{s}`") })
    }
}

impl Serialize for NodePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a single gate does: compute normally, or forward child `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Directive {
    Star,
    Child(usize),
}

impl Serialize for Directive {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Directive::Star => s.serialize_str("*"),
            Directive::Child(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Directive {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "*" => Ok(Directive::Star),
            serde_json::Value::Number(n) if n.as_u64().is_some() => Ok(Directive::Child(n.as_u64().unwrap() as usize)),
            other => Err(serde::de::Error::custom(format!("bad directive {other}"))),
        }
    }
}

/// Sparse map from gate path to directive. Unlisted gates compute normally.
///
/// Explicit `Star` entries are kept so that files round-trip byte for byte,
/// but they never affect evaluation or budgets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShortCircuitPattern {
    map: BTreeMap<NodePath, Directive>,
}

impl ShortCircuitPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, path: NodePath, child: usize) {
        self.map.insert(path, Directive::Child(child));
    }

    pub fn set_directive(&mut self, path: NodePath, d: Directive) {
        self.map.insert(path, d);
    }

    pub fn child_at(&self, path: &[u16]) -> Option<usize> {
        match self.map.get(path) {
            Some(Directive::Child(i)) => Some(*i),
            _ => None,
        }
    }

    /// Non-star directives in path order.
    pub fn iter(&self) -> impl Iterator<Item = (&NodePath, usize)> {
        self.map.iter().filter_map(|(p, d)| match d {
            Directive::Child(i) => Some((p, *i)),
            Directive::Star => None,
        })
    }

    /// Number of corrupted gates.
    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, f: &Formula) -> Result<(), FormulaError> {
        for (path, d) in &self.map {
            let node = f.node_at(path).ok_or_else(|| FormulaError::NoSuchGate(path.clone()))?;
            let Node::Gate { children, .. } = node else {
                return Err(FormulaError::NoSuchGate(path.clone()));
            };
            if let Directive::Child(i) = d {
                if *i >= children.len() {
                    return Err(FormulaError::DirectiveOutOfRange {
                        path: path.clone(),
                        index: *i,
                        arity: children.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

impl FromIterator<(NodePath, usize)> for ShortCircuitPattern {
    fn from_iter<T: IntoIterator<Item = (NodePath, usize)>>(iter: T) -> Self {
        let mut p = ShortCircuitPattern::new();
        for (path, i) in iter {
            p.set(path, i);
        }
        p
    }
}

/// Per-path corruption fractions for AND gates (`alpha`) and OR gates (`beta`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorruptionBudget {
    pub alpha: Frac,
    pub beta: Frac,
}

impl CorruptionBudget {
    pub fn new(alpha: Frac, beta: Frac) -> Self {
        assert!(alpha <= Frac::ONE && beta <= Frac::ONE, "budget fractions must be in [0, 1]");
        CorruptionBudget { alpha, beta }
    }

    pub fn zero() -> Self {
        CorruptionBudget { alpha: Frac::ZERO, beta: Frac::ZERO }
    }

    /// Absolute per-path caps for a formula of the given depth.
    pub fn caps(&self, depth: usize) -> (usize, usize) {
        (self.alpha.floor_mul(depth as u64) as usize, self.beta.floor_mul(depth as u64) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_text_round_trip() {
        for s in ["", "0", "0.1.0", "12.3"] {
            let p: NodePath = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("a.b".parse::<NodePath>().is_err());
    }

    #[test]
    fn pattern_json_round_trip() {
        let text = r#"{"":"*","0.1":1,"0.1.0":0}"#;
        let p: ShortCircuitPattern = serde_json::from_str(text).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(serde_json::to_string(&p).unwrap(), text);
        assert!(serde_json::from_str::<ShortCircuitPattern>(r#"{"0":"x"}"#).is_err());
    }
}
