use super::{Compiled, CorruptionBudget, Formula, FormulaError, GateKind, ShortCircuitPattern};
use std::ops::ControlFlow;

/// Guards for exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Refuse formulas with more nodes than this.
    pub max_nodes: usize,
    /// Refuse exhaustive checks needing more (pattern, input) evaluations.
    pub max_evaluations: u128,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits { max_nodes: 64, max_evaluations: 10_000_000 }
    }
}

/// Calls `visit` once for every budget-valid pattern, as a dense slice.
///
/// Budgets are per root-to-leaf path, so a gate's directive is admissible iff
/// the counts along its own root path stay within the caps.
pub fn for_each_corruption(
    c: &Compiled,
    budget: CorruptionBudget,
    mut visit: impl FnMut(&[u8]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let (ca, cb) = budget.caps(c.depth());
    let g = c.gates();
    let mut dense = vec![0u8; g];
    let mut counts = vec![(0usize, 0usize); g];
    fn rec(
        k: usize,
        c: &Compiled,
        caps: (usize, usize),
        dense: &mut [u8],
        counts: &mut [(usize, usize)],
        visit: &mut dyn FnMut(&[u8]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if k == dense.len() {
            return visit(dense);
        }
        let base = c.gate_parent(k).map(|p| counts[p]).unwrap_or((0, 0));
        let kind = c.gate_kind(k);
        dense[k] = 0;
        counts[k] = base;
        rec(k + 1, c, caps, dense, counts, visit)?;
        let bumped = match kind {
            GateKind::And => (base.0 + 1, base.1),
            GateKind::Or => (base.0, base.1 + 1),
        };
        if bumped.0 <= caps.0 && bumped.1 <= caps.1 {
            counts[k] = bumped;
            for i in 0..c.gate_arity(k) {
                dense[k] = (i + 1) as u8;
                rec(k + 1, c, caps, dense, counts, visit)?;
            }
        }
        dense[k] = 0;
        counts[k] = base;
        ControlFlow::Continue(())
    }
    rec(0, c, (ca, cb), &mut dense, &mut counts, &mut visit)
}

/// All budget-valid patterns of `f`, each exactly once.
pub fn enumerate_corruptions(
    f: &Formula,
    budget: CorruptionBudget,
    limits: EnumerationLimits,
) -> Result<Vec<ShortCircuitPattern>, FormulaError> {
    if f.size() > limits.max_nodes {
        return Err(FormulaError::TooLarge { nodes: f.size(), cap: limits.max_nodes });
    }
    let c = Compiled::new(f);
    let mut out = Vec::new();
    let _ = for_each_corruption(&c, budget, |d| {
        out.push(c.sparse(d));
        if out.len() as u128 > limits.max_evaluations {
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    if out.len() as u128 > limits.max_evaluations {
        return Err(FormulaError::WorkCapExceeded { needed: out.len() as u128, cap: limits.max_evaluations });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;
    use crate::frac::Frac;

    fn full(a: u64, b: u64) -> CorruptionBudget {
        CorruptionBudget::new(Frac::new(a, 1), Frac::new(b, 1))
    }

    #[test]
    fn small_counts() {
        let leaf = Formula::from_root(Node::var(1)).unwrap();
        let all = enumerate_corruptions(&leaf, full(1, 1), Default::default()).unwrap();
        assert_eq!(all, vec![ShortCircuitPattern::new()]);

        let and2 = Formula::from_root(Node::and(vec![Node::var(1), Node::var(2)])).unwrap();
        let all = enumerate_corruptions(&and2, full(1, 1), Default::default()).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.iter().any(|p| p.child_at(&[]) == Some(1)));
        let none = enumerate_corruptions(&and2, CorruptionBudget::zero(), Default::default()).unwrap();
        assert_eq!(none, vec![ShortCircuitPattern::new()]);
    }

    #[test]
    fn refuses_above_cap() {
        let and2 = Formula::from_root(Node::and(vec![Node::var(1), Node::var(2)])).unwrap();
        let lim = EnumerationLimits { max_nodes: 2, ..Default::default() };
        assert!(matches!(enumerate_corruptions(&and2, full(1, 1), lim), Err(FormulaError::TooLarge { .. })));
    }

    /// Naive oracle: all (arity+1)^gates patterns filtered by `is_ab_corruption`.
    fn naive(f: &Formula, budget: CorruptionBudget) -> Vec<ShortCircuitPattern> {
        let c = Compiled::new(f);
        let g = c.gates();
        let mut out = Vec::new();
        let mut dense = vec![0u8; g];
        loop {
            let p = c.sparse(&dense);
            if f.is_ab_corruption(&p, budget) {
                out.push(p);
            }
            let mut k = 0;
            loop {
                if k == g {
                    return out;
                }
                if (dense[k] as usize) < c.gate_arity(k) {
                    dense[k] += 1;
                    break;
                }
                dense[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn matches_naive_filter() {
        let f = Formula::from_root(Node::or(vec![
            Node::and(vec![Node::var(1), Node::or(vec![Node::var(2), Node::not_var(1)])]),
            Node::and(vec![Node::var(2), Node::var(3)]),
        ]))
        .unwrap();
        for (a, b) in [(0, 0), (1, 3), (1, 1), (2, 3), (3, 3)] {
            let budget = CorruptionBudget::new(Frac::new(a, 3), Frac::new(b, 3));
            let mut fast = enumerate_corruptions(&f, budget, Default::default()).unwrap();
            let mut slow = naive(&f, budget);
            let key = |p: &ShortCircuitPattern| serde_json::to_string(p).unwrap();
            fast.sort_by_key(key);
            slow.sort_by_key(key);
            assert_eq!(fast, slow, "budget {a}/3 {b}/3");
        }
    }
}
