use super::{Formula, Node};

/// Fan-in-2 parity of `z1..zn` built from positive/negative copies of each half.
///
/// Depth is `2 * ceil(log2 n)`.
pub fn parity_formula(n: u32) -> Formula {
    assert!(n >= 1, "parity needs at least one variable");
    let (pos, _) = dual_rail(1, n);
    Formula::new(pos, n).expect("parity construction is well formed")
}

/// Returns (parity, complement of parity) of variables `lo..=hi`.
fn dual_rail(lo: u32, hi: u32) -> (Node, Node) {
    if lo == hi {
        return (Node::var(lo), Node::not_var(lo));
    }
    let mid = lo + (hi - lo + 1).div_ceil(2) - 1;
    let (p1, n1) = dual_rail(lo, mid);
    let (p2, n2) = dual_rail(mid + 1, hi);
    let pos = Node::or(vec![Node::and(vec![p1.clone(), n2.clone()]), Node::and(vec![n1.clone(), p2.clone()])]);
    let neg = Node::or(vec![Node::and(vec![p1, p2]), Node::and(vec![n1, n2])]);
    (pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(parity_formula(1).to_text(), "x1");
        assert_eq!(parity_formula(2).to_text(), "(or (and x1 (not x2)) (and (not x1) x2))");
        let p4 = parity_formula(4);
        assert_eq!(p4.eval(&[true, false, true, true]), Ok(true));
        assert_eq!(p4.depth(), 4);
        assert_eq!(parity_formula(3).eval(&[true, true, false]), Ok(false));
    }

    #[test]
    fn matches_xor_oracle() {
        for n in 1..=12u32 {
            let f = parity_formula(n);
            let t = f.truth_table().unwrap();
            for z in 0..(1u64 << n) {
                assert_eq!(t.get(z), z.count_ones() % 2 == 1, "n={n} z={z:b}");
            }
            let expect_depth = 2 * (32 - (n - 1).leading_zeros()) as usize;
            assert_eq!(f.depth(), if n == 1 { 0 } else { expect_depth });
        }
    }
}
