use proptest::prelude::*;
use shortcircuit_lab::attacks::{build_adversary, AdversaryKind};
use shortcircuit_lab::base::RandomAlternating;
use shortcircuit_lab::coding::instrument::{check_run, Invariant};
use shortcircuit_lab::coding::large::{simulate, SimConfig};
use shortcircuit_lab::coding::rounds_for;
use shortcircuit_lab::coding::small::{check_reduction, digits, simulate_small, SmallScheme};
use shortcircuit_lab::formula::CorruptionBudget;
use shortcircuit_lab::formula::{balance, Formula, GateKind, Literal, Node, NodePath, ShortCircuitPattern};
use shortcircuit_lab::frac::Frac;
use shortcircuit_lab::hardening::{brute_force_tree, synthetic_protocol, PathBudget, TreeModel};
use shortcircuit_lab::kw::{formula_to_protocol, protocol_to_formula, ChannelNoisePattern, KwError};

fn node(vars: u32, depth: u32, max_arity: usize) -> impl Strategy<Value = Node> {
    let leaf = (1..=vars, any::<bool>()).prop_map(|(v, n)| Node::lit(Literal { var: v, negated: n }));
    leaf.prop_recursive(depth, 64, max_arity as u32, move |inner| {
        (any::<bool>(), prop::collection::vec(inner, 1..=max_arity)).prop_map(|(and, ch)| {
            if and {
                Node::and(ch)
            } else {
                Node::or(ch)
            }
        })
    })
}

fn binary(vars: u32, depth: u32) -> impl Strategy<Value = Node> {
    let leaf = (1..=vars, any::<bool>()).prop_map(|(v, n)| Node::lit(Literal { var: v, negated: n }));
    leaf.prop_recursive(depth, 128, 2, |inner| {
        (any::<bool>(), inner.clone(), inner)
            .prop_map(|(and, a, b)| if and { Node::and(vec![a, b]) } else { Node::or(vec![a, b]) })
    })
}

fn formula(max_arity: usize) -> impl Strategy<Value = Formula> {
    node(5, 4, max_arity).prop_map(|n| Formula::new(n, 5).unwrap())
}

/// Forces every gate whose seeded coin comes up, to a seeded child.
fn random_pattern(f: &Formula, seed: u64) -> ShortCircuitPattern {
    let mut e = ShortCircuitPattern::new();
    let mut s = seed;
    fn go(n: &Node, path: &mut Vec<u16>, s: &mut u64, e: &mut ShortCircuitPattern) {
        if let Node::Gate { children, .. } = n {
            *s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if (*s >> 33).is_multiple_of(3) {
                e.set(NodePath(path.clone()), ((*s >> 40) as usize) % children.len());
            }
            for (i, c) in children.iter().enumerate() {
                path.push(i as u16);
                go(c, path, s, e);
                path.pop();
            }
        }
    }
    go(f.root(), &mut Vec::new(), &mut s, &mut e);
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn text_round_trips(f in formula(3)) {
        let back = Formula::parse(&f.to_string()).unwrap();
        prop_assert_eq!(back.with_n_vars(f.n_vars()).unwrap(), f);
    }

    #[test]
    fn noise_on_one_gate_kind_is_one_sided(f in formula(3), seed in any::<u64>()) {
        let e = random_pattern(&f, seed);
        let and_only = f.restrict(&e, GateKind::And);
        let or_only = f.restrict(&e, GateKind::Or);
        for z in 0..1u64 << f.n_vars() {
            let v = f.eval_noisy_mask(&e, z);
            prop_assert!(!v || f.eval_noisy_mask(&and_only, z));
            prop_assert!(v || !f.eval_noisy_mask(&or_only, z));
        }
    }

    #[test]
    fn balancing_keeps_the_function(n in binary(4, 8)) {
        let f = Formula::new(n, 4).unwrap();
        let b = balance(&f).unwrap();
        prop_assert!(b.equivalence_checked);
        prop_assert_eq!(b.formula.truth_table().unwrap(), f.truth_table().unwrap());
        prop_assert!(b.formula.depth() as f64 <= 3.0 * (f.size() as f64).log2());
    }

    #[test]
    fn kw_game_is_solved_and_inverted(f in formula(3)) {
        let p = match formula_to_protocol(&f) {
            Err(KwError::ConstantFunction) => return Ok(()),
            other => other.unwrap(),
        };
        let none = ChannelNoisePattern::new();
        for &x in &p.alice_domain {
            for &y in &p.bob_domain {
                let l = p.run(x, y, &none).unwrap().leaf;
                prop_assert!(!l.eval_mask(x) && l.eval_mask(y));
            }
        }
        prop_assert!(p.depth() <= f.depth());
        let g = protocol_to_formula(&p).unwrap();
        prop_assert_eq!(g.truth_table().unwrap(), f.truth_table().unwrap());
    }

    #[test]
    fn rounds_are_the_least_cover(len in 1usize..500, num in 1u64..20, den in 21u64..400) {
        let eps = Frac::new(num, den);
        let n = rounds_for(len, eps) as u64;
        // n * eps >= len > (n - 1) * eps
        prop_assert!(n as u128 * num as u128 >= len as u128 * den as u128);
        prop_assert!(((n - 1) as u128) * (num as u128) < len as u128 * den as u128);
    }

    #[test]
    fn digits_spell_the_number(v in 0usize..1 << 40, c in 2u32..64) {
        let d = digits(v, c);
        prop_assert!(d.iter().all(|&x| x < c));
        prop_assert!(d.len() == 1 || d[0] != 0);
        prop_assert_eq!(d.iter().fold(0usize, |acc, &x| acc * c as usize + x as usize), v);
    }

    #[test]
    fn tree_reach_is_exact(seed in any::<u64>(), depth in 1usize..=3, k in 1usize..=3, a in 0u64..=3, b in 0u64..=3) {
        let tree = synthetic_protocol(seed, depth, k);
        let d = tree.depth().max(1) as u64;
        let budget = CorruptionBudget::new(Frac::new(a.min(d), d), Frac::new(b.min(d), d));
        let phi = PathBudget::from_rates(budget, tree.depth());
        prop_assert_eq!(TreeModel::new(&tree).reachable(&phi), brute_force_tree(&tree, budget));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn large_scheme_outputs_survive_full_budget(
        len in 1usize..=8,
        proto in any::<u64>(),
        kind in 0usize..4,
        seed in any::<u64>(),
        x in any::<u64>(),
        y in any::<u64>(),
    ) {
        let eps = Frac::new(1, 10);
        let cfg = SimConfig::new(len, eps).unwrap();
        let base = RandomAlternating::new(len, proto);
        let mut adv = build_adversary(&AdversaryKind::ALL[kind].spec(seed, cfg.n, cfg.cap()), ());
        let run = simulate(&base, eps, x, y, &mut adv).unwrap();
        prop_assert!(run.correct());
        prop_assert!(run.ledger.used_a <= cfg.cap() && run.ledger.used_b <= cfg.cap());
        // the skip bound is tracked by the acceptance suite; every other invariant holds
        let other: Vec<_> = check_run(&run, cfg.cap())
            .violations
            .into_iter()
            .filter(|v| v.invariant != Invariant::SkipBound)
            .collect();
        prop_assert!(other.is_empty(), "{:?}", other);
    }

    #[test]
    fn small_scheme_stays_within_its_bounds(
        len in 1usize..=6,
        proto in any::<u64>(),
        kind in 0usize..4,
        seed in any::<u64>(),
        x in any::<u64>(),
        y in any::<u64>(),
    ) {
        let eps = Frac::new(1, 20);
        let n = rounds_for(len, eps);
        let base = RandomAlternating::new(len, proto);
        let c = SmallScheme::for_epsilon(eps).c;
        let mut adv = build_adversary(&AdversaryKind::ALL[kind].spec(seed, n, n / 10), c);
        let run = simulate_small(&base, eps, x, y, &mut adv).unwrap();
        prop_assert!(run.correct());
        let red = check_reduction(&run, &base);
        prop_assert!(red.ok(), "{:?} {:?}", red.parse_mismatch, red.speaker_mismatch);
        prop_assert!(red.fragments <= eps.floor_mul(n as u64) as usize);
    }
}
