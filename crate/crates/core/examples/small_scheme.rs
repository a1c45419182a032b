//! The constant-alphabet scheme under random noise, and its rewrite into a
//! large-alphabet run with the same parses.

use shortcircuit_lab::attacks::{build_adversary, AdversaryKind};
use shortcircuit_lab::base::RandomAlternating;
use shortcircuit_lab::coding::rounds_for;
use shortcircuit_lab::coding::small::{check_reduction, simulate_small, SmallScheme};
use shortcircuit_lab::frac::Frac;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = Frac::new(1, 20);
    let scheme = SmallScheme::for_epsilon(eps);
    println!("C = {}, alphabet of {} symbols", scheme.c, scheme.alphabet_size());
    for seed in 0..5u64 {
        let base = RandomAlternating::new(5, seed);
        let n = rounds_for(5, eps);
        let mut adv = build_adversary(&AdversaryKind::Random.spec(seed, n, n / 10), scheme.c);
        let run = simulate_small(&base, eps, seed * 31, seed * 17 + 3, &mut adv)?;
        let red = check_reduction(&run, &base);
        println!(
            "seed {seed}: {n} rounds, {} corrupted, correct = {}, fragments {}/{}, parses agree = {}",
            run.corruptions(),
            run.correct(),
            red.fragments,
            red.fragment_cap,
            red.parse_mismatch.is_none()
        );
    }
    Ok(())
}
