//! Reach on a small random protocol tree, the brute-force answer next to
//! it, and the formula read off the reachable part of a resilient protocol.

use shortcircuit_lab::formula::{CorruptionBudget, Formula};
use shortcircuit_lab::frac::Frac;
use shortcircuit_lab::hardening::{brute_force_tree, materialize_tree, synthetic_protocol, PathBudget, TreeModel};
use shortcircuit_lab::kw::resilient_formula_to_protocol;

const SEED: u64 = 3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = synthetic_protocol(SEED, 3, 3);
    for (a, b) in [(0, 0), (1, 0), (1, 1), (3, 3)] {
        let budget = CorruptionBudget::new(Frac::new(a, 3), Frac::new(b, 3));
        let phi = PathBudget::from_rates(budget, tree.depth());
        let reach = TreeModel::new(&tree).reachable(&phi);
        let brute = brute_force_tree(&tree, budget);
        println!(
            "caps ({a},{b}): {} of {} nodes reachable, brute force agrees = {}",
            reach.len(),
            tree.size(),
            reach == brute
        );
    }

    let f = Formula::parse("(or (and x1 x1) (and x1 x1))")?;
    let budget = CorruptionBudget::new(Frac::new(1, 2), Frac::new(1, 2));
    let p = resilient_formula_to_protocol(&f, budget)?;
    let g = materialize_tree(&p, &PathBudget::from_rates(budget, p.depth()), true)?;
    println!("{f} -> {g}");
    Ok(())
}
