//! Checks two formulas against short-circuit noise and prints what breaks.

use shortcircuit_lab::formula::{verify_resilience, CorruptionBudget, EnumerationLimits, Formula, VerifyMode};
use shortcircuit_lab::frac::Frac;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let budget = CorruptionBudget::new(Frac::ONE, Frac::ONE);
    for text in ["(and x1 x2)", "(and (or x1 x1) (or x1 x1))"] {
        let f = Formula::parse(text)?;
        let table = f.truth_table()?;
        let r = verify_resilience(&f, &table, budget, VerifyMode::Exhaustive, EnumerationLimits::default())?;
        println!("{f}: {} patterns, resilient = {}", r.patterns_checked, r.ok);
        if let Some(cx) = r.counterexample {
            println!("  input {:?} flips from {} to {} under {:?}", cx.input, cx.expected, cx.got, cx.pattern);
        }
    }
    Ok(())
}
