//! Hardens parity on four bits and certifies the coded protocol.

use shortcircuit_lab::attacks::AdversaryKind;
use shortcircuit_lab::formula::parity_formula;
use shortcircuit_lab::frac::Frac;
use shortcircuit_lab::hardening::{certify_protocol_resilience, harden, DEFAULT_WORKLOAD_CAP};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = parity_formula(4);
    for eps in [Frac::new(1, 10), Frac::new(1, 20)] {
        let art = harden(&f, eps, DEFAULT_WORKLOAD_CAP)?;
        let acc = &art.accounting;
        println!(
            "eps {eps}: depth {} -> {} rounds (ratio {}), fan-in {}, log2 size bound {:.0}",
            acc.balanced_depth, acc.rounds, acc.round_ratio, acc.fan_in, acc.log2_size_bound
        );
        let cert = certify_protocol_resilience(&art, &AdversaryKind::ALL, 100, 1);
        for k in &cert.by_adversary {
            println!(
                "  {:>12}: {} runs, {} failures, {} wrong literals",
                k.adversary, k.runs, k.failures, k.wrong_literal
            );
        }
        println!("  attack: {}", cert.attack_precondition);
        match &art.materialized {
            Some(g) => println!("  materialized: depth {}, size {}", g.depth(), g.size()),
            None => println!("  {}", art.note),
        }
    }
    Ok(())
}
