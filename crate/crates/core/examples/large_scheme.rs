//! One coded run over the large alphabet against the chain-forking
//! adversary, with the per-round trace and the invariant report.

use shortcircuit_lab::attacks::{build_adversary, AdversaryKind};
use shortcircuit_lab::base::RandomAlternating;
use shortcircuit_lab::coding::instrument::{check_run, trace_csv};
use shortcircuit_lab::coding::large::{simulate, SimConfig};
use shortcircuit_lab::frac::Frac;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = Frac::new(1, 10);
    let base = RandomAlternating::new(4, 7);
    let cfg = SimConfig::new(4, eps)?;
    let spec = AdversaryKind::ChainForker.spec(11, cfg.n, cfg.cap());
    let mut adv = build_adversary(&spec, ());
    let run = simulate(&base, eps, 0b1011, 0b0110, &mut adv)?;
    let report = check_run(&run, cfg.cap());
    print!("{}", trace_csv(&report.trace));
    println!(
        "{} rounds, corruptions {}/{} (cap {}), correct = {}",
        cfg.n,
        run.ledger.used_a,
        run.ledger.used_b,
        cfg.cap(),
        run.correct()
    );
    for v in &report.violations {
        println!("note: {:?} at round {}: {}", v.invariant, v.round, v.detail);
    }
    Ok(())
}
