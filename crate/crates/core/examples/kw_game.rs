//! The KW game of 3-bit parity: play every input pair, then turn the
//! protocol back into a formula.

use shortcircuit_lab::formula::parity_formula;
use shortcircuit_lab::kw::{bitstring, formula_to_protocol, protocol_to_formula, ChannelNoisePattern};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = parity_formula(3);
    let p = formula_to_protocol(&f)?;
    println!("{f}\nprotocol depth {} with {} nodes", p.depth(), p.size());
    let none = ChannelNoisePattern::new();
    for &x in &p.alice_domain {
        for &y in &p.bob_domain {
            let run = p.run(x, y, &none)?;
            println!("x={} y={} -> {} via {:?}", bitstring(x, 3), bitstring(y, 3), run.leaf, run.path);
        }
    }
    let g = protocol_to_formula(&p)?;
    assert_eq!(g.truth_table()?, f.truth_table()?);
    println!("reverse transform: {g}");
    Ok(())
}
