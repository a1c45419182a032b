//! Confuses one party of a 10-round parity protocol with a fifth of each
//! party's rounds corrupted.

use shortcircuit_lab::attacks::{
    bisection_protocol, build_attack, execute_attack, find_confusable_inputs, pad_to_multiple_of_five,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = pad_to_multiple_of_five(bisection_protocol(12));
    let inputs = find_confusable_inputs(&p)?;
    let plan = build_attack(&p, &inputs)?;
    let report = execute_attack(&p, &plan)?;
    println!("{} cannot tell these runs apart:", report.confused);
    for r in &report.runs {
        println!(
            "  x={} y={} corrupted rounds {:?}, outputs {} / {}, valid {:?}",
            r.x, r.y, r.corrupted, r.outputs[0], r.outputs[1], r.valid
        );
    }
    println!("shared view: {:?}", report.view.received);
    Ok(())
}
