//! Round overhead of the coded protocols for a few noise rates.

use shortcircuit_lab::coding::rounds_for;
use shortcircuit_lab::coding::small::SmallScheme;
use shortcircuit_lab::frac::Frac;

fn main() {
    println!("eps,base_len,rounds,ratio,small_alphabet");
    for eps in ["1/10", "1/20", "1/40", "3/100"] {
        let eps: Frac = eps.parse().expect("rate");
        for len in [10, 100, 1000] {
            let n = rounds_for(len, eps);
            let ratio = Frac::new(n as u64, len as u64);
            println!("{eps},{len},{n},{ratio},{}", SmallScheme::for_epsilon(eps).alphabet_size());
        }
    }
}
