//! The large-alphabet scheme: each symbol carries an absolute link and one
//! payload bit.

use super::{check_base, rounds_for, run_scheme, Codec, CodingError, SchemeRun, SendCtx, SenderLog, Step};
use crate::base::BaseProtocol;
use crate::channel::{Adversary, BudgetLedger, ChannelSymbol};
use crate::frac::Frac;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LargeSymbol {
    /// `link` is an absolute round of the same sender, 0 for none.
    Msg { link: usize, b: Option<bool> },
    /// Occupies a round without joining the chain; a walk passes through
    /// it to `link`. Never sent by honest parties; it stands in for
    /// rounds spent on link encodings when a small-alphabet run is
    /// rewritten in large-alphabet terms.
    Erased { link: usize },
}

impl LargeSymbol {
    pub fn link(&self) -> usize {
        match *self {
            LargeSymbol::Msg { link, .. } | LargeSymbol::Erased { link } => link,
        }
    }

    pub fn bit(&self) -> Option<bool> {
        match *self {
            LargeSymbol::Msg { b, .. } => b,
            LargeSymbol::Erased { .. } => None,
        }
    }
}

const BITS: [Option<bool>; 3] = [None, Some(false), Some(true)];

impl ChannelSymbol for LargeSymbol {
    type Space = ();

    fn random_other(&self, _: &(), round: usize, rng: &mut ChaCha8Rng) -> Self {
        loop {
            let s = LargeSymbol::Msg { link: rng.gen_range(0..round.max(1)), b: BITS[rng.gen_range(0..3)] };
            if s != *self {
                return s;
            }
        }
    }
}

/// Walks absolute links over `messages`, where message `i` sits at index
/// `i` (1-based). Returns the visited indices in increasing order.
pub fn parse_chain(messages: &[LargeSymbol]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut j = messages.len();
    while j > 0 {
        let m = &messages[j - 1];
        if matches!(m, LargeSymbol::Msg { .. }) {
            out.push(j);
        }
        let next = m.link();
        if next >= j {
            break;
        }
        j = next;
    }
    out.reverse();
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LargeScheme;

impl Codec for LargeScheme {
    type Sym = LargeSymbol;
    type Enc = ();

    fn step(&self, log: &SenderLog<LargeSymbol>, q: usize) -> Step {
        let s = log.symbol(q);
        let next = log.position_of(s.link()).filter(|&p| p < q).unwrap_or(0);
        Step { include: matches!(s, LargeSymbol::Msg { .. }), next, bit: s.bit() }
    }

    fn compose(&self, _: &mut (), at: &SendCtx, bit: &mut dyn FnMut() -> Option<bool>) -> LargeSymbol {
        LargeSymbol::Msg { link: at.last_good_round, b: bit() }
    }

    fn is_payload(&self, s: &LargeSymbol) -> bool {
        matches!(s, LargeSymbol::Msg { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub eps: Frac,
    pub n: usize,
    /// Per-party corruption rate the ledger enforces.
    pub rate: Frac,
}

impl SimConfig {
    /// Rounds `ceil(len/eps)` and budget `1/5 - eps` per party.
    pub fn new(base_len: usize, eps: Frac) -> Result<Self, CodingError> {
        let max = Frac::new(1, 5);
        if eps == Frac::ZERO || eps >= max {
            return Err(CodingError::BadEpsilon { eps, max });
        }
        Ok(SimConfig { eps, n: rounds_for(base_len, eps), rate: eps.fifth_minus(1).expect("eps < 1/5") })
    }

    pub fn ledger(&self) -> BudgetLedger {
        BudgetLedger::symmetric(self.n, self.rate)
    }

    pub fn cap(&self) -> usize {
        self.rate.floor_mul(self.n as u64) as usize
    }
}

pub type LargeRun = SchemeRun<LargeScheme>;

pub fn simulate<B: BaseProtocol + ?Sized>(
    base: &B,
    eps: Frac,
    x: u64,
    y: u64,
    adversary: &mut dyn Adversary<LargeSymbol>,
) -> Result<LargeRun, CodingError> {
    check_base(base)?;
    let cfg = SimConfig::new(base.len(), eps)?;
    Ok(run_scheme(&LargeScheme, base, eps, cfg.n, x, y, cfg.ledger(), adversary))
}
