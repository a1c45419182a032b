//! Round-by-round noisy channel with noiseless feedback.
//!
//! Each round one party sends a symbol, the adversary may replace it, and
//! both parties learn what was received. The [`BudgetLedger`] is the only
//! place corruptions are counted.

use crate::frac::Frac;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

/// Symbols an adversary can tamper with.
pub trait ChannelSymbol: Clone + PartialEq + fmt::Debug {
    /// Whatever is needed to describe the alphabet (e.g. the link range).
    type Space: Clone + fmt::Debug;

    /// Some symbol other than `self` that could appear in `round`.
    fn random_other(&self, space: &Self::Space, round: usize, rng: &mut ChaCha8Rng) -> Self;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord<S> {
    /// 1-based.
    pub index: usize,
    pub speaker: Party,
    pub sent: S,
    pub received: S,
    pub corrupted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DowngradeReason {
    BudgetExhausted,
    SameSymbol,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Downgrade {
    pub round: usize,
    pub speaker: Party,
    pub reason: DowngradeReason,
}

/// Corruption counters against `floor(alpha*n)` and `floor(beta*n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub n: usize,
    pub alpha: Frac,
    pub beta: Frac,
    pub used_a: usize,
    pub used_b: usize,
    pub downgrades: Vec<Downgrade>,
}

impl BudgetLedger {
    pub fn new(n: usize, alpha: Frac, beta: Frac) -> Self {
        BudgetLedger { n, alpha, beta, used_a: 0, used_b: 0, downgrades: Vec::new() }
    }

    pub fn symmetric(n: usize, rate: Frac) -> Self {
        Self::new(n, rate, rate)
    }

    pub fn cap(&self, p: Party) -> usize {
        match p {
            Party::Alice => self.alpha.floor_mul(self.n as u64) as usize,
            Party::Bob => self.beta.floor_mul(self.n as u64) as usize,
        }
    }

    pub fn used(&self, p: Party) -> usize {
        match p {
            Party::Alice => self.used_a,
            Party::Bob => self.used_b,
        }
    }

    pub fn remaining(&self, p: Party) -> usize {
        self.cap(p) - self.used(p)
    }

    fn spend(&mut self, p: Party) {
        match p {
            Party::Alice => self.used_a += 1,
            Party::Bob => self.used_b += 1,
        }
    }

    /// Counters within caps and equal to the corrupted rounds of `history`.
    pub fn consistent_with<S>(&self, history: &[RoundRecord<S>]) -> bool {
        let count = |p: Party| history.iter().filter(|r| r.speaker == p && r.corrupted).count();
        self.used_a <= self.cap(Party::Alice)
            && self.used_b <= self.cap(Party::Bob)
            && count(Party::Alice) == self.used_a
            && count(Party::Bob) == self.used_b
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision<S> {
    Keep,
    Replace(S),
}

/// Everything the adversary may look at before deciding a round.
pub struct AdversaryView<'a, S> {
    pub history: &'a [RoundRecord<S>],
    pub x: u64,
    pub y: u64,
    pub round: usize,
    pub n: usize,
    pub speaker: Party,
    pub sent: &'a S,
    pub remaining_a: usize,
    pub remaining_b: usize,
}

impl<S> AdversaryView<'_, S> {
    pub fn remaining(&self, p: Party) -> usize {
        match p {
            Party::Alice => self.remaining_a,
            Party::Bob => self.remaining_b,
        }
    }
}

pub trait Adversary<S> {
    fn decide(&mut self, view: &AdversaryView<'_, S>) -> Decision<S>;
}

impl<S, A: Adversary<S> + ?Sized> Adversary<S> for &mut A {
    fn decide(&mut self, view: &AdversaryView<'_, S>) -> Decision<S> {
        (**self).decide(view)
    }
}

impl<S, A: Adversary<S> + ?Sized> Adversary<S> for Box<A> {
    fn decide(&mut self, view: &AdversaryView<'_, S>) -> Decision<S> {
        (**self).decide(view)
    }
}

/// Runs one round and appends it to `history`.
pub fn step<S: PartialEq + Clone>(
    ledger: &mut BudgetLedger,
    history: &mut Vec<RoundRecord<S>>,
    speaker: Party,
    sent: S,
    inputs: (u64, u64),
    adversary: &mut dyn Adversary<S>,
) -> RoundRecord<S> {
    let round = history.len() + 1;
    let decision = adversary.decide(&AdversaryView {
        history,
        x: inputs.0,
        y: inputs.1,
        round,
        n: ledger.n,
        speaker,
        sent: &sent,
        remaining_a: ledger.remaining(Party::Alice),
        remaining_b: ledger.remaining(Party::Bob),
    });
    let received = match decision {
        Decision::Keep => sent.clone(),
        Decision::Replace(s) if s == sent => {
            ledger.downgrades.push(Downgrade { round, speaker, reason: DowngradeReason::SameSymbol });
            sent.clone()
        }
        Decision::Replace(_) if ledger.remaining(speaker) == 0 => {
            ledger.downgrades.push(Downgrade { round, speaker, reason: DowngradeReason::BudgetExhausted });
            sent.clone()
        }
        Decision::Replace(s) => {
            ledger.spend(speaker);
            s
        }
    };
    let rec = RoundRecord { index: round, speaker, corrupted: received != sent, sent, received };
    history.push(rec.clone());
    rec
}

/// `(round, received symbol)` for everything `p` sent.
pub fn sent_by<S>(history: &[RoundRecord<S>], p: Party) -> impl Iterator<Item = (usize, &S)> {
    history.iter().filter(move |r| r.speaker == p).map(|r| (r.index, &r.received))
}

/// What `p` received: the other party's transmissions after noise.
pub fn received_by<S>(history: &[RoundRecord<S>], p: Party) -> impl Iterator<Item = (usize, &S)> {
    sent_by(history, p.other())
}

pub struct NullAdversary;

impl<S> Adversary<S> for NullAdversary {
    fn decide(&mut self, _: &AdversaryView<'_, S>) -> Decision<S> {
        Decision::Keep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Always(u8);
    impl Adversary<u8> for Always {
        fn decide(&mut self, _: &AdversaryView<'_, u8>) -> Decision<u8> {
            Decision::Replace(self.0)
        }
    }

    #[test]
    fn null_keeps() {
        let mut l = BudgetLedger::symmetric(10, Frac::new(1, 5));
        let mut h = Vec::new();
        let r = step(&mut l, &mut h, Party::Alice, 3u8, (0, 0), &mut NullAdversary);
        assert_eq!(r.received, 3);
        assert!(!r.corrupted);
        assert!(l.consistent_with(&h));
    }

    #[test]
    fn replace_then_exhaust() {
        let mut l = BudgetLedger::symmetric(10, Frac::new(1, 5));
        let mut h = Vec::new();
        let mut adv = Always(9);
        for _ in 0..4 {
            step(&mut l, &mut h, Party::Alice, 1u8, (0, 0), &mut adv);
        }
        assert_eq!(l.used_a, 2);
        assert_eq!(h.iter().filter(|r| r.corrupted).count(), 2);
        assert_eq!(l.downgrades.len(), 2);
        assert_eq!(l.downgrades[0].reason, DowngradeReason::BudgetExhausted);
        assert!(!h[3].corrupted && h[3].received == 1);
        assert!(l.consistent_with(&h));
    }

    #[test]
    fn same_symbol_is_free() {
        let mut l = BudgetLedger::symmetric(10, Frac::new(1, 5));
        let mut h = Vec::new();
        let r = step(&mut l, &mut h, Party::Bob, 9u8, (0, 0), &mut Always(9));
        assert!(!r.corrupted);
        assert_eq!(l.used_b, 0);
        assert_eq!(l.downgrades[0].reason, DowngradeReason::SameSymbol);
    }

    #[test]
    fn views_split_by_speaker() {
        let mut l = BudgetLedger::symmetric(10, Frac::ZERO);
        let mut h = Vec::new();
        for (i, p) in [Party::Alice, Party::Bob, Party::Alice].into_iter().enumerate() {
            step(&mut l, &mut h, p, i as u8, (0, 0), &mut NullAdversary);
        }
        let ra: Vec<_> = received_by(&h, Party::Alice).map(|(i, s)| (i, *s)).collect();
        let rb: Vec<_> = received_by(&h, Party::Bob).map(|(i, s)| (i, *s)).collect();
        assert_eq!(ra, vec![(2, 1)]);
        assert_eq!(rb, vec![(1, 0), (3, 2)]);
    }
}
