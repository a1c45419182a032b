//! Post-hoc invariant checks over a finished run.
//!
//! A round counts as bad when it was corrupted or carried no payload (an
//! encoding fragment); everything below is phrased in terms of bad rounds so
//! the same checks apply to rewritten small-alphabet runs.

use super::{replay_schedule, Codec, SchemeRun};
use crate::channel::Party;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    /// After an intact round the receiver's good chain and transcript are
    /// exactly the true ones.
    ReceiverView,
    /// The implied transcript after an intact round is a prefix of the
    /// noiseless one.
    ImpliedPrefix,
    /// Speaking counts match the skip counters within 2.
    RoundCount,
    /// Early corruptions force at least that many extra skips.
    SkipBound,
    /// Skipped intact epochs minus opposite corruptions bound progress.
    Progress,
    /// Progress through the alternating opening rounds.
    EarlyProgress,
    /// The longest chain is at least the intact rounds.
    LongestChain,
    /// Corrupted rounds on and off the longest chain stay within budget.
    NoiseSplit,
    /// From-scratch schedule replay agrees with the live schedule.
    Schedule,
    /// Both outputs start with the noiseless transcript.
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    pub round: usize,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    pub index: usize,
    pub speaker: Party,
    pub corrupted: bool,
    pub t_len: usize,
    pub skip_a: usize,
    pub skip_b: usize,
    pub chain_a: usize,
    pub chain_b: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub violations: Vec<Violation>,
    pub trace: Vec<RoundTrace>,
    /// Rounds spoken by Alice and Bob.
    pub rc: (usize, usize),
    pub skips: (usize, usize),
    /// Longest chain lengths at the end.
    pub longest: (usize, usize),
    pub bad: (usize, usize),
}

impl Report {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn trace_csv(trace: &[RoundTrace]) -> String {
    let mut s = String::from("index,speaker,corrupted,t_len,skip_a,skip_b,chain_a,chain_b\n");
    for t in trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            t.index, t.speaker, t.corrupted as u8, t.t_len, t.skip_a, t.skip_b, t.chain_a, t.chain_b
        );
    }
    s
}

/// Checks every invariant on `run`; `cap` is the per-party budget the run
/// is supposed to respect.
#[allow(clippy::needless_range_loop)] // rounds are 1-based throughout
pub fn check_run<C: Codec>(run: &SchemeRun<C>, cap: usize) -> Report {
    let st = &run.state;
    let n = st.rounds();
    let pi_len = run.expected.len();
    let mut v = Vec::new();
    let mut fail = |invariant, round, detail: String| v.push(Violation { invariant, round, detail });

    let bad: Vec<bool> = (1..=n)
        .map(|r| {
            let (p, q) = st.at(r);
            let log = st.log(p);
            log.corrupted[q - 1] || !log.sent_payload[q - 1]
        })
        .collect();
    let is_bad = |r: usize| r > 0 && bad[r - 1];
    let speaker = |r: usize| st.records[r - 1].speaker;

    // True good rounds and implied transcripts.
    let mut good = Vec::new();
    let mut t_bits = Vec::new();
    let mut t_len = vec![0usize; n + 1];
    for r in 1..=n {
        if !is_bad(r) && !is_bad(st.prev_other(r)) {
            good.push(r);
            if let Some(b) = st.step_of(r).bit {
                t_bits.push(b);
            }
        }
        t_len[r] = t_bits.len();
    }

    let mut trace = Vec::with_capacity(n);
    for r in 1..=n {
        let (sa, sb) = st.skips_at(r);
        let (ca, cb) = st.chains_after(r);
        trace.push(RoundTrace {
            index: r,
            speaker: speaker(r),
            corrupted: st.records[r - 1].corrupted,
            t_len: t_len[r],
            skip_a: sa,
            skip_b: sb,
            chain_a: ca,
            chain_b: cb,
        });
        if is_bad(r) {
            continue;
        }
        let s = speaker(r);
        let t = st.temp_transcript(s.other(), r, st.log(s).last_upto(r));
        let good_upto = good.partition_point(|&g| g <= r);
        if t.good != good[..good_upto] || t.bits != t_bits[..t_len[r]] {
            fail(
                Invariant::ReceiverView,
                r,
                format!("receiver sees {:?}, true good rounds {:?}", t.good, &good[..good_upto]),
            );
        }
        if !run.expected.starts_with(&t_bits[..t_len[r]]) {
            fail(Invariant::ImpliedPrefix, r, format!("T has {} bits off the base transcript", t_len[r]));
        }
    }

    let (skip_a, skip_b) = (st.schedule.skip_a, st.schedule.skip_b);
    let rc = |p: Party| (1..=n).filter(|&r| speaker(r) == p).count();
    let (rc_a, rc_b) = (rc(Party::Alice), rc(Party::Bob));
    for (p, mine, own_skip, other_skip) in [(Party::Alice, rc_a, skip_a, skip_b), (Party::Bob, rc_b, skip_b, skip_a)] {
        let twice = (n + other_skip) as i64 - own_skip as i64;
        if (2 * mine as i64 - twice).abs() > 4 {
            fail(Invariant::RoundCount, n, format!("{p} speaks {mine} rounds, skip counters give {twice}/2"));
        }
    }

    let bad_by = |p: Party, upto: usize| (1..=upto.min(n)).filter(|&r| speaker(r) == p && is_bad(r)).count();
    let early = 2 * n / 5;
    for (p, skips) in [(Party::Alice, skip_a), (Party::Bob, skip_b)] {
        let t = bad_by(p, early);
        if skips < n / 5 + t {
            fail(Invariant::SkipBound, n, format!("{p}: {t} early corruptions but only {skips} skips"));
        }
    }

    let epochs = &st.schedule.epochs;
    for r in 1..=n {
        let count = |p: Party| {
            epochs
                .iter()
                .filter(|e| {
                    let (skipped, at) = match p {
                        Party::Alice => (e.alice_skipped, e.start),
                        Party::Bob => (e.bob_skipped, e.start + 1),
                    };
                    skipped && e.start < r && !is_bad(at)
                })
                .count()
        };
        for p in [Party::Alice, Party::Bob] {
            let t = count(p);
            let c = bad_by(p.other(), r);
            let need = t.saturating_sub(c).min(pi_len);
            if t_len[r] < need {
                fail(
                    Invariant::Progress,
                    r,
                    format!("{t} intact {p}-skipped epochs, {c} opposite corruptions, |T| = {}", t_len[r]),
                );
            }
        }
        if r <= early {
            let c = bad_by(Party::Alice, r) + bad_by(Party::Bob, r);
            let need = (r / 2).saturating_sub(c).min(pi_len);
            if t_len[r] < need {
                fail(Invariant::EarlyProgress, r, format!("{c} corruptions, |T| = {}", t_len[r]));
            }
        }
    }

    let mut longest = [0usize; 2];
    for (p, mine) in [(Party::Alice, rc_a), (Party::Bob, rc_b)] {
        let log = st.log(p);
        let top = log.longest();
        let chain = log.parse(top);
        longest[p.index()] = chain.len();
        let bad_p = bad_by(p, n);
        if chain.len() + bad_p < mine {
            fail(
                Invariant::LongestChain,
                n,
                format!("{p}: longest chain {} < {mine} rounds - {bad_p} bad", chain.len()),
            );
        }
        let d = chain.iter().filter(|&&r| is_bad(r)).count();
        let j = bad_p - d;
        if j + d > cap {
            fail(Invariant::NoiseSplit, n, format!("{p}: J={j}, D={d} exceed budget {cap}"));
        }
    }

    for i in 1..=n + 1 {
        let (p, a, b) = replay_schedule(st.n, i, |l| st.chains_after(l));
        let live = if i <= n { (speaker(i), st.skips_at(i)) } else { (p, (skip_a, skip_b)) };
        if (p, (a, b)) != live {
            fail(Invariant::Schedule, i, format!("replay gives {p} with skips ({a},{b}), live {live:?}"));
        }
    }

    for p in [Party::Alice, Party::Bob] {
        if !run.output(p).starts_with(&run.expected) {
            fail(Invariant::Output, n, format!("{p} output {:?} vs {:?}", run.output(p), run.expected));
        }
    }

    Report {
        violations: v,
        trace,
        rc: (rc_a, rc_b),
        skips: (skip_a, skip_b),
        longest: (longest[0], longest[1]),
        bad: (bad_by(Party::Alice, n), bad_by(Party::Bob, n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::RandomAlternating;
    use crate::channel::{Adversary, AdversaryView, ChannelSymbol, Decision, NullAdversary};
    use crate::coding::large::{simulate, LargeSymbol, SimConfig};
    use crate::frac::Frac;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Burst {
        target: Party,
        left: usize,
        rng: ChaCha8Rng,
    }

    impl Adversary<LargeSymbol> for Burst {
        fn decide(&mut self, v: &AdversaryView<'_, LargeSymbol>) -> Decision<LargeSymbol> {
            if v.speaker == self.target && self.left > 0 {
                self.left -= 1;
                return Decision::Replace(v.sent.random_other(&(), v.round, &mut self.rng));
            }
            Decision::Keep
        }
    }

    #[test]
    fn clean_run_passes() {
        let base = RandomAlternating::new(4, 1);
        let run = simulate(&base, Frac::new(1, 10), 3, 4, &mut NullAdversary).unwrap();
        let rep = check_run(&run, 4);
        assert!(rep.ok(), "{:?}", rep.violations);
        assert_eq!(rep.trace.len(), 40);
        assert!(trace_csv(&rep.trace).starts_with("index,speaker"));
    }

    #[test]
    fn burst_on_alice_raises_her_skips() {
        let base = RandomAlternating::new(6, 5);
        let eps = Frac::new(1, 10);
        let cfg = SimConfig::new(6, eps).unwrap();
        for t in 0..=cfg.cap() {
            let mut adv = Burst { target: Party::Alice, left: t, rng: ChaCha8Rng::seed_from_u64(t as u64) };
            let run = simulate(&base, eps, 9, 2, &mut adv).unwrap();
            assert_eq!(run.ledger.used_a, t);
            let rep = check_run(&run, cfg.cap());
            assert!(rep.ok(), "t={t}: {:?}", rep.violations);
            assert!(rep.skips.0 >= cfg.n / 5 + t);
        }
    }

    #[test]
    fn one_side_fully_corrupted_has_empty_transcript() {
        // Without a budget cap the adversary can corrupt all of Alice's rounds,
        // and then no round is good.
        let base = RandomAlternating::new(4, 2);
        let mut adv = Burst { target: Party::Alice, left: usize::MAX, rng: ChaCha8Rng::seed_from_u64(0) };
        let run = crate::coding::run_scheme(
            &crate::coding::large::LargeScheme,
            &base,
            Frac::new(1, 10),
            40,
            1,
            1,
            crate::channel::BudgetLedger::symmetric(40, Frac::ONE),
            &mut adv,
        );
        let rep = check_run(&run, 40);
        assert!(rep.trace.iter().all(|t| t.t_len == 0));
    }
}
