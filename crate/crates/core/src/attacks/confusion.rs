//! The confusion attack: short protocols for the parity KW game cannot
//! survive a fifth of each party's transmissions being corrupted.
//!
//! The construction picks inputs whose runs agree on an opening prefix in
//! which one party (the "quiet" one) speaks at most half the time, then
//! stitches a received transcript `T = T1 T2 T3 T4` that is consistent with
//! two corrupted runs on input pairs with disjoint valid answers.

use crate::channel::{step, Adversary, AdversaryView, BudgetLedger, Decision, Party};
use crate::formula::Literal;
use crate::frac::Frac;
use crate::kw::{bitstring, separates, PNode, ProtocolTree};
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("protocol has no rounds")]
    ZeroRounds,
    #[error("{rounds} rounds is not a multiple of 5; pad the protocol first")]
    NotMultipleOfFive { rounds: usize },
    #[error("need n >= r*log2|alphabet| + 1, got n={n}, r={rounds}, alphabet {alphabet}")]
    TooManyRounds { n: u32, rounds: usize, alphabet: u32 },
    #[error("input domain of {n} bits is too large to enumerate")]
    DomainTooLarge { n: u32 },
    #[error("no pair of inputs shares an opening prefix")]
    SearchExhausted,
    #[error("plan overwrites {used} of {party}'s rounds, budget {cap}")]
    OverBudget { party: Party, used: usize, cap: usize },
    #[error("{party}'s views differ between the two runs")]
    ViewMismatch { party: Party },
}

/// A deterministic protocol over a finite alphabet with noiseless feedback.
/// The speaker and every message are functions of the received transcript.
pub trait RoundProtocol {
    /// Input length; inputs are bitmasks with `z1` as bit 0.
    fn bits(&self) -> u32;
    /// Longest possible transcript.
    fn rounds(&self) -> usize;
    fn alphabet(&self) -> u32;
    /// `None` once the protocol is over.
    fn speaker(&self, t: &[u32]) -> Option<Party>;
    fn send(&self, p: Party, input: u64, t: &[u32]) -> u32;
    fn output(&self, p: Party, input: u64, t: &[u32]) -> Literal;
}

impl<P: RoundProtocol + ?Sized> RoundProtocol for &P {
    fn bits(&self) -> u32 {
        (**self).bits()
    }
    fn rounds(&self) -> usize {
        (**self).rounds()
    }
    fn alphabet(&self) -> u32 {
        (**self).alphabet()
    }
    fn speaker(&self, t: &[u32]) -> Option<Party> {
        (**self).speaker(t)
    }
    fn send(&self, p: Party, input: u64, t: &[u32]) -> u32 {
        (**self).send(p, input, t)
    }
    fn output(&self, p: Party, input: u64, t: &[u32]) -> Literal {
        (**self).output(p, input, t)
    }
}

fn input_of(p: Party, x: u64, y: u64) -> u64 {
    match p {
        Party::Alice => x,
        Party::Bob => y,
    }
}

fn parity(z: u64) -> bool {
    z.count_ones() % 2 == 1
}

/// Noiseless transcript, stopping early after `limit` rounds.
pub fn transcript<P: RoundProtocol + ?Sized>(p: &P, x: u64, y: u64, limit: usize) -> Vec<u32> {
    let mut t = Vec::new();
    while t.len() < limit {
        let Some(s) = p.speaker(&t) else { break };
        t.push(p.send(s, input_of(s, x, y), &t));
    }
    t
}

/// The halving protocol for parity KW: the parties keep an interval on
/// which their parities differ. Alice announces the parity of her left
/// half, Bob answers whether his differs, and both move to a half that
/// still differs. Binary alphabet, `2*ceil(log2 n)` rounds at most.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bisection {
    pub n: u32,
}

pub fn bisection_protocol(n: u32) -> Bisection {
    Bisection { n }
}

impl Bisection {
    fn interval(&self, t: &[u32]) -> (u32, u32) {
        let (mut lo, mut hi) = (0, self.n);
        for pair in t.chunks_exact(2) {
            let mid = lo + (hi - lo) / 2;
            if pair[1] == 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, hi)
    }

    fn half_parity(&self, z: u64, t: &[u32]) -> u32 {
        let (lo, hi) = self.interval(t);
        let mid = lo + (hi - lo) / 2;
        let mask = ((1u64 << (mid - lo)) - 1) << lo;
        (z & mask).count_ones() % 2
    }
}

impl RoundProtocol for Bisection {
    fn bits(&self) -> u32 {
        self.n
    }

    fn rounds(&self) -> usize {
        2 * self.n.max(1).next_power_of_two().trailing_zeros() as usize
    }

    fn alphabet(&self) -> u32 {
        2
    }

    fn speaker(&self, t: &[u32]) -> Option<Party> {
        let (lo, hi) = self.interval(&t[..t.len() & !1]);
        if hi - lo <= 1 {
            return None;
        }
        Some(if t.len().is_multiple_of(2) { Party::Alice } else { Party::Bob })
    }

    fn send(&self, p: Party, input: u64, t: &[u32]) -> u32 {
        let mine = self.half_parity(input, t);
        match p {
            Party::Alice => mine,
            Party::Bob => u32::from(t[t.len() - 1] != mine),
        }
    }

    fn output(&self, p: Party, input: u64, t: &[u32]) -> Literal {
        let (lo, _) = self.interval(&t[..t.len() & !1]);
        let bit = (input >> lo) & 1 == 1;
        Literal { var: lo + 1, negated: if p == Party::Alice { bit } else { !bit } }
    }
}

/// Protocol trees run as round protocols, addressed by the received
/// symbols. A transcript that leaves the tree ends the protocol, and a
/// party stuck off a leaf answers `z1`.
impl RoundProtocol for ProtocolTree {
    fn bits(&self) -> u32 {
        self.n_vars
    }

    fn rounds(&self) -> usize {
        self.depth()
    }

    fn alphabet(&self) -> u32 {
        self.alphabet as u32
    }

    fn speaker(&self, t: &[u32]) -> Option<Party> {
        self.node_at(&tree_path(t)?)?.owner()
    }

    fn send(&self, _p: Party, input: u64, t: &[u32]) -> u32 {
        match tree_path(t).and_then(|path| self.node_at(&path)) {
            Some(PNode::Internal { moves, .. }) => moves.get(&input).map_or(0, |&c| c as u32),
            _ => 0,
        }
    }

    fn output(&self, _p: Party, _input: u64, t: &[u32]) -> Literal {
        let mut node = &self.root;
        for &s in t {
            match node.children().get(s as usize) {
                Some(c) => node = c,
                None => break,
            }
        }
        match node {
            PNode::Leaf(l) => *l,
            _ => Literal::pos(1),
        }
    }
}

fn tree_path(t: &[u32]) -> Option<Vec<u16>> {
    t.iter().map(|&s| u16::try_from(s).ok()).collect()
}

/// A protocol stretched to a whole number of fifths: once the inner
/// protocol is done, the parties alternate sending 0 until `rounds`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Padded<P> {
    pub inner: P,
    pub rounds: usize,
}

pub fn pad_to_multiple_of_five<P: RoundProtocol>(inner: P) -> Padded<P> {
    let rounds = inner.rounds().div_ceil(5) * 5;
    Padded { inner, rounds }
}

impl<P: RoundProtocol> Padded<P> {
    fn inner_end(&self, t: &[u32]) -> usize {
        (0..=t.len()).find(|&k| self.inner.speaker(&t[..k]).is_none()).unwrap_or(t.len())
    }

    /// The inner speaker, unless the inner protocol already finished.
    fn live(&self, t: &[u32]) -> Option<Party> {
        if self.inner_end(t) < t.len() {
            return None;
        }
        self.inner.speaker(t)
    }
}

impl<P: RoundProtocol> RoundProtocol for Padded<P> {
    fn bits(&self) -> u32 {
        self.inner.bits()
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn alphabet(&self) -> u32 {
        self.inner.alphabet()
    }

    fn speaker(&self, t: &[u32]) -> Option<Party> {
        if t.len() >= self.rounds {
            return None;
        }
        self.live(t).or(Some(if t.len().is_multiple_of(2) { Party::Alice } else { Party::Bob }))
    }

    fn send(&self, p: Party, input: u64, t: &[u32]) -> u32 {
        match self.live(t) {
            Some(_) => self.inner.send(p, input, t),
            None => 0,
        }
    }

    fn output(&self, p: Party, input: u64, t: &[u32]) -> Literal {
        let k = self.inner_end(t);
        self.inner.output(p, input, &t[..k])
    }
}

/// Inputs for the attack. `quiet` speaks at most half of the opening
/// rounds of `(x0, y0)`. The other party's two inputs open identically
/// against the quiet party's first input; the quiet party's second input
/// (`x1` when Alice is quiet, `y1` when Bob is) is built from them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Confusable {
    pub quiet: Party,
    pub x0: u64,
    pub x1: u64,
    pub y0: u64,
    pub y1: u64,
}

impl Confusable {
    /// The quiet party's inputs `(a0, a1)` and the other party's `(b0, b1)`.
    fn roles(&self) -> ((u64, u64), (u64, u64)) {
        match self.quiet {
            Party::Alice => ((self.x0, self.x1), (self.y0, self.y1)),
            Party::Bob => ((self.y0, self.y1), (self.x0, self.x1)),
        }
    }

    fn pair(&self, a: u64, b: u64) -> (u64, u64) {
        match self.quiet {
            Party::Alice => (a, b),
            Party::Bob => (b, a),
        }
    }
}

fn check_shape<P: RoundProtocol + ?Sized>(p: &P) -> Result<(), AttackError> {
    check_preconditions(p.bits(), p.rounds(), p.alphabet())
}

/// Whether the attack applies to an `r`-round protocol over an alphabet of
/// size `sigma` on `n`-bit inputs.
pub fn check_preconditions(n: u32, r: usize, sigma: u32) -> Result<(), AttackError> {
    if r == 0 {
        return Err(AttackError::ZeroRounds);
    }
    if !r.is_multiple_of(5) {
        return Err(AttackError::NotMultipleOfFive { rounds: r });
    }
    if (n as f64) < r as f64 * (sigma as f64).log2() + 1.0 {
        return Err(AttackError::TooManyRounds { n, rounds: r, alphabet: sigma });
    }
    if n > 16 {
        return Err(AttackError::DomainTooLarge { n });
    }
    Ok(())
}

/// Alice's and Bob's speaking counts over the first `k` rounds.
fn counts(p: &(impl RoundProtocol + ?Sized), t: &[u32]) -> [usize; 2] {
    let mut c = [0; 2];
    for i in 0..t.len() {
        if let Some(s) = p.speaker(&t[..i]) {
            c[s.index()] += 1;
        }
    }
    c
}

/// Finds inputs for the attack. The quiet party is whoever speaks less in
/// the opening `2r/5` rounds summed over the whole domain (Alice on ties).
/// Then, scanning the quiet party's inputs in increasing order, it takes
/// the first input with two partner inputs (under which it stays quiet)
/// whose openings coincide, and builds the twin input coordinate-wise.
pub fn find_confusable_inputs<P: RoundProtocol + ?Sized>(p: &P) -> Result<Confusable, AttackError> {
    check_shape(p)?;
    let n = p.bits();
    let open = 2 * p.rounds() / 5;
    let zeros: Vec<u64> = (0..1u64 << n).filter(|&z| !parity(z)).collect();
    let ones: Vec<u64> = (0..1u64 << n).filter(|&z| parity(z)).collect();

    let mut total = [0usize; 2];
    for &x in &zeros {
        for &y in &ones {
            let c = counts(p, &transcript(p, x, y, open));
            total[0] += c[0];
            total[1] += c[1];
        }
    }
    let quiet = if total[0] <= total[1] { Party::Alice } else { Party::Bob };
    let (mine, theirs) = match quiet {
        Party::Alice => (&zeros, &ones),
        Party::Bob => (&ones, &zeros),
    };

    for &a0 in mine {
        let mut seen: HashMap<Vec<u32>, u64> = HashMap::new();
        for &b in theirs {
            let (x, y) = if quiet == Party::Alice { (a0, b) } else { (b, a0) };
            let t = transcript(p, x, y, open);
            let c = counts(p, &t);
            if c[quiet.index()] > c[quiet.other().index()] {
                continue;
            }
            if let Some(&b0) = seen.get(&t) {
                // b0 and b have equal parity, so they differ in an even number
                // of places and the twin keeps a0's parity.
                let a1 = (0..n).fold(0u64, |acc, i| {
                    let (u, v) = ((b0 >> i) & 1, (b >> i) & 1);
                    let bit = if u == v { u } else { 1 ^ ((a0 >> i) & 1) };
                    acc | bit << i
                });
                let c = match quiet {
                    Party::Alice => Confusable { quiet, x0: a0, x1: a1, y0: b0, y1: b },
                    Party::Bob => Confusable { quiet, x0: b0, x1: b, y0: a0, y1: a1 },
                };
                debug_assert!(disjoint_answers(&c, n));
                return Ok(c);
            }
            seen.insert(t, b);
        }
    }
    Err(AttackError::SearchExhausted)
}

/// Coordinates where `x` and `y` differ, i.e. the valid answers.
fn answers(x: u64, y: u64, n: u32) -> u64 {
    (x ^ y) & ((1u64 << n) - 1)
}

/// The twin input keeps the parity constraint, and changing only one
/// party's input (to or from the twin) leaves no common valid answer.
pub fn disjoint_answers(c: &Confusable, n: u32) -> bool {
    let ((a0, a1), (b0, b1)) = c.roles();
    let quiet_parity = c.quiet == Party::Bob;
    let kw = |a, b| {
        let (x, y) = c.pair(a, b);
        answers(x, y, n)
    };
    parity(a1) == quiet_parity
        && kw(a1, b0) & kw(a1, b1) == 0
        && kw(a1, b0) & kw(a0, b0) == 0
        && kw(a1, b1) & kw(a0, b1) == 0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// `T4` is empty: the quiet party is confused between the other
    /// party's two inputs.
    QuietConfused,
    /// `T4` is not empty: the other party is confused between the quiet
    /// party's two inputs.
    OtherConfused,
}

/// One of the two runs: inputs and which segments of whose rounds the
/// adversary overwrites with the matching symbols of `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunPlan {
    #[serde(serialize_with = "ser_mask")]
    pub x: u64,
    #[serde(serialize_with = "ser_mask")]
    pub y: u64,
    /// `(segment, party)` with segments numbered 1 to 4.
    pub overwrite: Vec<(usize, Party)>,
    /// Rounds of each party (Alice, Bob) falling in overwritten segments.
    pub planned: [usize; 2],
}

fn ser_mask<S: serde::Serializer>(z: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{z:b}"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackPlan {
    pub bits: u32,
    pub rounds: usize,
    #[serde(skip)]
    pub inputs: Confusable,
    pub quiet: Party,
    pub case: Case,
    /// The stitched received transcript.
    pub t: Vec<u32>,
    /// Start offset of each segment in `t`, plus the end.
    pub bounds: [usize; 5],
    /// Who speaks each round of `t`.
    pub speakers: Vec<Party>,
    pub confused: Party,
    pub runs: [RunPlan; 2],
}

impl AttackPlan {
    pub fn segment(&self, k: usize) -> &[u32] {
        &self.t[self.bounds[k - 1]..self.bounds[k]]
    }

    /// Segment (1 to 4) holding 0-based round `i`.
    fn segment_of(&self, i: usize) -> usize {
        (1..=4).find(|&k| i < self.bounds[k]).unwrap_or(4)
    }

    pub fn budget(&self) -> usize {
        self.rounds / 5
    }
}

/// Extends `t` on inputs `(x, y)` until `watch` has sent `quota` more
/// symbols, `t` reaches `limit`, or the protocol stops.
fn extend<P: RoundProtocol + ?Sized>(
    p: &P,
    t: &mut Vec<u32>,
    (x, y): (u64, u64),
    limit: usize,
    watch: Option<(Party, usize)>,
) {
    let mut sent = 0;
    while t.len() < limit {
        if matches!(watch, Some((_, q)) if sent >= q) {
            break;
        }
        let Some(s) = p.speaker(t) else { break };
        t.push(p.send(s, input_of(s, x, y), t));
        if matches!(watch, Some((w, _)) if w == s) {
            sent += 1;
        }
    }
}

pub fn build_attack<P: RoundProtocol + ?Sized>(p: &P, c: &Confusable) -> Result<AttackPlan, AttackError> {
    check_shape(p)?;
    let r = p.rounds();
    let fifth = r / 5;
    let ((a0, a1), (b0, b1)) = c.roles();
    let other = c.quiet.other();
    let mut t = Vec::with_capacity(r);
    let mut bounds = [0; 5];
    extend(p, &mut t, c.pair(a0, b0), 2 * fifth, None);
    bounds[1] = t.len();
    extend(p, &mut t, c.pair(a1, b0), r, Some((other, fifth)));
    bounds[2] = t.len();
    extend(p, &mut t, c.pair(a1, b1), r, Some((other, fifth)));
    bounds[3] = t.len();
    extend(p, &mut t, c.pair(a1, b0), r, None);
    bounds[4] = t.len();

    let speakers: Vec<Party> = (0..t.len()).map(|i| p.speaker(&t[..i]).expect("speaker while extending")).collect();
    let (q, o) = (c.quiet, other);
    let (case, confused, runs) = if bounds[4] == bounds[3] {
        (Case::QuietConfused, q, [(c.pair(a1, b0), vec![(1, q), (3, o)]), (c.pair(a1, b1), vec![(1, q), (2, o)])])
    } else {
        (
            Case::OtherConfused,
            o,
            [(c.pair(a0, b0), vec![(2, q), (3, q), (4, q), (3, o)]), (c.pair(a1, b0), vec![(1, q), (3, o)])],
        )
    };
    let planned = |ow: &[(usize, Party)]| {
        let mut k = [0; 2];
        for &(seg, who) in ow {
            k[who.index()] += (bounds[seg - 1]..bounds[seg]).filter(|&i| speakers[i] == who).count();
        }
        k
    };
    let runs = runs.map(|((x, y), overwrite)| {
        let planned = planned(&overwrite);
        RunPlan { x, y, overwrite, planned }
    });
    for run in &runs {
        for who in [Party::Alice, Party::Bob] {
            if run.planned[who.index()] > fifth {
                return Err(AttackError::OverBudget { party: who, used: run.planned[who.index()], cap: fifth });
            }
        }
    }
    Ok(AttackPlan { bits: p.bits(), rounds: r, inputs: *c, quiet: q, case, t, bounds, speakers, confused, runs })
}

struct Script<'a> {
    plan: &'a AttackPlan,
    run: &'a RunPlan,
}

impl Adversary<u32> for Script<'_> {
    fn decide(&mut self, v: &AdversaryView<'_, u32>) -> Decision<u32> {
        let i = v.round - 1;
        let seg = self.plan.segment_of(i);
        match self.plan.t.get(i) {
            Some(&s) if self.run.overwrite.contains(&(seg, v.speaker)) => Decision::Replace(s),
            _ => Decision::Keep,
        }
    }
}

/// What one party knows at the end: its input and every received symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct View {
    pub party: Party,
    pub input: String,
    pub received: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub x: String,
    pub y: String,
    pub sent: Vec<u32>,
    pub received: Vec<u32>,
    /// 1-based rounds the adversary changed.
    pub corrupted: Vec<usize>,
    /// Corruptions of Alice's and Bob's transmissions.
    pub used: [usize; 2],
    pub outputs: [Literal; 2],
    pub valid: [bool; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackReport {
    pub plan: AttackPlan,
    pub confused: Party,
    pub view: View,
    pub runs: [RunReport; 2],
    pub budget: usize,
    /// The confused party answers wrongly in at least one run.
    pub success: bool,
}

fn run_under<P: RoundProtocol + ?Sized>(p: &P, plan: &AttackPlan, run: &RunPlan) -> (RunReport, BudgetLedger) {
    let r = p.rounds();
    let mut ledger = BudgetLedger::symmetric(r, Frac::new(1, 5));
    let mut history = Vec::new();
    let mut adv = Script { plan, run };
    let mut received = Vec::new();
    while let Some(s) = p.speaker(&received) {
        let sent = p.send(s, input_of(s, run.x, run.y), &received);
        let rec = step(&mut ledger, &mut history, s, sent, (run.x, run.y), &mut adv);
        received.push(rec.received);
    }
    let n = p.bits();
    let outputs = [Party::Alice, Party::Bob].map(|who| p.output(who, input_of(who, run.x, run.y), &received));
    let report = RunReport {
        x: bitstring(run.x, n),
        y: bitstring(run.y, n),
        sent: history.iter().map(|h| h.sent).collect(),
        received,
        corrupted: history.iter().filter(|h| h.corrupted).map(|h| h.index).collect(),
        used: [ledger.used_a, ledger.used_b],
        outputs,
        valid: outputs.map(|l| separates(l, run.x, run.y)),
    };
    (report, ledger)
}

/// Runs both corrupted executions of `plan` and checks that the confused
/// party cannot tell them apart.
pub fn execute_attack<P: RoundProtocol + ?Sized>(p: &P, plan: &AttackPlan) -> Result<AttackReport, AttackError> {
    let cap = plan.budget();
    let mut reports = Vec::with_capacity(2);
    for run in &plan.runs {
        let (rep, ledger) = run_under(p, plan, run);
        if let Some(d) = ledger.downgrades.iter().find(|d| d.reason == crate::channel::DowngradeReason::BudgetExhausted)
        {
            return Err(AttackError::OverBudget { party: d.speaker, used: cap + 1, cap });
        }
        reports.push(rep);
    }
    let runs: [RunReport; 2] = reports.try_into().expect("two runs");
    let who = plan.confused;
    let views = [0, 1].map(|k| View {
        party: who,
        input: if who == Party::Alice { runs[k].x.clone() } else { runs[k].y.clone() },
        received: runs[k].received.clone(),
    });
    let bytes = views.each_ref().map(|v| serde_json::to_vec(v).expect("view serializes"));
    if bytes[0] != bytes[1] {
        return Err(AttackError::ViewMismatch { party: who });
    }
    let success = runs.iter().any(|r| !r.valid[who.index()]);
    let [view, _] = views;
    Ok(AttackReport { plan: plan.clone(), confused: who, view, runs, budget: cap, success })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attack(n: u32) -> Result<AttackReport, AttackError> {
        let p = pad_to_multiple_of_five(bisection_protocol(n));
        let c = find_confusable_inputs(&p)?;
        let plan = build_attack(&p, &c)?;
        execute_attack(&p, &plan)
    }

    #[test]
    fn bisection_solves_parity_kw() {
        for n in 1..=7u32 {
            let p = bisection_protocol(n);
            let padded = pad_to_multiple_of_five(p);
            for x in (0..1u64 << n).filter(|&z| !parity(z)) {
                for y in (0..1u64 << n).filter(|&z| parity(z)) {
                    let t = transcript(&p, x, y, usize::MAX);
                    assert!(t.len() <= p.rounds());
                    for who in [Party::Alice, Party::Bob] {
                        let l = p.output(who, input_of(who, x, y), &t);
                        assert!(separates(l, x, y), "n={n} x={x:b} y={y:b}");
                        let tp = transcript(&padded, x, y, usize::MAX);
                        assert_eq!(tp.len(), padded.rounds());
                        assert_eq!(padded.output(who, input_of(who, x, y), &tp), l);
                    }
                }
            }
        }
    }

    #[test]
    fn protocol_trees_can_be_attacked() {
        use crate::formula::parity_formula;
        use crate::kw::formula_to_protocol;
        // the KW tree of parity on 2 bits has depth 2, padded to 5 rounds
        let tree = formula_to_protocol(&parity_formula(2)).unwrap();
        let p = pad_to_multiple_of_five(&tree);
        assert_eq!(p.rounds(), 5);
        assert!(matches!(find_confusable_inputs(&p), Err(AttackError::TooManyRounds { .. })));
        for x in [0b00, 0b11] {
            for y in [0b01, 0b10] {
                let t = transcript(&tree, x, y, 2);
                assert!(separates(tree.output(Party::Alice, x, &t), x, y));
            }
        }
    }

    #[test]
    fn padding_rounds() {
        assert_eq!(bisection_protocol(12).rounds(), 8);
        assert_eq!(pad_to_multiple_of_five(bisection_protocol(12)).rounds(), 10);
        assert_eq!(pad_to_multiple_of_five(bisection_protocol(16)).rounds(), 10);
        assert_eq!(pad_to_multiple_of_five(bisection_protocol(17)).rounds(), 10);
    }

    #[test]
    fn twelve_bit_attack_confuses() {
        let rep = attack(12).unwrap();
        assert!(rep.success);
        assert!(rep.runs.iter().all(|r| r.used.iter().all(|&u| u <= 2)));
        let c = &rep.plan.inputs;
        assert!(disjoint_answers(c, 12));
        assert!(!parity(c.x0) && !parity(c.x1) && parity(c.y0) && parity(c.y1));
        assert_eq!(rep.runs[0].received, rep.plan.t);
        assert_eq!(rep.runs[1].received, rep.plan.t);
    }

    #[test]
    fn preconditions() {
        assert_eq!(attack(1).unwrap_err(), AttackError::ZeroRounds);
        assert_eq!(
            find_confusable_inputs(&bisection_protocol(12)).unwrap_err(),
            AttackError::NotMultipleOfFive { rounds: 8 }
        );
        // 8 bits cannot carry a 10-round binary protocol through the counting step
        assert!(matches!(attack(8).unwrap_err(), AttackError::TooManyRounds { .. }));
    }

    #[test]
    fn plans_stay_within_a_fifth() {
        for n in 11..=13 {
            let rep = attack(n).unwrap();
            for run in &rep.plan.runs {
                assert!(run.planned.iter().all(|&k| k <= 2));
            }
            assert!(rep.success, "n={n}");
        }
    }

    /// `lead` opens with two throwaway bits, then bisection runs.
    struct Lead(Party, Bisection);

    impl RoundProtocol for Lead {
        fn bits(&self) -> u32 {
            self.1.n
        }
        fn rounds(&self) -> usize {
            10
        }
        fn alphabet(&self) -> u32 {
            2
        }
        fn speaker(&self, t: &[u32]) -> Option<Party> {
            match t.len() {
                0 | 1 => Some(self.0),
                k if k < 10 => self.1.speaker(&t[2..]).or(Some(Party::Alice)),
                _ => None,
            }
        }
        fn send(&self, p: Party, input: u64, t: &[u32]) -> u32 {
            match t.len() {
                0 | 1 => (input >> t.len()) as u32 & 1,
                _ if self.1.speaker(&t[2..]).is_some() => self.1.send(p, input, &t[2..]),
                _ => 0,
            }
        }
        fn output(&self, p: Party, input: u64, t: &[u32]) -> Literal {
            let k = (2..=t.len()).find(|&k| self.1.speaker(&t[2..k]).is_none()).unwrap_or(t.len());
            self.1.output(p, input, &t[2..k])
        }
    }

    #[test]
    fn roles_follow_the_quiet_party() {
        for (lead, quiet) in [(Party::Alice, Party::Bob), (Party::Bob, Party::Alice)] {
            let p = Lead(lead, bisection_protocol(11));
            let c = find_confusable_inputs(&p).unwrap();
            assert_eq!(c.quiet, quiet);
            assert!(disjoint_answers(&c, 11));
            let plan = build_attack(&p, &c).unwrap();
            let rep = execute_attack(&p, &plan).unwrap();
            assert!(rep.success, "lead {lead}");
            assert!(rep.runs.iter().all(|r| r.used.iter().all(|&u| u <= 2)));
        }
    }
}
