//! Chain-linking coding schemes over a channel with noiseless feedback.
//!
//! Both schemes share one skeleton: every symbol links back to the sender's
//! latest uncorrupted symbol, rounds are grouped into epochs of two or three,
//! and the simulated transcript is read off the rounds whose own and
//! preceding opposite transmissions both arrived intact. A [`Codec`] fills
//! in how symbols are built and how a chain walk steps over them.

pub mod instrument;
pub mod large;
pub mod small;

use crate::base::BaseProtocol;
use crate::channel::{self, Adversary, BudgetLedger, ChannelSymbol, Party, RoundRecord};
use crate::frac::Frac;
use serde::Serialize;
use std::fmt::Debug;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodingError {
    #[error("epsilon {eps} is outside (0, {max})")]
    BadEpsilon { eps: Frac, max: Frac },
    #[error("base protocol does not alternate")]
    NotAlternating,
    #[error("base protocol has no rounds")]
    EmptyBase,
    #[error("link alphabet size must be at least 2, got {0}")]
    BadAlphabet(u32),
}

/// `ceil(len / eps)`.
pub fn rounds_for(len: usize, eps: Frac) -> usize {
    eps.ceil_div_into(len as u64) as usize
}

pub(crate) fn check_base<B: BaseProtocol + ?Sized>(base: &B) -> Result<(), CodingError> {
    if base.len() == 0 {
        return Err(CodingError::EmptyBase);
    }
    if !base.is_alternating() {
        return Err(CodingError::NotAlternating);
    }
    Ok(())
}

/// How a chain walk treats one received symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Step {
    /// Whether the symbol's round joins the chain.
    pub include: bool,
    /// Sender position the walk moves to; 0 ends it.
    pub next: usize,
    pub bit: Option<bool>,
}

/// Everything one party sent, as received, indexed by its own positions
/// `1..=len()`.
#[derive(Clone, Debug)]
pub struct SenderLog<S> {
    rounds: Vec<usize>,
    symbols: Vec<S>,
    sent_payload: Vec<bool>,
    corrupted: Vec<bool>,
    steps: Vec<Step>,
    chain: Vec<usize>,
}

impl<S> SenderLog<S> {
    fn new() -> Self {
        SenderLog {
            rounds: Vec::new(),
            symbols: Vec::new(),
            sent_payload: Vec::new(),
            corrupted: Vec::new(),
            steps: Vec::new(),
            chain: Vec::new(),
        }
    }

    /// A log of uncorrupted symbols sent at rounds `1..=len`, so positions
    /// and rounds coincide.
    pub fn from_symbols<C: Codec<Sym = S>>(codec: &C, symbols: &[S]) -> Self
    where
        S: Clone,
    {
        let mut log = SenderLog::new();
        for (i, s) in symbols.iter().enumerate() {
            log.push(codec, i + 1, s.clone(), s, false);
        }
        log
    }

    fn push<C: Codec<Sym = S>>(&mut self, codec: &C, round: usize, received: S, sent: &S, corrupted: bool) {
        self.rounds.push(round);
        self.symbols.push(received);
        self.sent_payload.push(codec.is_payload(sent));
        self.corrupted.push(corrupted);
        let q = self.len();
        self.steps.push(Step::default());
        let mut st = codec.step(self, q);
        if st.next >= q {
            st.next = 0;
        }
        self.steps[q - 1] = st;
        let len = st.include as usize + self.chain_len(st.next);
        self.chain.push(len);
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn round(&self, q: usize) -> usize {
        self.rounds[q - 1]
    }

    pub fn symbol(&self, q: usize) -> &S {
        &self.symbols[q - 1]
    }

    pub fn step(&self, q: usize) -> Step {
        self.steps[q - 1]
    }

    pub fn corrupted(&self, q: usize) -> bool {
        self.corrupted[q - 1]
    }

    /// Position whose round is exactly `r`.
    pub fn position_of(&self, r: usize) -> Option<usize> {
        self.rounds.binary_search(&r).ok().map(|i| i + 1)
    }

    /// Last position sent in a round `<= r` (0 if none).
    pub fn last_upto(&self, r: usize) -> usize {
        self.rounds.partition_point(|&x| x <= r)
    }

    /// Number of rounds on the chain parsed from position `q`.
    pub fn chain_len(&self, q: usize) -> usize {
        if q == 0 {
            0
        } else {
            self.chain[q - 1]
        }
    }

    /// Rounds on the chain parsed from position `q`, latest first.
    pub fn parse(&self, mut q: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while q > 0 {
            let s = self.steps[q - 1];
            if s.include {
                out.push(self.rounds[q - 1]);
            }
            q = s.next;
        }
        out
    }

    /// Position maximizing the parsed chain length, latest on ties.
    pub fn longest(&self) -> usize {
        let mut best = (0, 0);
        for q in 1..=self.len() {
            if self.chain_len(q) >= best.0 {
                best = (self.chain_len(q), q);
            }
        }
        best.1
    }
}

/// Where a sender stands when composing its symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SendCtx {
    pub round: usize,
    /// Position of the symbol about to be sent.
    pub pos: usize,
    /// Latest uncorrupted own round and position (0 if none).
    pub last_good_round: usize,
    pub last_good_pos: usize,
}

/// The scheme-specific half of a chain-linking scheme.
pub trait Codec: Clone {
    type Sym: ChannelSymbol + Serialize;
    type Enc: Clone + Default + Debug;

    /// Step for the newest symbol of `log`, at position `q = log.len()`.
    /// Earlier steps are already in place.
    fn step(&self, log: &SenderLog<Self::Sym>, q: usize) -> Step;

    /// The honest symbol. `bit` yields the base-protocol bit for this turn.
    fn compose(&self, enc: &mut Self::Enc, at: &SendCtx, bit: &mut dyn FnMut() -> Option<bool>) -> Self::Sym;

    /// Feedback after the round: whether `sent` arrived corrupted.
    fn feedback(&self, _enc: &mut Self::Enc, _sent: &Self::Sym, _corrupted: bool) {}

    /// Whether an uncorrupted `sym` counts toward the sender's own good set.
    fn is_payload(&self, sym: &Self::Sym) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Epoch {
    pub start: usize,
    /// Speaker of the third round, if any.
    pub third: Option<Party>,
    pub alice_skipped: bool,
    pub bob_skipped: bool,
}

/// Epoch bookkeeping that decides who speaks.
///
/// An epoch starting at `j` gives round `j` to Alice and `j+1` to Bob. Right
/// after that, chains are compared with `floor(n/5)`: a party whose chain is
/// that short bumps its skip counter, and if exactly one party is short the
/// other party also speaks round `j+2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schedule {
    thr: usize,
    j: usize,
    pending: Option<Option<Party>>,
    pub skip_a: usize,
    pub skip_b: usize,
    pub epochs: Vec<Epoch>,
}

impl Schedule {
    pub fn new(n: usize) -> Self {
        Schedule { thr: n / 5, j: 1, pending: None, skip_a: 0, skip_b: 0, epochs: Vec::new() }
    }

    pub fn threshold(&self) -> usize {
        self.thr
    }

    /// Speaker of round `i`. Calls must ask for rounds in increasing order;
    /// `chains(l)` returns the (Alice, Bob) chain lengths after `l` rounds.
    pub fn speaker(&mut self, i: usize, chains: impl Fn(usize) -> (usize, usize)) -> Party {
        loop {
            if i == self.j {
                return Party::Alice;
            }
            if i == self.j + 1 {
                return Party::Bob;
            }
            let third = match self.pending {
                Some(t) => t,
                None => {
                    let (ca, cb) = chains(self.j + 1);
                    let (a_short, b_short) = (ca <= self.thr, cb <= self.thr);
                    self.skip_a += a_short as usize;
                    self.skip_b += b_short as usize;
                    let third = match (a_short, b_short) {
                        (true, false) => Some(Party::Bob),
                        (false, true) => Some(Party::Alice),
                        _ => None,
                    };
                    self.epochs.push(Epoch { start: self.j, third, alice_skipped: a_short, bob_skipped: b_short });
                    self.pending = Some(third);
                    third
                }
            };
            match third {
                Some(p) if i == self.j + 2 => return p,
                Some(_) => self.j += 3,
                None => self.j += 2,
            }
            self.pending = None;
        }
    }
}

/// Replays the schedule from round 1 up to round `i`.
pub fn replay_schedule(n: usize, i: usize, chains: impl Fn(usize) -> (usize, usize)) -> (Party, usize, usize) {
    let mut s = Schedule::new(n);
    let p = s.speaker(i, chains);
    (p, s.skip_a, s.skip_b)
}

/// What `TempTranscript` sees.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Temp {
    pub good: Vec<usize>,
    pub bits: Vec<bool>,
}

/// A party's final output and the prefixes it was read from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Output {
    /// Round bounding the party's own chain prefix.
    pub own_round: usize,
    /// Position bounding the other party's chain.
    pub other_pos: usize,
    pub transcript: Vec<bool>,
}

/// The shared view of a run: both parties agree on all of it thanks to the
/// feedback, so one copy serves both sides.
#[derive(Clone, Debug)]
pub struct ChainState<C: Codec> {
    pub n: usize,
    pub records: Vec<RoundRecord<C::Sym>>,
    logs: [SenderLog<C::Sym>; 2],
    /// Per round: (speaker, position).
    at: Vec<(Party, usize)>,
    prev_other: Vec<usize>,
    /// Index `l`: chain lengths after `l` rounds.
    chain_hist: Vec<(usize, usize)>,
    /// Per round: skip counters when that round's speaker was chosen.
    skip_hist: Vec<(usize, usize)>,
    last_round: [usize; 2],
    pub schedule: Schedule,
}

impl<C: Codec> ChainState<C> {
    pub fn new(n: usize) -> Self {
        ChainState {
            n,
            records: Vec::with_capacity(n),
            logs: [SenderLog::new(), SenderLog::new()],
            at: Vec::with_capacity(n),
            prev_other: Vec::with_capacity(n),
            chain_hist: vec![(0, 0)],
            skip_hist: Vec::with_capacity(n),
            last_round: [0, 0],
            schedule: Schedule::new(n),
        }
    }

    pub fn log(&self, p: Party) -> &SenderLog<C::Sym> {
        &self.logs[p.index()]
    }

    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    pub fn at(&self, r: usize) -> (Party, usize) {
        self.at[r - 1]
    }

    /// `Prev(r)`: latest earlier round of the other speaker, 0 if none.
    pub fn prev_other(&self, r: usize) -> usize {
        self.prev_other[r - 1]
    }

    pub fn chains_after(&self, l: usize) -> (usize, usize) {
        self.chain_hist[l]
    }

    pub fn skips_at(&self, r: usize) -> (usize, usize) {
        self.skip_hist[r - 1]
    }

    pub fn step_of(&self, r: usize) -> Step {
        let (p, q) = self.at(r);
        self.log(p).step(q)
    }

    /// Chooses the speaker of the next round.
    pub fn next_speaker(&mut self) -> Party {
        let i = self.records.len() + 1;
        let hist = &self.chain_hist;
        let p = self.schedule.speaker(i, |l| hist[l]);
        self.skip_hist.push((self.schedule.skip_a, self.schedule.skip_b));
        p
    }

    /// Settles the skip counters after the last round.
    pub fn finish(&mut self) {
        let i = self.records.len() + 1;
        let hist = &self.chain_hist;
        self.schedule.speaker(i, |l| hist[l]);
    }

    /// Indexes the newest record.
    pub fn absorb(&mut self, codec: &C) {
        let rec = self.records.last().expect("absorb after a round");
        let (r, s) = (rec.index, rec.speaker);
        let log = &mut self.logs[s.index()];
        log.push(codec, r, rec.received.clone(), &rec.sent, rec.corrupted);
        let q = log.len();
        self.at.push((s, q));
        self.prev_other.push(self.last_round[s.other().index()]);
        self.last_round[s.index()] = r;
        let a = &self.logs[0];
        let b = &self.logs[1];
        self.chain_hist.push((a.chain_len(a.len()), b.chain_len(b.len())));
    }

    /// `TempTranscript` for `p`, using its own rounds up to `own_upto` and
    /// the other party's chain parsed from position `other_pos`.
    pub fn temp_transcript(&self, p: Party, own_upto: usize, other_pos: usize) -> Temp {
        let rounds = self.records.len();
        let mut in_u = vec![false; rounds + 1];
        let own = self.log(p);
        for q in 1..=own.last_upto(own_upto) {
            if !own.corrupted[q - 1] && own.sent_payload[q - 1] {
                in_u[own.rounds[q - 1]] = true;
            }
        }
        let other = self.log(p.other());
        let mut q = other_pos;
        while q > 0 {
            let s = other.steps[q - 1];
            if s.include {
                in_u[other.rounds[q - 1]] = true;
            }
            q = s.next;
        }
        let mut t = Temp::default();
        for r in 1..=rounds {
            let prev = self.prev_other[r - 1];
            if in_u[r] && (prev == 0 || in_u[prev]) {
                t.good.push(r);
                if let Some(b) = self.step_of(r).bit {
                    t.bits.push(b);
                }
            }
        }
        t
    }

    /// What `p` outputs at the end: both chains cut at their longest prefix.
    pub fn output(&self, p: Party) -> Output {
        let own = self.log(p);
        let q = own.longest();
        let own_round = if q == 0 { 0 } else { own.round(q) };
        let other_pos = self.log(p.other()).longest();
        let transcript = self.temp_transcript(p, own_round, other_pos).bits;
        Output { own_round, other_pos, transcript }
    }
}

/// A finished run of a chain-linking scheme.
#[derive(Clone, Debug)]
pub struct SchemeRun<C: Codec> {
    pub x: u64,
    pub y: u64,
    pub eps: Frac,
    /// Noiseless base transcript.
    pub expected: Vec<bool>,
    pub state: ChainState<C>,
    pub ledger: BudgetLedger,
    pub outputs: [Output; 2],
}

impl<C: Codec> SchemeRun<C> {
    pub fn n(&self) -> usize {
        self.state.n
    }

    pub fn output(&self, p: Party) -> &[bool] {
        &self.outputs[p.index()].transcript
    }

    /// Both outputs start with the noiseless transcript.
    pub fn correct(&self) -> bool {
        self.outputs.iter().all(|o| o.transcript.starts_with(&self.expected))
    }

    pub fn corruptions(&self) -> usize {
        self.ledger.used_a + self.ledger.used_b
    }
}

/// Drives a run one round at a time. The caller decides what is received,
/// which lets tree searches explore every continuation.
#[derive(Clone, Debug)]
pub struct Stepper<C: Codec> {
    pub state: ChainState<C>,
    enc: [C::Enc; 2],
    last_good: [(usize, usize); 2],
    pending: Option<Party>,
}

impl<C: Codec> Stepper<C> {
    pub fn new(n: usize) -> Self {
        Stepper {
            state: ChainState::new(n),
            enc: [C::Enc::default(), C::Enc::default()],
            last_good: [(0, 0); 2],
            pending: None,
        }
    }

    pub fn done(&self) -> bool {
        self.state.rounds() >= self.state.n
    }

    /// Speaker of the next round; stable until [`Stepper::commit`].
    pub fn speaker(&mut self) -> Party {
        if let Some(p) = self.pending {
            return p;
        }
        let p = self.state.next_speaker();
        self.pending = Some(p);
        p
    }

    /// The base-protocol prefix `p` acts on in the next round.
    pub fn base_prefix(&self, p: Party) -> Vec<bool> {
        let st = &self.state;
        st.temp_transcript(p, st.rounds(), st.log(p.other()).len()).bits
    }

    /// What `p` sends next given its next base bit (`None` when it is not
    /// `p`'s turn in the base protocol), with the encoder state after it.
    pub fn compose(&self, codec: &C, p: Party, bit: &mut dyn FnMut() -> Option<bool>) -> (C::Sym, C::Enc) {
        let st = &self.state;
        let pos = st.log(p).len() + 1;
        let (lr, lp) = self.last_good[p.index()];
        let ctx = SendCtx { round: st.rounds() + 1, pos, last_good_round: lr, last_good_pos: lp };
        let mut enc = self.enc[p.index()].clone();
        let sent = codec.compose(&mut enc, &ctx, bit);
        (sent, enc)
    }

    /// Records a finished round whose symbol came from [`Stepper::compose`].
    pub fn commit(&mut self, codec: &C, enc: C::Enc, rec: RoundRecord<C::Sym>) {
        let p = self.pending.take().expect("speaker chosen before commit");
        debug_assert_eq!(p, rec.speaker);
        let e = &mut self.enc[p.index()];
        *e = enc;
        codec.feedback(e, &rec.sent, rec.corrupted);
        if !rec.corrupted {
            self.last_good[p.index()] = (rec.index, self.state.log(p).len() + 1);
        }
        if self.state.records.len() < rec.index {
            self.state.records.push(rec);
        }
        self.state.absorb(codec);
    }

    pub fn finish(mut self) -> ChainState<C> {
        self.state.finish();
        self.state
    }
}

/// Runs `n` rounds of the scheme on inputs `(x, y)`.
#[allow(clippy::too_many_arguments)]
pub fn run_scheme<C: Codec, B: BaseProtocol + ?Sized>(
    codec: &C,
    base: &B,
    eps: Frac,
    n: usize,
    x: u64,
    y: u64,
    mut ledger: BudgetLedger,
    adversary: &mut dyn Adversary<C::Sym>,
) -> SchemeRun<C> {
    let mut s = Stepper::<C>::new(n);
    while !s.done() {
        let p = s.speaker();
        let t = s.base_prefix(p);
        let input = if p == Party::Alice { x } else { y };
        let mut bit = || match base.owner(&t) {
            Some(o) if o == p => Some(base.bit(input, &t)),
            _ => None,
        };
        let (sent, enc) = s.compose(codec, p, &mut bit);
        let rec = channel::step(&mut ledger, &mut s.state.records, p, sent, (x, y), adversary);
        s.commit(codec, enc, rec);
    }
    let st = s.finish();
    let outputs = [st.output(Party::Alice), st.output(Party::Bob)];
    SchemeRun { x, y, eps, expected: base.transcript(x, y), state: st, ledger, outputs }
}
