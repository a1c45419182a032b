//! The constant-alphabet scheme. Links are offsets in the sender's own
//! message sequence, at most `C`; a longer link is spelled out in base `C`
//! over several fragment symbols (start, cont..., stop) before the sender
//! resumes normal symbols.

use super::large::{LargeScheme, LargeSymbol};
use super::{check_base, rounds_for, run_scheme, Codec, CodingError, SchemeRun, SendCtx, SenderLog, Step, Stepper};
use crate::base::BaseProtocol;
use crate::channel::{Adversary, BudgetLedger, ChannelSymbol, Party, RoundRecord};
use crate::frac::Frac;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Std,
    Start,
    Stop,
    Cont,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallMsg {
    Digit(u32),
    Bit(bool),
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmallSymbol {
    pub link: u32,
    #[serde(rename = "type")]
    pub kind: Kind,
    pub msg: SmallMsg,
}

impl SmallSymbol {
    pub fn std(link: u32, bit: Option<bool>) -> Self {
        SmallSymbol { link, kind: Kind::Std, msg: bit.map_or(SmallMsg::Empty, SmallMsg::Bit) }
    }

    pub fn fragment(kind: Kind, link: u32, digit: u32) -> Self {
        SmallSymbol { link, kind, msg: SmallMsg::Digit(digit) }
    }
}

const KINDS: [Kind; 4] = [Kind::Std, Kind::Start, Kind::Stop, Kind::Cont];

impl ChannelSymbol for SmallSymbol {
    /// The link bound `C`.
    type Space = u32;

    fn random_other(&self, &c: &u32, _round: usize, rng: &mut ChaCha8Rng) -> Self {
        loop {
            let msg = match rng.gen_range(0..3) {
                0 => SmallMsg::Digit(rng.gen_range(0..c)),
                1 => SmallMsg::Bit(rng.gen()),
                _ => SmallMsg::Empty,
            };
            let s = SmallSymbol { link: rng.gen_range(0..=c), kind: KINDS[rng.gen_range(0..4)], msg };
            if s != *self {
                return s;
            }
        }
    }
}

/// Base-`c` digits of `v`, most significant first.
pub fn digits(mut v: usize, c: u32) -> Vec<u32> {
    let mut d = Vec::new();
    loop {
        d.push((v % c as usize) as u32);
        v /= c as usize;
        if v == 0 {
            break;
        }
    }
    d.reverse();
    d
}

/// Fragments still to be sent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Encoder {
    /// Top of the stack is the last element.
    pub stack: Vec<(Kind, u32)>,
    /// How many encodings were started.
    pub pushes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SmallScheme {
    pub c: u32,
}

impl SmallScheme {
    /// `C = 2^ceil(log2(1/eps))`.
    pub fn for_epsilon(eps: Frac) -> Self {
        let mut c = 1u32;
        while (c as u64) * eps.numer() < eps.denom() {
            c *= 2;
        }
        SmallScheme { c: c.max(2) }
    }

    /// Any `C >= 2`; small values force encodings in short runs.
    pub fn with_c(c: u32) -> Result<Self, CodingError> {
        if c < 2 {
            return Err(CodingError::BadAlphabet(c));
        }
        Ok(SmallScheme { c })
    }

    /// `(C+1) * 4 * (C+3)`.
    pub fn alphabet_size(&self) -> u64 {
        (self.c as u64 + 1) * 4 * (self.c as u64 + 3)
    }

    /// Every symbol, in a fixed order.
    pub fn alphabet(&self) -> Vec<SmallSymbol> {
        let msgs: Vec<SmallMsg> = (0..self.c)
            .map(SmallMsg::Digit)
            .chain([SmallMsg::Bit(false), SmallMsg::Bit(true), SmallMsg::Empty])
            .collect();
        let mut v = Vec::with_capacity(self.alphabet_size() as usize);
        for link in 0..=self.c {
            for kind in KINDS {
                v.extend(msgs.iter().map(|&msg| SmallSymbol { link, kind, msg }));
            }
        }
        v
    }

    fn digit(&self, m: SmallMsg) -> Option<usize> {
        match m {
            SmallMsg::Digit(d) if d < self.c => Some(d as usize),
            _ => None,
        }
    }

    /// Decodes the encoding ending at the stop fragment `q`: the start
    /// position and the gap.
    fn decode(&self, log: &SenderLog<SmallSymbol>, q: usize) -> Option<(usize, usize)> {
        let s = log.symbol(q);
        if s.kind != Kind::Stop {
            return None;
        }
        let mut ds = vec![self.digit(s.msg)?];
        let mut prev = q;
        let mut j = q.checked_sub(s.link as usize)?;
        loop {
            if j == 0 || j >= prev {
                return None;
            }
            let m = log.symbol(j);
            match m.kind {
                Kind::Cont => {
                    ds.push(self.digit(m.msg)?);
                    prev = j;
                    j = j.checked_sub(m.link as usize)?;
                }
                Kind::Start => {
                    ds.push(self.digit(m.msg)?);
                    let gap =
                        ds.iter().rev().try_fold(0usize, |acc, &d| acc.checked_mul(self.c as usize)?.checked_add(d))?;
                    return Some((j, gap));
                }
                Kind::Stop => {
                    // an inner encoding: jump to where it lands
                    prev = j;
                    j = log.step(j).next;
                }
                Kind::Std => return None,
            }
        }
    }

    /// Where the walk resumes after the stop fragment `q`.
    fn landing(&self, log: &SenderLog<SmallSymbol>, q: usize) -> Option<usize> {
        let (start, gap) = self.decode(log, q)?;
        start.checked_sub(gap).filter(|&l| gap > 0 && l > 0)
    }
}

impl Codec for SmallScheme {
    type Sym = SmallSymbol;
    type Enc = Encoder;

    fn step(&self, log: &SenderLog<SmallSymbol>, q: usize) -> Step {
        let s = log.symbol(q);
        match s.kind {
            Kind::Std => {
                let link = s.link as usize;
                Step {
                    include: true,
                    next: if link > 0 && link < q { q - link } else { 0 },
                    bit: match s.msg {
                        SmallMsg::Bit(b) => Some(b),
                        _ => None,
                    },
                }
            }
            Kind::Stop => Step { include: false, next: self.landing(log, q).unwrap_or(0), bit: None },
            Kind::Start | Kind::Cont => Step::default(),
        }
    }

    fn compose(&self, enc: &mut Encoder, at: &SendCtx, bit: &mut dyn FnMut() -> Option<bool>) -> SmallSymbol {
        let offset = if at.last_good_pos == 0 { 0 } else { at.pos - at.last_good_pos };
        let top_is_start = matches!(enc.stack.last(), Some((Kind::Start, _)));
        if offset > self.c as usize && !top_is_start {
            let ds = digits(offset, self.c);
            let last = ds.len() - 1;
            for (i, &d) in ds.iter().enumerate().rev() {
                let kind = match i {
                    0 => Kind::Start,
                    i if i == last => Kind::Stop,
                    _ => Kind::Cont,
                };
                enc.stack.push((kind, d));
            }
            enc.pushes += 1;
        }
        match enc.stack.pop() {
            None => SmallSymbol::std(offset as u32, bit()),
            Some((Kind::Start, d)) => SmallSymbol::fragment(Kind::Start, 0, d),
            Some((kind, d)) => SmallSymbol::fragment(kind, offset as u32, d),
        }
    }

    fn feedback(&self, enc: &mut Encoder, sent: &SmallSymbol, corrupted: bool) {
        if !corrupted {
            return;
        }
        match (sent.kind, sent.msg) {
            // the gap is stale now; drop this encoding and let the next turn
            // start a fresh one
            (Kind::Start, _) => {
                while let Some((k, _)) = enc.stack.pop() {
                    if k == Kind::Stop {
                        break;
                    }
                }
            }
            (Kind::Cont | Kind::Stop, SmallMsg::Digit(d)) => enc.stack.push((sent.kind, d)),
            _ => {}
        }
    }

    fn is_payload(&self, s: &SmallSymbol) -> bool {
        s.kind == Kind::Std
    }
}

/// Gap decoded from the encoding that ends with the last message, or 0 when
/// the messages do not end in a well-formed encoding. Message `i` sits at
/// position `i`.
pub fn effective_address(messages: &[SmallSymbol], c: u32) -> usize {
    let scheme = SmallScheme { c };
    if messages.is_empty() {
        return 0;
    }
    let log = SenderLog::from_symbols(&scheme, messages);
    scheme.decode(&log, messages.len()).map_or(0, |(_, gap)| gap)
}

/// Positions on the chain ending at the last message, in increasing order.
pub fn parse_chain_small(messages: &[SmallSymbol], c: u32) -> Vec<usize> {
    let log = SenderLog::from_symbols(&SmallScheme { c }, messages);
    let mut out = log.parse(messages.len());
    out.reverse();
    out
}

pub type SmallRun = SchemeRun<SmallScheme>;

/// Runs the scheme with `C` derived from `eps` and budget `1/5 - 2 eps`.
pub fn simulate_small<B: BaseProtocol + ?Sized>(
    base: &B,
    eps: Frac,
    x: u64,
    y: u64,
    adversary: &mut dyn Adversary<SmallSymbol>,
) -> Result<SmallRun, CodingError> {
    simulate_small_with(SmallScheme::for_epsilon(eps), base, eps, x, y, adversary)
}

pub fn small_rate(eps: Frac) -> Result<Frac, CodingError> {
    let max = Frac::new(1, 10);
    if eps == Frac::ZERO || eps >= max {
        return Err(CodingError::BadEpsilon { eps, max });
    }
    Ok(eps.fifth_minus(2).expect("eps < 1/10"))
}

pub fn simulate_small_with<B: BaseProtocol + ?Sized>(
    scheme: SmallScheme,
    base: &B,
    eps: Frac,
    x: u64,
    y: u64,
    adversary: &mut dyn Adversary<SmallSymbol>,
) -> Result<SmallRun, CodingError> {
    check_base(base)?;
    let rate = small_rate(eps)?;
    let n = rounds_for(base.len(), eps);
    Ok(run_scheme(&scheme, base, eps, n, x, y, BudgetLedger::symmetric(n, rate), adversary))
}

/// Uncorrupted fragment rounds: the rounds spent on encodings.
pub fn fragment_rounds(run: &SmallRun) -> usize {
    run.state.records.iter().filter(|r| !r.corrupted && r.sent.kind != Kind::Std).count()
}

/// Rewrites the received symbols as large-alphabet symbols with the same
/// chain structure: normal symbols keep their bit and get absolute links
/// (followed through any encodings they land on), and fragments become
/// [`LargeSymbol::Erased`] rounds.
pub fn to_large_instance(run: &SmallRun) -> Vec<LargeSymbol> {
    let st = &run.state;
    let resolve = |log: &SenderLog<SmallSymbol>, mut t: usize| loop {
        if t == 0 {
            return 0;
        }
        match log.symbol(t).kind {
            Kind::Std => return log.round(t),
            Kind::Stop => t = log.step(t).next,
            Kind::Start | Kind::Cont => return 0,
        }
    };
    (1..=st.rounds())
        .map(|r| {
            let (p, q) = st.at(r);
            let log = st.log(p);
            let step = log.step(q);
            match log.symbol(q).kind {
                Kind::Std => LargeSymbol::Msg { link: resolve(log, step.next), b: step.bit },
                Kind::Stop => LargeSymbol::Erased { link: resolve(log, step.next) },
                Kind::Start | Kind::Cont => LargeSymbol::Erased { link: 0 },
            }
        })
        .collect()
}

/// The small run rewritten and replayed as a large-alphabet run.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// The large-alphabet run whose received symbols are the rewritten
    /// ones. A round is corrupted when the rewritten symbol differs from
    /// what the honest large-alphabet sender would send, or when the small
    /// round was corrupted: senders learn of corruptions through feedback,
    /// so the large sender must skip exactly the rounds the small one skips.
    pub large: SchemeRun<LargeScheme>,
    /// Per-party budget `floor((1/5 - eps) n)` the large run must respect.
    pub large_cap: usize,
    pub speaker_mismatch: Option<usize>,
    /// First round after which some party's parsed chain differs.
    pub parse_mismatch: Option<usize>,
    /// Corrupted small rounds whose rewrite is what the honest large sender
    /// would have sent anyway; they stay corrupted in the large run.
    pub absorbed: usize,
    pub fragments: usize,
    /// `floor(eps * n)`.
    pub fragment_cap: usize,
}

impl Reduction {
    pub fn within_budget(&self) -> bool {
        self.large.ledger.used_a <= self.large_cap && self.large.ledger.used_b <= self.large_cap
    }

    pub fn ok(&self) -> bool {
        self.speaker_mismatch.is_none()
            && self.parse_mismatch.is_none()
            && self.within_budget()
            && self.fragments <= self.fragment_cap
    }
}

pub fn check_reduction<B: BaseProtocol + ?Sized>(run: &SmallRun, base: &B) -> Reduction {
    let n = run.n();
    let script = to_large_instance(run);
    let mut st = Stepper::<LargeScheme>::new(n);
    let mut ledger = BudgetLedger::symmetric(n, Frac::ONE);
    let mut absorbed = 0;
    while !st.done() {
        let p = st.speaker();
        let r = st.state.rounds() + 1;
        let t = st.base_prefix(p);
        let input = if p == Party::Alice { run.x } else { run.y };
        let mut bit = || match base.owner(&t) {
            Some(o) if o == p => Some(base.bit(input, &t)),
            _ => None,
        };
        let (sent, enc) = st.compose(&LargeScheme, p, &mut bit);
        let received = script[r - 1];
        let small_corrupted = run.state.records[r - 1].corrupted;
        absorbed += usize::from(small_corrupted && received == sent);
        let corrupted = small_corrupted || received != sent;
        if corrupted {
            match p {
                Party::Alice => ledger.used_a += 1,
                Party::Bob => ledger.used_b += 1,
            }
        }
        st.commit(&LargeScheme, enc, RoundRecord { index: r, speaker: p, sent, received, corrupted });
    }
    let state = st.finish();
    let outputs = [state.output(Party::Alice), state.output(Party::Bob)];
    let large =
        SchemeRun { x: run.x, y: run.y, eps: run.eps, expected: base.transcript(run.x, run.y), state, ledger, outputs };
    let (s, l) = (&run.state, &large.state);
    let speaker_mismatch = (1..=n).find(|&r| s.records[r - 1].speaker != l.records[r - 1].speaker);
    let parse_mismatch = (1..=n).find(|&r| {
        [Party::Alice, Party::Bob].into_iter().any(|p| {
            let (a, b) = (s.log(p), l.log(p));
            a.parse(a.last_upto(r)) != b.parse(b.last_upto(r))
        })
    });
    Reduction {
        large_cap: run.eps.fifth_minus(1).expect("eps < 1/5").floor_mul(n as u64) as usize,
        speaker_mismatch,
        parse_mismatch,
        absorbed,
        fragments: fragment_rounds(run),
        fragment_cap: run.eps.floor_mul(n as u64) as usize,
        large,
    }
}
