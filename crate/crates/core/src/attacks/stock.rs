use crate::channel::{Adversary, AdversaryView, ChannelSymbol, Decision, NullAdversary, Party, RoundRecord};
use crate::coding::large::LargeSymbol;
use crate::coding::small::{SmallMsg, SmallSymbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Symbols an adversary can build on purpose, not just at random.
pub trait Forge: ChannelSymbol {
    /// A symbol from `speaker` in `round` whose link continues a chain at
    /// round `target` (one of the speaker's rounds, 0 for none) and which
    /// carries `bit`.
    fn forge(
        space: &Self::Space,
        history: &[RoundRecord<Self>],
        round: usize,
        speaker: Party,
        target: usize,
        bit: Option<bool>,
    ) -> Self;

    fn payload(&self) -> Option<bool>;
}

impl Forge for LargeSymbol {
    fn forge(_: &(), _: &[RoundRecord<Self>], _: usize, _: Party, target: usize, b: Option<bool>) -> Self {
        LargeSymbol::Msg { link: target, b }
    }

    fn payload(&self) -> Option<bool> {
        self.bit()
    }
}

impl Forge for SmallSymbol {
    fn forge(
        &c: &u32,
        history: &[RoundRecord<Self>],
        _: usize,
        speaker: Party,
        target: usize,
        b: Option<bool>,
    ) -> Self {
        let mine = |upto: usize| history.iter().filter(|r| r.speaker == speaker && r.index <= upto).count();
        let link = if target == 0 { 0 } else { (mine(usize::MAX) + 1 - mine(target)).min(c as usize) };
        SmallSymbol::std(link as u32, b)
    }

    fn payload(&self) -> Option<bool> {
        match self.msg {
            SmallMsg::Bit(b) => Some(b),
            _ => None,
        }
    }
}

/// Corrupts each round with probability `p` while budget lasts.
pub struct RandomNoise<S: ChannelSymbol> {
    pub p: f64,
    space: S::Space,
    rng: ChaCha8Rng,
}

impl<S: ChannelSymbol> RandomNoise<S> {
    pub fn new(p: f64, seed: u64, space: S::Space) -> Self {
        RandomNoise { p, space, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl<S: ChannelSymbol> Adversary<S> for RandomNoise<S> {
    fn decide(&mut self, v: &AdversaryView<'_, S>) -> Decision<S> {
        if v.remaining(v.speaker) > 0 && self.rng.gen_bool(self.p) {
            Decision::Replace(v.sent.random_other(&self.space, v.round, &mut self.rng))
        } else {
            Decision::Keep
        }
    }
}

/// Corrupts `len` consecutive transmissions of `target`, starting with its
/// first one at round `start` or later.
pub struct Burst<S: ChannelSymbol> {
    pub target: Party,
    pub start: usize,
    pub len: usize,
    space: S::Space,
    rng: ChaCha8Rng,
    done: usize,
}

impl<S: ChannelSymbol> Burst<S> {
    pub fn new(target: Party, start: usize, len: usize, seed: u64, space: S::Space) -> Self {
        Burst { target, start, len, space, rng: ChaCha8Rng::seed_from_u64(seed), done: 0 }
    }
}

impl<S: ChannelSymbol> Adversary<S> for Burst<S> {
    fn decide(&mut self, v: &AdversaryView<'_, S>) -> Decision<S> {
        if v.speaker != self.target || v.round < self.start || self.done >= self.len {
            return Decision::Keep;
        }
        self.done += 1;
        Decision::Replace(v.sent.random_other(&self.space, v.round, &mut self.rng))
    }
}

/// Grows a forged branch of each party's chain: from a seeded start round
/// on, every transmission is replaced by one that links to the previous
/// forgery (the first links to the last honest round) and carries the
/// opposite bit, until the budget runs out.
pub struct ChainForker<S: ChannelSymbol> {
    space: S::Space,
    rng: ChaCha8Rng,
    start: Option<[usize; 2]>,
    tip: [Option<usize>; 2],
}

impl<S: ChannelSymbol> ChainForker<S> {
    pub fn new(seed: u64, space: S::Space) -> Self {
        ChainForker { space, rng: ChaCha8Rng::seed_from_u64(seed), start: None, tip: [None, None] }
    }
}

impl<S: Forge> Adversary<S> for ChainForker<S> {
    fn decide(&mut self, v: &AdversaryView<'_, S>) -> Decision<S> {
        let rng = &mut self.rng;
        let start = *self.start.get_or_insert_with(|| {
            let hi = (v.n / 2).max(1);
            [rng.gen_range(1..=hi), rng.gen_range(1..=hi)]
        });
        let p = v.speaker;
        if v.round < start[p.index()] || v.remaining(p) == 0 {
            return Decision::Keep;
        }
        let target = *self.tip[p.index()].get_or_insert_with(|| {
            v.history.iter().rev().find(|r| r.speaker == p && !r.corrupted).map_or(0, |r| r.index)
        });
        let bit = match v.sent.payload() {
            Some(b) => Some(!b),
            None => Some(rng.gen()),
        };
        let forged = S::forge(&self.space, v.history, v.round, p, target, bit);
        self.tip[p.index()] = Some(v.round);
        Decision::Replace(forged)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AdversarySpec {
    Null,
    Random { p: f64, seed: u64 },
    Burst { target: Party, start: usize, len: usize, seed: u64 },
    ChainForker { seed: u64 },
}

impl AdversarySpec {
    pub fn name(&self) -> &'static str {
        match self {
            AdversarySpec::Null => "null",
            AdversarySpec::Random { .. } => "random",
            AdversarySpec::Burst { .. } => "burst",
            AdversarySpec::ChainForker { .. } => "chain_forker",
        }
    }
}

/// Adversary families used by seeded sweeps; [`AdversaryKind::spec`] draws
/// the per-trial parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Null,
    Random,
    Burst,
    ChainForker,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] =
        [AdversaryKind::Null, AdversaryKind::Random, AdversaryKind::Burst, AdversaryKind::ChainForker];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::Null => "null",
            AdversaryKind::Random => "random",
            AdversaryKind::Burst => "burst",
            AdversaryKind::ChainForker => "chain_forker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Parameters for one trial of an `n`-round run with per-party cap `cap`.
    pub fn spec(self, seed: u64, n: usize, cap: usize) -> AdversarySpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            AdversaryKind::Null => AdversarySpec::Null,
            AdversaryKind::Random => AdversarySpec::Random { p: rng.gen_range(0.05..0.6), seed: rng.gen() },
            AdversaryKind::Burst => AdversarySpec::Burst {
                target: if rng.gen() { Party::Alice } else { Party::Bob },
                start: rng.gen_range(1..=(n / 2).max(1)),
                len: cap,
                seed: rng.gen(),
            },
            AdversaryKind::ChainForker => AdversarySpec::ChainForker { seed: rng.gen() },
        }
    }
}

pub fn build_adversary<S: Forge + 'static>(spec: &AdversarySpec, space: S::Space) -> Box<dyn Adversary<S>>
where
    S::Space: 'static,
{
    match *spec {
        AdversarySpec::Null => Box::new(NullAdversary),
        AdversarySpec::Random { p, seed } => Box::new(RandomNoise::new(p, seed, space)),
        AdversarySpec::Burst { target, start, len, seed } => Box::new(Burst::new(target, start, len, seed, space)),
        AdversarySpec::ChainForker { seed } => Box::new(ChainForker::new(seed, space)),
    }
}
