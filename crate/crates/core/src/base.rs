//! Noiseless binary protocols that the coding schemes simulate.

use crate::channel::Party;
use crate::kw::{PNode, ProtocolTree};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BaseError {
    #[error("node at depth {depth} has {arity} children; base protocols are binary")]
    NotBinary { depth: usize, arity: usize },
    #[error("speakers do not alternate at depth {depth}")]
    NotAlternating { depth: usize },
    #[error("protocol has no rounds")]
    Empty,
}

/// A binary protocol given by its next-bit function.
///
/// `owner(prefix)` names who sends the bit after `prefix`, or `None` once the
/// protocol is over; `bit` is only consulted for that owner.
pub trait BaseProtocol {
    /// Longest possible transcript.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn owner(&self, prefix: &[bool]) -> Option<Party>;
    fn bit(&self, input: u64, prefix: &[bool]) -> bool;

    fn transcript(&self, x: u64, y: u64) -> Vec<bool> {
        let mut t = Vec::with_capacity(self.len());
        while let Some(p) = self.owner(&t) {
            let b = self.bit(if p == Party::Alice { x } else { y }, &t);
            t.push(b);
        }
        t
    }

    /// True when speakers strictly alternate along every transcript.
    fn is_alternating(&self) -> bool {
        fn go<B: BaseProtocol + ?Sized>(b: &B, t: &mut Vec<bool>, last: Option<Party>) -> bool {
            let Some(p) = b.owner(t) else { return true };
            if last == Some(p) {
                return false;
            }
            [false, true].into_iter().all(|bit| {
                t.push(bit);
                let ok = go(b, t, Some(p));
                t.pop();
                ok
            })
        }
        self.len() <= 20 && go(self, &mut Vec::new(), None)
    }
}

impl<B: BaseProtocol + ?Sized> BaseProtocol for &B {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn owner(&self, prefix: &[bool]) -> Option<Party> {
        (**self).owner(prefix)
    }
    fn bit(&self, input: u64, prefix: &[bool]) -> bool {
        (**self).bit(input, prefix)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Alternating protocol of fixed length, Alice first, whose bits are a
/// keyed hash of the prefix and the speaker's input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomAlternating {
    pub len: usize,
    pub seed: u64,
}

impl RandomAlternating {
    pub fn new(len: usize, seed: u64) -> Self {
        RandomAlternating { len, seed }
    }
}

impl BaseProtocol for RandomAlternating {
    fn len(&self) -> usize {
        self.len
    }

    fn owner(&self, prefix: &[bool]) -> Option<Party> {
        match prefix.len() {
            k if k >= self.len => None,
            k if k % 2 == 0 => Some(Party::Alice),
            _ => Some(Party::Bob),
        }
    }

    fn bit(&self, input: u64, prefix: &[bool]) -> bool {
        let mut h = splitmix(self.seed ^ splitmix(input));
        for (i, &b) in prefix.iter().enumerate() {
            h = splitmix(h ^ ((i as u64) << 1 | b as u64));
        }
        h & 1 == 1
    }
}

/// A binary protocol tree run as a base protocol. Wherever a party would
/// speak twice in a row, the other party first sends a dummy bit that is
/// always 0 and ignored, so the result alternates.
#[derive(Clone, Debug)]
pub struct TreeBase {
    tree: ProtocolTree,
    len: usize,
}

enum Locate<'a> {
    Done,
    Dummy(Party),
    Real(Party, &'a PNode),
}

impl TreeBase {
    pub fn new(tree: ProtocolTree) -> Result<Self, BaseError> {
        fn check(n: &PNode, depth: usize) -> Result<(), BaseError> {
            if let PNode::Internal { children, .. } = n {
                if children.len() != 2 {
                    return Err(BaseError::NotBinary { depth, arity: children.len() });
                }
                children.iter().try_for_each(|c| check(c, depth + 1))?;
            }
            Ok(())
        }
        check(&tree.root, 0)?;
        fn padded(n: &PNode, last: Option<Party>) -> usize {
            match n {
                PNode::Internal { owner, children, .. } => {
                    let extra = usize::from(last == Some(*owner));
                    extra + 1 + children.iter().map(|c| padded(c, Some(*owner))).max().unwrap_or(0)
                }
                _ => 0,
            }
        }
        let len = padded(&tree.root, None);
        if len == 0 {
            return Err(BaseError::Empty);
        }
        Ok(TreeBase { tree, len })
    }

    /// Rejects trees that would need dummy rounds.
    pub fn strict(tree: ProtocolTree) -> Result<Self, BaseError> {
        fn go(n: &PNode, last: Option<Party>, depth: usize) -> Result<(), BaseError> {
            if let PNode::Internal { owner, children, .. } = n {
                if last == Some(*owner) {
                    return Err(BaseError::NotAlternating { depth });
                }
                children.iter().try_for_each(|c| go(c, Some(*owner), depth + 1))?;
            }
            Ok(())
        }
        go(&tree.root, None, 0)?;
        Self::new(tree)
    }

    pub fn tree(&self) -> &ProtocolTree {
        &self.tree
    }

    fn locate(&self, prefix: &[bool]) -> Locate<'_> {
        let mut node = &self.tree.root;
        let mut last = None;
        let mut k = 0;
        loop {
            let PNode::Internal { owner, children, .. } = node else { return Locate::Done };
            if last == Some(*owner) {
                if k == prefix.len() {
                    return Locate::Dummy(owner.other());
                }
                k += 1;
                last = Some(owner.other());
                continue;
            }
            if k == prefix.len() {
                return Locate::Real(*owner, node);
            }
            node = &children[prefix[k] as usize];
            last = Some(*owner);
            k += 1;
        }
    }

    /// The tree leaf a (padded) transcript ends at, if it is complete.
    pub fn leaf_of(&self, transcript: &[bool]) -> Option<&PNode> {
        let mut node = &self.tree.root;
        let mut last = None;
        let mut k = 0;
        loop {
            match node {
                PNode::Internal { owner, children, .. } => {
                    if last == Some(*owner) {
                        k += 1;
                        last = Some(owner.other());
                        continue;
                    }
                    let &b = transcript.get(k)?;
                    node = &children[b as usize];
                    last = Some(*owner);
                    k += 1;
                }
                leaf => return Some(leaf),
            }
        }
    }
}

impl BaseProtocol for TreeBase {
    fn len(&self) -> usize {
        self.len
    }

    fn owner(&self, prefix: &[bool]) -> Option<Party> {
        match self.locate(prefix) {
            Locate::Done => None,
            Locate::Dummy(p) | Locate::Real(p, _) => Some(p),
        }
    }

    fn bit(&self, input: u64, prefix: &[bool]) -> bool {
        match self.locate(prefix) {
            Locate::Real(_, PNode::Internal { moves, .. }) => moves.get(&input).copied() == Some(1),
            _ => false,
        }
    }
}
