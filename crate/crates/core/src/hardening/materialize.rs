//! Reading a formula off the reachable part of a protocol tree.

use super::reach::{Phi, SchemeBranch, SchemeModel, TreeBranch, TreeModel};
use crate::base::TreeBase;
use crate::channel::Party;
use crate::coding::Codec;
use crate::formula::{Formula, FormulaError, Literal, Node, NodePath};
use crate::kw::{kind_of, PNode, ProtocolTree};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MaterializeError {
    #[error("reachable leaf at `{0}` carries no literal")]
    Unlabeled(NodePath),
    #[error("reachable leaf at depth {depth} decodes to {} different literals", .literals.len())]
    AmbiguousLeaf { depth: usize, literals: Vec<Literal> },
    #[error("reachable leaf at depth {depth} decodes to no complete base transcript")]
    Undecoded { depth: usize },
    #[error("estimated workload {estimate} exceeds the cap of {cap}")]
    CapExceeded { estimate: u128, cap: u128 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Builds the formula of the Reach-positive subtree: Alice nodes become AND
/// gates, Bob nodes OR gates. With `complete`, each pruned child slot is
/// filled with a copy of the first kept sibling so the gate keeps its
/// fan-in; otherwise gates shrink to their reachable children.
pub fn materialize_tree(tree: &ProtocolTree, phi: &dyn Phi, complete: bool) -> Result<Formula, MaterializeError> {
    let model = TreeModel::new(tree);
    fn go(
        model: &TreeModel<'_>,
        phi: &dyn Phi,
        complete: bool,
        node: &PNode,
        branches: &[TreeBranch],
        path: &mut Vec<u16>,
    ) -> Result<Node, MaterializeError> {
        match node {
            PNode::Leaf(l) => Ok(Node::Leaf(*l)),
            PNode::Unlabeled => Err(MaterializeError::Unlabeled(NodePath(path.clone()))),
            PNode::Internal { owner, children, .. } => {
                let mut kept: Vec<Option<Node>> = Vec::with_capacity(children.len());
                for (c, child) in children.iter().enumerate() {
                    let next = model.advance(phi, node, branches, c);
                    if next.is_empty() {
                        kept.push(None);
                        continue;
                    }
                    path.push(c as u16);
                    kept.push(Some(go(model, phi, complete, child, &next, path)?));
                    path.pop();
                }
                Ok(Node::Gate { kind: kind_of(*owner), children: fill(kept, complete) })
            }
        }
    }
    let root = go(&model, phi, complete, &tree.root, &model.root(), &mut Vec::new())?;
    Ok(Formula::new(root, tree.n_vars)?)
}

fn fill(kept: Vec<Option<Node>>, complete: bool) -> Vec<Node> {
    if !complete {
        return kept.into_iter().flatten().collect();
    }
    let Some(first) = kept.iter().flatten().next().cloned() else { return Vec::new() };
    kept.into_iter().map(|k| k.unwrap_or_else(|| first.clone())).collect()
}

/// Node count of the Reach-positive subtree, stopping once it passes `cap`.
pub fn reachable_count(tree: &ProtocolTree, phi: &dyn Phi, cap: u128) -> u128 {
    let model = TreeModel::new(tree);
    let mut count = 0u128;
    let mut stack = vec![(&tree.root, model.root())];
    while let Some((node, branches)) = stack.pop() {
        count += 1;
        if count > cap {
            break;
        }
        for (c, child) in node.children().iter().enumerate() {
            let next = model.advance(phi, node, &branches, c);
            if !next.is_empty() {
                stack.push((child, next));
            }
        }
    }
    count
}

/// Builds the formula of a coding scheme's reachable tree by trying every
/// alphabet symbol at every reachable node. Leaves are labelled with the
/// literal of the base leaf both parties decode; all explanations of a leaf
/// must agree on it. Pruned slots are never duplicated here, since that
/// would multiply the size by the alphabet at every level.
pub fn materialize_scheme<C: Codec>(
    model: &SchemeModel<'_, C, TreeBase>,
    phi: &dyn Phi,
    alphabet: &[C::Sym],
) -> Result<Formula, MaterializeError>
where
    C::Sym: Eq,
{
    fn go<C: Codec>(
        model: &SchemeModel<'_, C, TreeBase>,
        phi: &dyn Phi,
        alphabet: &[C::Sym],
        branches: Vec<SchemeBranch<C>>,
        depth: usize,
    ) -> Result<Node, MaterializeError>
    where
        C::Sym: Eq,
    {
        if depth == model.n {
            return leaf(model, &branches, depth);
        }
        let mut st = branches[0].state.clone();
        let owner = st.speaker();
        let mut children = Vec::new();
        let honest = model.honest_symbols(phi, &branches);
        for sym in alphabet.iter().filter(|s| honest.as_ref().is_none_or(|h| h.contains(s))) {
            let next = model.advance(phi, &branches, sym);
            if !next.is_empty() {
                children.push(go(model, phi, alphabet, next, depth + 1)?);
            }
        }
        Ok(Node::Gate { kind: kind_of(owner), children })
    }
    fn leaf<C: Codec>(
        model: &SchemeModel<'_, C, TreeBase>,
        branches: &[SchemeBranch<C>],
        depth: usize,
    ) -> Result<Node, MaterializeError> {
        let mut literals = BTreeSet::new();
        for b in branches {
            let st = b.state.clone().finish();
            for p in [Party::Alice, Party::Bob] {
                match model.base.leaf_of(&st.output(p).transcript) {
                    Some(PNode::Leaf(l)) => {
                        literals.insert(*l);
                    }
                    _ => return Err(MaterializeError::Undecoded { depth }),
                }
            }
        }
        match literals.len() {
            1 => Ok(Node::Leaf(*literals.first().expect("one literal"))),
            _ => Err(MaterializeError::AmbiguousLeaf { depth, literals: literals.into_iter().collect() }),
        }
    }
    let root = go(model, phi, alphabet, model.root(), 0)?;
    Ok(Formula::new(root, model.base.tree().n_vars)?)
}
