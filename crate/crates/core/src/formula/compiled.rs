use super::{Formula, FormulaError, GateKind, Literal, Node, NodePath, ShortCircuitPattern, TruthTable};

/// Flat preorder form of a formula used by the exhaustive checkers.
///
/// Gates get dense indices `0..gates()` in preorder; a dense pattern is a
/// slice with one byte per gate, `0` for Star and `i + 1` for `Child(i)`.
#[derive(Clone, Debug)]
pub struct Compiled {
    n_vars: u32,
    nodes: Vec<CNode>,
    gate_nodes: Vec<usize>,
    gate_paths: Vec<NodePath>,
    /// Dense gate index of the nearest gate ancestor, `usize::MAX` at the root.
    gate_parent: Vec<usize>,
    depth: usize,
}

#[derive(Clone, Debug)]
enum CNode {
    Leaf(Literal),
    Gate { kind: GateKind, children: Vec<usize>, gate: usize },
}

impl Compiled {
    pub fn new(f: &Formula) -> Self {
        let mut c = Compiled {
            n_vars: f.n_vars(),
            nodes: Vec::with_capacity(f.size()),
            gate_nodes: Vec::new(),
            gate_paths: Vec::new(),
            gate_parent: Vec::new(),
            depth: f.depth(),
        };
        c.push(f.root(), &mut Vec::new(), usize::MAX);
        c
    }

    fn push(&mut self, node: &Node, path: &mut Vec<u16>, parent_gate: usize) -> usize {
        let idx = self.nodes.len();
        match node {
            Node::Leaf(l) => self.nodes.push(CNode::Leaf(*l)),
            Node::Gate { kind, children } => {
                let gate = self.gate_nodes.len();
                self.gate_nodes.push(idx);
                self.gate_paths.push(NodePath(path.clone()));
                self.gate_parent.push(parent_gate);
                self.nodes.push(CNode::Gate { kind: *kind, children: Vec::new(), gate });
                let mut kids = Vec::with_capacity(children.len());
                for (i, ch) in children.iter().enumerate() {
                    path.push(i as u16);
                    kids.push(self.push(ch, path, gate));
                    path.pop();
                }
                if let CNode::Gate { children, .. } = &mut self.nodes[idx] {
                    *children = kids;
                }
            }
        }
        idx
    }

    pub fn n_vars(&self) -> u32 {
        self.n_vars
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn gates(&self) -> usize {
        self.gate_nodes.len()
    }

    pub fn gate_kind(&self, g: usize) -> GateKind {
        match &self.nodes[self.gate_nodes[g]] {
            CNode::Gate { kind, .. } => *kind,
            CNode::Leaf(_) => unreachable!(),
        }
    }

    pub fn gate_arity(&self, g: usize) -> usize {
        match &self.nodes[self.gate_nodes[g]] {
            CNode::Gate { children, .. } => children.len(),
            CNode::Leaf(_) => unreachable!(),
        }
    }

    pub fn gate_parent(&self, g: usize) -> Option<usize> {
        let p = self.gate_parent[g];
        (p != usize::MAX).then_some(p)
    }

    pub fn gate_path(&self, g: usize) -> &NodePath {
        &self.gate_paths[g]
    }

    pub fn gate_index(&self, path: &NodePath) -> Option<usize> {
        self.gate_paths.iter().position(|p| p == path)
    }

    pub fn dense(&self, e: &ShortCircuitPattern) -> Result<Vec<u8>, FormulaError> {
        let mut d = vec![0u8; self.gates()];
        for (path, i) in e.iter() {
            let g = self.gate_index(path).ok_or_else(|| FormulaError::NoSuchGate(path.clone()))?;
            let arity = self.gate_arity(g);
            if i >= arity {
                return Err(FormulaError::DirectiveOutOfRange { path: path.clone(), index: i, arity });
            }
            d[g] = (i + 1) as u8;
        }
        Ok(d)
    }

    pub fn sparse(&self, dense: &[u8]) -> ShortCircuitPattern {
        dense
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(g, &d)| (self.gate_paths[g].clone(), d as usize - 1))
            .collect()
    }

    /// Point evaluation under a dense pattern.
    pub fn eval(&self, dense: Option<&[u8]>, z: u64) -> bool {
        self.eval_node(0, dense, z)
    }

    fn eval_node(&self, idx: usize, dense: Option<&[u8]>, z: u64) -> bool {
        match &self.nodes[idx] {
            CNode::Leaf(l) => l.eval_mask(z),
            CNode::Gate { kind, children, gate } => {
                if let Some(d) = dense {
                    if d[*gate] > 0 {
                        return self.eval_node(children[d[*gate] as usize - 1], dense, z);
                    }
                }
                match kind {
                    GateKind::And => children.iter().all(|&c| self.eval_node(c, dense, z)),
                    GateKind::Or => children.iter().any(|&c| self.eval_node(c, dense, z)),
                }
            }
        }
    }

    /// Bitsliced truth table of the (possibly noisy) formula.
    pub fn table(&self, dense: Option<&[u8]>) -> Result<TruthTable, FormulaError> {
        TruthTable::check_vars(self.n_vars)?;
        let mut scratch = Vec::new();
        let words = self.table_words(dense, &mut scratch);
        Ok(TruthTable::from_words(self.n_vars, words))
    }

    /// Single-word table for formulas over at most 6 variables, allocation free.
    pub fn table_word(&self, dense: Option<&[u8]>, scratch: &mut Vec<u64>) -> u64 {
        debug_assert!(self.n_vars <= 6);
        let all = TruthTable::constant(self.n_vars, true)[0];
        scratch.resize(self.nodes.len(), 0);
        for idx in (0..self.nodes.len()).rev() {
            scratch[idx] = match &self.nodes[idx] {
                CNode::Leaf(l) => {
                    let col = TruthTable::var_column(self.n_vars, l.var)[0];
                    if l.negated {
                        !col & all
                    } else {
                        col
                    }
                }
                CNode::Gate { kind, children, gate } => {
                    let forced = dense.map(|d| d[*gate]).unwrap_or(0);
                    if forced > 0 {
                        scratch[children[forced as usize - 1]]
                    } else {
                        match kind {
                            GateKind::And => children.iter().fold(all, |a, &c| a & scratch[c]),
                            GateKind::Or => children.iter().fold(0, |a, &c| a | scratch[c]),
                        }
                    }
                }
            };
        }
        scratch[0]
    }

    /// Same as [`Compiled::table`] but reuses a scratch buffer; `n_vars` must be checked.
    pub fn table_words(&self, dense: Option<&[u8]>, scratch: &mut Vec<Vec<u64>>) -> Vec<u64> {
        let nw = TruthTable::n_words(self.n_vars);
        scratch.resize(self.nodes.len(), Vec::new());
        for idx in (0..self.nodes.len()).rev() {
            let v = match &self.nodes[idx] {
                CNode::Leaf(l) => {
                    let mut col = TruthTable::var_column(self.n_vars, l.var);
                    if l.negated {
                        let all = TruthTable::constant(self.n_vars, true);
                        for (w, a) in col.iter_mut().zip(all) {
                            *w = !*w & a;
                        }
                    }
                    col
                }
                CNode::Gate { kind, children, gate } => {
                    let forced = dense.map(|d| d[*gate]).unwrap_or(0);
                    if forced > 0 {
                        scratch[children[forced as usize - 1]].clone()
                    } else {
                        let mut acc = TruthTable::constant(self.n_vars, kind.identity());
                        for &c in children {
                            for (a, b) in acc.iter_mut().zip(&scratch[c]) {
                                match kind {
                                    GateKind::And => *a &= *b,
                                    GateKind::Or => *a |= *b,
                                }
                            }
                        }
                        acc
                    }
                }
            };
            debug_assert_eq!(v.len(), nw);
            scratch[idx] = v;
        }
        std::mem::take(&mut scratch[0])
    }
}
