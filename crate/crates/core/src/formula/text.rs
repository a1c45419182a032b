//! `(and (or x1 (not x2)) x3)` style text.

use super::{Formula, FormulaError, GateKind, Literal, Node};

pub(super) fn render(node: &Node) -> String {
    let mut s = String::new();
    write_node(node, &mut s);
    s
}

fn write_node(node: &Node, s: &mut String) {
    match node {
        Node::Leaf(l) if l.negated => {
            s.push_str("(not x");
            s.push_str(&l.var.to_string());
            s.push(')');
        }
        Node::Leaf(l) => {
            s.push('x');
            s.push_str(&l.var.to_string());
        }
        Node::Gate { kind, children } => {
            s.push_str(match kind {
                GateKind::And => "(and",
                GateKind::Or => "(or",
            });
            for c in children {
                s.push(' ');
                write_node(c, s);
            }
            s.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(src: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b'(' | b')') && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                out.push((start, Tok::Atom(&src[start..i])));
            }
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        let pos = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end);
        Err(FormulaError::Parse { pos, msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn var(&self, atom: &str) -> Result<u32, FormulaError> {
        match atom.strip_prefix('x').and_then(|d| d.parse::<u32>().ok()) {
            Some(v) if v >= 1 => Ok(v),
            _ => self.err(format!("expected a variable like x3, found `{atom}`")),
        }
    }

    fn node(&mut self) -> Result<Node, FormulaError> {
        match self.next() {
            Some(Tok::Atom(a)) => Ok(Node::Leaf(Literal::pos(self.var(a)?))),
            Some(Tok::Open) => {
                let head = match self.next() {
                    Some(Tok::Atom(h)) => h,
                    _ => return self.err("expected `and`, `or` or `not`"),
                };
                match head {
                    "not" => {
                        let v = match self.next() {
                            Some(Tok::Atom(a)) => self.var(a)?,
                            _ => return self.err("`not` applies to a variable only"),
                        };
                        self.close()?;
                        Ok(Node::Leaf(Literal::neg(v)))
                    }
                    "and" | "or" => {
                        let kind = if head == "and" { GateKind::And } else { GateKind::Or };
                        let mut children = Vec::new();
                        while !matches!(self.toks.get(self.pos), Some((_, Tok::Close)) | None) {
                            children.push(self.node()?);
                        }
                        self.close()?;
                        if children.is_empty() {
                            return self.err("gate without children");
                        }
                        Ok(Node::Gate { kind, children })
                    }
                    other => self.err(format!("unknown operator `{other}`")),
                }
            }
            Some(Tok::Close) => self.err("unexpected `)`"),
            None => self.err("unexpected end of input"),
        }
    }

    fn close(&mut self) -> Result<(), FormulaError> {
        match self.next() {
            Some(Tok::Close) => Ok(()),
            _ => {
                self.pos -= 1;
                self.err("expected `)`")
            }
        }
    }
}

pub(super) fn parse(src: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser { toks: tokenize(src), pos: 0, end: src.len() };
    let root = p.node()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Formula::from_root(root)
}
