use std::fmt;

use crate::model::{EdgeKind, NodeKind};

/// 1-based line and column (columns count characters, not bytes).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: Position,
    pub end: Position,
}

/// A value with the source range it was parsed from. Equality ignores the
/// span so that reformatted sources compare equal.
#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Span,
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: Span) -> Self {
        Spanned { node, span }
    }

    /// Value without a source location, for programmatically built queries.
    pub fn bare(node: T) -> Self {
        Spanned {
            node,
            span: Span::default(),
        }
    }
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T> std::ops::Deref for Spanned<T> {
    type Target = T;

    fn deref(&self) -> &T {
        &self.node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternQuery {
    pub name: Spanned<String>,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Match(MatchStmt),
    Mark(MarkStmt),
    Count(CountStmt),
}

/// `match` over a linear path of node patterns joined by edge patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchStmt {
    pub start: NodePattern,
    pub steps: Vec<(EdgePattern, NodePattern)>,
    pub predicates: Vec<Predicate>,
}

impl MatchStmt {
    /// Node patterns in path order.
    pub fn node_patterns(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }

    /// `(from variable, edge pattern, to variable)` for every step.
    pub fn edge_patterns(&self) -> impl Iterator<Item = (&str, &EdgePattern, &str)> {
        let mut prev = self.start.var.as_str();
        self.steps.iter().map(move |(edge, node)| {
            let from = prev;
            prev = node.var.as_str();
            (from, edge, node.var.as_str())
        })
    }

    pub fn binds(&self, var: &str) -> bool {
        self.node_patterns().any(|n| n.var.as_str() == var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePattern {
    pub var: Spanned<String>,
    pub label: Spanned<Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Label {
    Kind(NodeKind),
    /// Nodes carrying a mark set by an earlier statement.
    Mark(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePattern {
    pub kind: Spanned<EdgeKind>,
    /// `->` when true, `-` (either direction) when false.
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub var: Spanned<String>,
    pub attr: Spanned<String>,
    pub test: Test,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Test {
    Compare(CmpOp, Literal),
    In(Vec<Literal>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Num(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkStmt {
    pub label: Spanned<String>,
    pub vars: Vec<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountStmt {
    pub target: Spanned<CountTarget>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CountTarget {
    /// Marked nodes that are the scene root.
    Root,
    /// Nodes carrying the named mark.
    Label(String),
}

pub(crate) fn edge_keyword(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Next => "NEXT",
        EdgeKind::ConnectedTo => "CONNECTED_TO",
        EdgeKind::On => "ON",
    }
}

pub(crate) fn edge_from_keyword(word: &str) -> Option<EdgeKind> {
    EdgeKind::ALL.into_iter().find(|k| edge_keyword(*k) == word)
}
