//! Sub-scene pattern language: a small `match` / `mark` / `count` dialect in
//! the spirit of Cypher's MATCH/SET, with mark labels that let later
//! statements build on nodes selected by earlier ones.

mod ast;
mod eval;
mod lexer;
mod parser;
mod unparse;

use thiserror::Error;

pub use ast::*;
pub use eval::{evaluate, MatchResult, Matcher};
pub use parser::{parse, validate};
pub use unparse::unparse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("syntax error at {line}:{column}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unbound variable `{name}` at {line}:{column}")]
    UnboundVariable { name: String, line: usize, column: usize },
    #[error("unknown node kind `{name}` at {line}:{column}")]
    UnknownKind { name: String, line: usize, column: usize },
    #[error("duplicate pattern name `{0}`")]
    DuplicatePatternName(String),
    #[error("mark label `{label}` at {line}:{column} is not produced by an earlier statement")]
    UnknownMarkLabel { label: String, line: usize, column: usize },
}

impl PatternError {
    /// Source position, when the error has one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            PatternError::Syntax { line, column, .. }
            | PatternError::UnboundVariable { line, column, .. }
            | PatternError::UnknownKind { line, column, .. }
            | PatternError::UnknownMarkLabel { line, column, .. } => Some((*line, *column)),
            PatternError::DuplicatePatternName(_) => None,
        }
    }
}

/// Parses several pattern sources, rejecting repeated pattern names.
pub fn parse_all<'a>(sources: impl IntoIterator<Item = &'a str>) -> Result<Vec<PatternQuery>, PatternError> {
    let mut out: Vec<PatternQuery> = Vec::new();
    for src in sources {
        let q = parse(src)?;
        if out.iter().any(|p| p.name.node == q.name.node) {
            return Err(PatternError::DuplicatePatternName(q.name.node));
        }
        out.push(q);
    }
    Ok(out)
}
