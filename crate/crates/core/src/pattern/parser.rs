//! Recursive-descent parser for sub-scene pattern sources.
//!
//! Grammar:
//!
//! ```text
//! query      := "pattern" IDENT "{" statement+ "}"
//! statement  := matchstmt | markstmt | countstmt
//! matchstmt  := "match" nodepat (edgepat nodepat)* ("where" pred ("and" pred)*)? ";"
//! nodepat    := "(" IDENT ":" KINDORMARK ")"
//! edgepat    := "-[" EDGEKIND "]" ("->" | "-")
//! markstmt   := "mark" IDENT "(" IDENT ("," IDENT)* ")" ";"
//! countstmt  := "count" "(" ("root" | IDENT) ")" ";"
//! pred       := IDENT "." IDENT CMP literal | IDENT "." IDENT "in" "{" literal ("," literal)* "}"
//! CMP        := "=" | "!=" | "<" | "<=" | ">" | ">="
//! KINDORMARK := "Lane"|"Connector"|"LaneMarker"|"Crosswalk"|"Ego"|"Object"|"@" IDENT
//! EDGEKIND   := "NEXT" | "CONNECTED_TO" | "ON"
//! ```
//!
//! `mark` statements bind the variables of the closest preceding `match`.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::PatternError;
use crate::model::NodeKind;

const KEYWORDS: [&str; 7] = ["pattern", "match", "where", "and", "mark", "count", "in"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

/// Parses one `pattern` block.
pub fn parse(src: &str) -> Result<PatternQuery, PatternError> {
    let mut p = Parser {
        tokens: tokenize(src)?,
        pos: 0,
    };
    let query = p.query()?;
    p.expect(|t| matches!(t, Tok::Eof), &["end of input"])?;
    validate(&query)?;
    Ok(query)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> PatternError {
        let t = self.peek();
        PatternError::Syntax {
            line: t.span.start.line,
            column: t.span.start.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, pred: impl Fn(&Tok) -> bool, expected: &[&str]) -> Result<Token, PatternError> {
        if pred(&self.peek().tok) {
            Ok(self.advance())
        } else {
            Err(self.error(expected))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &'static str) -> Result<Token, PatternError> {
        let quoted = format!("`{kw}`");
        self.expect(|t| matches!(t, Tok::Ident(s) if s == kw), &[quoted.as_str()])
    }

    /// A non-keyword identifier.
    fn ident(&mut self, what: &str) -> Result<Spanned<String>, PatternError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let t = self.advance();
                let Tok::Ident(s) = t.tok else { unreachable!() };
                Ok(Spanned::new(s, t.span))
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn query(&mut self) -> Result<PatternQuery, PatternError> {
        self.keyword("pattern")?;
        let name = self.ident("pattern name")?;
        self.expect(|t| matches!(t, Tok::LBrace), &["`{`"])?;
        let mut statements = vec![self.statement()?];
        while !matches!(self.peek().tok, Tok::RBrace) {
            statements.push(self.statement()?);
        }
        self.advance();
        Ok(PatternQuery { name, statements })
    }

    fn statement(&mut self) -> Result<Statement, PatternError> {
        if self.at_keyword("match") {
            self.match_stmt().map(Statement::Match)
        } else if self.at_keyword("mark") {
            self.mark_stmt().map(Statement::Mark)
        } else if self.at_keyword("count") {
            self.count_stmt().map(Statement::Count)
        } else {
            Err(self.error(&["`match`", "`mark`", "`count`"]))
        }
    }

    fn match_stmt(&mut self) -> Result<MatchStmt, PatternError> {
        self.keyword("match")?;
        let start = self.node_pattern()?;
        let mut steps = Vec::new();
        while matches!(self.peek().tok, Tok::EdgeOpen) {
            let edge = self.edge_pattern()?;
            steps.push((edge, self.node_pattern()?));
        }
        let mut predicates = Vec::new();
        if self.at_keyword("where") {
            self.advance();
            predicates.push(self.predicate()?);
            while self.at_keyword("and") {
                self.advance();
                predicates.push(self.predicate()?);
            }
        }
        let expected: &[&str] = if predicates.is_empty() {
            &["`-[`", "`where`", "`;`"]
        } else {
            &["`and`", "`;`"]
        };
        self.expect(|t| matches!(t, Tok::Semi), expected)?;
        Ok(MatchStmt {
            start,
            steps,
            predicates,
        })
    }

    fn node_pattern(&mut self) -> Result<NodePattern, PatternError> {
        self.expect(|t| matches!(t, Tok::LParen), &["`(`"])?;
        let var = self.ident("variable")?;
        self.expect(|t| matches!(t, Tok::Colon), &["`:`"])?;
        let label = if matches!(self.peek().tok, Tok::At) {
            let at = self.advance();
            let name = self.ident("mark label")?;
            Spanned::new(
                Label::Mark(name.node),
                Span {
                    start: at.span.start,
                    end: name.span.end,
                },
            )
        } else {
            let kinds: Vec<&str> = NodeKind::ALL.iter().map(|k| k.as_str()).collect();
            let mut expected: Vec<String> = kinds.iter().map(|k| format!("`{k}`")).collect();
            expected.push("`@`".into());
            let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
            let name = self.ident("node kind").map_err(|_| self.error(&refs))?;
            match name.node.parse::<NodeKind>() {
                Ok(kind) => Spanned::new(Label::Kind(kind), name.span),
                Err(()) => {
                    return Err(PatternError::UnknownKind {
                        name: name.node,
                        line: name.span.start.line,
                        column: name.span.start.column,
                    })
                }
            }
        };
        self.expect(|t| matches!(t, Tok::RParen), &["`)`"])?;
        Ok(NodePattern { var, label })
    }

    fn edge_pattern(&mut self) -> Result<EdgePattern, PatternError> {
        self.expect(|t| matches!(t, Tok::EdgeOpen), &["`-[`"])?;
        let expected = ["`NEXT`", "`CONNECTED_TO`", "`ON`"];
        let kind = match &self.peek().tok {
            Tok::Ident(s) => match edge_from_keyword(s) {
                Some(k) => Spanned::new(k, self.advance().span),
                None => return Err(self.error(&expected)),
            },
            _ => return Err(self.error(&expected)),
        };
        self.expect(|t| matches!(t, Tok::RBracket), &["`]`"])?;
        let dir = self.expect(|t| matches!(t, Tok::Arrow | Tok::Dash), &["`->`", "`-`"])?;
        Ok(EdgePattern {
            kind,
            directed: dir.tok == Tok::Arrow,
        })
    }

    fn predicate(&mut self) -> Result<Predicate, PatternError> {
        let var = self.ident("variable")?;
        self.expect(|t| matches!(t, Tok::Dot), &["`.`"])?;
        let attr = self.ident("attribute name")?;
        let test = if self.at_keyword("in") {
            self.advance();
            self.expect(|t| matches!(t, Tok::LBrace), &["`{`"])?;
            let mut items = vec![self.literal()?];
            while matches!(self.peek().tok, Tok::Comma) {
                self.advance();
                items.push(self.literal()?);
            }
            self.expect(|t| matches!(t, Tok::RBrace), &["`,`", "`}`"])?;
            Test::In(items)
        } else {
            let expected: Vec<String> = CmpOp::ALL
                .iter()
                .map(|op| format!("`{}`", op.as_str()))
                .chain(["`in`".to_string()])
                .collect();
            let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
            let op = match self.peek().tok {
                Tok::Cmp(op) => {
                    self.advance();
                    op
                }
                _ => return Err(self.error(&refs)),
            };
            Test::Compare(op, self.literal()?)
        };
        Ok(Predicate { var, attr, test })
    }

    fn literal(&mut self) -> Result<Literal, PatternError> {
        match &self.peek().tok {
            Tok::Num(v) => {
                let v = *v;
                self.advance();
                Ok(Literal::Num(v))
            }
            Tok::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(Literal::Str(s))
            }
            _ => Err(self.error(&["number", "string"])),
        }
    }

    fn mark_stmt(&mut self) -> Result<MarkStmt, PatternError> {
        self.keyword("mark")?;
        let label = self.ident("mark label")?;
        self.expect(|t| matches!(t, Tok::LParen), &["`(`"])?;
        let mut vars = vec![self.ident("variable")?];
        while matches!(self.peek().tok, Tok::Comma) {
            self.advance();
            vars.push(self.ident("variable")?);
        }
        self.expect(|t| matches!(t, Tok::RParen), &["`,`", "`)`"])?;
        self.expect(|t| matches!(t, Tok::Semi), &["`;`"])?;
        Ok(MarkStmt { label, vars })
    }

    fn count_stmt(&mut self) -> Result<CountStmt, PatternError> {
        self.keyword("count")?;
        self.expect(|t| matches!(t, Tok::LParen), &["`(`"])?;
        let name = self.ident("`root` or mark label")?;
        let target = if name.node == "root" {
            Spanned::new(CountTarget::Root, name.span)
        } else {
            Spanned::new(CountTarget::Label(name.node), name.span)
        };
        self.expect(|t| matches!(t, Tok::RParen), &["`)`"])?;
        self.expect(|t| matches!(t, Tok::Semi), &["`;`"])?;
        Ok(CountStmt { target })
    }
}

fn unbound(var: &Spanned<String>) -> PatternError {
    PatternError::UnboundVariable {
        name: var.node.clone(),
        line: var.span.start.line,
        column: var.span.start.column,
    }
}

/// Scoping rules: predicates may only name variables of their own `match`,
/// and `mark` only variables of the closest preceding `match`.
pub fn validate(query: &PatternQuery) -> Result<(), PatternError> {
    let mut scope: Option<&MatchStmt> = None;
    for stmt in &query.statements {
        match stmt {
            Statement::Match(m) => {
                for p in &m.predicates {
                    if !m.binds(&p.var) {
                        return Err(unbound(&p.var));
                    }
                }
                scope = Some(m);
            }
            Statement::Mark(mark) => {
                for v in &mark.vars {
                    if !scope.is_some_and(|m| m.binds(v)) {
                        return Err(unbound(v));
                    }
                }
            }
            Statement::Count(_) => {}
        }
    }
    Ok(())
}
