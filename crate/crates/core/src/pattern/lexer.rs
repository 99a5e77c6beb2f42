use super::ast::{CmpOp, Position, Span};
use super::PatternError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Dot,
    At,
    /// `-[`
    EdgeOpen,
    RBracket,
    /// `->`
    Arrow,
    Dash,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::At => "`@`".into(),
            Tok::EdgeOpen => "`-[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dash => "`-`".into(),
            Tok::Cmp(op) => format!("`{}`", op.as_str()),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Position,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }
}

fn lex_error(at: Position, expected: &[&str], found: String) -> PatternError {
    PatternError::Syntax {
        line: at.line,
        column: at.column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

/// Splits source text into tokens. `//` starts a comment running to end of line.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, PatternError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        pos: Position { line: 1, column: 1 },
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '/' {
                let mut probe = cur.chars.clone();
                probe.next();
                if probe.peek() == Some(&'/') {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        let start = cur.pos;
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                span: Span { start, end: start },
            });
            return Ok(out);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '@' => Tok::At,
            ']' => Tok::RBracket,
            '=' => Tok::Cmp(CmpOp::Eq),
            '!' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Cmp(CmpOp::Ne)
                } else {
                    return Err(lex_error(start, &["`!=`"], "`!`".into()));
                }
            }
            '<' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Cmp(CmpOp::Le)
                } else {
                    Tok::Cmp(CmpOp::Lt)
                }
            }
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Cmp(CmpOp::Ge)
                } else {
                    Tok::Cmp(CmpOp::Gt)
                }
            }
            '-' => match cur.peek() {
                Some('[') => {
                    cur.bump();
                    Tok::EdgeOpen
                }
                Some('>') => {
                    cur.bump();
                    Tok::Arrow
                }
                Some(d) if d.is_ascii_digit() => number(&mut cur, start, true)?,
                _ => Tok::Dash,
            },
            '"' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(lex_error(cur.pos, &["`\"`"], "end of input".into())),
                        Some('"') => break,
                        Some('\\') => {
                            let at = cur.pos;
                            match cur.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                other => {
                                    return Err(lex_error(
                                        at,
                                        &["escape sequence"],
                                        other.map_or("end of input".into(), |c| format!("`{c}`")),
                                    ))
                                }
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut text = String::from(c);
                number_tail(&mut cur, &mut text);
                parse_number(&text, start)?
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(lex_error(start, &["token"], format!("`{other}`"))),
        };
        out.push(Token {
            tok,
            span: Span { start, end: cur.pos },
        });
    }
}

fn number(cur: &mut Cursor<'_>, start: Position, negative: bool) -> Result<Tok, PatternError> {
    let mut text = String::from(if negative { "-" } else { "" });
    number_tail(cur, &mut text);
    parse_number(&text, start)
}

/// Appends the rest of a numeric literal: digits, optional fraction, optional exponent.
fn number_tail(cur: &mut Cursor<'_>, text: &mut String) {
    let digits = |cur: &mut Cursor<'_>, text: &mut String| {
        while let Some(c) = cur.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                cur.bump();
            } else {
                break;
            }
        }
    };
    digits(cur, text);
    if cur.peek() == Some('.') {
        let mut probe = cur.chars.clone();
        probe.next();
        if probe.peek().is_some_and(|c| c.is_ascii_digit()) {
            text.push('.');
            cur.bump();
            digits(cur, text);
        }
    }
    if matches!(cur.peek(), Some('e') | Some('E')) {
        let mut probe = cur.chars.clone();
        probe.next();
        let next = probe.peek().copied();
        let signed = matches!(next, Some('+') | Some('-'));
        if signed {
            probe.next();
        }
        if probe.peek().is_some_and(|c| c.is_ascii_digit()) {
            text.push('e');
            cur.bump();
            if signed {
                text.push(cur.bump().expect("sign"));
            }
            digits(cur, text);
        }
    }
}

fn parse_number(text: &str, start: Position) -> Result<Tok, PatternError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
        _ => Err(lex_error(start, &["finite number"], format!("`{text}`"))),
    }
}
