use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
    /// Byte offset of the first character.
    pub offset: usize,
    /// Length in bytes.
    pub length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseErrorCode {
    UnexpectedToken,
    UnknownType,
    DuplicateName,
    BadNumber,
}

impl ParseErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorCode::UnexpectedToken => "UNEXPECTED_TOKEN",
            ParseErrorCode::UnknownType => "UNKNOWN_TYPE",
            ParseErrorCode::DuplicateName => "DUPLICATE_NAME",
            ParseErrorCode::BadNumber => "BAD_NUMBER",
        }
    }
}

impl fmt::Display for ParseErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{}:{}: {code} {message}", span.line, span.column)]
pub struct ParseError {
    pub span: SourceSpan,
    pub code: ParseErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Unsigned integer literal, kept as text so range errors carry a span.
    Int(String),
    /// Decimal literal with optional sign and fraction.
    Decimal(String),
    Colon,
    Semi,
    Comma,
    Dot,
    Eq,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Question,
    Bang,
    Arrow,
    Tilde,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) | Tok::Decimal(s) => format!("number `{s}`"),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Question => "`?`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Tilde => "`~>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '/'
}

/// Splits source text into tokens. `#` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&(start, c)) = chars.peek() {
        let span_at = |len: usize| SourceSpan {
            line,
            column: col,
            offset: start,
            length: len,
        };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
            continue;
        }
        if is_ident_start(c) {
            let mut end = start;
            let mut n = 0;
            while let Some(&(i, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                end = i + c.len_utf8();
                n += 1;
                chars.next();
            }
            out.push(Token {
                tok: Tok::Ident(src[start..end].to_string()),
                span: span_at(end - start),
            });
            col += n;
            continue;
        }
        if c.is_ascii_digit() || c == '-' {
            let mut end = start;
            let mut n = 0;
            let mut decimal = c == '-';
            let mut seen_dot = false;
            while let Some(&(i, c)) = chars.peek() {
                let accept = c.is_ascii_digit()
                    || (c == '-' && i == start)
                    || (c == '.' && !seen_dot && {
                        // a dot only belongs to the number when a digit follows
                        src[i + 1..].starts_with(|d: char| d.is_ascii_digit())
                    });
                if !accept {
                    break;
                }
                if c == '.' {
                    seen_dot = true;
                    decimal = true;
                }
                end = i + c.len_utf8();
                n += 1;
                chars.next();
            }
            let text = src[start..end].to_string();
            if text == "-" {
                // `-` not followed by a digit may still open an arrow
                if src[end..].starts_with('>') {
                    chars.next();
                    out.push(Token {
                        tok: Tok::Arrow,
                        span: span_at(2),
                    });
                    col += 2;
                    continue;
                }
                return Err(ParseError {
                    span: span_at(1),
                    code: ParseErrorCode::UnexpectedToken,
                    message: "stray `-`".into(),
                });
            }
            let tok = if decimal { Tok::Decimal(text) } else { Tok::Int(text) };
            out.push(Token {
                tok,
                span: span_at(end - start),
            });
            col += n;
            continue;
        }
        let two = |next: char| src[start + c.len_utf8()..].starts_with(next);
        let (tok, len) = match c {
            ':' => (Tok::Colon, 1),
            ';' => (Tok::Semi, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '=' => (Tok::Eq, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '?' => (Tok::Question, 1),
            '!' => (Tok::Bang, 1),
            '~' if two('>') => (Tok::Tilde, 2),
            _ => {
                return Err(ParseError {
                    span: span_at(c.len_utf8()),
                    code: ParseErrorCode::UnexpectedToken,
                    message: format!("unexpected character {c:?}"),
                })
            }
        };
        for _ in 0..len {
            chars.next();
        }
        out.push(Token {
            tok,
            span: span_at(len),
        });
        col += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            line,
            column: col,
            offset: src.len(),
            length: 0,
        },
    });
    Ok(out)
}

/// Token cursor shared by the model, architecture and diagram parsers.
pub struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

pub type PResult<T> = Result<T, ParseError>;

impl Cursor {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Self {
            tokens: tokenize(src)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    pub fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    pub fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, code: ParseErrorCode, message: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span(),
            code,
            message: message.into(),
        }
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(
            ParseErrorCode::UnexpectedToken,
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    pub fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    pub fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, word: &str) -> bool {
        if self.at_keyword(word) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> PResult<SourceSpan> {
        if self.at(tok) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    pub fn expect_keyword(&mut self, word: &str) -> PResult<()> {
        if self.eat_keyword(word) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    pub fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.next().span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn uint(&mut self, what: &str) -> PResult<u64> {
        match self.peek() {
            Tok::Int(s) => {
                let v = s.parse::<u64>().map_err(|_| {
                    self.error(ParseErrorCode::BadNumber, format!("{what} `{s}` is out of range"))
                })?;
                self.next();
                Ok(v)
            }
            Tok::Decimal(s) => Err(self.error(
                ParseErrorCode::BadNumber,
                format!("{what} must be an integer, found `{s}`"),
            )),
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn positive(&mut self, what: &str) -> PResult<u64> {
        let span = self.span();
        let v = self.uint(what)?;
        if v == 0 {
            return Err(ParseError {
                span,
                code: ParseErrorCode::BadNumber,
                message: format!("{what} must be positive"),
            });
        }
        Ok(v)
    }

    pub fn positive_u32(&mut self, what: &str) -> PResult<u32> {
        let span = self.span();
        let v = self.positive(what)?;
        u32::try_from(v).map_err(|_| ParseError {
            span,
            code: ParseErrorCode::BadNumber,
            message: format!("{what} is out of range"),
        })
    }

    pub fn number(&mut self, what: &str) -> PResult<f64> {
        match self.peek() {
            Tok::Int(s) | Tok::Decimal(s) => {
                let v = s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    self.error(ParseErrorCode::BadNumber, format!("{what} `{s}` is not a number"))
                })?;
                self.next();
                Ok(v)
            }
            _ => Err(self.unexpected(what)),
        }
    }
}
