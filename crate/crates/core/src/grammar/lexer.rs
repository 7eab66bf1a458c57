//! Tokenizer for the rule-deck language.
//!
//! `//` comments run to end of line and are dropped. A number may be
//! immediately followed by a unit suffix (`0.5um`); the suffix is lexed as a
//! separate IDENT so that NUMBER text always parses as a decimal.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::diagnostic::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Ident,
    Number,
    String,
    CmpOp,
    Assign,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Keyword,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Ident => "IDENT",
            TokenKind::Number => "NUMBER",
            TokenKind::String => "STRING",
            TokenKind::CmpOp => "CMP_OP",
            TokenKind::Assign => "ASSIGN",
            TokenKind::LBrace => "LBRACE",
            TokenKind::RBrace => "RBRACE",
            TokenKind::LParen => "LPAREN",
            TokenKind::RParen => "RPAREN",
            TokenKind::Keyword => "KEYWORD",
            TokenKind::Eof => "EOF",
        };
        f.write_str(s)
    }
}

pub const KEYWORDS: [&str; 4] = ["AND", "OR", "NOT", "REPORT"];
pub const CMP_OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }

    /// Payload of a STRING token with quotes removed and escapes resolved.
    pub fn string_value(&self) -> Option<String> {
        if self.kind != TokenKind::String {
            return None;
        }
        let inner = &self.text[1..self.text.len() - 1];
        let mut out = String::with_capacity(inner.len());
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                if let Some(next) = chars.next() {
                    out.push(next);
                }
            } else {
                out.push(c);
            }
        }
        Some(out)
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, usize, usize) {
        (self.pos, self.line, self.column)
    }

    fn span_from(&self, mark: (usize, usize, usize)) -> SourceSpan {
        SourceSpan::new(mark.0, self.pos, mark.1, mark.2)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. Always ends with an EOF token; lexical
/// problems are reported as diagnostics and never stop the scan.
pub fn tokenize(source: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }

        let mark = cur.mark();
        let kind = match c {
            '{' => {
                cur.bump();
                TokenKind::LBrace
            }
            '}' => {
                cur.bump();
                TokenKind::RBrace
            }
            '(' => {
                cur.bump();
                TokenKind::LParen
            }
            ')' => {
                cur.bump();
                TokenKind::RParen
            }
            '<' | '>' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                }
                TokenKind::CmpOp
            }
            '=' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                    TokenKind::CmpOp
                } else {
                    TokenKind::Assign
                }
            }
            '!' if cur.peek_at(1) == Some('=') => {
                cur.bump();
                cur.bump();
                TokenKind::CmpOp
            }
            '"' => {
                cur.bump();
                let mut closed = false;
                while let Some(c) = cur.peek() {
                    match c {
                        '"' => {
                            cur.bump();
                            closed = true;
                            break;
                        }
                        '\\' => {
                            cur.bump();
                            if matches!(cur.peek(), Some(n) if n != '\n') {
                                cur.bump();
                            }
                        }
                        '\n' => break,
                        _ => {
                            cur.bump();
                        }
                    }
                }
                if !closed {
                    let quote = SourceSpan::new(mark.0, mark.0 + 1, mark.1, mark.2);
                    diags.push(Diagnostic::error(
                        "unterminated-string",
                        "unterminated string",
                        quote,
                    ));
                    continue;
                }
                TokenKind::String
            }
            c if c.is_ascii_digit() => {
                while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
                    cur.bump();
                }
                if cur.peek() == Some('.') && matches!(cur.peek_at(1), Some(d) if d.is_ascii_digit())
                {
                    cur.bump();
                    while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                TokenKind::Number
            }
            c if is_ident_start(c) => {
                while matches!(cur.peek(), Some(d) if is_ident_continue(d)) {
                    cur.bump();
                }
                let text = &source[mark.0..cur.pos];
                if KEYWORDS.contains(&text) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                }
            }
            other => {
                cur.bump();
                diags.push(Diagnostic::error(
                    "illegal-character",
                    format!("illegal character {other:?}"),
                    cur.span_from(mark),
                ));
                while matches!(cur.peek(), Some(c) if !c.is_whitespace()) {
                    cur.bump();
                }
                continue;
            }
        };
        tokens.push(Token {
            kind,
            text: source[mark.0..cur.pos].to_string(),
            span: cur.span_from(mark),
        });
    }

    let end = cur.mark();
    tokens.push(Token {
        kind: TokenKind::Eof,
        text: String::new(),
        span: SourceSpan::new(end.0, end.0, end.1, end.2),
    });
    (tokens, diags)
}
