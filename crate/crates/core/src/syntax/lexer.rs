//! Tokenizer shared by the formula and problem-file parsers.

use std::fmt;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TokKind {
    /// Identifier, including the `name@value` atoms of finite-domain
    /// variable encodings.
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Bang,
    Amp,
    Pipe,
    /// `->`
    Arrow,
    /// `:=`
    Assign,
    Eof,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Ident(s) => write!(f, "`{s}`"),
            TokKind::LParen => f.write_str("`(`"),
            TokKind::RParen => f.write_str("`)`"),
            TokKind::LBrace => f.write_str("`{`"),
            TokKind::RBrace => f.write_str("`}`"),
            TokKind::LBracket => f.write_str("`[`"),
            TokKind::RBracket => f.write_str("`]`"),
            TokKind::Semi => f.write_str("`;`"),
            TokKind::Bang => f.write_str("`!`"),
            TokKind::Amp => f.write_str("`&`"),
            TokKind::Pipe => f.write_str("`|`"),
            TokKind::Arrow => f.write_str("`->`"),
            TokKind::Assign => f.write_str("`:=`"),
            TokKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Token {
    pub kind: TokKind,
    pub line: u32,
    pub col: u32,
}

pub struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    pub fn new(input: &'a str) -> Self {
        Lexer { chars: input.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col, message)
    }

    /// Tokenizes the whole input; the final token is always [`TokKind::Eof`].
    pub fn tokenize(mut self) -> ParseResult<Vec<Token>> {
        let mut out = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c == '#' {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if c.is_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else {
                out.push(Token { kind: TokKind::Eof, line, col });
                return Ok(out);
            };
            let kind = match c {
                '(' => {
                    self.bump();
                    TokKind::LParen
                }
                ')' => {
                    self.bump();
                    TokKind::RParen
                }
                '{' => {
                    self.bump();
                    TokKind::LBrace
                }
                '}' => {
                    self.bump();
                    TokKind::RBrace
                }
                '[' => {
                    self.bump();
                    TokKind::LBracket
                }
                ']' => {
                    self.bump();
                    TokKind::RBracket
                }
                ';' => {
                    self.bump();
                    TokKind::Semi
                }
                '!' => {
                    self.bump();
                    TokKind::Bang
                }
                '&' => {
                    self.bump();
                    TokKind::Amp
                }
                '|' => {
                    self.bump();
                    TokKind::Pipe
                }
                '-' => {
                    self.bump();
                    if self.chars.peek() == Some(&'>') {
                        self.bump();
                        TokKind::Arrow
                    } else {
                        return Err(self.error("expected `>` after `-`"));
                    }
                }
                ':' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        TokKind::Assign
                    } else {
                        return Err(self.error("expected `=` after `:`"));
                    }
                }
                c if is_ident_start(c) => {
                    let mut name = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if is_ident_continue(c) {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if self.chars.peek() == Some(&'@') {
                        name.push('@');
                        self.bump();
                        let mut any = false;
                        while let Some(&c) = self.chars.peek() {
                            if is_ident_continue(c) {
                                name.push(c);
                                self.bump();
                                any = true;
                            } else {
                                break;
                            }
                        }
                        if !any {
                            return Err(self.error("expected a value name after `@`"));
                        }
                    }
                    TokKind::Ident(name)
                }
                other => {
                    return Err(self.error(format!("unexpected character `{other}`")));
                }
            };
            out.push(Token { kind, line, col });
        }
    }
}

/// Cursor over a token vector.
pub struct TokenStream {
    tokens: Vec<Token>,
    pos: usize,
}

impl TokenStream {
    pub fn lex(input: &str) -> ParseResult<Self> {
        Ok(TokenStream { tokens: Lexer::new(input).tokenize()?, pos: 0 })
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    /// Peeks `offset` tokens ahead; saturates at the trailing EOF token.
    pub fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let tok = self.peek().clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    pub fn at_eof(&self) -> bool {
        self.peek().kind == TokKind::Eof
    }

    pub fn error_here(&self, message: impl Into<String>) -> ParseError {
        let tok = self.peek();
        ParseError::new(tok.line, tok.col, message)
    }

    /// Consumes the next token if it matches `kind`.
    pub fn eat(&mut self, kind: &TokKind) -> bool {
        if &self.peek().kind == kind {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, kind: &TokKind, context: &str) -> ParseResult<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected {kind} {context}, found {}", self.peek().kind)))
        }
    }

    /// Consumes an identifier token and returns its text.
    pub fn expect_ident(&mut self, context: &str) -> ParseResult<String> {
        match self.peek().kind.clone() {
            TokKind::Ident(name) => {
                self.next();
                Ok(name)
            }
            other => Err(self.error_here(format!("expected {context}, found {other}"))),
        }
    }

    /// Consumes the next token if it is the given keyword identifier.
    pub fn eat_keyword(&mut self, word: &str) -> bool {
        if matches!(&self.peek().kind, TokKind::Ident(name) if name == word) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect_keyword(&mut self, word: &str, context: &str) -> ParseResult<()> {
        if self.eat_keyword(word) {
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{word}` {context}, found {}",
                self.peek().kind
            )))
        }
    }
}
