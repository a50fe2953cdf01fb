//! Tokenizer.
//!
//! Whitespace (other than newlines) and comments are skipped; every other
//! byte of the source belongs to exactly one token. Newlines are tokens
//! because they terminate statements.

use crate::diag::Diagnostic;
use crate::span::SourceSpan;
use crate::token::{Keyword, Token, TokenKind};

/// Tokenizes `source`. On success the list always ends with an
/// end-of-file token.
pub fn lex(source: &str, file_id: u32) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut lexer = Lexer::new(source, file_id);
    lexer.run();
    if lexer.diags.is_empty() {
        Ok(lexer.tokens)
    } else {
        let mut diags = lexer.diags;
        for d in &mut diags {
            d.attach_snippet(source);
        }
        Err(diags)
    }
}

#[derive(Clone, Copy)]
struct Pos {
    byte: usize,
    line: u32,
    col: u32,
}

struct Lexer<'a> {
    src: &'a str,
    file_id: u32,
    pos: Pos,
    tokens: Vec<Token>,
    diags: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, file_id: u32) -> Self {
        Lexer {
            src,
            file_id,
            pos: Pos {
                byte: 0,
                line: 1,
                col: 1,
            },
            tokens: Vec::new(),
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos.byte..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.pos.byte..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos.byte += c.len_utf8();
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: Pos) -> SourceSpan {
        SourceSpan {
            file_id: self.file_id,
            start_line: start.line,
            start_col: start.col,
            end_line: self.pos.line,
            end_col: self.pos.col,
            lo: start.byte as u32,
            hi: self.pos.byte as u32,
        }
    }

    fn push(&mut self, kind: TokenKind, start: Pos) {
        let span = self.span_from(start);
        let lexeme = self.src[start.byte..self.pos.byte].to_string();
        self.tokens.push(Token { kind, lexeme, span });
    }

    fn error(&mut self, code: &str, message: impl Into<String>, start: Pos) {
        let span = self.span_from(start);
        self.diags.push(Diagnostic::error(code, message, span));
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                ' ' | '\t' => {
                    self.bump();
                }
                '\r' => {
                    self.bump();
                    if self.peek() == Some('\n') {
                        self.bump();
                        self.push(TokenKind::Newline, start);
                    }
                }
                '\n' => {
                    self.bump();
                    self.push(TokenKind::Newline, start);
                }
                '/' if self.peek_nth(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' || (c == '\r' && self.peek_nth(1) == Some('\n')) {
                            break;
                        }
                        self.bump();
                    }
                }
                '/' if self.peek_nth(1) == Some('*') => self.block_comment(start),
                '"' => self.string(start),
                c if c.is_ascii_digit() => self.number(start),
                c if c.is_ascii_alphabetic() || c == '_' => self.ident(start),
                _ => self.punct(start, c),
            }
        }
        let start = self.pos;
        self.push(TokenKind::Eof, start);
    }

    fn block_comment(&mut self, start: Pos) {
        self.bump();
        self.bump();
        loop {
            match self.peek() {
                None => {
                    self.error("L005", "unterminated block comment", start);
                    return;
                }
                Some('*') if self.peek_nth(1) == Some('/') => {
                    self.bump();
                    self.bump();
                    return;
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn string(&mut self, start: Pos) {
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => {
                    self.error("L001", "unterminated string literal", start);
                    return;
                }
                Some('\r') if self.peek_nth(1) == Some('\n') => {
                    self.error("L001", "unterminated string literal", start);
                    return;
                }
                Some('"') => {
                    self.bump();
                    self.push(TokenKind::Str(value), start);
                    return;
                }
                Some('\\') => {
                    let esc_start = self.pos;
                    self.bump();
                    match self.peek() {
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        Some('"') => value.push('"'),
                        Some('\\') => value.push('\\'),
                        None | Some('\n') => continue,
                        Some(other) => {
                            self.bump();
                            self.error(
                                "L004",
                                format!("invalid escape sequence `\\{other}`"),
                                esc_start,
                            );
                            continue;
                        }
                    }
                    self.bump();
                }
                Some(c) => {
                    value.push(c);
                    self.bump();
                }
            }
        }
    }

    fn eat_digits(&mut self) -> usize {
        let mut n = 0;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
            n += 1;
        }
        n
    }

    fn number(&mut self, start: Pos) {
        self.eat_digits();
        let mut is_float = false;
        let mut malformed = false;
        if self.peek() == Some('.') && matches!(self.peek_nth(1), Some(c) if c.is_ascii_digit()) {
            is_float = true;
            self.bump();
            self.eat_digits();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let signed = matches!(self.peek_nth(1), Some('+' | '-'));
            let digit_at = if signed { 2 } else { 1 };
            if matches!(self.peek_nth(digit_at), Some(c) if c.is_ascii_digit()) {
                is_float = true;
                self.bump();
                if signed {
                    self.bump();
                }
                self.eat_digits();
            } else {
                malformed = true;
            }
        }
        // A number running straight into identifier characters (`12ab`, `1e`).
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            malformed = true;
            self.bump();
        }
        let text = &self.src[start.byte..self.pos.byte];
        if malformed {
            self.error("L003", format!("malformed number `{text}`"), start);
            return;
        }
        if is_float {
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => self.push(TokenKind::Float(v), start),
                _ => self.error("L003", format!("malformed number `{text}`"), start),
            }
        } else {
            match text.parse::<i64>() {
                Ok(v) => self.push(TokenKind::Int(v), start),
                Err(_) => self.error(
                    "L003",
                    format!("integer literal `{text}` does not fit in 64 bits"),
                    start,
                ),
            }
        }
    }

    fn ident(&mut self, start: Pos) {
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let text = &self.src[start.byte..self.pos.byte];
        let kind = match Keyword::lookup(text) {
            Some(k) => TokenKind::Kw(k),
            None => TokenKind::Ident,
        };
        self.push(kind, start);
    }

    fn punct(&mut self, start: Pos, c: char) {
        let next = self.peek_nth(1);
        let (kind, len) = match (c, next) {
            ('-', Some('>')) => (TokenKind::Arrow, 2),
            ('=', Some('=')) => (TokenKind::EqEq, 2),
            ('!', Some('=')) => (TokenKind::NotEq, 2),
            ('<', Some('=')) => (TokenKind::Le, 2),
            ('>', Some('=')) => (TokenKind::Ge, 2),
            ('&', Some('&')) => (TokenKind::AndAnd, 2),
            ('|', Some('|')) => (TokenKind::OrOr, 2),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            ('{', _) => (TokenKind::LBrace, 1),
            ('}', _) => (TokenKind::RBrace, 1),
            ('[', _) => (TokenKind::LBracket, 1),
            (']', _) => (TokenKind::RBracket, 1),
            (',', _) => (TokenKind::Comma, 1),
            ('.', _) => (TokenKind::Dot, 1),
            (':', _) => (TokenKind::Colon, 1),
            (';', _) => (TokenKind::Semi, 1),
            ('=', _) => (TokenKind::Assign, 1),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('*', _) => (TokenKind::Star, 1),
            ('/', _) => (TokenKind::Slash, 1),
            ('%', _) => (TokenKind::Percent, 1),
            ('<', _) => (TokenKind::Lt, 1),
            ('>', _) => (TokenKind::Gt, 1),
            ('!', _) => (TokenKind::Bang, 1),
            _ => {
                self.bump();
                self.error("L002", format!("invalid character {c:?}"), start);
                return;
            }
        };
        for _ in 0..len {
            self.bump();
        }
        self.push(kind, start);
    }
}
