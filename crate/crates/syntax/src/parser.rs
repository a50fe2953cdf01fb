//! Recursive-descent parser with precedence climbing for expressions.
//!
//! Statements end at a newline or `;`. Inside `(...)`, `[...]` and record
//! literals newlines are insignificant; inside `{ ... }` blocks they are
//! significant again.
//!
//! `model` is reserved only where it starts a declaration (`model Name`);
//! everywhere else it reads as an ordinary identifier, so parameters and
//! variables may be called `model`.

use crate::ast::*;
use crate::diag::Diagnostic;
use crate::span::SourceSpan;
use crate::token::{Keyword, Token, TokenKind};

/// Parses a token list (as produced by [`crate::lex`]) into a program.
pub fn parse(tokens: &[Token]) -> Result<Program, Vec<Diagnostic>> {
    let mut p = Parser::new(tokens);
    let program = p.program();
    if p.diags.is_empty() {
        Ok(program)
    } else {
        Err(p.diags)
    }
}

/// Marker for a reported parse failure; the diagnostic is already recorded.
struct Failed;

type PResult<T> = Result<T, Failed>;

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    /// Top of stack `true` means newlines are skipped.
    nl_skip: Vec<bool>,
    diags: Vec<Diagnostic>,
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token]) -> Self {
        Parser {
            toks,
            pos: 0,
            nl_skip: vec![false],
            diags: Vec::new(),
        }
    }

    fn skipping_newlines(&self) -> bool {
        *self.nl_skip.last().unwrap_or(&false)
    }

    fn index_of_next(&self, mut i: usize) -> usize {
        if self.skipping_newlines() {
            while i < self.toks.len() && self.toks[i].kind == TokenKind::Newline {
                i += 1;
            }
        }
        i.min(self.toks.len().saturating_sub(1))
    }

    fn peek(&self) -> &'t Token {
        &self.toks[self.index_of_next(self.pos)]
    }

    fn peek2(&self) -> &'t Token {
        let i = self.index_of_next(self.pos);
        &self.toks[self.index_of_next(i + 1)]
    }

    fn bump(&mut self) -> &'t Token {
        let i = self.index_of_next(self.pos);
        let tok = &self.toks[i];
        if tok.kind != TokenKind::Eof {
            self.pos = i + 1;
        }
        tok
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_eof(&self) -> bool {
        self.at(&TokenKind::Eof)
    }

    fn eat(&mut self, kind: &TokenKind) -> Option<&'t Token> {
        if self.at(kind) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn prev_span(&self) -> SourceSpan {
        let mut i = self.pos.saturating_sub(1);
        while i > 0 && self.toks[i].kind == TokenKind::Newline {
            i -= 1;
        }
        self.toks[i].span
    }

    fn unexpected(&mut self, expected: &[&str]) -> Failed {
        let tok = self.peek();
        let msg = if expected.is_empty() {
            format!("unexpected {tok}")
        } else if expected.len() == 1 {
            format!("unexpected {tok}, expected {}", expected[0])
        } else {
            format!("unexpected {tok}, expected one of: {}", expected.join(", "))
        };
        self.diags.push(Diagnostic::error("P001", msg, tok.span));
        Failed
    }

    fn unclosed(&mut self, open: &Token) -> Failed {
        let msg = format!("unclosed delimiter `{}` (reached end of file)", open.lexeme);
        self.diags.push(Diagnostic::error("P002", msg, open.span));
        Failed
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<&'t Token> {
        match self.eat(&kind) {
            Some(t) => Ok(t),
            None => Err(self.unexpected(&[what])),
        }
    }

    /// Expects the closer for `open`; EOF here is an unclosed delimiter.
    fn expect_close(&mut self, kind: TokenKind, open: &'t Token) -> PResult<&'t Token> {
        if let Some(t) = self.eat(&kind) {
            return Ok(t);
        }
        if self.at_eof() {
            return Err(self.unclosed(open));
        }
        let want = kind.describe();
        Err(self.unexpected(&[&want]))
    }

    fn ident(&mut self) -> PResult<Ident> {
        let tok = self.peek();
        match tok.kind {
            TokenKind::Ident | TokenKind::Kw(Keyword::Model) => {
                self.bump();
                Ok(Ident {
                    name: tok.lexeme.clone(),
                    span: tok.span,
                })
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::Ident | TokenKind::Kw(Keyword::Model)
        )
    }

    fn at_terminator(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::Newline | TokenKind::Semi | TokenKind::RBrace | TokenKind::Eof
        )
    }

    fn terminator(&mut self) -> PResult<()> {
        match self.peek().kind {
            TokenKind::Newline | TokenKind::Semi => {
                self.bump();
                Ok(())
            }
            TokenKind::RBrace | TokenKind::Eof => Ok(()),
            _ => Err(self.unexpected(&["newline", "`;`"])),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().kind, TokenKind::Newline | TokenKind::Semi) {
            self.bump();
        }
    }

    /// Skips to the next top-level statement boundary after an error.
    fn recover(&mut self) {
        self.nl_skip.truncate(1);
        let mut depth: i32 = 0;
        loop {
            let tok = self.toks[self.pos.min(self.toks.len() - 1)].clone();
            match tok.kind {
                TokenKind::Eof => return,
                TokenKind::LBrace | TokenKind::LParen | TokenKind::LBracket => depth += 1,
                TokenKind::RBrace | TokenKind::RParen | TokenKind::RBracket => depth -= 1,
                TokenKind::Newline | TokenKind::Semi if depth <= 0 => {
                    self.pos += 1;
                    return;
                }
                _ => {}
            }
            self.pos += 1;
        }
    }

    // ---- items -------------------------------------------------------------

    fn program(&mut self) -> Program {
        let mut items = Vec::new();
        loop {
            self.skip_separators();
            if self.at_eof() {
                break;
            }
            let before = self.pos;
            match self.item() {
                Ok(item) => items.push(item),
                Err(Failed) => {
                    self.recover();
                    if self.pos == before {
                        self.pos += 1;
                    }
                }
            }
        }
        let eof = self.toks.last().map(|t| t.span).unwrap_or_default();
        let span = SourceSpan {
            file_id: eof.file_id,
            start_line: 1,
            start_col: 1,
            lo: 0,
            ..eof
        };
        Program { items, span }
    }

    fn item(&mut self) -> PResult<Item> {
        match self.peek().kind {
            TokenKind::Kw(Keyword::Import) => self.import().map(Item::Import),
            TokenKind::Kw(Keyword::Metamodel) => self.metamodel().map(Item::Metamodel),
            TokenKind::Kw(Keyword::Model) if self.peek2().kind == TokenKind::Ident => {
                self.model().map(Item::Model)
            }
            TokenKind::Kw(Keyword::Func) => self.func().map(Item::Func),
            _ => self.statement().map(Item::Stmt),
        }
    }

    fn import(&mut self) -> PResult<ImportDecl> {
        let kw = self.bump();
        let path = match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                self.bump();
                ImportPath::File(s)
            }
            TokenKind::Ident => {
                let mut parts = vec![self.ident()?];
                while self.eat(&TokenKind::Dot).is_some() {
                    parts.push(self.ident()?);
                }
                ImportPath::Dotted(parts)
            }
            _ => return Err(self.unexpected(&["string literal", "identifier"])),
        };
        let span = kw.span.to(self.prev_span());
        self.terminator()?;
        Ok(ImportDecl { path, span })
    }

    fn fields(&mut self) -> PResult<(Vec<FieldDef>, SourceSpan)> {
        let open = self.expect(TokenKind::LBrace, "`{`")?;
        self.nl_skip.push(false);
        let mut fields = Vec::new();
        loop {
            self.skip_separators();
            if self.at(&TokenKind::RBrace) {
                break;
            }
            if self.at_eof() {
                return Err(self.unclosed(open));
            }
            let name = match self.peek().kind {
                TokenKind::Ident => self.ident()?,
                _ => return Err(self.unexpected(&["field name", "`}`"])),
            };
            self.expect(TokenKind::Assign, "`=`")?;
            let value = self.expr()?;
            let span = name.span.to(value.span);
            self.terminator()?;
            fields.push(FieldDef { name, value, span });
        }
        let close = self.bump();
        self.nl_skip.pop();
        Ok((fields, close.span))
    }

    fn metamodel(&mut self) -> PResult<MetamodelDecl> {
        let kw = self.bump();
        let name = self.ident()?;
        let (fields, end) = self.fields()?;
        Ok(MetamodelDecl {
            name,
            fields,
            span: kw.span.to(end),
        })
    }

    fn model(&mut self) -> PResult<ModelDecl> {
        let kw = self.bump();
        let name = self.ident()?;
        let parent = if self.eat(&TokenKind::Kw(Keyword::Extends)).is_some() {
            Some(self.ident()?)
        } else {
            None
        };
        let (fields, end) = self.fields()?;
        Ok(ModelDecl {
            name,
            parent,
            fields,
            span: kw.span.to(end),
        })
    }

    fn func(&mut self) -> PResult<FuncDecl> {
        let kw = self.bump();
        let name = self.ident()?;
        let open = self.expect(TokenKind::LParen, "`(`")?;
        self.nl_skip.push(true);
        let mut params = Vec::new();
        while !self.at(&TokenKind::RParen) {
            if self.at_eof() {
                return Err(self.unclosed(open));
            }
            let pname = self.ident()?;
            self.expect(TokenKind::Colon, "`:`")?;
            let ty = self.type_ref()?;
            let span = pname.span.to(ty.span);
            params.push(Param {
                name: pname,
                ty,
                span,
            });
            if self.eat(&TokenKind::Comma).is_none() {
                break;
            }
        }
        self.expect_close(TokenKind::RParen, open)?;
        self.nl_skip.pop();
        let ret = if self.eat(&TokenKind::Arrow).is_some() {
            Some(self.type_ref()?)
        } else {
            None
        };
        let body = self.block()?;
        Ok(FuncDecl {
            name,
            params,
            ret,
            span: kw.span.to(body.span),
            body,
        })
    }

    fn type_ref(&mut self) -> PResult<TypeRef> {
        let name = match self.peek().kind {
            TokenKind::Ident => self.ident()?,
            _ => return Err(self.unexpected(&["type name"])),
        };
        let mut args = Vec::new();
        let mut span = name.span;
        if let Some(open) = self.eat(&TokenKind::Lt) {
            loop {
                args.push(self.type_ref()?);
                if self.eat(&TokenKind::Comma).is_none() {
                    break;
                }
            }
            span = span.to(self.expect_close(TokenKind::Gt, open)?.span);
        }
        Ok(TypeRef { name, args, span })
    }

    fn block(&mut self) -> PResult<Block> {
        let open = self.expect(TokenKind::LBrace, "`{`")?;
        self.nl_skip.push(false);
        let mut stmts = Vec::new();
        loop {
            self.skip_separators();
            if self.at(&TokenKind::RBrace) {
                break;
            }
            if self.at_eof() {
                return Err(self.unclosed(open));
            }
            stmts.push(self.statement()?);
        }
        let close = self.bump();
        self.nl_skip.pop();
        Ok(Block {
            stmts,
            span: open.span.to(close.span),
        })
    }

    // ---- statements --------------------------------------------------------

    fn statement(&mut self) -> PResult<Stmt> {
        match self.peek().kind {
            TokenKind::Kw(Keyword::For) => self.for_stmt(),
            TokenKind::Kw(Keyword::If) => self.if_stmt(),
            TokenKind::Kw(Keyword::Return) => {
                let kw = self.bump();
                let value = if self.at_terminator() {
                    None
                } else {
                    Some(self.expr()?)
                };
                let span = value.as_ref().map_or(kw.span, |v| kw.span.to(v.span));
                self.terminator()?;
                Ok(Stmt {
                    kind: StmtKind::Return(value),
                    span,
                })
            }
            TokenKind::Kw(k)
                if !matches!(k, Keyword::Model | Keyword::True | Keyword::False) =>
            {
                Err(self.unexpected(&["statement"]))
            }
            _ => self.assign_or_expr(),
        }
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let kw = self.bump();
        let var = self.ident()?;
        self.expect(TokenKind::Kw(Keyword::In), "`in`")?;
        let iter = self.expr()?;
        let body = self.block()?;
        Ok(Stmt {
            span: kw.span.to(body.span),
            kind: StmtKind::For { var, iter, body },
        })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let kw = self.bump();
        let cond = self.expr()?;
        let then = self.block()?;
        let mut span = kw.span.to(then.span);
        let otherwise = if self.eat(&TokenKind::Kw(Keyword::Else)).is_some() {
            if self.at(&TokenKind::Kw(Keyword::If)) {
                let inner = self.if_stmt()?;
                span = span.to(inner.span);
                Some(ElseBranch::If(Box::new(inner)))
            } else {
                let b = self.block()?;
                span = span.to(b.span);
                Some(ElseBranch::Block(b))
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then,
                otherwise,
            },
            span,
        })
    }

    fn assign_or_expr(&mut self) -> PResult<Stmt> {
        let lhs = self.expr()?;
        if self.at(&TokenKind::Assign) {
            if !lhs.is_lvalue() {
                let msg = "invalid assignment target; expected a name, member or index";
                self.diags.push(Diagnostic::error("P001", msg, lhs.span));
                return Err(Failed);
            }
            self.bump();
            let value = self.expr()?;
            let span = lhs.span.to(value.span);
            self.terminator()?;
            return Ok(Stmt {
                kind: StmtKind::Assign { target: lhs, value },
                span,
            });
        }
        let span = lhs.span;
        self.terminator()?;
        Ok(Stmt {
            kind: StmtKind::Expr(lhs),
            span,
        })
    }

    // ---- expressions -------------------------------------------------------

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    /// Expression in a nested position where `name = value` is not allowed.
    fn nested_expr(&mut self) -> PResult<Expr> {
        let e = self.expr()?;
        if self.at(&TokenKind::Assign) && matches!(e.kind, ExprKind::Ident(_)) {
            let span = e.span.to(self.peek().span);
            self.diags.push(Diagnostic::error(
                "P003",
                "named argument outside a call argument list",
                span,
            ));
            return Err(Failed);
        }
        Ok(e)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek().kind {
            TokenKind::OrOr => BinOp::Or,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek().kind {
            TokenKind::Minus => UnOp::Neg,
            TokenKind::Bang => UnOp::Not,
            _ => return self.postfix(),
        };
        let tok = self.bump();
        let operand = self.unary()?;
        let span = tok.span.to(operand.span);
        Ok(Expr::new(
            ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        ))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            match self.peek().kind {
                TokenKind::LParen => {
                    let open = self.bump();
                    self.nl_skip.push(true);
                    let mut args = Vec::new();
                    while !self.at(&TokenKind::RParen) {
                        if self.at_eof() {
                            return Err(self.unclosed(open));
                        }
                        args.push(self.call_arg()?);
                        if self.eat(&TokenKind::Comma).is_none() {
                            break;
                        }
                    }
                    let close = self.expect_close(TokenKind::RParen, open)?;
                    self.nl_skip.pop();
                    let span = e.span.to(close.span);
                    e = Expr::new(
                        ExprKind::Call {
                            callee: Box::new(e),
                            args,
                        },
                        span,
                    );
                }
                TokenKind::Dot => {
                    self.bump();
                    let name = self.ident()?;
                    let span = e.span.to(name.span);
                    e = Expr::new(
                        ExprKind::Member {
                            object: Box::new(e),
                            name,
                        },
                        span,
                    );
                }
                TokenKind::LBracket => {
                    let open = self.bump();
                    self.nl_skip.push(true);
                    let index = self.nested_expr()?;
                    let close = self.expect_close(TokenKind::RBracket, open)?;
                    self.nl_skip.pop();
                    let span = e.span.to(close.span);
                    e = Expr::new(
                        ExprKind::Index {
                            object: Box::new(e),
                            index: Box::new(index),
                        },
                        span,
                    );
                }
                _ => return Ok(e),
            }
        }
    }

    fn call_arg(&mut self) -> PResult<Arg> {
        if self.at_ident() && self.peek2().kind == TokenKind::Assign {
            let name = self.ident()?;
            self.bump();
            let value = self.nested_expr()?;
            let span = name.span.to(value.span);
            return Ok(Arg {
                name: Some(name),
                value,
                span,
            });
        }
        let value = self.nested_expr()?;
        Ok(Arg {
            name: None,
            span: value.span,
            value,
        })
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek();
        let kind = match &tok.kind {
            TokenKind::Int(v) => ExprKind::Int(*v),
            TokenKind::Float(v) => ExprKind::Float(*v),
            TokenKind::Str(s) => ExprKind::Str(s.clone()),
            TokenKind::Kw(Keyword::True) => ExprKind::Bool(true),
            TokenKind::Kw(Keyword::False) => ExprKind::Bool(false),
            TokenKind::Ident | TokenKind::Kw(Keyword::Model) => ExprKind::Ident(tok.lexeme.clone()),
            TokenKind::LParen => {
                let open = self.bump();
                self.nl_skip.push(true);
                let inner = self.nested_expr()?;
                self.expect_close(TokenKind::RParen, open)?;
                self.nl_skip.pop();
                // Parentheses only group; the inner node keeps its own span.
                return Ok(inner);
            }
            TokenKind::LBracket => return self.list(),
            TokenKind::LBrace => return self.record(),
            _ => return Err(self.unexpected(&["expression"])),
        };
        self.bump();
        Ok(Expr::new(kind, tok.span))
    }

    fn list(&mut self) -> PResult<Expr> {
        let open = self.bump();
        self.nl_skip.push(true);
        let mut items = Vec::new();
        while !self.at(&TokenKind::RBracket) {
            if self.at_eof() {
                return Err(self.unclosed(open));
            }
            items.push(self.nested_expr()?);
            if self.eat(&TokenKind::Comma).is_none() {
                break;
            }
        }
        let close = self.expect_close(TokenKind::RBracket, open)?;
        self.nl_skip.pop();
        Ok(Expr::new(ExprKind::List(items), open.span.to(close.span)))
    }

    fn record(&mut self) -> PResult<Expr> {
        let open = self.bump();
        self.nl_skip.push(true);
        let mut pairs = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            if self.at_eof() {
                return Err(self.unclosed(open));
            }
            let key = self.ident()?;
            self.expect(TokenKind::Colon, "`:`")?;
            let value = self.nested_expr()?;
            pairs.push((key, value));
            if self.eat(&TokenKind::Comma).is_none() {
                break;
            }
        }
        let close = self.expect_close(TokenKind::RBrace, open)?;
        self.nl_skip.pop();
        Ok(Expr::new(ExprKind::Record(pairs), open.span.to(close.span)))
    }
}
