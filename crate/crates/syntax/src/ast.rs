//! Syntax tree for M programs. Every node carries the span it was parsed from.

use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Import(ImportDecl),
    Metamodel(MetamodelDecl),
    Model(ModelDecl),
    Func(FuncDecl),
    Stmt(Stmt),
}

impl Item {
    pub fn span(&self) -> SourceSpan {
        match self {
            Item::Import(d) => d.span,
            Item::Metamodel(d) => d.span,
            Item::Model(d) => d.span,
            Item::Func(d) => d.span,
            Item::Stmt(s) => s.span,
        }
    }

    pub fn is_decl(&self) -> bool {
        matches!(self, Item::Metamodel(_) | Item::Model(_) | Item::Func(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImportPath {
    /// `import "file.m"`
    File(String),
    /// `import a.b.c`
    Dotted(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportDecl {
    pub path: ImportPath,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub name: Ident,
    pub value: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetamodelDecl {
    pub name: Ident,
    pub fields: Vec<FieldDef>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDecl {
    pub name: Ident,
    pub parent: Option<Ident>,
    pub fields: Vec<FieldDef>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeRef {
    pub name: Ident,
    pub args: Vec<TypeRef>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub ty: TypeRef,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub ret: Option<TypeRef>,
    pub body: Block,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    For {
        var: Ident,
        iter: Expr,
        body: Block,
    },
    If {
        cond: Expr,
        then: Block,
        otherwise: Option<ElseBranch>,
    },
    Return(Option<Expr>),
    Assign {
        target: Expr,
        value: Expr,
    },
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElseBranch {
    If(Box<Stmt>),
    Block(Block),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }
}

/// Precedence of prefix operators.
pub const UNARY_PRECEDENCE: u8 = 7;
/// Precedence of call, member and index suffixes.
pub const POSTFIX_PRECEDENCE: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

impl UnOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<Ident>,
    pub value: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Call {
        callee: Box<Expr>,
        args: Vec<Arg>,
    },
    Member {
        object: Box<Expr>,
        name: Ident,
    },
    Index {
        object: Box<Expr>,
        index: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    List(Vec<Expr>),
    Record(Vec<(Ident, Expr)>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Expr { kind, span }
    }

    /// True for forms allowed on the left of `=`.
    pub fn is_lvalue(&self) -> bool {
        match &self.kind {
            ExprKind::Ident(_) => true,
            ExprKind::Member { object, .. } | ExprKind::Index { object, .. } => object.is_lvalue(),
            _ => false,
        }
    }

    /// Root variable of an lvalue chain.
    pub fn root_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            ExprKind::Member { object, .. } | ExprKind::Index { object, .. } => object.root_ident(),
            _ => None,
        }
    }
}

/// Calls `f(parent, child)` for every node span below the program, parent
/// first. Used for span-soundness checks.
pub fn walk_spans(program: &Program, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    for item in &program.items {
        f(program.span, item.span());
        walk_item(item, f);
    }
}

fn walk_ident(parent: SourceSpan, id: &Ident, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    f(parent, id.span);
}

fn walk_item(item: &Item, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    let sp = item.span();
    match item {
        Item::Import(d) => {
            if let ImportPath::Dotted(parts) = &d.path {
                for p in parts {
                    walk_ident(sp, p, f);
                }
            }
        }
        Item::Metamodel(d) => {
            walk_ident(sp, &d.name, f);
            walk_fields(sp, &d.fields, f);
        }
        Item::Model(d) => {
            walk_ident(sp, &d.name, f);
            if let Some(p) = &d.parent {
                walk_ident(sp, p, f);
            }
            walk_fields(sp, &d.fields, f);
        }
        Item::Func(d) => {
            walk_ident(sp, &d.name, f);
            for p in &d.params {
                f(sp, p.span);
                walk_ident(p.span, &p.name, f);
                walk_type(p.span, &p.ty, f);
            }
            if let Some(r) = &d.ret {
                walk_type(sp, r, f);
            }
            walk_block(sp, &d.body, f);
        }
        Item::Stmt(s) => walk_stmt_inner(s, f),
    }
}

fn walk_fields(parent: SourceSpan, fields: &[FieldDef], f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    for fd in fields {
        f(parent, fd.span);
        walk_ident(fd.span, &fd.name, f);
        walk_expr(fd.span, &fd.value, f);
    }
}

fn walk_type(parent: SourceSpan, t: &TypeRef, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    f(parent, t.span);
    walk_ident(t.span, &t.name, f);
    for a in &t.args {
        walk_type(t.span, a, f);
    }
}

fn walk_block(parent: SourceSpan, b: &Block, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    f(parent, b.span);
    for s in &b.stmts {
        f(b.span, s.span);
        walk_stmt_inner(s, f);
    }
}

fn walk_stmt_inner(s: &Stmt, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    let sp = s.span;
    match &s.kind {
        StmtKind::For { var, iter, body } => {
            walk_ident(sp, var, f);
            walk_expr(sp, iter, f);
            walk_block(sp, body, f);
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            walk_expr(sp, cond, f);
            walk_block(sp, then, f);
            match otherwise {
                Some(ElseBranch::If(inner)) => {
                    f(sp, inner.span);
                    walk_stmt_inner(inner, f);
                }
                Some(ElseBranch::Block(b)) => walk_block(sp, b, f),
                None => {}
            }
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(sp, e, f);
            }
        }
        StmtKind::Assign { target, value } => {
            walk_expr(sp, target, f);
            walk_expr(sp, value, f);
        }
        StmtKind::Expr(e) => walk_expr(sp, e, f),
    }
}

fn walk_expr(parent: SourceSpan, e: &Expr, f: &mut dyn FnMut(SourceSpan, SourceSpan)) {
    f(parent, e.span);
    let sp = e.span;
    match &e.kind {
        ExprKind::Call { callee, args } => {
            walk_expr(sp, callee, f);
            for a in args {
                f(sp, a.span);
                if let Some(n) = &a.name {
                    walk_ident(a.span, n, f);
                }
                walk_expr(a.span, &a.value, f);
            }
        }
        ExprKind::Member { object, name } => {
            walk_expr(sp, object, f);
            walk_ident(sp, name, f);
        }
        ExprKind::Index { object, index } => {
            walk_expr(sp, object, f);
            walk_expr(sp, index, f);
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(sp, lhs, f);
            walk_expr(sp, rhs, f);
        }
        ExprKind::Unary { operand, .. } => walk_expr(sp, operand, f),
        ExprKind::List(items) => {
            for i in items {
                walk_expr(sp, i, f);
            }
        }
        ExprKind::Record(pairs) => {
            for (k, v) in pairs {
                walk_ident(sp, k, f);
                walk_expr(sp, v, f);
            }
        }
        ExprKind::Ident(_)
        | ExprKind::Int(_)
        | ExprKind::Float(_)
        | ExprKind::Str(_)
        | ExprKind::Bool(_) => {}
    }
}

/// Resets every span in the tree to the default, for span-blind comparison.
pub fn strip_spans(program: &mut Program) {
    let z = SourceSpan::default();
    program.span = z;
    for item in &mut program.items {
        match item {
            Item::Import(d) => {
                d.span = z;
                if let ImportPath::Dotted(parts) = &mut d.path {
                    for p in parts {
                        p.span = z;
                    }
                }
            }
            Item::Metamodel(d) => {
                d.span = z;
                d.name.span = z;
                strip_fields(&mut d.fields);
            }
            Item::Model(d) => {
                d.span = z;
                d.name.span = z;
                if let Some(p) = &mut d.parent {
                    p.span = z;
                }
                strip_fields(&mut d.fields);
            }
            Item::Func(d) => {
                d.span = z;
                d.name.span = z;
                for p in &mut d.params {
                    p.span = z;
                    p.name.span = z;
                    strip_type(&mut p.ty);
                }
                if let Some(r) = &mut d.ret {
                    strip_type(r);
                }
                strip_block(&mut d.body);
            }
            Item::Stmt(s) => strip_stmt(s),
        }
    }
}

fn strip_fields(fields: &mut [FieldDef]) {
    for f in fields {
        f.span = SourceSpan::default();
        f.name.span = SourceSpan::default();
        strip_expr(&mut f.value);
    }
}

fn strip_type(t: &mut TypeRef) {
    t.span = SourceSpan::default();
    t.name.span = SourceSpan::default();
    for a in &mut t.args {
        strip_type(a);
    }
}

fn strip_block(b: &mut Block) {
    b.span = SourceSpan::default();
    for s in &mut b.stmts {
        strip_stmt(s);
    }
}

fn strip_stmt(s: &mut Stmt) {
    s.span = SourceSpan::default();
    match &mut s.kind {
        StmtKind::For { var, iter, body } => {
            var.span = SourceSpan::default();
            strip_expr(iter);
            strip_block(body);
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            strip_expr(cond);
            strip_block(then);
            match otherwise {
                Some(ElseBranch::If(inner)) => strip_stmt(inner),
                Some(ElseBranch::Block(b)) => strip_block(b),
                None => {}
            }
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                strip_expr(e);
            }
        }
        StmtKind::Assign { target, value } => {
            strip_expr(target);
            strip_expr(value);
        }
        StmtKind::Expr(e) => strip_expr(e),
    }
}

fn strip_expr(e: &mut Expr) {
    e.span = SourceSpan::default();
    match &mut e.kind {
        ExprKind::Call { callee, args } => {
            strip_expr(callee);
            for a in args {
                a.span = SourceSpan::default();
                if let Some(n) = &mut a.name {
                    n.span = SourceSpan::default();
                }
                strip_expr(&mut a.value);
            }
        }
        ExprKind::Member { object, name } => {
            strip_expr(object);
            name.span = SourceSpan::default();
        }
        ExprKind::Index { object, index } => {
            strip_expr(object);
            strip_expr(index);
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        ExprKind::Unary { operand, .. } => strip_expr(operand),
        ExprKind::List(items) => items.iter_mut().for_each(strip_expr),
        ExprKind::Record(pairs) => {
            for (k, v) in pairs {
                k.span = SourceSpan::default();
                strip_expr(v);
            }
        }
        ExprKind::Ident(_)
        | ExprKind::Int(_)
        | ExprKind::Float(_)
        | ExprKind::Str(_)
        | ExprKind::Bool(_) => {}
    }
}

/// Span-blind structural equality.
pub fn same_structure(a: &Program, b: &Program) -> bool {
    let (mut a, mut b) = (a.clone(), b.clone());
    strip_spans(&mut a);
    strip_spans(&mut b);
    a == b
}
