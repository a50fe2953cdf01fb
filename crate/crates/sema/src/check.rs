//! Name resolution and gradual type checking.
//!
//! Scoping mirrors the interpreter: top-level code and function bodies run
//! linearly, `for`/`if` bodies open a fresh scope (per iteration for loops),
//! and assignment binds in the innermost scope that already holds the name.
//! Declarations are hoisted. A function body may only read globals that are
//! certainly bound whenever user code can first run; see [`body_globals`].

use std::collections::{BTreeMap, HashMap, HashSet};

use mlang_syntax::ast::*;
use mlang_syntax::{Diagnostic, SourceSpan};

use crate::prelude::{self, BuiltinSig, Slot, METHODS};
use crate::types::{resolve_type, DeclKind, DeclTable, MType};

/// What an identifier expression refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Builtin,
    Func,
    Decl(DeclKind),
    Global,
    Local,
    Param,
    /// A config field, inside a model or metamodel body.
    Field,
}

#[derive(Debug, Clone)]
pub struct CheckedProgram {
    pub program: Program,
    pub diagnostics: Vec<Diagnostic>,
    pub decls: DeclTable,
    /// Static type of every expression, keyed by its span.
    pub types: HashMap<SourceSpan, MType>,
    /// Resolution of every identifier expression that has one.
    pub bindings: HashMap<SourceSpan, Binding>,
}

impl CheckedProgram {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.is_error())
    }

    pub fn type_of(&self, e: &Expr) -> MType {
        self.types.get(&e.span).cloned().unwrap_or(MType::Unknown)
    }
}

pub fn check(program: Program) -> CheckedProgram {
    check_with_globals(program, &[])
}

/// Checks `program` as a continuation of a session in which `globals` are
/// already bound (REPL lines, protocol `eval` requests).
pub fn check_with_globals(program: Program, globals: &[(String, MType)]) -> CheckedProgram {
    let mut c = Checker::new(&program, globals);
    c.run();
    let Checker {
        mut diags,
        decls,
        types,
        bindings,
        ..
    } = c;
    diags.sort_by(|a, b| {
        (a.span.file_id, a.span.lo, a.span.hi, &a.code, &a.message).cmp(&(
            b.span.file_id,
            b.span.lo,
            b.span.hi,
            &b.code,
            &b.message,
        ))
    });
    diags.dedup();
    CheckedProgram {
        program,
        diagnostics: diags,
        decls,
        types,
        bindings,
    }
}

struct Var {
    ty: MType,
    binding: Binding,
}

struct DeclInfo<'a> {
    kind: DeclKind,
    parent: Option<&'a Ident>,
    fields: &'a [FieldDef],
}

/// Builtins whose execution can reach user code through a model forward.
const RUNS_FORWARD: &[&str] = &["fineTuneModel", "evaluateModel", "autoTuneModel"];

/// Fields that would shadow model methods.
const RESERVED_FIELDS: &[&str] = &["parameters", "save"];

struct Checker<'a> {
    program: &'a Program,
    diags: Vec<Diagnostic>,
    decls: DeclTable,
    decl_info: HashMap<&'a str, DeclInfo<'a>>,
    funcs: HashMap<&'a str, &'a FuncDecl>,
    scopes: Vec<HashMap<String, Var>>,
    /// Globals a function body or field expression may read.
    body_globals: Vec<(String, MType)>,
    preset: Vec<(String, MType)>,
    /// How often each name is bound anywhere in the program.
    bind_counts: HashMap<&'a str, usize>,
    /// Return annotation of the function being checked.
    ret: Option<Option<MType>>,
    types: HashMap<SourceSpan, MType>,
    bindings: HashMap<SourceSpan, Binding>,
}

impl<'a> Checker<'a> {
    fn new(program: &'a Program, globals: &[(String, MType)]) -> Self {
        Checker {
            program,
            diags: Vec::new(),
            decls: DeclTable::default(),
            decl_info: HashMap::new(),
            funcs: HashMap::new(),
            scopes: Vec::new(),
            body_globals: Vec::new(),
            preset: globals.to_vec(),
            bind_counts: HashMap::new(),
            ret: None,
            types: HashMap::new(),
            bindings: HashMap::new(),
        }
    }

    fn error(&mut self, code: &str, msg: impl Into<String>, span: SourceSpan) {
        self.diags.push(Diagnostic::error(code, msg, span));
    }

    fn run(&mut self) {
        self.collect_decls();
        self.check_extends();
        count_bindings(self.program, &mut self.bind_counts);
        self.body_globals = self.preset.clone();
        self.body_globals.extend(body_globals(self.program));

        let program = self.program;
        for item in &program.items {
            match item {
                Item::Model(d) => self.check_decl_fields(&d.name, &d.fields),
                Item::Metamodel(d) => self.check_decl_fields(&d.name, &d.fields),
                Item::Func(f) => self.check_func(f),
                Item::Import(_) | Item::Stmt(_) => {}
            }
        }

        self.scopes = vec![self
            .preset
            .iter()
            .map(|(n, t)| {
                (
                    n.clone(),
                    Var {
                        ty: t.clone(),
                        binding: Binding::Global,
                    },
                )
            })
            .collect()];
        self.ret = None;
        for item in &program.items {
            if let Item::Stmt(s) = item {
                self.stmt(s);
            }
        }
    }

    // ---- declarations ---------------------------------------------------

    fn collect_decls(&mut self) {
        let program = self.program;
        let mut seen: HashMap<&str, SourceSpan> = HashMap::new();
        for item in &program.items {
            let (name, info) = match item {
                Item::Model(d) => (
                    &d.name,
                    Some(DeclInfo {
                        kind: DeclKind::Model,
                        parent: d.parent.as_ref(),
                        fields: &d.fields,
                    }),
                ),
                Item::Metamodel(d) => (
                    &d.name,
                    Some(DeclInfo {
                        kind: DeclKind::Metamodel,
                        parent: None,
                        fields: &d.fields,
                    }),
                ),
                Item::Func(f) => (&f.name, None),
                _ => continue,
            };
            if prelude::lookup(&name.name).is_some() {
                self.error(
                    "E005",
                    format!("`{}` is already defined as a builtin", name.name),
                    name.span,
                );
                continue;
            }
            if crate::types::TYPE_NAMES.contains(&name.name.as_str()) {
                self.error(
                    "E005",
                    format!("`{}` is already defined as a builtin type", name.name),
                    name.span,
                );
                continue;
            }
            if let Some(first) = seen.get(name.name.as_str()) {
                let msg = format!(
                    "`{}` is defined more than once (first at {})",
                    name.name, first
                );
                self.error("E005", msg, name.span);
                continue;
            }
            seen.insert(&name.name, name.span);
            match info {
                Some(info) => {
                    self.decls.insert(
                        &name.name,
                        info.kind,
                        info.parent.map(|p| p.name.as_str()),
                    );
                    self.decl_info.insert(&name.name, info);
                }
                None => {
                    if let Item::Func(f) = item {
                        self.funcs.insert(&name.name, f);
                    }
                }
            }
        }
    }

    fn check_extends(&mut self) {
        let mut names: Vec<&str> = self.decl_info.keys().copied().collect();
        names.sort();
        for name in names {
            let info = &self.decl_info[name];
            let Some(parent) = info.parent else { continue };
            if self.decls.kind(&parent.name).is_none() {
                let msg = format!("`extends` target `{}` is not a declared model", parent.name);
                self.error("E006", msg, parent.span);
                continue;
            }
            // Walk the chain; a cycle shows up as a revisit of `name`.
            let mut cur = parent.name.as_str();
            let mut steps = 0;
            let cyclic = loop {
                if cur == name {
                    break true;
                }
                steps += 1;
                match self.decls.parent(cur) {
                    Some(p) if steps <= self.decl_info.len() => cur = p,
                    _ => break false,
                }
            };
            if cyclic {
                let msg = format!("cyclic `extends` chain through `{name}`");
                self.error("E006", msg, parent.span);
            }
        }
    }

    /// Field names visible in a declaration, ancestors first.
    fn chain_fields(&self, name: &str) -> Vec<&'a FieldDef> {
        let mut chain = self.decls.chain(name);
        chain.reverse();
        chain
            .iter()
            .filter_map(|n| self.decl_info.get(n.as_str()))
            .flat_map(|info| info.fields.iter())
            .collect()
    }

    fn check_decl_fields(&mut self, name: &'a Ident, fields: &'a [FieldDef]) {
        let Some(info) = self.decl_info.get(name.name.as_str()) else {
            return;
        };
        let has_parent = info.parent.is_some();
        let has_source = has_parent
            || fields
                .iter()
                .any(|f| f.name.name == "forward" || f.name.name == "pretrained_model");
        if !has_source {
            let msg = format!(
                "`{}` has no architecture: add `extends`, `pretrained_model` or `forward`",
                name.name
            );
            self.error("E007", msg, name.span);
        }

        let mut seen = HashSet::new();
        for f in fields {
            let fname = f.name.name.as_str();
            if RESERVED_FIELDS.contains(&fname) {
                let msg = format!("`{fname}` is a model method and cannot be a field");
                self.error("E008", msg, f.name.span);
            }
            if !seen.insert(fname) {
                let msg = format!("field `{fname}` is defined twice");
                self.error("E008", msg, f.name.span);
            }
            if fname == "forward"
                && matches!(
                    f.value.kind,
                    ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Str(_) | ExprKind::Bool(_)
                )
            {
                self.error(
                    "E008",
                    "`forward` must be an architecture expression, not a literal",
                    f.value.span,
                );
            }
        }

        // Ordinary fields see the fields before them; `forward` sees all.
        let chain = self.chain_fields(&name.name);
        let own_start = chain.len() - fields.len();
        for (i, f) in fields.iter().enumerate() {
            let visible: Vec<&str> = if f.name.name == "forward" {
                chain.iter().map(|g| g.name.name.as_str()).collect()
            } else {
                chain[..own_start + i]
                    .iter()
                    .map(|g| g.name.name.as_str())
                    .collect()
            };
            self.enter_body_scope();
            let scope = self.scopes.last_mut().unwrap();
            for v in visible {
                scope.insert(
                    v.to_string(),
                    Var {
                        ty: MType::Unknown,
                        binding: Binding::Field,
                    },
                );
            }
            self.ret = None;
            self.expr(&f.value);
        }
    }

    fn enter_body_scope(&mut self) {
        let globals = self
            .body_globals
            .iter()
            .map(|(n, t)| {
                (
                    n.clone(),
                    Var {
                        ty: t.clone(),
                        binding: Binding::Global,
                    },
                )
            })
            .collect();
        self.scopes = vec![globals, HashMap::new()];
    }

    fn check_func(&mut self, f: &'a FuncDecl) {
        self.enter_body_scope();
        let mut seen = HashSet::new();
        for p in &f.params {
            let ty = self.type_ref(&p.ty);
            if !seen.insert(p.name.name.as_str()) {
                let msg = format!("parameter `{}` is declared twice", p.name.name);
                self.error("E005", msg, p.name.span);
            }
            // A reassigned parameter may change type; treat it as Unknown.
            let ty = if assigns_name(&f.body, &p.name.name) {
                MType::Unknown
            } else {
                ty
            };
            self.scopes.last_mut().unwrap().insert(
                p.name.name.clone(),
                Var {
                    ty,
                    binding: Binding::Param,
                },
            );
        }
        let ret = f.ret.as_ref().map(|r| self.type_ref(r));
        self.ret = Some(ret);
        self.scopes.push(HashMap::new());
        for s in &f.body.stmts {
            self.stmt(s);
        }
        self.ret = None;
    }

    fn type_ref(&mut self, t: &TypeRef) -> MType {
        match resolve_type(t, &self.decls) {
            Ok(ty) => ty,
            Err(e @ crate::types::TypeRefError::UnknownName(_)) => {
                self.error("E001", e.to_string(), t.name.span);
                MType::Unknown
            }
            Err(e) => {
                self.error("E004", e.to_string(), t.span);
                MType::Unknown
            }
        }
    }

    // ---- statements -----------------------------------------------------

    fn block(&mut self, b: &Block, prebind: Option<(&Ident, MType)>) {
        self.scopes.push(HashMap::new());
        if let Some((var, ty)) = prebind {
            let ty = if self.bind_counts.get(var.name.as_str()) == Some(&1) {
                ty
            } else {
                MType::Unknown
            };
            self.scopes.last_mut().unwrap().insert(
                var.name.clone(),
                Var {
                    ty,
                    binding: Binding::Local,
                },
            );
        }
        for s in &b.stmts {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::For { var, iter, body } => {
                let it = self.expr(iter);
                let elem = match it {
                    MType::Range => MType::Int,
                    MType::List(e) => *e,
                    MType::Dataset => MType::Batch,
                    _ => MType::Unknown,
                };
                self.block(body, Some((var, elem)));
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond);
                self.block(then, None);
                match otherwise {
                    Some(ElseBranch::If(inner)) => self.stmt(inner),
                    Some(ElseBranch::Block(b)) => self.block(b, None),
                    None => {}
                }
            }
            StmtKind::Return(value) => {
                let ty = match value {
                    Some(e) => self.expr(e),
                    None => MType::Unit,
                };
                if let Some(Some(expected)) = &self.ret {
                    if !self.decls.subtype_of(&ty, expected) {
                        let msg = format!("function returns {expected}, found {ty}");
                        let span = value.as_ref().map_or(s.span, |e| e.span);
                        self.error("E004", msg, span);
                    }
                }
            }
            StmtKind::Assign { target, value } => {
                let ty = self.expr(value);
                self.assign(target, ty);
            }
            StmtKind::Expr(e) => {
                self.expr(e);
            }
        }
    }

    fn assign(&mut self, target: &Expr, ty: MType) {
        let ExprKind::Ident(name) = &target.kind else {
            // Member or index store: the root must already exist.
            self.expr(target);
            return;
        };
        if let Some(i) = self.scopes.iter().rposition(|s| s.contains_key(name)) {
            let var = self.scopes[i].get_mut(name).unwrap();
            if var.ty != ty {
                var.ty = MType::Unknown;
            }
            let binding = var.binding;
            self.bindings.insert(target.span, binding);
            return;
        }
        let what = if prelude::lookup(name).is_some() {
            Some("builtin")
        } else if self.funcs.contains_key(name.as_str()) {
            Some("function")
        } else if self.decls.kind(name).is_some() {
            Some("model declaration")
        } else {
            None
        };
        if let Some(what) = what {
            let msg = format!("cannot assign to {what} `{name}`");
            self.error("E005", msg, target.span);
            return;
        }
        let ty = if self.bind_counts.get(name.as_str()) == Some(&1) {
            ty
        } else {
            MType::Unknown
        };
        let binding = if self.scopes.len() == 1 && self.ret.is_none() {
            Binding::Global
        } else {
            Binding::Local
        };
        self.bindings.insert(target.span, binding);
        self.types.insert(target.span, ty.clone());
        self.scopes
            .last_mut()
            .unwrap()
            .insert(name.clone(), Var { ty, binding });
    }

    // ---- expressions ----------------------------------------------------

    fn lookup(&self, name: &str) -> Option<(MType, Binding)> {
        for scope in self.scopes.iter().rev() {
            if let Some(v) = scope.get(name) {
                return Some((v.ty.clone(), v.binding));
            }
        }
        if let Some(f) = self.funcs.get(name) {
            return Some((self.func_type(f), Binding::Func));
        }
        if let Some(kind) = self.decls.kind(name) {
            let ty = MType::Function {
                params: Some(vec![]),
                result: Box::new(self.decls.instance_type(name)),
            };
            return Some((ty, Binding::Decl(kind)));
        }
        if prelude::lookup(name).is_some() {
            return Some((MType::any_function(), Binding::Builtin));
        }
        None
    }

    fn func_type(&self, f: &FuncDecl) -> MType {
        let params = f
            .params
            .iter()
            .map(|p| resolve_type(&p.ty, &self.decls).unwrap_or(MType::Unknown))
            .collect();
        let result = f
            .ret
            .as_ref()
            .map(|r| resolve_type(r, &self.decls).unwrap_or(MType::Unknown))
            .unwrap_or(MType::Unknown);
        MType::Function {
            params: Some(params),
            result: Box::new(result),
        }
    }

    fn expr(&mut self, e: &Expr) -> MType {
        let ty = self.expr_inner(e);
        self.types.insert(e.span, ty.clone());
        ty
    }

    fn expr_inner(&mut self, e: &Expr) -> MType {
        match &e.kind {
            ExprKind::Int(_) => MType::Int,
            ExprKind::Float(_) => MType::Float,
            ExprKind::Str(_) => MType::String,
            ExprKind::Bool(_) => MType::Bool,
            ExprKind::Ident(name) => match self.lookup(name) {
                Some((ty, binding)) => {
                    self.bindings.insert(e.span, binding);
                    ty
                }
                None => {
                    self.error("E001", format!("unknown name `{name}`"), e.span);
                    MType::Unknown
                }
            },
            ExprKind::List(items) => {
                let tys: Vec<MType> = items.iter().map(|i| self.expr(i)).collect();
                let elem = match tys.split_first() {
                    Some((first, rest)) if rest.iter().all(|t| t == first) => first.clone(),
                    _ => MType::Unknown,
                };
                MType::list(elem)
            }
            ExprKind::Record(pairs) => {
                let mut fields = BTreeMap::new();
                for (k, v) in pairs {
                    let t = self.expr(v);
                    fields.insert(k.name.clone(), t);
                }
                MType::Record {
                    fields,
                    open: false,
                }
            }
            ExprKind::Member { object, name } => {
                let obj = self.expr(object);
                match obj {
                    MType::Record { fields, .. } => {
                        fields.get(&name.name).cloned().unwrap_or(MType::Unknown)
                    }
                    MType::Batch => MType::Tensor,
                    _ => MType::Unknown,
                }
            }
            ExprKind::Index { object, index } => {
                let obj = self.expr(object);
                self.expr(index);
                match obj {
                    MType::List(elem) => *elem,
                    _ => MType::Unknown,
                }
            }
            ExprKind::Unary { op, operand } => {
                let t = self.expr(operand);
                match op {
                    UnOp::Not => MType::Bool,
                    UnOp::Neg if t.is_numeric() || t == MType::Tensor => t,
                    UnOp::Neg => MType::Unknown,
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                binary_type(*op, &l, &r)
            }
            ExprKind::Call { callee, args } => self.call(e, callee, args),
        }
    }

    fn call(&mut self, _whole: &Expr, callee: &Expr, args: &[Arg]) -> MType {
        let arg_types: Vec<MType> = args.iter().map(|a| self.expr(&a.value)).collect();
        let positional = args.iter().filter(|a| a.name.is_none()).count();
        let named: Vec<&Ident> = args.iter().filter_map(|a| a.name.as_ref()).collect();

        let ExprKind::Ident(name) = &callee.kind else {
            self.expr(callee);
            return MType::Unknown;
        };
        let (callee_ty, binding) = match self.lookup(name) {
            Some(found) => found,
            None => {
                self.error("E001", format!("unknown name `{name}`"), callee.span);
                return MType::Unknown;
            }
        };
        self.bindings.insert(callee.span, binding);
        self.types.insert(callee.span, callee_ty.clone());
        match binding {
            Binding::Builtin => {
                let sig = prelude::lookup(name).expect("builtin binding");
                self.builtin_call(sig, callee.span, args, &arg_types, positional)
            }
            Binding::Func => {
                let f = self.funcs[name.as_str()];
                self.func_call(f, callee.span, args, &arg_types)
            }
            Binding::Decl(_) => {
                if positional > 0 {
                    let first = args.iter().find(|a| a.name.is_none()).unwrap();
                    let msg = format!(
                        "constructor `{name}` takes only named config overrides, found {positional} positional argument(s)"
                    );
                    self.error("E002", msg, first.span);
                }
                let fields: HashSet<&str> = self
                    .chain_fields(name)
                    .iter()
                    .map(|f| f.name.name.as_str())
                    .collect();
                let mut seen = HashSet::new();
                for n in named {
                    if !fields.contains(n.name.as_str()) {
                        let msg = format!("`{name}` has no config field named `{}`", n.name);
                        self.error("E003", msg, n.span);
                    } else if !seen.insert(n.name.as_str()) {
                        let msg = format!("override `{}` given twice", n.name);
                        self.error("E002", msg, n.span);
                    }
                }
                self.decls.instance_type(name)
            }
            _ => match callee_ty {
                MType::Function { result, .. } => *result,
                _ => MType::Unknown,
            },
        }
    }

    fn builtin_call(
        &mut self,
        sig: &BuiltinSig,
        at: SourceSpan,
        args: &[Arg],
        arg_types: &[MType],
        positional: usize,
    ) -> MType {
        // The table binds positional arguments first, then named ones.
        let order: Vec<usize> = (0..args.len())
            .filter(|&i| args[i].name.is_none())
            .chain((0..args.len()).filter(|&i| args[i].name.is_some()))
            .collect();
        let named: Vec<&str> = order[positional..]
            .iter()
            .map(|&i| args[i].name.as_ref().unwrap().name.as_str())
            .collect();
        match prelude::bind(sig, positional, &named) {
            Ok(slots) => {
                for (slot, &i) in slots.iter().zip(&order) {
                    let ty = match slot {
                        Slot::Param(p) => sig.params[*p].ty,
                        Slot::NamedOnly(p) => sig.named_only[*p].ty,
                        Slot::Rest => sig.variadic.unwrap().1,
                    };
                    if !ty.accepts(&arg_types[i], &self.decls) {
                        let msg = format!(
                            "argument to `{}` expects {}, found {}",
                            sig.name,
                            describe_ty(ty),
                            arg_types[i]
                        );
                        self.error("E004", msg, args[i].value.span);
                    }
                }
            }
            Err(err) => {
                let span = match &err {
                    prelude::BindError::UnknownNamed(n) | prelude::BindError::Duplicate(n) => args
                        .iter()
                        .filter_map(|a| a.name.as_ref())
                        .find(|a| &a.name == n)
                        .map_or(at, |a| a.span),
                    _ => at,
                };
                self.error(err.code(), err.message(sig.name), span);
            }
        }
        sig.result(positional)
    }

    fn func_call(
        &mut self,
        f: &FuncDecl,
        at: SourceSpan,
        args: &[Arg],
        arg_types: &[MType],
    ) -> MType {
        let name = &f.name.name;
        let mut bound: Vec<Option<usize>> = vec![None; f.params.len()];
        let mut next = 0;
        for (i, a) in args.iter().enumerate() {
            let slot = match &a.name {
                None => {
                    let s = next;
                    next += 1;
                    if s >= f.params.len() {
                        let found = args.iter().filter(|a| a.name.is_none()).count();
                        let msg = format!(
                            "`{name}` takes {} argument(s), found {found}",
                            f.params.len()
                        );
                        self.error("E002", msg, a.span);
                        return self.func_result(f);
                    }
                    s
                }
                Some(n) => match f.params.iter().position(|p| p.name.name == n.name) {
                    Some(s) => s,
                    None => {
                        let msg = format!("`{name}` has no parameter named `{}`", n.name);
                        self.error("E003", msg, n.span);
                        continue;
                    }
                },
            };
            if bound[slot].is_some() {
                let msg = format!("argument `{}` of `{name}` given twice", f.params[slot].name.name);
                self.error("E002", msg, a.span);
                continue;
            }
            bound[slot] = Some(i);
        }
        for (p, b) in f.params.iter().zip(&bound) {
            match b {
                None => {
                    let msg = format!("`{name}` is missing required argument `{}`", p.name.name);
                    self.error("E002", msg, at);
                }
                Some(i) => {
                    let expected = resolve_type(&p.ty, &self.decls).unwrap_or(MType::Unknown);
                    if !self.decls.subtype_of(&arg_types[*i], &expected) {
                        let msg = format!(
                            "parameter `{}` of `{name}` expects {expected}, found {}",
                            p.name.name, arg_types[*i]
                        );
                        self.error("E004", msg, args[*i].value.span);
                    }
                }
            }
        }
        self.func_result(f)
    }

    fn func_result(&self, f: &FuncDecl) -> MType {
        f.ret
            .as_ref()
            .map(|r| resolve_type(r, &self.decls).unwrap_or(MType::Unknown))
            .unwrap_or(MType::Unknown)
    }
}

fn describe_ty(t: prelude::Ty) -> String {
    match t {
        prelude::Ty::Num => "Int or Float".to_string(),
        other => other.to_mtype().to_string(),
    }
}

fn binary_type(op: BinOp, l: &MType, r: &MType) -> MType {
    use BinOp::*;
    match op {
        Or | And | Eq | Ne | Lt | Le | Gt | Ge => MType::Bool,
        Add | Sub | Mul | Div | Rem => match (l, r) {
            (MType::Int, MType::Int) => MType::Int,
            (MType::Int | MType::Float, MType::Int | MType::Float) => MType::Float,
            (MType::String, MType::String) if op == Add => MType::String,
            (MType::Tensor, _) | (_, MType::Tensor) if op != Rem => MType::Tensor,
            _ => MType::Unknown,
        },
    }
}

// ---- program-level scans ------------------------------------------------

/// Globals that function bodies and field expressions may read: those
/// assigned unconditionally at top level before the first statement that
/// can run user code.
pub fn body_globals(program: &Program) -> Vec<(String, MType)> {
    let mut out: Vec<(String, MType)> = Vec::new();
    for item in &program.items {
        let Item::Stmt(s) = item else { continue };
        if stmt_may_run_user_code(s) {
            break;
        }
        if let StmtKind::Assign { target, .. } = &s.kind {
            if let ExprKind::Ident(name) = &target.kind {
                if !out.iter().any(|(n, _)| n == name) {
                    out.push((name.clone(), MType::Unknown));
                }
            }
        }
    }
    out
}

fn stmt_may_run_user_code(s: &Stmt) -> bool {
    let mut found = false;
    visit_stmt(s, &mut |e| {
        if let ExprKind::Call { callee, .. } = &e.kind {
            let safe = match &callee.kind {
                ExprKind::Ident(n) => {
                    prelude::lookup(n).is_some() && !RUNS_FORWARD.contains(&n.as_str())
                }
                ExprKind::Member { name, .. } => METHODS
                    .iter()
                    .any(|(_, ms)| ms.contains(&name.name.as_str())),
                _ => false,
            };
            found |= !safe;
        }
    });
    found
}

fn visit_stmt(s: &Stmt, f: &mut dyn FnMut(&Expr)) {
    match &s.kind {
        StmtKind::For { iter, body, .. } => {
            visit_expr(iter, f);
            body.stmts.iter().for_each(|s| visit_stmt(s, f));
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            visit_expr(cond, f);
            then.stmts.iter().for_each(|s| visit_stmt(s, f));
            match otherwise {
                Some(ElseBranch::If(inner)) => visit_stmt(inner, f),
                Some(ElseBranch::Block(b)) => b.stmts.iter().for_each(|s| visit_stmt(s, f)),
                None => {}
            }
        }
        StmtKind::Return(Some(e)) | StmtKind::Expr(e) => visit_expr(e, f),
        StmtKind::Return(None) => {}
        StmtKind::Assign { target, value } => {
            visit_expr(target, f);
            visit_expr(value, f);
        }
    }
}

fn visit_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Call { callee, args } => {
            visit_expr(callee, f);
            args.iter().for_each(|a| visit_expr(&a.value, f));
        }
        ExprKind::Member { object, .. } => visit_expr(object, f),
        ExprKind::Index { object, index } => {
            visit_expr(object, f);
            visit_expr(index, f);
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        ExprKind::Unary { operand, .. } => visit_expr(operand, f),
        ExprKind::List(items) => items.iter().for_each(|i| visit_expr(i, f)),
        ExprKind::Record(pairs) => pairs.iter().for_each(|(_, v)| visit_expr(v, f)),
        ExprKind::Ident(_)
        | ExprKind::Int(_)
        | ExprKind::Float(_)
        | ExprKind::Str(_)
        | ExprKind::Bool(_) => {}
    }
}

fn assigns_name(b: &Block, name: &str) -> bool {
    let mut hit = false;
    for s in &b.stmts {
        visit_binders(s, &mut |n| hit |= n == name);
    }
    hit
}

/// Calls `f` with every name bound by an assignment or `for` in `s`.
fn visit_binders<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a str)) {
    match &s.kind {
        StmtKind::For { var, body, .. } => {
            f(&var.name);
            body.stmts.iter().for_each(|s| visit_binders(s, f));
        }
        StmtKind::If {
            then, otherwise, ..
        } => {
            then.stmts.iter().for_each(|s| visit_binders(s, f));
            match otherwise {
                Some(ElseBranch::If(inner)) => visit_binders(inner, f),
                Some(ElseBranch::Block(b)) => b.stmts.iter().for_each(|s| visit_binders(s, f)),
                None => {}
            }
        }
        StmtKind::Assign { target, .. } => {
            if let ExprKind::Ident(n) = &target.kind {
                f(n);
            }
        }
        _ => {}
    }
}

fn count_bindings<'a>(program: &'a Program, counts: &mut HashMap<&'a str, usize>) {
    let mut bump = |n: &'a str| *counts.entry(n).or_insert(0) += 1;
    for item in &program.items {
        match item {
            Item::Stmt(s) => visit_binders(s, &mut bump),
            Item::Func(func) => {
                for p in &func.params {
                    bump(&p.name.name);
                }
                func.body.stmts.iter().for_each(|s| visit_binders(s, &mut bump));
            }
            _ => {}
        }
    }
}
