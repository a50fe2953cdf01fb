use std::cell::RefCell;
use std::collections::HashMap;
use std::io::Write;
use std::rc::{Rc, Weak};

use mlang_model::{Mode, Store};
use mlang_sema::{prelude, resolve_type, DeclKind, DeclTable, MType};
use mlang_syntax::ast::*;
use mlang_syntax::SourceSpan;
use mlang_tensor::{SplitMix64, Tensor};

use crate::decl::DeclDef;
use crate::error::{type_error, value_error, ErrorKind, Result, RuntimeError};
use crate::value::{LossKind, Value};

/// Deepest allowed nesting of user function calls.
pub const MAX_DEPTH: usize = 200;

pub const MAIN: &str = "<main>";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub store: Store,
    pub seed: u64,
}

/// One evaluated call argument.
#[derive(Clone)]
pub struct ArgVal {
    pub name: Option<String>,
    pub value: Value,
    pub span: SourceSpan,
}

impl ArgVal {
    pub fn positional(value: Value) -> ArgVal {
        ArgVal {
            name: None,
            value,
            span: SourceSpan::default(),
        }
    }

    pub fn named(name: &str, value: Value) -> ArgVal {
        ArgVal {
            name: Some(name.to_string()),
            value,
            span: SourceSpan::default(),
        }
    }
}

/// Local scopes of the running function or top-level block. An empty stack
/// means top level, where assignments go to the globals.
#[derive(Default)]
pub(crate) struct Env {
    scopes: Vec<HashMap<String, Value>>,
}

impl Env {
    pub(crate) fn with_scope(scope: HashMap<String, Value>) -> Env {
        Env { scopes: vec![scope] }
    }

    pub(crate) fn define(&mut self, name: &str, v: Value) {
        if let Some(top) = self.scopes.last_mut() {
            top.insert(name.to_string(), v);
        }
    }
}

pub(crate) enum Flow {
    Next,
    Return(Value),
}

pub(crate) struct Inner {
    pub(crate) store: Store,
    pub(crate) seed: u64,
    pub(crate) rng: RefCell<SplitMix64>,
    out: RefCell<Box<dyn Write>>,
    globals: RefCell<HashMap<String, Value>>,
    global_order: RefCell<Vec<String>>,
    pub(crate) funcs: RefCell<HashMap<String, Rc<FuncDecl>>>,
    pub(crate) decls: RefCell<HashMap<String, Rc<DeclDef>>>,
    pub(crate) decl_table: RefCell<DeclTable>,
    stack: RefCell<Vec<String>>,
    pub(crate) loss_trace: RefCell<Vec<f32>>,
    pub(crate) me: Weak<Inner>,
}

impl Inner {
    pub(crate) fn new(cfg: RunConfig, out: Box<dyn Write>) -> Rc<Inner> {
        Rc::new_cyclic(|me| Inner {
            store: cfg.store,
            seed: cfg.seed,
            rng: RefCell::new(SplitMix64::new(cfg.seed)),
            out: RefCell::new(out),
            globals: RefCell::new(HashMap::new()),
            global_order: RefCell::new(Vec::new()),
            funcs: RefCell::new(HashMap::new()),
            decls: RefCell::new(HashMap::new()),
            decl_table: RefCell::new(DeclTable::default()),
            stack: RefCell::new(vec![MAIN.to_string()]),
            loss_trace: RefCell::new(Vec::new()),
            me: me.clone(),
        })
    }

    pub(crate) fn current_fn(&self) -> String {
        self.stack.borrow().last().cloned().unwrap_or_else(|| MAIN.into())
    }

    pub(crate) fn write_line(&self, line: &str) -> Result<()> {
        let mut out = self.out.borrow_mut();
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(|e| RuntimeError::new(ErrorKind::IoError, format!("cannot write output: {e}")))
    }

    // ---- program level ----------------------------------------------------

    pub(crate) fn register(&self, program: &Program) {
        for item in &program.items {
            match item {
                Item::Func(f) => {
                    self.funcs.borrow_mut().insert(f.name.name.clone(), Rc::new(f.clone()));
                }
                Item::Model(d) => self.register_decl(DeclDef {
                    name: d.name.name.clone(),
                    kind: DeclKind::Model,
                    parent: d.parent.as_ref().map(|p| p.name.clone()),
                    fields: d.fields.clone(),
                }),
                Item::Metamodel(d) => self.register_decl(DeclDef {
                    name: d.name.name.clone(),
                    kind: DeclKind::Metamodel,
                    parent: None,
                    fields: d.fields.clone(),
                }),
                Item::Import(_) | Item::Stmt(_) => {}
            }
        }
    }

    fn register_decl(&self, d: DeclDef) {
        self.decl_table.borrow_mut().insert(&d.name, d.kind, d.parent.as_deref());
        self.decls.borrow_mut().insert(d.name.clone(), Rc::new(d));
    }

    /// Registers declarations, then runs the top-level statements in order.
    /// Returns the value of the last statement when it is a bare expression.
    pub(crate) fn exec_program(&self, program: &Program) -> Result<Option<Value>> {
        self.register(program);
        let mut env = Env::default();
        let mut last = None;
        for item in &program.items {
            let Item::Stmt(s) = item else { continue };
            last = None;
            if let StmtKind::Expr(e) = &s.kind {
                last = Some(self.eval(e, &mut env)?);
                continue;
            }
            if let Flow::Return(_) = self.stmt(s, &mut env)? {
                break;
            }
        }
        Ok(last)
    }

    // ---- variables --------------------------------------------------------

    pub(crate) fn global(&self, name: &str) -> Option<Value> {
        self.globals.borrow().get(name).cloned()
    }

    pub(crate) fn set_global(&self, name: &str, v: Value) {
        let mut g = self.globals.borrow_mut();
        if g.insert(name.to_string(), v).is_none() {
            self.global_order.borrow_mut().push(name.to_string());
        }
    }

    pub(crate) fn global_types(&self) -> Vec<(String, MType)> {
        let g = self.globals.borrow();
        let decls = self.decl_table.borrow();
        let mut out: Vec<(String, MType)> = self
            .global_order
            .borrow()
            .iter()
            .map(|n| (n.clone(), g[n].mtype(&decls)))
            .collect();
        // Earlier lines' functions and constructors stay callable.
        let mut extra: Vec<String> = self.funcs.borrow().keys().cloned().collect();
        extra.extend(self.decls.borrow().keys().cloned());
        extra.sort();
        for n in extra {
            if !out.iter().any(|(m, _)| *m == n) {
                out.push((n, MType::any_function()));
            }
        }
        out
    }

    pub(crate) fn lookup(&self, name: &str, env: &Env) -> Option<Value> {
        for scope in env.scopes.iter().rev() {
            if let Some(v) = scope.get(name) {
                return Some(v.clone());
            }
        }
        if let Some(v) = self.global(name) {
            return Some(v);
        }
        if let Some(f) = self.funcs.borrow().get(name) {
            return Some(Value::Function(f.clone()));
        }
        if self.decls.borrow().contains_key(name) {
            return Some(Value::Decl(Rc::from(name)));
        }
        prelude::lookup(name).map(Value::Builtin)
    }

    fn assign_name(&self, name: &str, v: Value, env: &mut Env) {
        for scope in env.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = v;
                return;
            }
        }
        if env.scopes.is_empty() || self.globals.borrow().contains_key(name) {
            self.set_global(name, v);
        } else {
            env.scopes.last_mut().unwrap().insert(name.to_string(), v);
        }
    }

    // ---- statements -------------------------------------------------------

    fn block(&self, b: &Block, env: &mut Env, bind: Option<(&str, Value)>) -> Result<Flow> {
        let mut scope = HashMap::new();
        if let Some((n, v)) = bind {
            scope.insert(n.to_string(), v);
        }
        env.scopes.push(scope);
        let mut flow = Ok(Flow::Next);
        for s in &b.stmts {
            match self.stmt(s, env) {
                Ok(Flow::Next) => {}
                other => {
                    flow = other;
                    break;
                }
            }
        }
        env.scopes.pop();
        flow
    }

    pub(crate) fn stmt(&self, s: &Stmt, env: &mut Env) -> Result<Flow> {
        match &s.kind {
            StmtKind::Expr(e) => {
                self.eval(e, env)?;
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, env)?;
                self.store_to(target, v, env)?;
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, env)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.eval(cond, env)?;
                let c = c.truthy().map_err(|e| self.here(e, cond.span))?;
                if c {
                    return self.block(then, env, None);
                }
                match otherwise {
                    Some(ElseBranch::If(inner)) => return self.stmt(inner, env),
                    Some(ElseBranch::Block(b)) => return self.block(b, env, None),
                    None => {}
                }
            }
            StmtKind::For { var, iter, body } => {
                let it = self.eval(iter, env)?;
                return self.for_loop(&var.name, it, iter.span, body, env);
            }
        }
        Ok(Flow::Next)
    }

    fn for_loop(&self, var: &str, it: Value, span: SourceSpan, body: &Block, env: &mut Env) -> Result<Flow> {
        let mut run = |v: Value| -> Result<Option<Flow>> {
            match self.block(body, env, Some((var, v)))? {
                Flow::Next => Ok(None),
                ret => Ok(Some(ret)),
            }
        };
        match it {
            Value::Range(a, b) => {
                for i in a..b {
                    if let Some(f) = run(Value::Int(i))? {
                        return Ok(f);
                    }
                }
            }
            Value::List(items) => {
                let snapshot = items.borrow().clone();
                for v in snapshot {
                    if let Some(f) = run(v)? {
                        return Ok(f);
                    }
                }
            }
            Value::Dataset(ds) => {
                for rows in ds.batch_rows() {
                    let b = Value::Batch(Rc::new(ds.batch(&rows)));
                    if let Some(f) = run(b)? {
                        return Ok(f);
                    }
                }
            }
            other => {
                let e = type_error(format!("cannot iterate over {}", other.type_name()));
                return Err(self.here(e, span));
            }
        }
        Ok(Flow::Next)
    }

    fn store_to(&self, target: &Expr, v: Value, env: &mut Env) -> Result<()> {
        match &target.kind {
            ExprKind::Ident(name) => {
                self.assign_name(name, v, env);
                Ok(())
            }
            ExprKind::Member { object, name } => {
                let obj = self.eval(object, env)?;
                match obj {
                    Value::Record(r) => {
                        r.borrow_mut().insert(name.name.clone(), v);
                        Ok(())
                    }
                    other => {
                        let e = type_error(format!("cannot assign field `{}` on {}", name.name, other.type_name()));
                        Err(self.here(e, target.span))
                    }
                }
            }
            ExprKind::Index { object, index } => {
                let obj = self.eval(object, env)?;
                let idx = self.eval(index, env)?;
                match (&obj, &idx) {
                    (Value::List(items), Value::Int(i)) => {
                        let mut items = items.borrow_mut();
                        let n = items.len();
                        let slot = usize::try_from(*i)
                            .ok()
                            .filter(|&i| i < n)
                            .ok_or_else(|| self.here(out_of_range(*i, n), index.span))?;
                        items[slot] = v;
                        Ok(())
                    }
                    (Value::Record(r), Value::Str(k)) => {
                        r.borrow_mut().insert(k.to_string(), v);
                        Ok(())
                    }
                    _ => {
                        let e = type_error(format!(
                            "cannot assign to {} indexed by {}",
                            obj.type_name(),
                            idx.type_name()
                        ));
                        Err(self.here(e, target.span))
                    }
                }
            }
            _ => Err(self.here(type_error("invalid assignment target"), target.span)),
        }
    }

    // ---- expressions ------------------------------------------------------

    /// Attaches the current frame to an error that has none yet.
    pub(crate) fn here(&self, e: RuntimeError, span: SourceSpan) -> RuntimeError {
        if e.frames.is_empty() {
            e.at(&self.current_fn(), span)
        } else {
            e
        }
    }

    pub(crate) fn eval(&self, e: &Expr, env: &mut Env) -> Result<Value> {
        self.eval_inner(e, env).map_err(|err| self.here(err, e.span))
    }

    fn eval_inner(&self, e: &Expr, env: &mut Env) -> Result<Value> {
        Ok(match &e.kind {
            ExprKind::Int(i) => Value::Int(*i),
            ExprKind::Float(f) => Value::Float(*f),
            ExprKind::Str(s) => Value::str(s),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Ident(name) => self
                .lookup(name, env)
                .ok_or_else(|| RuntimeError::new(ErrorKind::NameError, format!("unknown name `{name}`")))?,
            ExprKind::List(items) => {
                let vs = items.iter().map(|i| self.eval(i, env)).collect::<Result<Vec<_>>>()?;
                Value::list(vs)
            }
            ExprKind::Record(pairs) => {
                let mut r = crate::value::Record::new();
                for (k, v) in pairs {
                    let v = self.eval(v, env)?;
                    r.insert(k.name.clone(), v);
                }
                Value::record(r)
            }
            ExprKind::Member { object, name } => {
                let obj = self.eval(object, env)?;
                self.member(&obj, &name.name)?
            }
            ExprKind::Index { object, index } => {
                let obj = self.eval(object, env)?;
                let idx = self.eval(index, env)?;
                index_value(&obj, &idx)?
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand, env)?;
                unary(*op, v)?
            }
            ExprKind::Binary { op, lhs, rhs } => match op {
                BinOp::And | BinOp::Or => {
                    let l = self.eval(lhs, env)?.truthy()?;
                    if (*op == BinOp::And) != l {
                        Value::Bool(l)
                    } else {
                        let r = self.eval(rhs, env)?;
                        Value::Bool(r.truthy().map_err(|e| self.here(e, rhs.span))?)
                    }
                }
                _ => {
                    let l = self.eval(lhs, env)?;
                    let r = self.eval(rhs, env)?;
                    binary(*op, l, r)?
                }
            },
            ExprKind::Call { callee, args } => {
                if let ExprKind::Member { object, name } = &callee.kind {
                    let recv = self.eval(object, env)?;
                    let args = self.eval_args(args, env)?;
                    return self.call_method(&recv, &name.name, args, e.span);
                }
                let f = self.eval(callee, env)?;
                let args = self.eval_args(args, env)?;
                self.call_value(&f, args, e.span)?
            }
        })
    }

    fn eval_args(&self, args: &[Arg], env: &mut Env) -> Result<Vec<ArgVal>> {
        args.iter()
            .map(|a| {
                Ok(ArgVal {
                    name: a.name.as_ref().map(|n| n.name.clone()),
                    value: self.eval(&a.value, env)?,
                    span: a.value.span,
                })
            })
            .collect()
    }

    fn member(&self, obj: &Value, name: &str) -> Result<Value> {
        match obj {
            Value::Record(r) => r.borrow().get(name).cloned().ok_or_else(|| {
                let keys: Vec<String> = r.borrow().keys().cloned().collect();
                RuntimeError::new(
                    ErrorKind::NameError,
                    format!("record has no field `{name}`; fields: {}", keys.join(", ")),
                )
            }),
            Value::Batch(b) => b.get(name).cloned().map(Value::Tensor).ok_or_else(|| {
                RuntimeError::new(
                    ErrorKind::NameError,
                    format!("batch has no column `{name}`; columns: {}", b.names().join(", ")),
                )
            }),
            Value::Model(m) => {
                let m = m.borrow();
                m.config.get(name).map(Value::from_config).ok_or_else(|| {
                    let keys: Vec<&str> = m.config.keys().map(String::as_str).collect();
                    RuntimeError::new(
                        ErrorKind::NameError,
                        format!(
                            "model `{}` has no config field `{name}`; config: {}; methods: parameters, save",
                            m.name,
                            if keys.is_empty() { "(none)".to_string() } else { keys.join(", ") }
                        ),
                    )
                })
            }
            Value::Dataset(_) => Err(type_error(format!(
                "Dataset has no field `{name}`: datasets expose only methods (withBatchSize, len); iterate to get batches"
            ))),
            other => Err(type_error(format!("{} has no field `{name}`", other.type_name()))),
        }
    }

    // ---- calls ------------------------------------------------------------

    pub(crate) fn call_value(&self, f: &Value, args: Vec<ArgVal>, span: SourceSpan) -> Result<Value> {
        match f {
            Value::Function(decl) => self.call_user(decl, args, span),
            Value::Builtin(sig) => self.call_builtin(sig, args, span),
            Value::Decl(name) => self.instantiate(name, args),
            Value::Model(m) => {
                let [x] = positional_only::<1>("model", args)?;
                let Value::Tensor(x) = x else {
                    return Err(type_error(format!("a model takes a Tensor, found {}", x.type_name())));
                };
                let out = m.borrow().forward(&x, Mode::Train)?;
                Ok(Value::Tensor(out))
            }
            Value::LossFn(kind) => {
                let [out, target] = positional_only::<2>("loss function", args)?;
                let (Value::Tensor(out), Value::Tensor(target)) = (&out, &target) else {
                    return Err(type_error(format!(
                        "a loss function takes (Tensor, Tensor), found ({}, {})",
                        out.type_name(),
                        target.type_name()
                    )));
                };
                Ok(Value::Tensor(apply_loss(*kind, out, target)?))
            }
            other => Err(type_error(format!("cannot call a value of type {}", other.type_name()))),
        }
    }

    pub(crate) fn call_user(&self, decl: &Rc<FuncDecl>, args: Vec<ArgVal>, span: SourceSpan) -> Result<Value> {
        let name = &decl.name.name;
        let params = &decl.params;
        let mut slots: Vec<Option<Value>> = vec![None; params.len()];
        let mut next = 0;
        let positional = args.iter().filter(|a| a.name.is_none()).count();
        for a in args {
            let i = match &a.name {
                None => {
                    if next >= params.len() {
                        return Err(RuntimeError::new(
                            ErrorKind::ArityError,
                            format!("`{name}` takes {} argument(s), found {positional}", params.len()),
                        ));
                    }
                    next += 1;
                    next - 1
                }
                Some(n) => params.iter().position(|p| p.name.name == *n).ok_or_else(|| {
                    RuntimeError::new(ErrorKind::ArityError, format!("`{name}` has no parameter named `{n}`"))
                })?,
            };
            if slots[i].is_some() {
                return Err(RuntimeError::new(
                    ErrorKind::ArityError,
                    format!("argument `{}` of `{name}` given twice", params[i].name.name),
                ));
            }
            slots[i] = Some(a.value);
        }
        let mut scope = HashMap::new();
        for (p, v) in params.iter().zip(slots) {
            let v = v.ok_or_else(|| {
                RuntimeError::new(
                    ErrorKind::ArityError,
                    format!("`{name}` is missing required argument `{}`", p.name.name),
                )
            })?;
            let ty = self.annotation(&p.ty);
            if !v.conforms(&ty, &self.decl_table.borrow()) {
                return Err(type_error(format!(
                    "parameter `{}` of `{name}` expects {ty}, found {}",
                    p.name.name,
                    v.describe()
                )));
            }
            scope.insert(p.name.name.clone(), v);
        }
        if self.stack.borrow().len() > MAX_DEPTH {
            return Err(RuntimeError::new(
                ErrorKind::RecursionLimit,
                format!("call depth exceeds {MAX_DEPTH} in `{name}`"),
            ));
        }
        let caller = self.current_fn();
        self.stack.borrow_mut().push(name.clone());
        let mut env = Env::with_scope(scope);
        let flow = self.block(&decl.body, &mut env, None);
        self.stack.borrow_mut().pop();
        let result = match flow.map_err(|e| e.at(&caller, span))? {
            Flow::Return(v) => v,
            Flow::Next => Value::Unit,
        };
        if let Some(r) = &decl.ret {
            let ty = self.annotation(r);
            if !result.conforms(&ty, &self.decl_table.borrow()) {
                return Err(type_error(format!(
                    "`{name}` must return {ty}, returned {}",
                    result.describe()
                )));
            }
        }
        Ok(result)
    }

    fn annotation(&self, t: &TypeRef) -> MType {
        resolve_type(t, &self.decl_table.borrow()).unwrap_or(MType::Unknown)
    }
}

pub(crate) fn out_of_range(i: i64, n: usize) -> RuntimeError {
    RuntimeError::new(ErrorKind::IndexOutOfRange, format!("index {i} out of range for length {n}"))
}

/// Exactly `N` positional arguments.
pub(crate) fn positional_only<const N: usize>(what: &str, args: Vec<ArgVal>) -> Result<[Value; N]> {
    if let Some(a) = args.iter().find(|a| a.name.is_some()) {
        return Err(RuntimeError::new(
            ErrorKind::ArityError,
            format!("{what} takes no named argument `{}`", a.name.as_deref().unwrap_or("")),
        ));
    }
    let n = args.len();
    let vals: Vec<Value> = args.into_iter().map(|a| a.value).collect();
    vals.try_into()
        .map_err(|_| RuntimeError::new(ErrorKind::ArityError, format!("{what} takes {N} argument(s), found {n}")))
}

pub(crate) fn apply_loss(kind: LossKind, out: &Tensor, target: &Tensor) -> Result<Tensor> {
    Ok(match kind {
        LossKind::CrossEntropy => {
            if out.rank() != 2 {
                return Err(RuntimeError::new(
                    ErrorKind::ShapeMismatch,
                    format!("cross-entropy expects (batch, classes) logits, found {:?}", out.shape()),
                ));
            }
            let targets = target.to_indices("label", out.shape()[1])?;
            out.cross_entropy(&targets)?
        }
        LossKind::Mse => out.mse(target)?,
    })
}

fn index_value(obj: &Value, idx: &Value) -> Result<Value> {
    match (obj, idx) {
        (Value::List(items), Value::Int(i)) => {
            let items = items.borrow();
            usize::try_from(*i)
                .ok()
                .and_then(|u| items.get(u).cloned())
                .ok_or_else(|| out_of_range(*i, items.len()))
        }
        (Value::Record(r), Value::Str(k)) => r
            .borrow()
            .get(&**k)
            .cloned()
            .ok_or_else(|| RuntimeError::new(ErrorKind::NameError, format!("record has no field `{k}`"))),
        (Value::Str(s), Value::Int(i)) => {
            let n = s.chars().count();
            usize::try_from(*i)
                .ok()
                .and_then(|u| s.chars().nth(u))
                .map(|c| Value::str(&c.to_string()))
                .ok_or_else(|| out_of_range(*i, n))
        }
        _ => Err(type_error(format!(
            "cannot index {} with {}",
            obj.type_name(),
            idx.type_name()
        ))),
    }
}

fn unary(op: UnOp, v: Value) -> Result<Value> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(i)) => i
            .checked_neg()
            .map(Value::Int)
            .ok_or_else(|| value_error("integer overflow")),
        (UnOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
        (UnOp::Neg, Value::Tensor(t)) => Ok(Value::Tensor(t.neg()?)),
        (op, v) => Err(type_error(format!(
            "cannot apply `{}` to {}",
            op.as_str(),
            v.type_name()
        ))),
    }
}

fn int_arith(op: BinOp, a: i64, b: i64) -> Result<Value> {
    let r = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div | BinOp::Rem if b == 0 => return Err(value_error("integer division by zero")),
        // Rust's `/` and `%` truncate toward zero.
        BinOp::Div => a.checked_div(b),
        BinOp::Rem => a.checked_rem(b),
        _ => unreachable!("arithmetic operator"),
    };
    r.map(Value::Int).ok_or_else(|| value_error("integer overflow"))
}

fn float_arith(op: BinOp, a: f64, b: f64) -> Value {
    Value::Float(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        BinOp::Rem => a % b,
        _ => unreachable!("arithmetic operator"),
    })
}

fn tensor_operand(v: &Value) -> Option<Tensor> {
    match v {
        Value::Tensor(t) => Some(t.clone()),
        other => other.as_f64().map(|x| Tensor::scalar(x as f32)),
    }
}

pub(crate) fn binary(op: BinOp, l: Value, r: Value) -> Result<Value> {
    use BinOp::*;
    let mismatch = |l: &Value, r: &Value| {
        type_error(format!(
            "unsupported operands for `{}`: {} and {}",
            op.as_str(),
            l.type_name(),
            r.type_name()
        ))
    };
    match op {
        Eq | Ne => {
            let eq = l.equals(&r).ok_or_else(|| mismatch(&l, &r))?;
            Ok(Value::Bool(eq == (op == Eq)))
        }
        Lt | Le | Gt | Ge => {
            let ord = match (&l, &r) {
                (Value::Int(a), Value::Int(b)) => a.partial_cmp(b),
                (Value::Str(a), Value::Str(b)) => a.partial_cmp(b),
                _ => match (l.as_f64(), r.as_f64()) {
                    (Some(a), Some(b)) => a.partial_cmp(&b),
                    _ => return Err(mismatch(&l, &r)),
                },
            };
            let Some(ord) = ord else {
                return Ok(Value::Bool(false));
            };
            use std::cmp::Ordering::*;
            Ok(Value::Bool(match op {
                Lt => ord == Less,
                Le => ord != Greater,
                Gt => ord == Greater,
                _ => ord != Less,
            }))
        }
        Add | Sub | Mul | Div | Rem => match (&l, &r) {
            (Value::Int(a), Value::Int(b)) => int_arith(op, *a, *b),
            (Value::Str(a), Value::Str(b)) if op == Add => Ok(Value::str(&format!("{a}{b}"))),
            (Value::List(a), Value::List(b)) if op == Add => {
                let mut v = a.borrow().clone();
                v.extend(b.borrow().iter().cloned());
                Ok(Value::list(v))
            }
            (Value::Tensor(_), _) | (_, Value::Tensor(_)) if op != Rem => {
                let (Some(a), Some(b)) = (tensor_operand(&l), tensor_operand(&r)) else {
                    return Err(mismatch(&l, &r));
                };
                let t = match op {
                    Add => a.add(&b)?,
                    Sub => a.sub(&b)?,
                    Mul => a.mul(&b)?,
                    _ => a.div(&b)?,
                };
                Ok(Value::Tensor(t))
            }
            _ => match (l.as_f64(), r.as_f64()) {
                (Some(a), Some(b)) => Ok(float_arith(op, a, b)),
                _ => Err(mismatch(&l, &r)),
            },
        },
        And | Or => unreachable!("short-circuit operators are handled by the caller"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_division_truncates_toward_zero() {
        let div = |a, b| match int_arith(BinOp::Div, a, b).unwrap() {
            Value::Int(i) => i,
            _ => unreachable!(),
        };
        assert_eq!(div(7, 2), 3);
        assert_eq!(div(-7, 2), -3);
        assert_eq!(div(7, -2), -3);
        assert!(int_arith(BinOp::Div, 1, 0).is_err());
        assert!(int_arith(BinOp::Add, i64::MAX, 1).is_err());
    }

    #[test]
    fn mixed_arithmetic_is_float() {
        let v = binary(BinOp::Add, Value::Int(1), Value::Float(0.5)).unwrap();
        assert!(matches!(v, Value::Float(x) if x == 1.5));
        let v = binary(BinOp::Div, Value::Int(1), Value::Float(4.0)).unwrap();
        assert!(matches!(v, Value::Float(x) if x == 0.25));
    }

    #[test]
    fn tensor_scalar_broadcast() {
        let t = Value::Tensor(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let Value::Tensor(r) = binary(BinOp::Mul, t, Value::Int(3)).unwrap() else {
            panic!()
        };
        assert_eq!(r.data(), &[3.0, 6.0]);
    }

    #[test]
    fn comparisons() {
        assert!(matches!(binary(BinOp::Lt, Value::Int(1), Value::Float(1.5)), Ok(Value::Bool(true))));
        assert!(matches!(
            binary(BinOp::Ge, Value::str("b"), Value::str("a")),
            Ok(Value::Bool(true))
        ));
        assert!(binary(BinOp::Lt, Value::Int(1), Value::str("a")).is_err());
    }
}
