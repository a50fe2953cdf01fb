use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;
use mlang_data::{Batch, Dataset};
use mlang_model::{ConfigValue, Model, Provenance};
use mlang_sema::prelude::BuiltinSig;
use mlang_sema::{DeclTable, MType};
use mlang_syntax::ast::FuncDecl;
use mlang_tensor::{DType, Optimizer, Tensor};

use crate::error::{type_error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

pub type Record = IndexMap<String, Value>;

/// A runtime value. Lists, records, models and optimizers are shared
/// references; everything else is immutable.
#[derive(Clone)]
pub enum Value {
    Unit,
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Value>>>),
    Record(Rc<RefCell<Record>>),
    Range(i64, i64),
    Tensor(Tensor),
    Dataset(Rc<Dataset>),
    Batch(Rc<Batch>),
    Model(Rc<RefCell<Model>>),
    Optimizer(Rc<RefCell<Optimizer>>),
    LossFn(LossKind),
    Function(Rc<FuncDecl>),
    Builtin(&'static BuiltinSig),
    /// A model or metamodel declaration; calling it builds an instance.
    Decl(Rc<str>),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn record(fields: Record) -> Value {
        Value::Record(Rc::new(RefCell::new(fields)))
    }

    pub fn model(m: Model) -> Value {
        Value::Model(Rc::new(RefCell::new(m)))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Unit => "Unit",
            Value::Int(_) => "Int",
            Value::Float(_) => "Float",
            Value::Bool(_) => "Bool",
            Value::Str(_) => "String",
            Value::List(_) => "List",
            Value::Record(_) => "Record",
            Value::Range(..) => "Range",
            Value::Tensor(_) => "Tensor",
            Value::Dataset(_) => "Dataset",
            Value::Batch(_) => "Batch",
            Value::Model(_) => "Model",
            Value::Optimizer(_) => "Optimizer",
            Value::LossFn(_) => "LossFn",
            Value::Function(_) => "Function",
            Value::Builtin(_) => "Builtin",
            Value::Decl(_) => "Constructor",
        }
    }

    /// Name for messages; declared models report their declaration.
    pub fn describe(&self) -> String {
        match self {
            Value::Model(m) => match &m.borrow().provenance {
                Provenance::Declared { decl, .. } => decl.clone(),
                _ => "Model".into(),
            },
            other => other.type_name().into(),
        }
    }

    /// Runtime type as the checker sees it.
    pub fn mtype(&self, decls: &DeclTable) -> MType {
        match self {
            Value::Unit => MType::Unit,
            Value::Int(_) => MType::Int,
            Value::Float(_) => MType::Float,
            Value::Bool(_) => MType::Bool,
            Value::Str(_) => MType::String,
            Value::List(items) => {
                let items = items.borrow();
                let elem = match items.split_first() {
                    Some((first, rest)) => {
                        let t = first.mtype(decls);
                        if rest.iter().all(|v| v.mtype(decls) == t) {
                            t
                        } else {
                            MType::Unknown
                        }
                    }
                    None => MType::Unknown,
                };
                MType::list(elem)
            }
            Value::Record(r) => MType::Record {
                fields: r.borrow().iter().map(|(k, v)| (k.clone(), v.mtype(decls))).collect(),
                open: false,
            },
            Value::Range(..) => MType::Range,
            Value::Tensor(_) => MType::Tensor,
            Value::Dataset(_) => MType::Dataset,
            Value::Batch(_) => MType::Batch,
            Value::Model(m) => match &m.borrow().provenance {
                Provenance::Declared { decl, .. } if decls.kind(decl).is_some() => decls.instance_type(decl),
                _ => MType::Model,
            },
            Value::Optimizer(_) => MType::Optimizer,
            Value::LossFn(_) => MType::LossFn,
            Value::Function(_) | Value::Builtin(_) | Value::Decl(_) => MType::any_function(),
        }
    }

    /// Whether this value may be passed where `ty` is annotated.
    pub fn conforms(&self, ty: &MType, decls: &DeclTable) -> bool {
        match (self, ty) {
            (_, MType::Unknown) => true,
            (Value::List(items), MType::List(elem)) => items.borrow().iter().all(|v| v.conforms(elem, decls)),
            (Value::Record(r), MType::Record { fields, open }) => {
                let r = r.borrow();
                fields
                    .iter()
                    .all(|(k, t)| r.get(k).is_some_and(|v| v.conforms(t, decls)))
                    && (*open || r.keys().all(|k| fields.contains_key(k)))
            }
            (Value::Function(_) | Value::Builtin(_) | Value::Decl(_), MType::Function { .. }) => true,
            _ => decls.subtype_of(&self.mtype(decls), ty),
        }
    }

    pub fn truthy(&self) -> Result<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(type_error(format!("expected Bool, found {}", other.type_name()))),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn to_config(&self) -> Option<ConfigValue> {
        Some(match self {
            Value::Int(i) => ConfigValue::Int(*i),
            Value::Float(f) => ConfigValue::Float(*f),
            Value::Bool(b) => ConfigValue::Bool(*b),
            Value::Str(s) => ConfigValue::Str(s.to_string()),
            Value::List(items) => {
                ConfigValue::List(items.borrow().iter().map(|v| v.to_config()).collect::<Option<_>>()?)
            }
            _ => return None,
        })
    }

    pub fn from_config(c: &ConfigValue) -> Value {
        match c {
            ConfigValue::Int(i) => Value::Int(*i),
            ConfigValue::Float(f) => Value::Float(*f),
            ConfigValue::Bool(b) => Value::Bool(*b),
            ConfigValue::Str(s) => Value::str(s),
            ConfigValue::List(items) => Value::list(items.iter().map(Value::from_config).collect()),
        }
    }

    /// Structural equality on data values; `None` when the kinds cannot be
    /// compared.
    pub fn equals(&self, other: &Value) -> Option<bool> {
        Some(match (self, other) {
            (Value::Unit, Value::Unit) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (a, b) if a.as_f64().is_some() && b.as_f64().is_some() => a.as_f64() == b.as_f64(),
            (Value::List(a), Value::List(b)) => {
                let (a, b) = (a.borrow(), b.borrow());
                if a.len() != b.len() {
                    return Some(false);
                }
                for (x, y) in a.iter().zip(b.iter()) {
                    if !x.equals(y)? {
                        return Some(false);
                    }
                }
                true
            }
            (Value::Record(a), Value::Record(b)) => {
                let (a, b) = (a.borrow(), b.borrow());
                if a.len() != b.len() {
                    return Some(false);
                }
                for (k, x) in a.iter() {
                    match b.get(k) {
                        Some(y) if x.equals(y)? => {}
                        _ => return Some(false),
                    }
                }
                true
            }
            (Value::Range(a, b), Value::Range(c, d)) => (a, b) == (c, d),
            (Value::Tensor(a), Value::Tensor(b)) => a.shape() == b.shape() && a.data() == b.data(),
            (Value::Model(a), Value::Model(b)) => Rc::ptr_eq(a, b),
            (Value::Dataset(a), Value::Dataset(b)) => Rc::ptr_eq(a, b),
            (Value::LossFn(a), Value::LossFn(b)) => a == b,
            (Value::Unit | Value::Bool(_) | Value::Str(_) | Value::Int(_) | Value::Float(_), _)
            | (_, Value::Unit | Value::Bool(_) | Value::Str(_) | Value::Int(_) | Value::Float(_)) => false,
            _ => return None,
        })
    }
}

fn write_f32(f: &mut fmt::Formatter<'_>, x: f32, dtype: DType) -> fmt::Result {
    match dtype {
        DType::Int => write!(f, "{}", x as i64),
        DType::F32 => write!(f, "{x:?}"),
    }
}

fn write_tensor(f: &mut fmt::Formatter<'_>, shape: &[usize], data: &[f32], dtype: DType) -> fmt::Result {
    match shape.split_first() {
        None => write_f32(f, data[0], dtype),
        Some((&n, rest)) => {
            let step = rest.iter().product::<usize>();
            f.write_str("[")?;
            for i in 0..n {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_tensor(f, rest, &data[i * step..(i + 1) * step], dtype)?;
            }
            f.write_str("]")
        }
    }
}

/// `print` formatting: strings bare at top level, quoted inside containers.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            other => write!(f, "{other:?}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(&mlang_syntax::quote(s)),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.borrow().iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                f.write_str("]")
            }
            Value::Record(r) => {
                f.write_str("{")?;
                for (i, (k, v)) in r.borrow().iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v:?}")?;
                }
                f.write_str("}")
            }
            Value::Range(a, b) => write!(f, "range({a}, {b})"),
            Value::Tensor(t) => {
                f.write_str("tensor(")?;
                write_tensor(f, t.shape(), t.data(), t.dtype())?;
                f.write_str(")")
            }
            Value::Dataset(d) => {
                write!(f, "<dataset {} rows:", d.len())?;
                for (i, (name, kind)) in d.schema().iter().enumerate() {
                    let sep = if i == 0 { " " } else { ", " };
                    write!(f, "{sep}{name} {kind}")?;
                }
                write!(f, "; batch {}>", d.batch_size())
            }
            Value::Batch(b) => write!(f, "<batch {} rows: {}>", b.len(), b.names().join(", ")),
            Value::Model(m) => {
                let m = m.borrow();
                write!(f, "<model {} ({}), {} weights>", m.name, m.provenance, m.num_weights())
            }
            Value::Optimizer(o) => {
                let o = o.borrow();
                write!(f, "<optimizer {} lr={:?}, {} params>", o.kind.name(), o.lr, o.params().len())
            }
            Value::LossFn(LossKind::CrossEntropy) => f.write_str("<loss cross_entropy>"),
            Value::LossFn(LossKind::Mse) => f.write_str("<loss mse>"),
            Value::Function(d) => write!(f, "<function {}>", d.name.name),
            Value::Builtin(b) => write!(f, "<builtin {}>", b.name),
            Value::Decl(n) => write!(f, "<constructor {n}>"),
        }
    }
}
