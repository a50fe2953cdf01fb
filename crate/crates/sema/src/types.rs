//! Static types and the subtype relation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use mlang_syntax::ast::TypeRef;

#[derive(Debug, Clone, PartialEq)]
pub enum MType {
    Int,
    Float,
    Bool,
    String,
    Unit,
    Tensor,
    Dataset,
    Batch,
    Optimizer,
    LossFn,
    Range,
    /// The builtin supertype of every model.
    Model,
    List(Box<MType>),
    Record {
        fields: BTreeMap<String, MType>,
        open: bool,
    },
    /// `params: None` accepts any arity.
    Function {
        params: Option<Vec<MType>>,
        result: Box<MType>,
    },
    ModelType(String),
    Metamodel(String),
    Unknown,
}

impl MType {
    pub fn list(elem: MType) -> MType {
        MType::List(Box::new(elem))
    }

    pub fn any_record() -> MType {
        MType::Record {
            fields: BTreeMap::new(),
            open: true,
        }
    }

    pub fn any_function() -> MType {
        MType::Function {
            params: None,
            result: Box::new(MType::Unknown),
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, MType::Unknown)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, MType::Int | MType::Float)
    }
}

impl fmt::Display for MType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MType::Int => f.write_str("Int"),
            MType::Float => f.write_str("Float"),
            MType::Bool => f.write_str("Bool"),
            MType::String => f.write_str("String"),
            MType::Unit => f.write_str("Unit"),
            MType::Tensor => f.write_str("Tensor"),
            MType::Dataset => f.write_str("Dataset"),
            MType::Batch => f.write_str("Batch"),
            MType::Optimizer => f.write_str("Optimizer"),
            MType::LossFn => f.write_str("LossFn"),
            MType::Range => f.write_str("Range"),
            MType::Model => f.write_str("Model"),
            MType::List(e) => write!(f, "List<{e}>"),
            MType::Record { fields, open } => {
                f.write_str("{")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                if *open {
                    f.write_str(if fields.is_empty() { ".." } else { ", .." })?;
                }
                f.write_str("}")
            }
            MType::Function { params, result } => {
                match params {
                    None => f.write_str("Function(..)")?,
                    Some(ps) => {
                        f.write_str("Function(")?;
                        for (i, p) in ps.iter().enumerate() {
                            if i > 0 {
                                f.write_str(", ")?;
                            }
                            write!(f, "{p}")?;
                        }
                        f.write_str(")")?;
                    }
                }
                write!(f, " -> {result}")
            }
            MType::ModelType(n) | MType::Metamodel(n) => f.write_str(n),
            MType::Unknown => f.write_str("Unknown"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Model,
    Metamodel,
}

/// Model and metamodel declarations with their `extends` links.
#[derive(Debug, Clone, Default)]
pub struct DeclTable {
    decls: HashMap<String, (DeclKind, Option<String>)>,
}

impl DeclTable {
    pub fn insert(&mut self, name: &str, kind: DeclKind, parent: Option<&str>) {
        self.decls
            .insert(name.to_string(), (kind, parent.map(str::to_string)));
    }

    pub fn kind(&self, name: &str) -> Option<DeclKind> {
        self.decls.get(name).map(|d| d.0)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.decls.get(name).and_then(|d| d.1.as_deref())
    }

    /// `name` followed by its ancestors, stopping at a cycle or unknown parent.
    pub fn chain(&self, name: &str) -> Vec<String> {
        let mut out = vec![name.to_string()];
        let mut cur = name;
        while let Some(p) = self.parent(cur) {
            if out.iter().any(|n| n == p) || self.kind(p).is_none() {
                break;
            }
            out.push(p.to_string());
            cur = p;
        }
        out
    }

    /// The type of an instance of declaration `name`.
    pub fn instance_type(&self, name: &str) -> MType {
        match self.kind(name) {
            Some(DeclKind::Model) => MType::ModelType(name.to_string()),
            Some(DeclKind::Metamodel) => MType::Metamodel(name.to_string()),
            None => MType::Unknown,
        }
    }

    pub fn subtype_of(&self, a: &MType, b: &MType) -> bool {
        use MType::*;
        match (a, b) {
            (Unknown, _) | (_, Unknown) => true,
            (ModelType(_) | Metamodel(_), Model) => true,
            (ModelType(x) | Metamodel(x), ModelType(y) | Metamodel(y)) => {
                // Both sides must agree on which kind of declaration `y` is.
                let target_ok = match b {
                    ModelType(_) => self.kind(y) != Some(DeclKind::Metamodel),
                    _ => self.kind(y) != Some(DeclKind::Model),
                };
                target_ok && self.chain(x).iter().any(|n| n == y)
            }
            (List(x), List(y)) => self.subtype_of(x, y),
            (
                Record {
                    fields: fa,
                    open: _,
                },
                Record {
                    fields: fb,
                    open: ob,
                },
            ) => {
                fb.iter().all(|(k, tb)| {
                    fa.get(k).is_some_and(|ta| self.subtype_of(ta, tb))
                }) && (*ob || fa.keys().all(|k| fb.contains_key(k)))
            }
            (
                Function {
                    params: pa,
                    result: ra,
                },
                Function {
                    params: pb,
                    result: rb,
                },
            ) => {
                let params_ok = match (pa, pb) {
                    (_, None) => true,
                    (None, Some(_)) => false,
                    (Some(pa), Some(pb)) => {
                        pa.len() == pb.len()
                            && pa.iter().zip(pb).all(|(x, y)| self.subtype_of(y, x))
                    }
                };
                params_ok && self.subtype_of(ra, rb)
            }
            _ => a == b,
        }
    }
}

/// Why a type annotation could not be resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeRefError {
    UnknownName(String),
    BadArity { name: String, expected: usize, found: usize },
}

impl fmt::Display for TypeRefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRefError::UnknownName(n) => write!(f, "unknown type `{n}`"),
            TypeRefError::BadArity {
                name,
                expected,
                found,
            } => write!(
                f,
                "type `{name}` takes {expected} type argument(s), found {found}"
            ),
        }
    }
}

/// Names usable in annotations besides declared models.
pub const TYPE_NAMES: &[&str] = &[
    "Int", "Float", "Bool", "String", "Unit", "Tensor", "Dataset", "Batch", "Optimizer", "LossFn",
    "Range", "Model", "List", "Record", "Function", "Any",
];

pub fn resolve_type(t: &TypeRef, decls: &DeclTable) -> Result<MType, TypeRefError> {
    let name = t.name.name.as_str();
    let expected_args = if name == "List" { 1 } else { 0 };
    let known = TYPE_NAMES.contains(&name) || decls.kind(name).is_some();
    if !known {
        return Err(TypeRefError::UnknownName(name.to_string()));
    }
    if t.args.len() != expected_args && !(name == "List" && t.args.is_empty()) {
        return Err(TypeRefError::BadArity {
            name: name.to_string(),
            expected: expected_args,
            found: t.args.len(),
        });
    }
    Ok(match name {
        "Int" => MType::Int,
        "Float" => MType::Float,
        "Bool" => MType::Bool,
        "String" => MType::String,
        "Unit" => MType::Unit,
        "Tensor" => MType::Tensor,
        "Dataset" => MType::Dataset,
        "Batch" => MType::Batch,
        "Optimizer" => MType::Optimizer,
        "LossFn" => MType::LossFn,
        "Range" => MType::Range,
        "Model" => MType::Model,
        "Record" => MType::any_record(),
        "Function" => MType::any_function(),
        "Any" => MType::Unknown,
        "List" => match t.args.first() {
            Some(a) => MType::list(resolve_type(a, decls)?),
            None => MType::list(MType::Unknown),
        },
        other => decls.instance_type(other),
    })
}
