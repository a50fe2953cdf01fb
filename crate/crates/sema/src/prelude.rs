//! Signatures of the builtin prelude. The interpreter binds call arguments
//! against the same table, so static and runtime arity rules agree.

use crate::types::MType;

/// Parameter type as written in the table. `Num` accepts Int or Float.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Any,
    Int,
    Num,
    Bool,
    Str,
    Tensor,
    Dataset,
    Model,
    List,
    Record,
    Function,
}

impl Ty {
    pub fn to_mtype(self) -> MType {
        match self {
            Ty::Any | Ty::Num => MType::Unknown,
            Ty::Int => MType::Int,
            Ty::Bool => MType::Bool,
            Ty::Str => MType::String,
            Ty::Tensor => MType::Tensor,
            Ty::Dataset => MType::Dataset,
            Ty::Model => MType::Model,
            Ty::List => MType::list(MType::Unknown),
            Ty::Record => MType::any_record(),
            Ty::Function => MType::any_function(),
        }
    }

    /// Static compatibility of an argument type with this parameter.
    pub fn accepts(self, t: &MType, decls: &crate::DeclTable) -> bool {
        match self {
            Ty::Num => matches!(t, MType::Int | MType::Float | MType::Unknown),
            other => decls.subtype_of(t, &other.to_mtype()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSig {
    pub name: &'static str,
    pub ty: Ty,
    pub required: bool,
}

#[derive(Debug, Clone, Copy)]
pub enum Ret {
    Fixed(fn() -> MType),
    /// Result depends on how many arguments were passed (`relu`, `tanh`).
    ByArgCount,
}

#[derive(Debug, Clone, Copy)]
pub struct BuiltinSig {
    pub name: &'static str,
    /// Positional-or-named parameters, required ones first.
    pub params: &'static [ParamSig],
    /// Trailing positional rest parameter.
    pub variadic: Option<(&'static str, Ty)>,
    /// Parameters that may only be passed by name.
    pub named_only: &'static [ParamSig],
    pub ret: Ret,
}

impl BuiltinSig {
    pub fn required_count(&self) -> usize {
        self.params.iter().filter(|p| p.required).count()
    }

    pub fn param(&self, name: &str) -> Option<&ParamSig> {
        self.params
            .iter()
            .chain(self.named_only.iter())
            .find(|p| p.name == name)
    }

    pub fn result(&self, positional: usize) -> MType {
        match self.ret {
            Ret::Fixed(f) => f(),
            Ret::ByArgCount if positional == 0 => MType::Model,
            Ret::ByArgCount => MType::Tensor,
        }
    }
}

const fn req(name: &'static str, ty: Ty) -> ParamSig {
    ParamSig {
        name,
        ty,
        required: true,
    }
}

const fn opt(name: &'static str, ty: Ty) -> ParamSig {
    ParamSig {
        name,
        ty,
        required: false,
    }
}

const fn sig(
    name: &'static str,
    params: &'static [ParamSig],
    ret: fn() -> MType,
) -> BuiltinSig {
    BuiltinSig {
        name,
        params,
        variadic: None,
        named_only: &[],
        ret: Ret::Fixed(ret),
    }
}

fn unit() -> MType {
    MType::Unit
}
fn int() -> MType {
    MType::Int
}
fn range() -> MType {
    MType::Range
}
fn tensor() -> MType {
    MType::Tensor
}
fn dataset() -> MType {
    MType::Dataset
}
fn datasets() -> MType {
    MType::list(MType::Dataset)
}
fn optimizer() -> MType {
    MType::Optimizer
}
fn lossfn() -> MType {
    MType::LossFn
}
fn model() -> MType {
    MType::Model
}
fn record() -> MType {
    MType::any_record()
}

pub const BUILTINS: &[BuiltinSig] = &[
    BuiltinSig {
        name: "print",
        params: &[],
        variadic: Some(("values", Ty::Any)),
        named_only: &[],
        ret: Ret::Fixed(unit),
    },
    sig("range", &[req("start", Ty::Int), opt("stop", Ty::Int)], range),
    sig("len", &[req("value", Ty::Any)], int),
    sig(
        "tokenize",
        &[
            req("text", Ty::Str),
            opt("seq_len", Ty::Int),
            opt("vocab", Ty::Int),
        ],
        tensor,
    ),
    sig(
        "withBatchSize",
        &[req("dataset", Ty::Dataset), req("batch_size", Ty::Int)],
        dataset,
    ),
    sig(
        "trainTestSplit",
        &[
            req("dataset", Ty::Dataset),
            opt("ratio", Ty::Num),
            opt("seed", Ty::Int),
        ],
        datasets,
    ),
    sig(
        "syntheticText",
        &[
            req("n", Ty::Int),
            opt("classes", Ty::Int),
            opt("seq_len", Ty::Int),
            opt("vocab", Ty::Int),
            opt("seed", Ty::Int),
        ],
        dataset,
    ),
    sig(
        "syntheticImages",
        &[req("n", Ty::Int), opt("classes", Ty::Int), opt("seed", Ty::Int)],
        dataset,
    ),
    sig(
        "syntheticSeries",
        &[
            req("n", Ty::Int),
            opt("window", Ty::Int),
            opt("seed", Ty::Int),
            opt("noise", Ty::Num),
        ],
        dataset,
    ),
    sig(
        "loadCsv",
        &[req("path", Ty::Str), req("schema", Ty::Record)],
        dataset,
    ),
    sig("loadJsonl", &[req("path", Ty::Str)], dataset),
    sig(
        "Adam",
        &[
            req("params", Ty::List),
            opt("lr", Ty::Num),
            opt("beta1", Ty::Num),
            opt("beta2", Ty::Num),
            opt("eps", Ty::Num),
        ],
        optimizer,
    ),
    sig("SGD", &[req("params", Ty::List), opt("lr", Ty::Num)], optimizer),
    sig("CrossEntropyLoss", &[], lossfn),
    sig("MSELoss", &[], lossfn),
    BuiltinSig {
        name: "sequentialModel",
        params: &[],
        variadic: Some(("models", Ty::Model)),
        named_only: &[],
        ret: Ret::Fixed(model),
    },
    BuiltinSig {
        name: "parallelModel",
        params: &[],
        variadic: Some(("models", Ty::Model)),
        named_only: &[opt("combine", Ty::Str)],
        ret: Ret::Fixed(model),
    },
    BuiltinSig {
        name: "customModel",
        params: &[req("fn", Ty::Function)],
        variadic: Some(("models", Ty::Model)),
        named_only: &[],
        ret: Ret::Fixed(model),
    },
    sig("loadModel", &[req("path", Ty::Str)], model),
    sig("loadModelFromUrl", &[req("url", Ty::Str)], model),
    sig(
        "saveModel",
        &[req("model", Ty::Model), req("path", Ty::Str)],
        unit,
    ),
    sig(
        "fineTuneModel",
        &[
            req("model", Ty::Model),
            req("dataset", Ty::Dataset),
            opt("epochs", Ty::Int),
            opt("lr", Ty::Num),
            opt("batch_size", Ty::Int),
            opt("optimizer", Ty::Str),
            opt("freeze", Ty::List),
            opt("seed", Ty::Int),
        ],
        record,
    ),
    sig(
        "evaluateModel",
        &[
            req("model", Ty::Model),
            req("dataset", Ty::Dataset),
            opt("metrics", Ty::List),
        ],
        record,
    ),
    sig("defineHyperparamSpace", &[req("space", Ty::Record)], record),
    sig(
        "autoTuneModel",
        &[
            req("model", Ty::Model),
            req("dataset", Ty::Dataset),
            req("space", Ty::Record),
            opt("strategy", Ty::Str),
            opt("trials", Ty::Int),
            opt("metric", Ty::Str),
            opt("val_split", Ty::Num),
            opt("seed", Ty::Int),
        ],
        record,
    ),
    sig(
        "embedding",
        &[req("vocab", Ty::Int), req("dim", Ty::Int)],
        model,
    ),
    sig(
        "linear",
        &[req("in_features", Ty::Int), req("out_features", Ty::Int)],
        model,
    ),
    BuiltinSig {
        name: "relu",
        params: &[opt("x", Ty::Tensor)],
        variadic: None,
        named_only: &[],
        ret: Ret::ByArgCount,
    },
    BuiltinSig {
        name: "tanh",
        params: &[opt("x", Ty::Tensor)],
        variadic: None,
        named_only: &[],
        ret: Ret::ByArgCount,
    },
    sig("meanPool", &[], model),
    sig("flatten", &[], model),
    sig(
        "rnnCell",
        &[req("hidden", Ty::Int), req("window", Ty::Int)],
        model,
    ),
];

pub fn lookup(name: &str) -> Option<&'static BuiltinSig> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Methods callable on runtime values, by receiver type name.
pub const METHODS: &[(&str, &[&str])] = &[
    ("Model", &["parameters", "save"]),
    ("Tensor", &["backward", "shape", "item"]),
    ("Optimizer", &["step", "zero_grad"]),
    ("Dataset", &["withBatchSize", "len"]),
];

/// How one call argument was matched to a builtin parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Param(usize),
    NamedOnly(usize),
    Rest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindError {
    TooMany { max: usize, found: usize },
    Missing(&'static str),
    UnknownNamed(String),
    Duplicate(String),
}

impl BindError {
    /// Diagnostic code: arity problems are E002, naming problems E003.
    pub fn code(&self) -> &'static str {
        match self {
            BindError::TooMany { .. } | BindError::Missing(_) | BindError::Duplicate(_) => "E002",
            BindError::UnknownNamed(_) => "E003",
        }
    }

    pub fn message(&self, callee: &str) -> String {
        match self {
            BindError::TooMany { max, found } => format!(
                "`{callee}` takes at most {max} positional argument(s), found {found}"
            ),
            BindError::Missing(p) => format!("`{callee}` is missing required argument `{p}`"),
            BindError::UnknownNamed(n) => format!("`{callee}` has no parameter named `{n}`"),
            BindError::Duplicate(n) => format!("argument `{n}` of `{callee}` given twice"),
        }
    }
}

/// Matches `positional` positional arguments and the given named arguments
/// against `sig`. Returns the slot of each argument in call order
/// (positional first, then named).
pub fn bind(sig: &BuiltinSig, positional: usize, named: &[&str]) -> Result<Vec<Slot>, BindError> {
    let mut slots = Vec::with_capacity(positional + named.len());
    let mut filled = vec![false; sig.params.len()];
    let mut filled_named = vec![false; sig.named_only.len()];
    for i in 0..positional {
        if i < sig.params.len() {
            filled[i] = true;
            slots.push(Slot::Param(i));
        } else if sig.variadic.is_some() {
            slots.push(Slot::Rest);
        } else {
            return Err(BindError::TooMany {
                max: sig.params.len(),
                found: positional,
            });
        }
    }
    for &n in named {
        if let Some(i) = sig.params.iter().position(|p| p.name == n) {
            if filled[i] {
                return Err(BindError::Duplicate(n.to_string()));
            }
            filled[i] = true;
            slots.push(Slot::Param(i));
        } else if let Some(i) = sig.named_only.iter().position(|p| p.name == n) {
            if filled_named[i] {
                return Err(BindError::Duplicate(n.to_string()));
            }
            filled_named[i] = true;
            slots.push(Slot::NamedOnly(i));
        } else {
            return Err(BindError::UnknownNamed(n.to_string()));
        }
    }
    if let Some((_, p)) = sig
        .params
        .iter()
        .enumerate()
        .find(|(i, p)| p.required && !filled[*i])
    {
        return Err(BindError::Missing(p.name));
    }
    Ok(slots)
}
