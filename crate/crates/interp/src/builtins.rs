//! The builtin prelude. Arguments are matched with the same binder the
//! checker uses, then converted per parameter.

use std::path::Path;
use std::rc::Rc;

use mlang_data::{self as data, ColumnKind, Dataset};
use mlang_model::{
    auto_tune, evaluate, fine_tune, load_file, load_url, save_file, Combine, ConfigValue,
    FineTuneOptions, HyperparamSpace, Model, NodeKind, Strategy, TuneOptions,
};
use mlang_sema::prelude::{bind, BuiltinSig, Slot, Ty};
use mlang_syntax::SourceSpan;
use mlang_tensor::{OptimKind, Optimizer, Param, Tensor};

use crate::error::{type_error, value_error, ErrorKind, Result, RuntimeError};
use crate::interp::{ArgVal, Inner};
use crate::value::{LossKind, Record, Value};

/// Arguments of one builtin call after binding.
struct Bound {
    sig: &'static BuiltinSig,
    params: Vec<Option<Value>>,
    named: Vec<Option<Value>>,
    rest: Vec<Value>,
}

impl Bound {
    fn new(sig: &'static BuiltinSig, args: Vec<ArgVal>) -> Result<Bound> {
        let mut positional = Vec::new();
        let mut named = Vec::new();
        for a in args {
            match a.name {
                None => positional.push(a.value),
                Some(n) => named.push((n, a.value)),
            }
        }
        let names: Vec<&str> = named.iter().map(|(n, _)| n.as_str()).collect();
        let slots = bind(sig, positional.len(), &names)
            .map_err(|e| RuntimeError::new(ErrorKind::ArityError, e.message(sig.name)))?;
        let mut b = Bound {
            sig,
            params: vec![None; sig.params.len()],
            named: vec![None; sig.named_only.len()],
            rest: Vec::new(),
        };
        let values = positional.into_iter().chain(named.into_iter().map(|(_, v)| v));
        for (slot, v) in slots.into_iter().zip(values) {
            match slot {
                Slot::Param(i) => b.params[i] = Some(v),
                Slot::NamedOnly(i) => b.named[i] = Some(v),
                Slot::Rest => b.rest.push(v),
            }
        }
        for (i, p) in sig.params.iter().enumerate() {
            if let Some(v) = &b.params[i] {
                check_ty(sig.name, p.name, p.ty, v)?;
            }
        }
        for (i, p) in sig.named_only.iter().enumerate() {
            if let Some(v) = &b.named[i] {
                check_ty(sig.name, p.name, p.ty, v)?;
            }
        }
        if let Some((name, ty)) = sig.variadic {
            for v in &b.rest {
                check_ty(sig.name, name, ty, v)?;
            }
        }
        Ok(b)
    }

    fn get(&self, name: &str) -> Option<&Value> {
        if let Some(i) = self.sig.params.iter().position(|p| p.name == name) {
            return self.params[i].as_ref();
        }
        let i = self.sig.named_only.iter().position(|p| p.name == name)?;
        self.named[i].as_ref()
    }

    fn req(&self, name: &str) -> &Value {
        self.get(name).expect("binder enforces required parameters")
    }

    fn int(&self, name: &str, default: i64) -> i64 {
        match self.get(name) {
            Some(Value::Int(i)) => *i,
            _ => default,
        }
    }

    fn count(&self, name: &str, default: i64) -> Result<usize> {
        let n = self.int(name, default);
        usize::try_from(n).map_err(|_| value_error(format!("`{name}` of `{}` must be >= 0, got {n}", self.sig.name)))
    }

    fn seed(&self, name: &str, default: u64) -> u64 {
        match self.get(name) {
            Some(Value::Int(i)) => *i as u64,
            _ => default,
        }
    }

    fn num(&self, name: &str, default: f64) -> f64 {
        self.get(name).and_then(Value::as_f64).unwrap_or(default)
    }

    fn text(&self, name: &str) -> Option<Rc<str>> {
        match self.get(name) {
            Some(Value::Str(s)) => Some(s.clone()),
            _ => None,
        }
    }
}

fn check_ty(callee: &str, param: &str, ty: Ty, v: &Value) -> Result<()> {
    let ok = match ty {
        Ty::Any => true,
        Ty::Int => matches!(v, Value::Int(_)),
        Ty::Num => matches!(v, Value::Int(_) | Value::Float(_)),
        Ty::Bool => matches!(v, Value::Bool(_)),
        Ty::Str => matches!(v, Value::Str(_)),
        Ty::Tensor => matches!(v, Value::Tensor(_)),
        Ty::Dataset => matches!(v, Value::Dataset(_)),
        Ty::Model => matches!(v, Value::Model(_)),
        Ty::List => matches!(v, Value::List(_)),
        Ty::Record => matches!(v, Value::Record(_)),
        Ty::Function => matches!(v, Value::Function(_) | Value::Builtin(_) | Value::Decl(_)),
    };
    if ok {
        Ok(())
    } else {
        let expected = match ty {
            Ty::Num => "Int or Float".to_string(),
            other => format!("{}", other.to_mtype()),
        };
        Err(type_error(format!(
            "argument `{param}` of `{callee}` expects {expected}, found {}",
            v.describe()
        )))
    }
}

fn dataset(v: &Value) -> Rc<Dataset> {
    match v {
        Value::Dataset(d) => d.clone(),
        _ => unreachable!("checked by Bound::new"),
    }
}

fn model_of(v: &Value) -> Model {
    match v {
        Value::Model(m) => m.borrow().clone(),
        _ => unreachable!("checked by Bound::new"),
    }
}

fn string_list(callee: &str, param: &str, v: &Value) -> Result<Vec<String>> {
    let Value::List(items) = v else {
        unreachable!("checked by Bound::new")
    };
    items
        .borrow()
        .iter()
        .map(|x| match x {
            Value::Str(s) => Ok(s.to_string()),
            other => Err(type_error(format!(
                "`{param}` of `{callee}` must be a list of String, found {}",
                other.type_name()
            ))),
        })
        .collect()
}

fn params_of(v: &Value) -> Result<Vec<Param>> {
    let Value::List(items) = v else {
        unreachable!("checked by Bound::new")
    };
    items
        .borrow()
        .iter()
        .map(|x| match x {
            Value::Tensor(t) => t
                .param()
                .cloned()
                .ok_or_else(|| value_error("optimizer parameters must come from `model.parameters()`")),
            other => Err(type_error(format!(
                "optimizer parameters must be Tensors, found {}",
                other.type_name()
            ))),
        })
        .collect()
}

fn config_value(v: &Value, what: &str) -> Result<ConfigValue> {
    v.to_config()
        .ok_or_else(|| type_error(format!("{what} must be a number, string, bool or list, found {}", v.type_name())))
}

/// Hyperparameter space from a record of name → list of candidates.
pub(crate) fn space_of(v: &Value) -> Result<HyperparamSpace> {
    let Value::Record(r) = v else {
        return Err(type_error(format!("a hyperparameter space is a Record, found {}", v.type_name())));
    };
    let mut dims = Vec::new();
    for (k, vals) in r.borrow().iter() {
        let Value::List(items) = vals else {
            return Err(type_error(format!(
                "candidates for `{k}` must be a List, found {}",
                vals.type_name()
            )));
        };
        let cands = items
            .borrow()
            .iter()
            .map(|x| config_value(x, &format!("candidate for `{k}`")))
            .collect::<Result<Vec<_>>>()?;
        dims.push((k.clone(), cands));
    }
    Ok(HyperparamSpace::new(dims)?)
}

fn space_record(space: &HyperparamSpace) -> Value {
    let mut r = Record::new();
    for (k, vals) in space.dims() {
        r.insert(k.clone(), Value::list(vals.iter().map(Value::from_config).collect()));
    }
    Value::record(r)
}

fn float_list(xs: &[f64]) -> Value {
    Value::list(xs.iter().map(|&x| Value::Float(x)).collect())
}

pub(crate) fn metric_record(metrics: &std::collections::BTreeMap<String, f64>) -> Value {
    let mut r = Record::new();
    for (k, v) in metrics {
        r.insert(k.clone(), Value::Float(*v));
    }
    Value::record(r)
}

fn schema_of(v: &Value) -> Result<Vec<(String, ColumnKind)>> {
    let Value::Record(r) = v else {
        unreachable!("checked by Bound::new")
    };
    r.borrow()
        .iter()
        .map(|(k, kind)| {
            let Value::Str(s) = kind else {
                return Err(type_error(format!(
                    "schema entry `{k}` must be a String such as \"int_seq(8)\", found {}",
                    kind.type_name()
                )));
            };
            let kind = ColumnKind::parse(s).ok_or_else(|| {
                RuntimeError::new(
                    ErrorKind::SchemaError,
                    format!("unknown column kind `{s}` for `{k}` (expected int_scalar, f32_scalar, int_seq(N) or f32_vec(N))"),
                )
            })?;
            Ok((k.clone(), kind))
        })
        .collect()
}

impl Inner {
    pub(crate) fn call_builtin(&self, sig: &'static BuiltinSig, args: Vec<ArgVal>, _span: SourceSpan) -> Result<Value> {
        let b = Bound::new(sig, args)?;
        let seed = self.seed;
        Ok(match sig.name {
            "print" => {
                let line = b.rest.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
                self.write_line(&line)?;
                Value::Unit
            }
            "range" => {
                let a = b.int("start", 0);
                match b.get("stop") {
                    Some(Value::Int(stop)) => Value::Range(a, *stop),
                    _ => Value::Range(0, a),
                }
            }
            "len" => Value::Int(match b.req("value") {
                Value::List(l) => l.borrow().len() as i64,
                Value::Str(s) => s.chars().count() as i64,
                Value::Record(r) => r.borrow().len() as i64,
                Value::Dataset(d) => d.len() as i64,
                Value::Batch(bt) => bt.len() as i64,
                Value::Range(a, z) => (z - a).max(0),
                Value::Tensor(t) => t.shape().first().copied().unwrap_or(1) as i64,
                other => return Err(type_error(format!("{} has no length", other.type_name()))),
            }),
            "tokenize" => {
                let text = b.text("text").expect("required");
                let seq_len = b.count("seq_len", 8)?;
                let vocab = b.count("vocab", 256)?;
                if seq_len == 0 || vocab < 2 {
                    return Err(value_error("tokenize needs seq_len > 0 and vocab >= 2"));
                }
                let ids = data::tokenize(&text, seq_len, vocab);
                Value::Tensor(Tensor::from_ints(vec![1, seq_len], &ids)?)
            }
            "withBatchSize" => {
                let ds = dataset(b.req("dataset"));
                Value::Dataset(Rc::new(ds.with_batch_size(b.count("batch_size", 0)?)?))
            }
            "trainTestSplit" => {
                let ds = dataset(b.req("dataset"));
                let (train, test) = data::train_test_split(&ds, b.num("ratio", 0.8), b.seed("seed", seed))?;
                Value::list(vec![Value::Dataset(Rc::new(train)), Value::Dataset(Rc::new(test))])
            }
            "syntheticText" => Value::Dataset(Rc::new(data::synthetic_text(
                b.count("n", 0)?,
                b.count("classes", 2)?,
                b.count("seq_len", 8)?,
                b.count("vocab", 16)?,
                b.seed("seed", seed),
            )?)),
            "syntheticImages" => Value::Dataset(Rc::new(data::synthetic_images(
                b.count("n", 0)?,
                b.count("classes", 2)?,
                b.seed("seed", seed),
            )?)),
            "syntheticSeries" => Value::Dataset(Rc::new(data::synthetic_series_with_noise(
                b.count("n", 0)?,
                b.count("window", 8)?,
                b.seed("seed", seed),
                b.num("noise", data::SERIES_NOISE),
            )?)),
            "loadCsv" => {
                let path = b.text("path").expect("required");
                let schema = schema_of(b.req("schema"))?;
                Value::Dataset(Rc::new(data::load_csv(Path::new(&*path), &schema)?))
            }
            "loadJsonl" => {
                let path = b.text("path").expect("required");
                Value::Dataset(Rc::new(data::load_jsonl(Path::new(&*path))?))
            }
            "Adam" => {
                let params = params_of(b.req("params"))?;
                let kind = OptimKind::Adam {
                    beta1: b.num("beta1", 0.9) as f32,
                    beta2: b.num("beta2", 0.999) as f32,
                    eps: b.num("eps", 1e-8) as f32,
                };
                Value::Optimizer(Rc::new(std::cell::RefCell::new(Optimizer::new(
                    kind,
                    b.num("lr", 0.001) as f32,
                    params,
                ))))
            }
            "SGD" => {
                let params = params_of(b.req("params"))?;
                Value::Optimizer(Rc::new(std::cell::RefCell::new(Optimizer::new(
                    OptimKind::Sgd,
                    b.num("lr", 0.01) as f32,
                    params,
                ))))
            }
            "CrossEntropyLoss" => Value::LossFn(LossKind::CrossEntropy),
            "MSELoss" => Value::LossFn(LossKind::Mse),
            "sequentialModel" => {
                let parts: Vec<Model> = b.rest.iter().map(model_of).collect();
                let refs: Vec<&Model> = parts.iter().collect();
                Value::model(Model::sequential(&refs)?)
            }
            "parallelModel" => {
                let combine = b.text("combine").unwrap_or_else(|| Rc::from("concat"));
                let combine = Combine::parse(&combine).ok_or_else(|| {
                    value_error(format!("unknown combine `{combine}` (expected concat, sum or mean)"))
                })?;
                let parts: Vec<Model> = b.rest.iter().map(model_of).collect();
                let refs: Vec<&Model> = parts.iter().collect();
                Value::model(Model::parallel(&refs, combine)?)
            }
            "customModel" => {
                let Value::Function(f) = b.req("fn") else {
                    return Err(type_error("customModel needs a user-defined function"));
                };
                let name = f.name.name.clone();
                let parts: Vec<Model> = b.rest.iter().map(model_of).collect();
                let refs: Vec<&Model> = parts.iter().collect();
                Value::model(Model::custom(&name, self.custom_fn(&name), &refs)?)
            }
            "loadModel" => {
                let path = b.text("path").expect("required");
                let mut m = load_file(Path::new(&*path))?;
                self.bind_customs(&mut m);
                Value::model(m)
            }
            "loadModelFromUrl" => {
                let url = b.text("url").expect("required");
                let mut m = load_url(&url, &self.store)?;
                self.bind_customs(&mut m);
                Value::model(m)
            }
            "saveModel" => {
                let path = b.text("path").expect("required");
                save_file(&model_of(b.req("model")), Path::new(&*path))?;
                Value::Unit
            }
            "fineTuneModel" => {
                let m = model_of(b.req("model"));
                let ds = dataset(b.req("dataset"));
                let opts = self.fine_tune_options(&b)?;
                let report = fine_tune(&m, &ds, &opts)?;
                let mut r = Record::new();
                r.insert("history".into(), float_list(&report.history));
                r.insert("loss".into(), Value::Float(report.history.last().copied().unwrap_or(f64::NAN)));
                Value::record(r)
            }
            "evaluateModel" => {
                let m = model_of(b.req("model"));
                let ds = dataset(b.req("dataset"));
                let metrics = match b.get("metrics") {
                    Some(v) => string_list("evaluateModel", "metrics", v)?,
                    None => vec!["accuracy".to_string()],
                };
                metric_record(&evaluate(&m, &ds, &metrics)?.metrics)
            }
            "defineHyperparamSpace" => space_record(&space_of(b.req("space"))?),
            "autoTuneModel" => {
                let m = model_of(b.req("model"));
                let ds = dataset(b.req("dataset"));
                let space = space_of(b.req("space"))?;
                let strategy = b.text("strategy").unwrap_or_else(|| Rc::from("grid"));
                let strategy = Strategy::parse(&strategy)
                    .ok_or_else(|| value_error(format!("unknown strategy `{strategy}` (expected grid or random)")))?;
                let opts = TuneOptions {
                    strategy,
                    trials: b.count("trials", 0)?,
                    metric: b.text("metric").map_or_else(|| "accuracy".to_string(), |s| s.to_string()),
                    val_split: b.num("val_split", 0.2),
                    seed: b.seed("seed", seed),
                    parallel: true,
                    base: FineTuneOptions {
                        seed: b.seed("seed", seed),
                        ..FineTuneOptions::default()
                    },
                };
                let result = auto_tune(&m, &ds, &space, &opts)?;
                let mut best = Record::new();
                for (k, v) in result.best_config() {
                    best.insert(k.clone(), Value::from_config(v));
                }
                let score = result.best_score();
                let mut tuned = result.model;
                self.bind_customs(&mut tuned);
                let mut r = Record::new();
                r.insert("best_config".into(), Value::record(best));
                r.insert("best_score".into(), Value::Float(score));
                r.insert("model".into(), Value::model(tuned));
                Value::record(r)
            }
            "embedding" => self.layer(NodeKind::Embedding {
                vocab: b.count("vocab", 0)?,
                dim: b.count("dim", 0)?,
            })?,
            "linear" => self.layer(NodeKind::Linear {
                inp: b.count("in_features", 0)?,
                out: b.count("out_features", 0)?,
            })?,
            "relu" | "tanh" => match b.get("x") {
                Some(Value::Tensor(t)) => Value::Tensor(if sig.name == "relu" { t.relu()? } else { t.tanh()? }),
                _ => self.layer(if sig.name == "relu" { NodeKind::Relu } else { NodeKind::Tanh })?,
            },
            "meanPool" => self.layer(NodeKind::MeanPool)?,
            "flatten" => self.layer(NodeKind::Flatten)?,
            "rnnCell" => self.layer(NodeKind::RnnCell {
                hidden: b.count("hidden", 0)?,
                window: b.count("window", 0)?,
            })?,
            other => unreachable!("builtin `{other}` has a signature but no implementation"),
        })
    }

    fn layer(&self, kind: NodeKind) -> Result<Value> {
        let mut rng = self.rng.borrow_mut();
        Ok(Value::model(Model::layer(kind, &mut rng)?))
    }

    fn fine_tune_options(&self, b: &Bound) -> Result<FineTuneOptions> {
        let mut o = FineTuneOptions {
            seed: b.seed("seed", self.seed),
            ..FineTuneOptions::default()
        };
        for name in ["epochs", "lr", "batch_size", "optimizer"] {
            if let Some(v) = b.get(name) {
                o.set(name, &config_value(v, name)?)?;
            }
        }
        if let Some(v) = b.get("freeze") {
            o.freeze = string_list("fineTuneModel", "freeze", v)?;
        }
        Ok(o)
    }
}
