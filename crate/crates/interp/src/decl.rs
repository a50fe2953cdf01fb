//! Building model instances from `model` / `metamodel` declarations, and the
//! bridge that lets composed models call back into M functions.

use std::collections::HashMap;
use std::rc::{Rc, Weak};

use mlang_model::{parse_ref, Config, CustomFn, Model, Provenance};
use mlang_sema::DeclKind;
use mlang_syntax::ast::FieldDef;
use mlang_tensor::{mix, SplitMix64, Tensor};

use crate::error::{ErrorKind, Result, RuntimeError};
use crate::interp::{ArgVal, Env, Inner};
use crate::value::Value;

pub(crate) const FORWARD: &str = "forward";

#[derive(Debug, Clone)]
pub(crate) struct DeclDef {
    pub name: String,
    pub kind: DeclKind,
    pub parent: Option<String>,
    pub fields: Vec<FieldDef>,
}

impl DeclDef {
    fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name.name == name)
    }
}

/// 64-bit FNV-1a, used to give each declaration its own init stream.
fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

enum Source<'a> {
    Forward(&'a DeclDef),
    Pretrained,
}

impl Inner {
    /// Root-first ancestor chain of `name`.
    fn chain(&self, name: &str) -> Result<Vec<Rc<DeclDef>>> {
        let decls = self.decls.borrow();
        let mut out = Vec::new();
        let mut cur = Some(name.to_string());
        while let Some(n) = cur {
            let d = decls.get(&n).ok_or_else(|| {
                RuntimeError::new(ErrorKind::NameError, format!("unknown model declaration `{n}`"))
            })?;
            if out.iter().any(|x: &Rc<DeclDef>| x.name == d.name) {
                return Err(RuntimeError::new(ErrorKind::ValueError, format!("`{name}` extends itself")));
            }
            out.push(d.clone());
            cur = d.parent.clone();
        }
        out.reverse();
        Ok(out)
    }

    pub(crate) fn instantiate(&self, name: &str, args: Vec<ArgVal>) -> Result<Value> {
        let chain = self.chain(name)?;
        let mut overrides: HashMap<String, Value> = HashMap::new();
        for a in args {
            let Some(n) = a.name else {
                return Err(RuntimeError::new(
                    ErrorKind::ArityError,
                    format!("`{name}` takes only named config overrides"),
                ));
            };
            let known = chain.iter().any(|d| d.field(&n).is_some_and(|_| n != FORWARD));
            if !known {
                return Err(RuntimeError::new(
                    ErrorKind::ArityError,
                    format!("`{name}` has no field named `{n}`"),
                ));
            }
            if overrides.insert(n.clone(), a.value).is_some() {
                return Err(RuntimeError::new(
                    ErrorKind::ArityError,
                    format!("override `{n}` given twice"),
                ));
            }
        }

        // Ordinary fields, ancestors first; each sees the ones before it.
        let mut env = Env::with_scope(HashMap::new());
        let mut fields: Vec<(String, Value)> = Vec::new();
        for d in &chain {
            for f in d.fields.iter().filter(|f| f.name.name != FORWARD) {
                let v = match overrides.get(&f.name.name) {
                    Some(v) => v.clone(),
                    None => self.eval(&f.value, &mut env)?,
                };
                env.define(&f.name.name, v.clone());
                match fields.iter_mut().find(|(n, _)| *n == f.name.name) {
                    Some(slot) => slot.1 = v,
                    None => fields.push((f.name.name.clone(), v)),
                }
            }
        }

        let mut source = None;
        for d in chain.iter().rev() {
            if d.field(FORWARD).is_some() {
                source = Some(Source::Forward(d));
                break;
            }
        }
        let pretrained = fields
            .iter()
            .find(|(n, _)| n == "pretrained_model")
            .map(|(_, v)| v.clone());
        if source.is_none() && pretrained.is_some() {
            source = Some(Source::Pretrained);
        }

        let mut model = match source {
            Some(Source::Forward(owner)) => {
                let f = owner.field(FORWARD).expect("owner has forward");
                let saved = self
                    .rng
                    .replace(SplitMix64::new(mix(self.seed ^ fnv1a(&owner.name))));
                let built = self.eval(&f.value, &mut env);
                self.rng.replace(saved);
                match built? {
                    Value::Model(m) => m.borrow().deep_clone(),
                    other => {
                        return Err(RuntimeError::new(
                            ErrorKind::TypeError,
                            format!("`forward` of `{}` must be a Model, found {}", owner.name, other.type_name()),
                        ))
                    }
                }
            }
            Some(Source::Pretrained) => {
                let Some(Value::Str(r)) = pretrained else {
                    return Err(RuntimeError::new(
                        ErrorKind::TypeError,
                        format!("`pretrained_model` of `{name}` must be a String"),
                    ));
                };
                let (reg, version) = parse_ref(&r)?;
                self.store.load(&reg, version)?
            }
            None => {
                return Err(RuntimeError::new(
                    ErrorKind::ValueError,
                    format!("`{name}` has no architecture: give it `extends`, `pretrained_model` or `forward`"),
                ))
            }
        };

        let mut config: Config = model.config.clone();
        for (n, v) in &fields {
            if let Some(c) = v.to_config() {
                config.insert(n.clone(), c);
            }
        }
        model.config = config;
        model.name = name.to_string();
        let parent = chain
            .last()
            .and_then(|d| d.parent.clone())
            .or_else(|| match fields.iter().find(|(n, _)| n == "pretrained_model") {
                Some((_, Value::Str(s))) => Some(s.to_string()),
                _ => None,
            });
        model.provenance = Provenance::Declared {
            decl: name.to_string(),
            parent,
        };

        if let Some((_, labels)) = fields.iter().find(|(n, _)| n == "num_labels") {
            let Value::Int(n) = labels else {
                return Err(RuntimeError::new(
                    ErrorKind::TypeError,
                    format!("`num_labels` must be an Int, found {}", labels.type_name()),
                ));
            };
            let n = usize::try_from(*n)
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| RuntimeError::new(ErrorKind::ValueError, "num_labels must be positive"))?;
            if model.arch.head_index().is_some() {
                model.resize_head(n, self.seed)?;
            } else if let Some(w) = model.arch.out_width().filter(|&w| w != n) {
                return Err(RuntimeError::new(
                    ErrorKind::ShapeMismatch,
                    format!("`{name}` outputs width {w} but num_labels is {n}, and it has no linear head to resize"),
                ));
            }
        }
        self.bind_customs(&mut model);
        Ok(Value::model(model))
    }

    /// Binds every unbound custom node to the user function of that name.
    pub(crate) fn bind_customs(&self, model: &mut Model) {
        for f in model.unbound_customs() {
            if self.funcs.borrow().contains_key(&f) {
                model.bind_custom(&f, self.custom_fn(&f));
            }
        }
    }

    pub(crate) fn custom_fn(&self, name: &str) -> Rc<dyn CustomFn> {
        Rc::new(MFunction {
            name: name.to_string(),
            interp: self.me.clone(),
        })
    }
}

/// A user function used as a custom model node.
struct MFunction {
    name: String,
    interp: Weak<Inner>,
}

impl CustomFn for MFunction {
    fn call(&self, inputs: &[Tensor]) -> std::result::Result<Tensor, String> {
        let inner = self
            .interp
            .upgrade()
            .ok_or_else(|| format!("interpreter for `{}` is gone", self.name))?;
        let func = inner
            .funcs
            .borrow()
            .get(&self.name)
            .cloned()
            .ok_or_else(|| format!("unknown function `{}`", self.name))?;
        let args = inputs.iter().map(|t| ArgVal::positional(Value::Tensor(t.clone()))).collect();
        match inner.call_user(&func, args, func.span) {
            Ok(Value::Tensor(t)) => Ok(t),
            Ok(other) => Err(format!("`{}` must return a Tensor, returned {}", self.name, other.type_name())),
            Err(e) => Err(e.to_string()),
        }
    }
}
