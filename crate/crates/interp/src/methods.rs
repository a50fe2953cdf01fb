use std::rc::Rc;

use mlang_sema::prelude::METHODS;
use mlang_syntax::SourceSpan;

use crate::error::{ErrorKind, Result, RuntimeError};
use crate::interp::{positional_only, ArgVal, Inner};
use crate::value::Value;

fn no_method(recv: &Value, name: &str) -> RuntimeError {
    let ty = recv.type_name();
    let available = METHODS
        .iter()
        .find(|(t, _)| *t == ty)
        .map(|(_, ms)| ms.join(", "))
        .unwrap_or_default();
    let hint = if available.is_empty() {
        format!("{ty} has no methods")
    } else {
        format!("available: {available}")
    };
    RuntimeError::new(ErrorKind::NameError, format!("{ty} has no method `{name}`; {hint}"))
}

impl Inner {
    pub(crate) fn call_method(&self, recv: &Value, name: &str, args: Vec<ArgVal>, span: SourceSpan) -> Result<Value> {
        let what = format!("`{}.{name}`", recv.type_name());
        match (recv, name) {
            (Value::Model(m), "parameters") => {
                positional_only::<0>(&what, args)?;
                let m = m.borrow();
                Ok(Value::list(m.parameters().iter().map(|p| Value::Tensor(p.tensor())).collect()))
            }
            (Value::Model(m), "save") => {
                let name = match args.as_slice() {
                    [] => m.borrow().name.clone(),
                    [ArgVal { name: None, value: Value::Str(s), .. }] => s.to_string(),
                    _ => {
                        return Err(RuntimeError::new(
                            ErrorKind::ArityError,
                            format!("{what} takes an optional registry name String"),
                        ))
                    }
                };
                let v = self.store.save(&m.borrow(), &name)?;
                Ok(Value::Int(v as i64))
            }
            (Value::Tensor(t), "backward") => {
                positional_only::<0>(&what, args)?;
                if let Ok(x) = t.item() {
                    self.loss_trace.borrow_mut().push(x);
                }
                t.backward()?;
                Ok(Value::Unit)
            }
            (Value::Tensor(t), "shape") => {
                positional_only::<0>(&what, args)?;
                Ok(Value::list(t.shape().iter().map(|&d| Value::Int(d as i64)).collect()))
            }
            (Value::Tensor(t), "item") => {
                positional_only::<0>(&what, args)?;
                Ok(Value::Float(t.item()? as f64))
            }
            (Value::Optimizer(o), "step") => {
                positional_only::<0>(&what, args)?;
                o.borrow_mut().step()?;
                Ok(Value::Unit)
            }
            (Value::Optimizer(o), "zero_grad") => {
                positional_only::<0>(&what, args)?;
                o.borrow_mut().zero_grad();
                Ok(Value::Unit)
            }
            (Value::Dataset(d), "withBatchSize") => {
                let [n] = positional_only::<1>(&what, args)?;
                let Value::Int(n) = n else {
                    return Err(RuntimeError::new(
                        ErrorKind::TypeError,
                        format!("{what} expects Int, found {}", n.type_name()),
                    ));
                };
                let n = usize::try_from(n)
                    .map_err(|_| RuntimeError::new(ErrorKind::ValueError, "batch size must be positive"))?;
                Ok(Value::Dataset(Rc::new(d.with_batch_size(n)?)))
            }
            (Value::Dataset(d), "len") => {
                positional_only::<0>(&what, args)?;
                Ok(Value::Int(d.len() as i64))
            }
            (Value::Record(r), _) => {
                let field = r.borrow().get(name).cloned();
                match field {
                    Some(f @ (Value::Function(_) | Value::Builtin(_) | Value::Decl(_) | Value::Model(_) | Value::LossFn(_))) => {
                        self.call_value(&f, args, span)
                    }
                    Some(other) => Err(RuntimeError::new(
                        ErrorKind::TypeError,
                        format!("field `{name}` holds {}, which is not callable", other.type_name()),
                    )),
                    None => Err(RuntimeError::new(ErrorKind::NameError, format!("record has no field `{name}`"))),
                }
            }
            _ => Err(no_method(recv, name)),
        }
    }
}
