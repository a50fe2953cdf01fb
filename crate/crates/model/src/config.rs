use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Number, Value};

use crate::error::{ModelError, Result};

/// A serializable configuration value. Models carry a name → value map.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<ConfigValue>),
}

pub type Config = BTreeMap<String, ConfigValue>;

impl ConfigValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ConfigValue::Int(i) => Some(*i as f64),
            ConfigValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ConfigValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ConfigValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<Value> {
        Ok(match self {
            ConfigValue::Bool(b) => Value::Bool(*b),
            ConfigValue::Int(i) => Value::Number((*i).into()),
            ConfigValue::Float(f) => Value::Number(
                Number::from_f64(*f)
                    .ok_or_else(|| ModelError::Format(format!("config value {f} is not finite")))?,
            ),
            ConfigValue::Str(s) => Value::String(s.clone()),
            ConfigValue::List(items) => Value::Array(items.iter().map(|v| v.to_json()).collect::<Result<_>>()?),
        })
    }

    pub fn from_json(v: &Value) -> Result<ConfigValue> {
        Ok(match v {
            Value::Bool(b) => ConfigValue::Bool(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) => ConfigValue::Int(i),
                None => ConfigValue::Float(
                    n.as_f64()
                        .ok_or_else(|| ModelError::Format(format!("config number {n} out of range")))?,
                ),
            },
            Value::String(s) => ConfigValue::Str(s.clone()),
            Value::Array(items) => ConfigValue::List(items.iter().map(ConfigValue::from_json).collect::<Result<_>>()?),
            Value::Null | Value::Object(_) => {
                return Err(ModelError::Format(format!("unsupported config value {v}")))
            }
        })
    }
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Bool(b) => write!(f, "{b}"),
            ConfigValue::Int(i) => write!(f, "{i}"),
            ConfigValue::Float(x) => write!(f, "{x:?}"),
            ConfigValue::Str(s) => write!(f, "{s:?}"),
            ConfigValue::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub fn config_to_json(c: &Config) -> Result<Value> {
    Ok(Value::Object(
        c.iter()
            .map(|(k, v)| Ok((k.clone(), v.to_json()?)))
            .collect::<Result<_>>()?,
    ))
}

pub fn config_from_json(v: &Value) -> Result<Config> {
    v.as_object()
        .ok_or_else(|| ModelError::Format("config must be an object".into()))?
        .iter()
        .map(|(k, v)| Ok((k.clone(), ConfigValue::from_json(v)?)))
        .collect()
}
