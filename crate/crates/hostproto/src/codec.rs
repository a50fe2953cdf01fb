//! Value <-> JSON. Plain data maps to JSON directly; tensors travel as
//! `{shape, data}` with little-endian f32 bytes in base64; everything else
//! stays in the session and is referred to by `{handle: N}`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use mlang_interp::{Record, Value};
use mlang_tensor::{DType, Tensor};
use serde_json::{json, Map, Number, Value as Json};

/// Session-scoped table of values the host can only refer to.
#[derive(Default)]
pub struct Handles {
    values: Vec<Value>,
}

impl Handles {
    pub fn insert(&mut self, v: Value) -> u64 {
        self.values.push(v);
        self.values.len() as u64
    }

    pub fn get(&self, id: u64) -> Option<&Value> {
        id.checked_sub(1).and_then(|i| self.values.get(i as usize))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn float(x: f64) -> Json {
    match Number::from_f64(x) {
        Some(n) => Json::Number(n),
        None if x.is_nan() => json!("NaN"),
        None if x > 0.0 => json!("inf"),
        None => json!("-inf"),
    }
}

pub fn encode_tensor(t: &Tensor) -> Json {
    let mut bytes = Vec::with_capacity(t.numel() * 4);
    for x in t.data() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let mut obj = Map::new();
    obj.insert("shape".into(), json!(t.shape()));
    obj.insert("data".into(), json!(STANDARD.encode(bytes)));
    if t.dtype() == DType::Int {
        obj.insert("dtype".into(), json!("int"));
    }
    Json::Object(obj)
}

pub fn encode(v: &Value, handles: &mut Handles) -> Json {
    match v {
        Value::Unit => Json::Null,
        Value::Int(i) => json!(i),
        Value::Float(x) => float(*x),
        Value::Bool(b) => json!(b),
        Value::Str(s) => json!(&**s),
        Value::List(items) => Json::Array(items.borrow().iter().map(|x| encode(x, handles)).collect()),
        Value::Record(r) => {
            let r = r.borrow();
            Json::Object(r.iter().map(|(k, x)| (k.clone(), encode(x, handles))).collect())
        }
        Value::Tensor(t) => encode_tensor(t),
        other => json!({ "handle": handles.insert(other.clone()) }),
    }
}

fn decode_tensor(obj: &Map<String, Json>) -> Result<Tensor, String> {
    let shape: Vec<usize> = obj["shape"]
        .as_array()
        .ok_or("tensor `shape` must be an array")?
        .iter()
        .map(|d| d.as_u64().map(|d| d as usize).ok_or("tensor dimensions must be non-negative integers"))
        .collect::<Result<_, _>>()?;
    let b64 = obj["data"].as_str().ok_or("tensor `data` must be a base64 string")?;
    let bytes = STANDARD.decode(b64).map_err(|e| format!("tensor `data`: {e}"))?;
    if bytes.len() % 4 != 0 {
        return Err(format!("tensor `data` holds {} bytes, not a whole number of f32", bytes.len()));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let int = match obj.get("dtype") {
        None => false,
        Some(Json::String(s)) if s == "int" => true,
        Some(Json::String(s)) if s == "f32" => false,
        Some(other) => return Err(format!("unknown tensor dtype {other}")),
    };
    if int {
        let ints: Vec<i64> = data.iter().map(|&x| x as i64).collect();
        Tensor::from_ints(shape, &ints).map_err(|e| e.to_string())
    } else {
        Tensor::new(shape, data).map_err(|e| e.to_string())
    }
}

fn is_tensor(obj: &Map<String, Json>) -> bool {
    obj.contains_key("shape")
        && obj.contains_key("data")
        && obj.keys().all(|k| matches!(k.as_str(), "shape" | "data" | "dtype"))
}

pub fn decode(j: &Json, handles: &Handles) -> Result<Value, String> {
    Ok(match j {
        Json::Null => Value::Unit,
        Json::Bool(b) => Value::Bool(*b),
        Json::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(n.as_f64().ok_or("number out of range")?),
        },
        Json::String(s) => Value::str(s),
        Json::Array(items) => Value::list(items.iter().map(|x| decode(x, handles)).collect::<Result<_, _>>()?),
        Json::Object(obj) if obj.len() == 1 && obj.contains_key("handle") => {
            let id = obj["handle"].as_u64().ok_or("`handle` must be a positive integer")?;
            handles.get(id).cloned().ok_or_else(|| format!("unknown handle {id}"))?
        }
        Json::Object(obj) if is_tensor(obj) => Value::Tensor(decode_tensor(obj)?),
        Json::Object(obj) => {
            let mut r = Record::new();
            for (k, v) in obj {
                r.insert(k.clone(), decode(v, handles)?);
            }
            Value::record(r)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_bytes_are_little_endian_f32() {
        let t = Tensor::new(vec![2], vec![1.0, -2.5]).unwrap();
        let j = encode_tensor(&t);
        let mut want = Vec::new();
        want.extend_from_slice(&[0x00, 0x00, 0x80, 0x3f]);
        want.extend_from_slice(&[0x00, 0x00, 0x20, 0xc0]);
        assert_eq!(j["data"], json!(STANDARD.encode(want)));
        assert_eq!(j["shape"], json!([2]));
    }

    #[test]
    fn non_finite_floats_become_strings() {
        let mut h = Handles::default();
        assert_eq!(encode(&Value::Float(f64::NAN), &mut h), json!("NaN"));
        assert_eq!(encode(&Value::Float(f64::NEG_INFINITY), &mut h), json!("-inf"));
    }

    #[test]
    fn opaque_values_get_fresh_handles() {
        let mut h = Handles::default();
        let v = Value::Range(0, 3);
        assert_eq!(encode(&v, &mut h), json!({"handle": 1}));
        assert_eq!(encode(&v, &mut h), json!({"handle": 2}));
        assert!(matches!(decode(&json!({"handle": 2}), &h), Ok(Value::Range(0, 3))));
        assert!(decode(&json!({"handle": 3}), &h).is_err());
        assert!(decode(&json!({"handle": 0}), &h).is_err());
    }
}
