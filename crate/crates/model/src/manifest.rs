//! `.mmod` manifests: canonical JSON (sorted keys, no whitespace) with
//! weights as base64 of little-endian f32.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use mlang_tensor::Param;
use serde_json::{json, Map, Value};

use crate::arch::ArchGraph;
use crate::config::{config_from_json, config_to_json, Config};
use crate::error::{ModelError, Result};
use crate::model::{Model, Provenance};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Everything needed to rebuild a model. Plain data, so it can cross
/// threads where a `Model` cannot.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub version: u32,
    pub arch: ArchGraph,
    pub config: Config,
    /// In architecture parameter order.
    pub weights: Vec<Weight>,
}

fn encode_f32(data: &[f32]) -> String {
    let bytes: Vec<u8> = data.iter().flat_map(|x| x.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_f32(text: &str, n: usize, name: &str) -> Result<Vec<f32>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| ModelError::Format(format!("weight `{name}`: {e}")))?;
    if bytes.len() != 4 * n {
        return Err(ModelError::Format(format!(
            "weight `{name}` holds {} bytes, shape needs {}",
            bytes.len(),
            4 * n
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

impl Manifest {
    pub fn from_model(m: &Model, version: u32) -> Manifest {
        Manifest {
            name: m.name.clone(),
            version,
            arch: m.arch.clone(),
            config: m.config.clone(),
            weights: m
                .params()
                .iter()
                .map(|(n, p)| Weight {
                    name: n.clone(),
                    shape: p.shape(),
                    data: p.data(),
                })
                .collect(),
        }
    }

    pub fn to_model(&self, provenance: Provenance) -> Result<Model> {
        let params = self
            .weights
            .iter()
            .map(|w| (w.name.clone(), Param::new(w.shape.clone(), w.data.clone())))
            .collect();
        Model::from_parts(&self.name, self.arch.clone(), params, self.config.clone(), provenance)
    }

    pub fn encode(&self) -> Result<String> {
        let mut weights = Map::new();
        for w in &self.weights {
            weights.insert(
                w.name.clone(),
                json!({ "data": encode_f32(&w.data), "dtype": "f32", "shape": w.shape }),
            );
        }
        let v = json!({
            "arch": self.arch.to_json(),
            "config": config_to_json(&self.config)?,
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "version": self.version,
            "weights": weights,
        });
        Ok(v.to_string())
    }

    pub fn decode(text: &str) -> Result<Manifest> {
        let bad = |m: String| ModelError::Format(m);
        let v: Value = serde_json::from_str(text).map_err(|e| bad(format!("not JSON: {e}")))?;
        let o = v.as_object().ok_or_else(|| bad("top level must be an object".into()))?;
        let mut keys: Vec<&str> = o.keys().map(String::as_str).collect();
        keys.sort_unstable();
        if keys != ["arch", "config", "format_version", "name", "version", "weights"] {
            return Err(bad(format!("unexpected top-level keys {keys:?}")));
        }
        if o["format_version"].as_u64() != Some(FORMAT_VERSION) {
            return Err(bad(format!("unsupported format_version {}", o["format_version"])));
        }
        let name = o["name"]
            .as_str()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| bad("`name` must be a non-empty string".into()))?
            .to_string();
        let version = o["version"]
            .as_u64()
            .filter(|&v| v >= 1 && v <= u32::MAX as u64)
            .ok_or_else(|| bad("`version` must be a positive integer".into()))? as u32;
        let arch = ArchGraph::from_json(&o["arch"])?;
        let config = config_from_json(&o["config"])?;
        let wobj = o["weights"]
            .as_object()
            .ok_or_else(|| bad("`weights` must be an object".into()))?;
        let specs = arch.param_specs();
        if wobj.len() != specs.len() {
            return Err(bad(format!(
                "architecture has {} parameters, manifest stores {}",
                specs.len(),
                wobj.len()
            )));
        }
        let mut weights = Vec::with_capacity(specs.len());
        for (pname, shape) in specs {
            let w = wobj
                .get(&pname)
                .and_then(Value::as_object)
                .ok_or_else(|| bad(format!("missing weight `{pname}`")))?;
            if w.get("dtype").and_then(Value::as_str) != Some("f32") {
                return Err(bad(format!("weight `{pname}` must have dtype f32")));
            }
            let stored: Option<Vec<usize>> = w
                .get("shape")
                .and_then(Value::as_array)
                .and_then(|a| a.iter().map(|x| x.as_u64().map(|x| x as usize)).collect());
            if stored.as_ref() != Some(&shape) {
                return Err(bad(format!("weight `{pname}` shape {stored:?}, expected {shape:?}")));
            }
            let data = w
                .get("data")
                .and_then(Value::as_str)
                .ok_or_else(|| bad(format!("weight `{pname}` lacks data")))?;
            let data = decode_f32(data, shape.iter().product(), &pname)?;
            weights.push(Weight {
                name: pname,
                shape,
                data,
            });
        }
        Ok(Manifest {
            name,
            version,
            arch,
            config,
            weights,
        })
    }
}
