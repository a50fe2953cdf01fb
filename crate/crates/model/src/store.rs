//! Versioned local registry: `<root>/models/<name>/<version>.mmod` plus
//! `<root>/index.json` mapping each name to its latest version.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{ModelError, Result};
use crate::manifest::Manifest;
use crate::model::{Model, Provenance};
use crate::zoo;

const HTTP_HINT: &str = "remote hubs are not built in; fetch the file on the host side and pass its path to the host protocol `load_model` request, or use file:// or mstore://";

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| ModelError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| ModelError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| ModelError::io(path, e))
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Store {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn model_dir(&self, name: &str) -> PathBuf {
        self.root.join("models").join(name)
    }

    pub fn manifest_path(&self, name: &str, version: u32) -> PathBuf {
        self.model_dir(name).join(format!("{version}.mmod"))
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    pub fn read_index(&self) -> Result<BTreeMap<String, u32>> {
        let path = self.index_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
            Err(e) => return Err(ModelError::io(&path, e)),
        };
        let v: Value = serde_json::from_str(&text).map_err(|e| ModelError::Format(format!("index.json: {e}")))?;
        v.as_object()
            .ok_or_else(|| ModelError::Format("index.json must be an object".into()))?
            .iter()
            .map(|(k, v)| {
                let n = v
                    .as_u64()
                    .ok_or_else(|| ModelError::Format(format!("index.json: bad version for `{k}`")))?;
                Ok((k.clone(), n as u32))
            })
            .collect()
    }

    fn write_index(&self, index: &BTreeMap<String, u32>) -> Result<()> {
        let v = serde_json::to_value(index).expect("map of integers");
        write_atomic(&self.index_path(), v.to_string().as_bytes())
    }

    fn record_version(&self, name: &str, version: u32) -> Result<()> {
        let mut index = self.read_index()?;
        let before = index.clone();
        let entry = index.entry(name.to_string()).or_insert(version);
        if *entry < version {
            *entry = version;
        }
        if index != before || !self.index_path().exists() {
            self.write_index(&index)?;
        }
        Ok(())
    }

    /// Versions present on disk, ascending.
    pub fn versions(&self, name: &str) -> Result<Vec<u32>> {
        let dir = self.model_dir(name);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
            Err(e) => return Err(ModelError::io(&dir, e)),
        };
        let mut out: Vec<u32> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let file = e.file_name().into_string().ok()?;
                file.strip_suffix(".mmod")?.parse().ok()
            })
            .filter(|&v| v >= 1)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Every stored name with its versions.
    pub fn list(&self) -> Result<Vec<(String, Vec<u32>)>> {
        let dir = self.root.join("models");
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
            Err(e) => return Err(ModelError::io(&dir, e)),
        };
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        names.sort();
        let mut out = Vec::new();
        for n in names {
            let v = self.versions(&n)?;
            if !v.is_empty() {
                out.push((n, v));
            }
        }
        Ok(out)
    }

    /// Writes version 1 of every zoo model that is not stored yet. Returns
    /// the names actually written; a second call writes nothing.
    pub fn seed(&self) -> Result<Vec<String>> {
        let mut written = Vec::new();
        for name in zoo::NAMES {
            if self.versions(name)?.is_empty() {
                let m = zoo::build(name).expect("zoo name");
                let text = Manifest::from_model(&m, 1).encode()?;
                write_atomic(&self.manifest_path(name, 1), text.as_bytes())?;
                written.push(name.to_string());
            }
            self.record_version(name, 1)?;
        }
        Ok(written)
    }

    pub fn resolve(&self, name: &str, version: Option<u32>) -> Result<Manifest> {
        if !valid_name(name) {
            return Err(ModelError::UnknownModel(name.to_string()));
        }
        let versions = self.versions(name)?;
        let latest = *versions
            .last()
            .ok_or_else(|| ModelError::UnknownModel(name.to_string()))?;
        let v = match version {
            None => latest,
            Some(v) if versions.contains(&v) => v,
            Some(v) => {
                return Err(ModelError::UnknownVersion {
                    name: name.to_string(),
                    version: v,
                })
            }
        };
        let path = self.manifest_path(name, v);
        let text = fs::read_to_string(&path).map_err(|e| ModelError::io(&path, e))?;
        let m = Manifest::decode(&text)?;
        if m.version != v {
            return Err(ModelError::Format(format!(
                "{} declares version {}",
                path.display(),
                m.version
            )));
        }
        Ok(m)
    }

    pub fn load(&self, name: &str, version: Option<u32>) -> Result<Model> {
        let m = self.resolve(name, version)?;
        let provenance = Provenance::Registry {
            name: name.to_string(),
            version: m.version,
        };
        let mut model = m.to_model(provenance)?;
        model.name = name.to_string();
        Ok(model)
    }

    /// Stores `model` under `name` as the next version.
    pub fn save(&self, model: &Model, name: &str) -> Result<u32> {
        if !valid_name(name) {
            return Err(ModelError::Invalid(format!(
                "invalid model name `{name}` (use letters, digits, '-', '_' and '.')"
            )));
        }
        let version = self.versions(name)?.last().map_or(1, |v| v + 1);
        let mut manifest = Manifest::from_model(model, version);
        manifest.name = name.to_string();
        write_atomic(&self.manifest_path(name, version), manifest.encode()?.as_bytes())?;
        self.record_version(name, version)?;
        Ok(version)
    }

    /// Copies a manifest file into the store under its own name.
    pub fn import(&self, path: &Path) -> Result<(String, u32)> {
        let m = load_file(path)?;
        let name = m.name.clone();
        let v = self.save(&m, &name)?;
        Ok((name, v))
    }
}

pub fn save_file(model: &Model, path: &Path) -> Result<()> {
    let text = Manifest::from_model(model, 1).encode()?;
    write_atomic(path, text.as_bytes())
}

pub fn load_file(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::io(path, e))?;
    Manifest::decode(&text)?.to_model(Provenance::Loaded(path.display().to_string()))
}

/// Parses `name` or `name@vN`.
pub fn parse_ref(s: &str) -> Result<(String, Option<u32>)> {
    match s.rsplit_once("@v") {
        Some((name, v)) => {
            let v: u32 = v
                .parse()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| ModelError::Invalid(format!("bad version in `{s}`")))?;
            Ok((name.to_string(), Some(v)))
        }
        None => Ok((s.to_string(), None)),
    }
}

/// `file://path`, `mstore://name[@vN]`, or a bare registry name.
pub fn load_url(url: &str, store: &Store) -> Result<Model> {
    if let Some(path) = url.strip_prefix("file://") {
        return load_file(Path::new(path));
    }
    if let Some(rest) = url.strip_prefix("mstore://") {
        let (name, v) = parse_ref(rest)?;
        return store.load(&name, v);
    }
    if let Some((scheme, _)) = url.split_once("://") {
        let hint = if scheme.eq_ignore_ascii_case("http") || scheme.eq_ignore_ascii_case("https") {
            HTTP_HINT.to_string()
        } else {
            "supported schemes are file:// and mstore://".to_string()
        };
        return Err(ModelError::UnsupportedScheme {
            url: url.to_string(),
            hint,
        });
    }
    let (name, v) = parse_ref(url)?;
    store.load(&name, v)
}
