use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use mlang_model::Store;
use tempfile::TempDir;

pub struct Out {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub secs: f64,
}

pub fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

pub fn here() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/acceptance")
}

pub fn seeded_store() -> TempDir {
    let dir = tempfile::tempdir().expect("tempdir");
    Store::new(dir.path()).seed().expect("seed store");
    dir
}

/// Runs the `m` binary against `store`, feeding `stdin` if given.
pub fn m(args: &[&str], store: &Path, stdin: Option<&str>) -> Out {
    let start = Instant::now();
    let mut child = Command::new(env!("CARGO_BIN_EXE_m"))
        .arg("--store")
        .arg(store)
        .args(args)
        .env_remove("M_STORE")
        .env("NO_COLOR", "1")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn m");
    {
        let mut input = child.stdin.take().expect("stdin");
        if let Some(text) = stdin {
            input.write_all(text.as_bytes()).expect("write stdin");
        }
    }
    let out = child.wait_with_output().expect("wait for m");
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        secs: start.elapsed().as_secs_f64(),
    }
}

pub fn program(name: &str) -> String {
    programs().join(name).display().to_string()
}

/// Parses a printed record of numbers such as `{accuracy: 1.0, f1: 0.5}`.
pub fn parse_metrics(line: &str) -> Result<BTreeMap<String, f64>, String> {
    let inner = line
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| format!("not a record: {line:?}"))?;
    inner
        .split(", ")
        .map(|field| {
            let (k, v) = field.split_once(": ").ok_or_else(|| format!("bad field {field:?}"))?;
            let v: f64 = v.parse().map_err(|_| format!("bad number in {field:?}"))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
