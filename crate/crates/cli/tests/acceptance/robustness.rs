use std::fs;
use std::path::{Path, PathBuf};

use mlang_syntax::ast::{same_structure, Program};
use mlang_syntax::{parse_source, pretty_print};
use mlang_testkit::programs::gen_program;
use serde_json::Value;

use crate::common::{ensure, here, m, program, programs, seeded_store};

const GENERATED: u64 = 50;

fn m_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map(|entries| entries.filter_map(|e| e.ok()).map(|e| e.path()).collect())
        .unwrap_or_default();
    files.retain(|p| p.extension().is_some_and(|x| x == "m"));
    files.sort();
    files
}

fn roundtrip(name: &str, p: &Program) -> Result<(), String> {
    let printed = pretty_print(p);
    let back = parse_source(&printed, 0).map_err(|d| format!("{name}: printed form does not parse: {d:?}"))?;
    ensure(same_structure(p, &back), || format!("{name}: tree changed through printing"))?;
    ensure(pretty_print(&back) == printed, || format!("{name}: printing is not a fixed point"))
}

/// Reads `// expect CODE LINE:COL` from the first line.
fn expectation(text: &str) -> Option<(String, u64, u64)> {
    let rest = text.lines().next()?.strip_prefix("// expect ")?;
    let (code, pos) = rest.split_once(' ')?;
    let (line, col) = pos.trim().split_once(':')?;
    Some((code.to_string(), line.parse().ok()?, col.parse().ok()?))
}

struct Golden {
    name: &'static str,
    args: Vec<String>,
    stdin: Option<&'static str>,
    code: i32,
    stdout: Option<&'static str>,
}

fn golden(name: &'static str, args: &[&str], code: i32) -> Golden {
    Golden {
        name,
        args: args.iter().map(|s| s.to_string()).collect(),
        stdin: None,
        code,
        stdout: None,
    }
}

fn golden_cases() -> Vec<Golden> {
    let runtime_error = here().join("fixtures/runtime_error.m").display().to_string();
    let missing = here().join("fixtures/does_not_exist.m").display().to_string();
    vec![
        golden("version", &["--version"], 0),
        golden("unknown flag", &["--frobnicate"], 3),
        golden("missing subcommand", &[], 3),
        golden("missing entry file", &["run", &missing], 4),
        Golden {
            stdout: Some("hello 3\n"),
            ..golden("run hello", &["run", &program("hello.m")], 0)
        },
        golden("check verbatim demo", &["check", &program("demo_verbatim.m")], 1),
        Golden {
            stdout: Some("[]\n"),
            ..golden("check clean json", &["check", "--json", &program("hello.m")], 0)
        },
        golden("runtime error", &["run", &runtime_error], 2),
        golden("unknown model", &["model", "show", "no-such-model"], 4),
        Golden {
            stdout: Some("bert-base-uncased\t1\nlstm\t1\nresnet50\t1\n"),
            ..golden("model list", &["model", "list"], 0)
        },
        Golden {
            stdin: Some("x = 1 + 2\nx\n:quit\n"),
            stdout: Some("3\n"),
            ..golden("repl", &["repl"], 0)
        },
        Golden {
            stdin: Some("{\"id\":1,\"op\":\"eval\",\"args\":{\"source\":\"1 + 2\"}}\n{\"id\":2,\"op\":\"shutdown\"}\n"),
            stdout: Some("{\"mlang_proto\":1}\n{\"id\":1,\"ok\":true,\"value\":3}\n{\"id\":2,\"ok\":true,\"value\":null}\n"),
            ..golden("serve", &["serve"], 0)
        },
    ]
}

pub fn check() -> Result<String, String> {
    let corpus = m_files(&programs());
    ensure(corpus.len() >= 5, || format!("corpus has only {} files", corpus.len()))?;
    for path in &corpus {
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let p = parse_source(&text, 0).map_err(|d| format!("{name}: {d:?}"))?;
        roundtrip(&name, &p)?;
    }
    for seed in 0..GENERATED {
        roundtrip(&format!("generated #{seed}"), &gen_program(seed))?;
    }

    let store = seeded_store();
    let malformed = m_files(&here().join("malformed"));
    ensure(malformed.len() == 10, || format!("malformed corpus has {} files", malformed.len()))?;
    for path in &malformed {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let (code, line, col) = expectation(&text).ok_or_else(|| format!("{name}: no expect header"))?;
        let out = m(&["check", "--json", &path.display().to_string()], store.path(), None);
        ensure(out.code == 1, || format!("{name}: m check exited {}", out.code))?;
        let diags: Value = serde_json::from_str(&out.stdout).map_err(|e| format!("{name}: {e}"))?;
        let hit = diags.as_array().is_some_and(|ds| {
            ds.iter().any(|d| d["code"] == code.as_str() && d["line"] == line && d["col"] == col)
        });
        ensure(hit, || format!("{name}: expected {code} at {line}:{col}, got {diags}"))?;
    }

    let cases = golden_cases();
    for case in &cases {
        let args: Vec<&str> = case.args.iter().map(String::as_str).collect();
        let out = m(&args, store.path(), case.stdin);
        ensure(out.code == case.code, || {
            format!("golden `{}`: exit {} (want {}): {}", case.name, out.code, case.code, out.stderr)
        })?;
        if let Some(want) = case.stdout {
            ensure(out.stdout == want, || format!("golden `{}`: stdout {:?}", case.name, out.stdout))?;
        }
    }

    Ok(format!(
        "{} corpus files + {GENERATED} generated round-trip; {} malformed located; {} CLI cases",
        corpus.len(),
        malformed.len(),
        cases.len()
    ))
}
