use std::path::Path;
use std::time::Instant;

use mlang_interp::{load_entry, Interpreter, RunConfig, SharedBuffer};
use mlang_model::Store;
use mlang_syntax::{lex, parse_source, SourceMap};
use serde_json::Value;

use crate::common::{ensure, m, program, programs, seeded_store};

const EPOCHS: usize = 3;

pub fn check() -> Result<String, String> {
    let verbatim = std::fs::read_to_string(programs().join("demo_verbatim.m")).map_err(|e| e.to_string())?;
    lex(&verbatim, 0).map_err(|d| format!("verbatim listing does not lex: {d:?}"))?;
    parse_source(&verbatim, 0).map_err(|d| format!("verbatim listing does not parse: {d:?}"))?;

    let store = seeded_store();
    let out = m(&["check", "--json", &program("demo_verbatim.m")], store.path(), None);
    ensure(out.code == 1, || format!("m check exited {}", out.code))?;
    let diags: Value = serde_json::from_str(&out.stdout).map_err(|e| format!("check --json: {e}"))?;
    let diags = diags.as_array().ok_or("check --json did not print an array")?;
    ensure(diags.len() == 1, || format!("expected one diagnostic, got {diags:?}"))?;
    ensure(diags[0]["code"] == "E001", || format!("expected E001, got {}", diags[0]))?;
    let message = diags[0]["message"].as_str().unwrap_or_default();
    ensure(message.contains("num_epochs"), || format!("diagnostic does not name num_epochs: {message}"))?;

    let run = m(&["run", &program("demo.m")], store.path(), None);
    ensure(run.code == 0, || format!("m run demo.m exited {}: {}", run.code, run.stderr))?;
    ensure(run.secs < 10.0, || format!("m run demo.m took {:.1}s", run.secs))?;

    let trace = in_process_trace(store.path())?;
    ensure(!trace.is_empty() && trace.len() % EPOCHS == 0, || {
        format!("{} losses recorded for {EPOCHS} epochs", trace.len())
    })?;
    let per_epoch = trace.len() / EPOCHS;
    let mean = |e: usize| trace[e * per_epoch..(e + 1) * per_epoch].iter().map(|&x| x as f64).sum::<f64>() / per_epoch as f64;
    let (first, last) = (mean(0), mean(EPOCHS - 1));
    ensure(last < first, || format!("final-epoch mean loss {last} not below first {first}"))?;
    Ok(format!(
        "one E001; run {:.1}s; epoch mean loss {first:.4} -> {last:.4}",
        run.secs
    ))
}

/// Runs the amended demo in-process to read the per-batch loss trace.
fn in_process_trace(store: &Path) -> Result<Vec<f32>, String> {
    let start = Instant::now();
    let interp = Interpreter::new(
        RunConfig {
            store: Store::new(store),
            seed: 0,
        },
        Box::new(SharedBuffer::new()),
    );
    let mut sources = SourceMap::new();
    let program = load_entry(&programs().join("demo.m"), &mut sources).map_err(|e| format!("{e:?}"))?;
    let checked = interp.check(program);
    ensure(!checked.has_errors(), || format!("{:?}", checked.diagnostics))?;
    interp.run(&checked.program).map_err(|e| e.render(&sources))?;
    ensure(start.elapsed().as_secs_f64() < 10.0, || "in-process demo run took over 10s".into())?;
    Ok(interp.loss_trace())
}
