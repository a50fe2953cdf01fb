use std::io::{self, BufReader};
use std::path::Path;

use mlang_interp::{load_entry, Interpreter, LoadError, RunConfig};
use mlang_model::{parse_ref, ModelError, Store};
use mlang_syntax::SourceMap;

use crate::output::{diagnostics_json, paint, print_diagnostics, color_enabled};
use crate::status;
use crate::{Cli, Command, ModelAction};

pub fn dispatch(cli: &Cli) -> u8 {
    let cfg = RunConfig {
        store: Store::new(cli.store_dir()),
        seed: cli.seed,
    };
    match &cli.command {
        Command::Run { file } => run(file, cfg),
        Command::Check { file, json } => check(file, *json, cfg),
        Command::Repl => crate::repl::repl(cfg),
        Command::Model { action } => model(action, &cfg.store),
        Command::Serve => serve(cfg),
    }
}

fn fail(message: &str) {
    eprintln!("{}", paint(&format!("error[io]: {message}"), color_enabled()));
}

/// Loads and checks `file`. Warnings are printed; errors end the command.
fn load_checked(file: &Path, interp: &Interpreter, sources: &mut SourceMap) -> Result<mlang_syntax::ast::Program, u8> {
    let program = match load_entry(file, sources) {
        Ok(p) => p,
        Err(LoadError::Io { path, message }) => {
            fail(&format!("cannot read {}: {message}", path.display()));
            return Err(status::IO);
        }
        Err(LoadError::Diagnostics(d)) => {
            print_diagnostics(&d, sources);
            return Err(status::DIAGNOSTICS);
        }
    };
    let checked = interp.check(program);
    print_diagnostics(&checked.diagnostics, sources);
    if checked.has_errors() {
        return Err(status::DIAGNOSTICS);
    }
    Ok(checked.program)
}

fn run(file: &Path, cfg: RunConfig) -> u8 {
    let interp = Interpreter::with_stdout(cfg);
    let mut sources = SourceMap::new();
    let program = match load_checked(file, &interp, &mut sources) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match interp.run(&program) {
        Ok(_) => status::OK,
        Err(e) => {
            eprintln!("{}", paint(&e.render(&sources), color_enabled()));
            status::RUNTIME
        }
    }
}

fn check(file: &Path, json: bool, cfg: RunConfig) -> u8 {
    let interp = Interpreter::with_stdout(cfg);
    let mut sources = SourceMap::new();
    let diags = match load_entry(file, &mut sources) {
        Ok(p) => interp.check(p).diagnostics,
        Err(LoadError::Io { path, message }) => {
            fail(&format!("cannot read {}: {message}", path.display()));
            return status::IO;
        }
        Err(LoadError::Diagnostics(d)) => d,
    };
    if json {
        println!("{}", diagnostics_json(&diags, &sources));
    } else {
        print_diagnostics(&diags, &sources);
    }
    if diags.iter().any(|d| d.is_error()) {
        status::DIAGNOSTICS
    } else {
        status::OK
    }
}

fn model(action: &ModelAction, store: &Store) -> u8 {
    let result = match action {
        ModelAction::List => list(store),
        ModelAction::Show { reference } => show(store, reference),
        ModelAction::Import { path } => store.import(path).map(|(name, v)| println!("{name}@v{v}")),
        ModelAction::Seed => store.seed().map(|written| {
            for name in written {
                println!("{name}@v1");
            }
        }),
    };
    match result {
        Ok(()) => status::OK,
        Err(e) => {
            fail(&e.to_string());
            status::IO
        }
    }
}

fn list(store: &Store) -> Result<(), ModelError> {
    for (name, versions) in store.list()? {
        println!("{name}\t{}", versions.last().copied().unwrap_or_default());
    }
    Ok(())
}

fn show(store: &Store, reference: &str) -> Result<(), ModelError> {
    let (name, version) = parse_ref(reference)?;
    let m = store.resolve(&name, version)?;
    let weights: usize = m.weights.iter().map(|w| w.data.len()).sum();
    println!("name:    {name}");
    println!("version: {}", m.version);
    println!("weights: {weights}");
    println!("layers:");
    for node in m.arch.nodes.iter().skip(1) {
        let head = if node.head { " (head)" } else { "" };
        println!("  {:<12} {}{head}", node.id, node.kind.tag());
    }
    println!("parameters:");
    for w in &m.weights {
        println!("  {:<16} {:?}", w.name, w.shape);
    }
    if !m.config.is_empty() {
        println!("config:");
        for (k, v) in &m.config {
            println!("  {k} = {v}");
        }
    }
    Ok(())
}

fn serve(cfg: RunConfig) -> u8 {
    // stdout carries protocol lines only, so program output goes to stderr.
    let interp = Interpreter::new(cfg, Box::new(io::stderr()));
    let stdin = BufReader::new(io::stdin());
    match mlang_hostproto::serve_session(stdin, io::stdout().lock(), interp) {
        Ok(()) => status::OK,
        Err(e) => {
            fail(&e.to_string());
            status::IO
        }
    }
}
