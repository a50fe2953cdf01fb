use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;

use mlang_interp::{load_source, Interpreter, RunConfig, Value};
use mlang_syntax::ast::{Item, StmtKind};
use mlang_syntax::SourceMap;

use crate::output::{color_enabled, paint, print_diagnostics};
use crate::status;

/// Net count of open brackets in `line`, ignoring strings and comments.
pub fn depth_change(line: &str) -> i64 {
    let mut depth = 0;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => {
                            chars.next();
                        }
                        '"' => break,
                        _ => {}
                    }
                }
            }
            '/' if chars.peek() == Some(&'/') => break,
            '{' | '(' | '[' => depth += 1,
            '}' | ')' | ']' => depth -= 1,
            _ => {}
        }
    }
    depth
}

struct Repl {
    interp: Interpreter,
    sources: SourceMap,
    base: PathBuf,
    count: usize,
}

impl Repl {
    fn name(&mut self) -> String {
        self.count += 1;
        format!("<repl {}>", self.count)
    }

    fn show_type(&mut self, expr: &str) {
        let name = self.name();
        let program = match load_source(&name, &format!("{expr}\n"), &self.base, &mut self.sources) {
            Ok(p) => p,
            Err(d) => return print_diagnostics(&d, &self.sources),
        };
        let checked = self.interp.check(program);
        if checked.has_errors() {
            return print_diagnostics(&checked.diagnostics, &self.sources);
        }
        let expr = checked.program.items.iter().rev().find_map(|item| match item {
            Item::Stmt(s) => match &s.kind {
                StmtKind::Expr(e) => Some(e),
                _ => None,
            },
            _ => None,
        });
        match expr {
            Some(e) => println!("{}", checked.type_of(e)),
            None => eprintln!(":type needs an expression"),
        }
    }

    fn eval(&mut self, source: &str) {
        let name = self.name();
        let program = match load_source(&name, source, &self.base, &mut self.sources) {
            Ok(p) => p,
            Err(d) => return print_diagnostics(&d, &self.sources),
        };
        let checked = self.interp.check(program);
        print_diagnostics(&checked.diagnostics, &self.sources);
        if checked.has_errors() {
            return;
        }
        match self.interp.run(&checked.program) {
            Ok(Some(Value::Unit)) | Ok(None) => {}
            Ok(Some(v)) => println!("{v:?}"),
            Err(e) => eprintln!("{}", paint(&e.render(&self.sources), color_enabled())),
        }
    }
}

pub fn repl(cfg: RunConfig) -> u8 {
    let mut repl = Repl {
        interp: Interpreter::with_stdout(cfg),
        sources: SourceMap::new(),
        base: std::env::current_dir().unwrap_or_default(),
        count: 0,
    };
    let interactive = io::stdin().is_terminal();
    let prompt = |more: bool| {
        if interactive {
            print!("{}", if more { "... " } else { "m> " });
            let _ = io::stdout().flush();
        }
    };
    let mut pending = String::new();
    let mut depth = 0;
    prompt(false);
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else {
            return status::IO;
        };
        if pending.is_empty() {
            let trimmed = line.trim();
            if trimmed == ":quit" || trimmed == ":q" {
                return status::OK;
            }
            if let Some(expr) = trimmed.strip_prefix(":type ") {
                repl.show_type(expr);
                prompt(false);
                continue;
            }
            if trimmed.is_empty() {
                prompt(false);
                continue;
            }
        }
        pending.push_str(&line);
        pending.push('\n');
        depth += depth_change(&line);
        if depth > 0 {
            prompt(true);
            continue;
        }
        let source = std::mem::take(&mut pending);
        depth = 0;
        repl.eval(&source);
        let _ = io::stdout().flush();
        prompt(false);
    }
    status::OK
}
