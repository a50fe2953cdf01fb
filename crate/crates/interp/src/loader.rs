//! Reads an entry file and everything it imports into one program.
//!
//! `import "file.m"` is resolved against the importing file's directory;
//! `import a.b` against the entry file's directory as `a/b.m`. Each file is
//! loaded once, so repeated and cyclic imports are harmless. Imported items
//! come before the importer's own items.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use mlang_syntax::ast::{ImportDecl, ImportPath, Item, Program};
use mlang_syntax::{parse_source, Diagnostic, SourceMap, SourceSpan};

#[derive(Debug)]
pub enum LoadError {
    /// The entry file itself could not be read.
    Io { path: PathBuf, message: String },
    Diagnostics(Vec<Diagnostic>),
}

pub fn load_entry(path: &Path, sources: &mut SourceMap) -> Result<Program, LoadError> {
    let text = fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut loader = Loader {
        sources,
        seen: HashSet::new(),
        entry_dir: base,
        diags: Vec::new(),
    };
    loader.seen.insert(canonical(path));
    let program = loader.file(path, &path.display().to_string(), &text);
    if loader.diags.is_empty() {
        Ok(program.expect("no diagnostics means the entry parsed"))
    } else {
        Err(LoadError::Diagnostics(loader.diags))
    }
}

/// Loads source that has no file of its own (REPL lines, protocol requests).
/// Imports resolve against `base`.
pub fn load_source(name: &str, text: &str, base: &Path, sources: &mut SourceMap) -> Result<Program, Vec<Diagnostic>> {
    let mut loader = Loader {
        sources,
        seen: HashSet::new(),
        entry_dir: base.to_path_buf(),
        diags: Vec::new(),
    };
    let program = loader.file(&base.join(name), name, text);
    if loader.diags.is_empty() {
        Ok(program.expect("no diagnostics means the source parsed"))
    } else {
        Err(loader.diags)
    }
}

fn canonical(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

struct Loader<'a> {
    sources: &'a mut SourceMap,
    seen: HashSet<PathBuf>,
    entry_dir: PathBuf,
    diags: Vec<Diagnostic>,
}

impl Loader<'_> {
    fn file(&mut self, path: &Path, shown: &str, text: &str) -> Option<Program> {
        let id = self.sources.add(shown.to_string(), text);
        let program = match parse_source(text, id) {
            Ok(p) => p,
            Err(d) => {
                self.diags.extend(d);
                return None;
            }
        };
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut items = Vec::new();
        for item in &program.items {
            if let Item::Import(decl) = item {
                items.extend(self.import(decl, &dir, text));
            }
        }
        items.extend(program.items.iter().cloned());
        Some(Program {
            items,
            span: program.span,
        })
    }

    fn import(&mut self, decl: &ImportDecl, dir: &Path, text: &str) -> Vec<Item> {
        let (target, shown) = match &decl.path {
            ImportPath::File(f) => (dir.join(f), format!("\"{f}\"")),
            ImportPath::Dotted(parts) => {
                let mut p = self.entry_dir.clone();
                for part in parts {
                    p.push(&part.name);
                }
                p.set_extension("m");
                let shown = parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(".");
                (p, shown)
            }
        };
        let key = canonical(&target);
        if !self.seen.insert(key) {
            return Vec::new();
        }
        match fs::read_to_string(&target) {
            Ok(src) => self.file(&target, &target.display().to_string(), &src).map(|p| p.items).unwrap_or_default(),
            Err(e) => {
                self.error(decl.span, text, format!("cannot import {shown}: {} ({e})", target.display()));
                Vec::new()
            }
        }
    }

    fn error(&mut self, span: SourceSpan, text: &str, msg: String) {
        let mut d = Diagnostic::error("E009", msg, span);
        d.attach_snippet(text);
        self.diags.push(d);
    }
}
