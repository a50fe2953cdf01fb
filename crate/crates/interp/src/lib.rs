//! Tree-walking interpreter for M: values, the builtin prelude, method
//! dispatch, model declarations and import loading.

mod builtins;
mod decl;
mod error;
mod interp;
mod loader;
mod methods;
mod value;

use std::cell::RefCell;
use std::io::{self, Write};
use std::rc::Rc;

use mlang_model::Store;
use mlang_sema::{check_with_globals, CheckedProgram, MType};
use mlang_syntax::ast::Program;
use mlang_syntax::SourceSpan;

pub use error::{ErrorKind, Frame, Result, RuntimeError};
pub use interp::{ArgVal, RunConfig, MAIN, MAX_DEPTH};
pub use loader::{load_entry, load_source, LoadError};
pub use value::{LossKind, Record, Value};

/// One program run: globals, declarations, the registry handle and the
/// output sink. Cheap to clone; clones share state.
#[derive(Clone)]
pub struct Interpreter {
    inner: Rc<interp::Inner>,
}

impl Interpreter {
    pub fn new(cfg: RunConfig, out: Box<dyn Write>) -> Interpreter {
        Interpreter {
            inner: interp::Inner::new(cfg, out),
        }
    }

    pub fn with_stdout(cfg: RunConfig) -> Interpreter {
        Interpreter::new(cfg, Box::new(io::stdout()))
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Checks `program` against the globals defined so far.
    pub fn check(&self, program: Program) -> CheckedProgram {
        check_with_globals(program, &self.global_types())
    }

    /// Runs a checked program. Returns the value of the final statement
    /// when it is a bare expression.
    pub fn run(&self, program: &Program) -> Result<Option<Value>> {
        self.inner.exec_program(program)
    }

    /// Types of the current globals, for checking later snippets.
    pub fn global_types(&self) -> Vec<(String, MType)> {
        self.inner.global_types()
    }

    pub fn global(&self, name: &str) -> Option<Value> {
        self.inner.global(name)
    }

    pub fn set_global(&self, name: &str, v: Value) {
        self.inner.set_global(name, v)
    }

    /// Calls a global function, builtin or constructor by name.
    pub fn call(&self, name: &str, args: Vec<ArgVal>) -> Result<Value> {
        let f = self
            .inner
            .lookup(name, &Default::default())
            .ok_or_else(|| RuntimeError::new(ErrorKind::NameError, format!("unknown name `{name}`")))?;
        self.inner.call_value(&f, args, SourceSpan::default())
    }

    /// Rebinds custom nodes of `model` to same-named user functions.
    pub fn adopt_model(&self, model: mlang_model::Model) -> Value {
        let mut m = model;
        self.inner.bind_customs(&mut m);
        Value::model(m)
    }

    /// Scalar value of every `backward()` call so far, in order.
    pub fn loss_trace(&self) -> Vec<f32> {
        self.inner.loss_trace.borrow().clone()
    }
}

/// An in-memory output sink whose contents stay readable after the
/// interpreter takes ownership of a clone.
#[derive(Clone, Default)]
pub struct SharedBuffer(Rc<RefCell<Vec<u8>>>);

impl SharedBuffer {
    pub fn new() -> SharedBuffer {
        SharedBuffer::default()
    }

    pub fn contents(&self) -> String {
        String::from_utf8_lossy(&self.0.borrow()).into_owned()
    }

    pub fn clear(&self) {
        self.0.borrow_mut().clear();
    }
}

impl Write for SharedBuffer {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
