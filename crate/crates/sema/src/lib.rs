//! Static checking for M: name resolution, builtin signatures and gradual
//! types. Anything the checker cannot decide is typed `Unknown` and left to
//! the interpreter.

mod check;
pub mod prelude;
mod types;

pub use check::{body_globals, check, check_with_globals, Binding, CheckedProgram};
pub use types::{resolve_type, DeclKind, DeclTable, MType, TypeRefError, TYPE_NAMES};
