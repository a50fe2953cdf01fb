//! Front end of the M language: tokens, syntax tree, parser, printer and
//! positioned diagnostics.

pub mod ast;
mod diag;
mod lexer;
mod parser;
mod printer;
mod span;
mod token;

pub use diag::{snippet, Diagnostic, Severity};
pub use lexer::lex;
pub use parser::parse;
pub use printer::{expr as print_expr, float_literal, pretty_print, quote};
pub use span::{SourceFile, SourceMap, SourceSpan};
pub use token::{Keyword, Token, TokenKind};

/// Lexes and parses `source` in one step. Diagnostics carry snippets.
pub fn parse_source(source: &str, file_id: u32) -> Result<ast::Program, Vec<Diagnostic>> {
    let tokens = lex(source, file_id)?;
    parse(&tokens).map_err(|mut diags| {
        for d in &mut diags {
            d.attach_snippet(source);
        }
        diags
    })
}
