//! Positioned diagnostics shared by the lexer, parser and checker.

use std::fmt;

use crate::span::{SourceMap, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single report. Codes are `L0xx` (lexer), `P0xx` (parser) and `E0xx`
/// (checker).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
    /// Source line plus caret underline; filled by [`Diagnostic::attach_snippet`].
    pub snippet: String,
}

impl Diagnostic {
    pub fn error(code: &str, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            code: code.to_string(),
            severity: Severity::Error,
            message: message.into(),
            span,
            snippet: String::new(),
        }
    }

    pub fn warning(code: &str, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message, span)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn attach_snippet(&mut self, source: &str) {
        self.snippet = snippet(source, &self.span);
    }

    /// `file:line:col: error[CODE]: message` followed by the snippet.
    pub fn render(&self, sources: &SourceMap) -> String {
        let file = sources.name(self.span.file_id);
        let mut out = format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.span.start_line, self.span.start_col, self.severity, self.code, self.message
        );
        let snip = if self.snippet.is_empty() {
            sources
                .get(self.span.file_id)
                .map(|f| snippet(&f.text, &self.span))
                .unwrap_or_default()
        } else {
            self.snippet.clone()
        };
        if !snip.is_empty() {
            out.push('\n');
            out.push_str(&snip);
        }
        out
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.span.start_line, self.span.start_col, self.severity, self.code, self.message
        )
    }
}

/// Renders the first line of `span` with a caret underline beneath it.
pub fn snippet(source: &str, span: &SourceSpan) -> String {
    let line_no = span.start_line as usize;
    let Some(line) = source.lines().nth(line_no.saturating_sub(1)) else {
        return String::new();
    };
    let line = line.trim_end_matches('\r');
    let width = line.chars().count();
    let start = (span.start_col as usize).saturating_sub(1).min(width);
    let end = if span.end_line == span.start_line {
        (span.end_col as usize).saturating_sub(1).min(width)
    } else {
        width
    };
    let carets = end.saturating_sub(start).max(1);
    let gutter = format!("{line_no}");
    let pad = " ".repeat(gutter.len());
    format!(
        "{pad} |\n{gutter} | {line}\n{pad} | {}{}",
        " ".repeat(start),
        "^".repeat(carets)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snippet_underlines_span() {
        let span = SourceSpan {
            file_id: 0,
            start_line: 2,
            start_col: 5,
            end_line: 2,
            end_col: 8,
            lo: 0,
            hi: 0,
        };
        let s = snippet("a\nfoo bar baz\n", &span);
        assert_eq!(s, "  |\n2 | foo bar baz\n  |     ^^^");
    }

    #[test]
    fn render_has_location_prefix() {
        let mut map = SourceMap::new();
        let id = map.add("demo.m", "x = y\n");
        let span = SourceSpan {
            file_id: id,
            start_line: 1,
            start_col: 5,
            end_line: 1,
            end_col: 6,
            lo: 4,
            hi: 5,
        };
        let d = Diagnostic::error("E001", "unknown name `y`", span);
        assert!(d.render(&map).starts_with("demo.m:1:5: error[E001]: unknown name `y`\n"));
    }
}
