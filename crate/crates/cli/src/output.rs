use std::io::IsTerminal;

use mlang_syntax::{Diagnostic, SourceMap};
use serde_json::json;

/// Whether stderr may carry ANSI colors.
pub fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

/// Colors the first `error[`/`warning[` marker of a rendered message.
pub fn paint(text: &str, color: bool) -> String {
    if !color {
        return text.to_string();
    }
    for (word, code) in [("error[", "1;31"), ("warning[", "1;33")] {
        if let Some(i) = text.find(word) {
            let name = &word[..word.len() - 1];
            return format!("{}\x1b[{code}m{name}\x1b[0m{}", &text[..i], &text[i + name.len()..]);
        }
    }
    text.to_string()
}

pub fn print_diagnostics(diags: &[Diagnostic], sources: &SourceMap) {
    let color = color_enabled();
    for d in diags {
        eprintln!("{}", paint(&d.render(sources), color));
    }
}

pub fn diagnostics_json(diags: &[Diagnostic], sources: &SourceMap) -> String {
    let items: Vec<_> = diags
        .iter()
        .map(|d| {
            json!({
                "code": d.code,
                "severity": d.severity.as_str(),
                "message": d.message,
                "file": sources.name(d.span.file_id),
                "line": d.span.start_line,
                "col": d.span.start_col,
            })
        })
        .collect();
    serde_json::Value::Array(items).to_string()
}
