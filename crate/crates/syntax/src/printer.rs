//! Canonical source printer. Output re-parses to the same tree (spans aside).

use std::fmt::Write;

use crate::ast::*;

const INDENT: &str = "    ";

/// Renders `program` as canonical M source: 4-space indent, one statement
/// per line, a blank line around declarations.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    let mut prev_decl = false;
    for (i, item) in program.items.iter().enumerate() {
        let decl = item.is_decl();
        if i > 0 && (decl || prev_decl) {
            out.push('\n');
        }
        print_item(&mut out, item);
        prev_decl = decl;
    }
    out
}

fn print_item(out: &mut String, item: &Item) {
    match item {
        Item::Import(d) => {
            out.push_str("import ");
            match &d.path {
                ImportPath::File(p) => out.push_str(&quote(p)),
                ImportPath::Dotted(parts) => {
                    let names: Vec<&str> = parts.iter().map(|p| p.name.as_str()).collect();
                    out.push_str(&names.join("."));
                }
            }
            out.push('\n');
        }
        Item::Metamodel(d) => {
            write!(out, "metamodel {}", d.name.name).unwrap();
            print_fields(out, &d.fields);
        }
        Item::Model(d) => {
            write!(out, "model {}", d.name.name).unwrap();
            if let Some(p) = &d.parent {
                write!(out, " extends {}", p.name).unwrap();
            }
            print_fields(out, &d.fields);
        }
        Item::Func(d) => {
            write!(out, "func {}(", d.name.name).unwrap();
            for (i, p) in d.params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{}: {}", p.name.name, type_ref(&p.ty)).unwrap();
            }
            out.push(')');
            if let Some(r) = &d.ret {
                write!(out, " -> {}", type_ref(r)).unwrap();
            }
            out.push(' ');
            print_block(out, &d.body, 0);
            out.push('\n');
        }
        Item::Stmt(s) => print_stmt(out, s, 0),
    }
}

fn print_fields(out: &mut String, fields: &[FieldDef]) {
    if fields.is_empty() {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    for f in fields {
        writeln!(out, "{INDENT}{} = {}", f.name.name, expr(&f.value)).unwrap();
    }
    out.push_str("}\n");
}

fn type_ref(t: &TypeRef) -> String {
    if t.args.is_empty() {
        t.name.name.clone()
    } else {
        let args: Vec<String> = t.args.iter().map(type_ref).collect();
        format!("{}<{}>", t.name.name, args.join(", "))
    }
}

fn print_block(out: &mut String, b: &Block, depth: usize) {
    if b.stmts.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for s in &b.stmts {
        print_stmt(out, s, depth + 1);
    }
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    out.push_str(&INDENT.repeat(depth));
    print_stmt_body(out, s, depth);
    out.push('\n');
}

fn print_stmt_body(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::For { var, iter, body } => {
            write!(out, "for {} in {} ", var.name, expr(iter)).unwrap();
            print_block(out, body, depth);
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            write!(out, "if {} ", expr(cond)).unwrap();
            print_block(out, then, depth);
            match otherwise {
                Some(ElseBranch::If(inner)) => {
                    out.push_str(" else ");
                    print_stmt_body(out, inner, depth);
                }
                Some(ElseBranch::Block(b)) => {
                    out.push_str(" else ");
                    print_block(out, b, depth);
                }
                None => {}
            }
        }
        StmtKind::Return(None) => out.push_str("return"),
        StmtKind::Return(Some(e)) => write!(out, "return {}", expr(e)).unwrap(),
        StmtKind::Assign { target, value } => {
            write!(out, "{} = {}", expr(target), expr(value)).unwrap()
        }
        StmtKind::Expr(e) => out.push_str(&expr(e)),
    }
}

/// Renders one expression with the minimum parentheses needed.
pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match &e.kind {
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, lhs, p);
            write!(out, " {} ", op.as_str()).unwrap();
            write_expr(out, rhs, p + 1);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Unary { op, operand } => {
            let paren = UNARY_PRECEDENCE < min_prec;
            if paren {
                out.push('(');
            }
            out.push_str(op.as_str());
            write_expr(out, operand, UNARY_PRECEDENCE);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Call { callee, args } => {
            write_expr(out, callee, POSTFIX_PRECEDENCE);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let Some(n) = &a.name {
                    write!(out, "{}=", n.name).unwrap();
                }
                write_expr(out, &a.value, 0);
            }
            out.push(')');
        }
        ExprKind::Member { object, name } => {
            write_expr(out, object, POSTFIX_PRECEDENCE);
            write!(out, ".{}", name.name).unwrap();
        }
        ExprKind::Index { object, index } => {
            write_expr(out, object, POSTFIX_PRECEDENCE);
            out.push('[');
            write_expr(out, index, 0);
            out.push(']');
        }
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Float(v) => out.push_str(&float_literal(*v)),
        ExprKind::Str(s) => out.push_str(&quote(s)),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, 0);
            }
            out.push(']');
        }
        ExprKind::Record(pairs) => {
            out.push('{');
            for (i, (k, v)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{}: ", k.name).unwrap();
                write_expr(out, v, 0);
            }
            out.push('}');
        }
    }
}

/// Shortest text that lexes back to exactly `v` as a float literal.
pub fn float_literal(v: f64) -> String {
    // `{:?}` is shortest-round-trip and always keeps a `.` or an exponent.
    format!("{v:?}")
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
