//! Seeded generator of random, well-formed M syntax trees for round-trip
//! testing. Spans are left at their defaults.

use mlang_syntax::ast::*;
use mlang_syntax::SourceSpan;

struct Gen(u64);

impl Gen {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs[self.below(xs.len() as u64) as usize]
    }
}

const VARS: &[&str] = &["x", "y", "lr", "batch", "model", "data", "_tmp", "w2"];
const FIELDS: &[&str] = &["num_labels", "pretrained_model", "hidden", "forward"];
const TYPES: &[&str] = &["Int", "Float", "Dataset", "Tensor", "Model"];

fn sp() -> SourceSpan {
    SourceSpan::default()
}

fn id(name: &str) -> Ident {
    Ident {
        name: name.to_string(),
        span: sp(),
    }
}

fn gen_expr(g: &mut Gen, depth: u32) -> Expr {
    let leaf = depth == 0 || g.below(3) == 0;
    let kind = if leaf {
        match g.below(6) {
            0 => ExprKind::Int(g.below(1000) as i64),
            1 => ExprKind::Float(f64::from_bits(g.next() >> 2).abs().clamp(1e-300, 1e300)),
            2 => ExprKind::Str(["", "bert-base-uncased", "a\"b\\c\nd\te"][g.below(3) as usize].into()),
            3 => ExprKind::Bool(g.below(2) == 0),
            _ => ExprKind::Ident(g.pick(VARS).into()),
        }
    } else {
        let d = depth - 1;
        let binops = [
            BinOp::Or,
            BinOp::And,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Rem,
        ];
        match g.below(7) {
            0 | 1 => ExprKind::Binary {
                op: binops[g.below(binops.len() as u64) as usize],
                lhs: Box::new(gen_expr(g, d)),
                rhs: Box::new(gen_expr(g, d)),
            },
            2 => ExprKind::Unary {
                op: if g.below(2) == 0 { UnOp::Neg } else { UnOp::Not },
                operand: Box::new(gen_expr(g, d)),
            },
            3 => {
                let n = g.below(4);
                let args = (0..n)
                    .map(|i| Arg {
                        name: (i > 0 && g.below(2) == 0).then(|| id(g.pick(VARS))),
                        value: gen_expr(g, d),
                        span: sp(),
                    })
                    .collect();
                ExprKind::Call {
                    callee: Box::new(gen_expr(g, d)),
                    args,
                }
            }
            4 => ExprKind::Member {
                object: Box::new(gen_expr(g, d)),
                name: id(g.pick(VARS)),
            },
            5 => ExprKind::Index {
                object: Box::new(gen_expr(g, d)),
                index: Box::new(gen_expr(g, d)),
            },
            _ => {
                if g.below(2) == 0 {
                    ExprKind::List((0..g.below(4)).map(|_| gen_expr(g, d)).collect())
                } else {
                    ExprKind::Record(
                        (0..g.below(3))
                            .map(|_| (id(g.pick(VARS)), gen_expr(g, d)))
                            .collect(),
                    )
                }
            }
        }
    };
    Expr::new(kind, sp())
}

fn gen_lvalue(g: &mut Gen) -> Expr {
    let mut e = Expr::new(ExprKind::Ident(g.pick(VARS).into()), sp());
    for _ in 0..g.below(3) {
        e = if g.below(2) == 0 {
            Expr::new(
                ExprKind::Member {
                    object: Box::new(e),
                    name: id(g.pick(VARS)),
                },
                sp(),
            )
        } else {
            Expr::new(
                ExprKind::Index {
                    object: Box::new(e),
                    index: Box::new(gen_expr(g, 1)),
                },
                sp(),
            )
        };
    }
    e
}

fn gen_block(g: &mut Gen, depth: u32) -> Block {
    Block {
        stmts: (0..g.below(4)).map(|_| gen_stmt(g, depth)).collect(),
        span: sp(),
    }
}

fn gen_stmt(g: &mut Gen, depth: u32) -> Stmt {
    let choice = if depth == 0 { 2 + g.below(3) } else { g.below(5) };
    let kind = match choice {
        0 => StmtKind::For {
            var: id(g.pick(VARS)),
            iter: gen_expr(g, 2),
            body: gen_block(g, depth - 1),
        },
        1 => {
            let otherwise = match g.below(3) {
                0 => None,
                1 => Some(ElseBranch::Block(gen_block(g, depth - 1))),
                _ => Some(ElseBranch::If(Box::new(Stmt {
                    kind: StmtKind::If {
                        cond: gen_expr(g, 2),
                        then: gen_block(g, depth - 1),
                        otherwise: None,
                    },
                    span: sp(),
                }))),
            };
            StmtKind::If {
                cond: gen_expr(g, 2),
                then: gen_block(g, depth - 1),
                otherwise,
            }
        }
        2 => StmtKind::Return((g.below(2) == 0).then(|| gen_expr(g, 3))),
        3 => StmtKind::Assign {
            target: gen_lvalue(g),
            value: gen_expr(g, 3),
        },
        _ => StmtKind::Expr(gen_expr(g, 3)),
    };
    Stmt { kind, span: sp() }
}

fn gen_type(g: &mut Gen, depth: u32) -> TypeRef {
    let generic = depth > 0 && g.below(3) == 0;
    TypeRef {
        name: id(if generic { "List" } else { g.pick(TYPES) }),
        args: if generic {
            vec![gen_type(g, depth - 1)]
        } else {
            vec![]
        },
        span: sp(),
    }
}

fn gen_fields(g: &mut Gen) -> Vec<FieldDef> {
    (0..g.below(4))
        .map(|_| FieldDef {
            name: id(g.pick(FIELDS)),
            value: gen_expr(g, 2),
            span: sp(),
        })
        .collect()
}

pub fn gen_program(seed: u64) -> Program {
    let mut g = Gen(seed);
    let items = (0..1 + g.below(6))
        .map(|i| match g.below(6) {
            0 => Item::Import(ImportDecl {
                path: if g.below(2) == 0 {
                    ImportPath::File("lib/util.m".into())
                } else {
                    ImportPath::Dotted(vec![id("models"), id("text")])
                },
                span: sp(),
            }),
            1 => Item::Metamodel(MetamodelDecl {
                name: id(&format!("Meta{i}")),
                fields: gen_fields(&mut g),
                span: sp(),
            }),
            2 => Item::Model(ModelDecl {
                name: id(&format!("M{i}")),
                parent: (g.below(2) == 0).then(|| id("Base")),
                fields: gen_fields(&mut g),
                span: sp(),
            }),
            3 => Item::Func(FuncDecl {
                name: id(&format!("f{i}")),
                params: (0..g.below(3))
                    .map(|_| Param {
                        name: id(g.pick(VARS)),
                        ty: gen_type(&mut g, 2),
                        span: sp(),
                    })
                    .collect(),
                ret: (g.below(2) == 0).then(|| gen_type(&mut g, 2)),
                body: gen_block(&mut g, 2),
                span: sp(),
            }),
            _ => Item::Stmt(gen_stmt(&mut g, 2)),
        })
        .collect();
    Program { items, span: sp() }
}

