use std::path::PathBuf;

use mlang_sema::{check, CheckedProgram};
use mlang_syntax::parse_source;
use proptest::prelude::*;

fn demo() -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs/demo_verbatim.m");
    std::fs::read_to_string(p).unwrap()
}

fn checked(src: &str) -> CheckedProgram {
    check(parse_source(src, 0).expect("parses"))
}

#[test]
fn verbatim_demo_has_exactly_one_unknown_name() {
    let src = demo();
    let c = checked(&src);
    assert_eq!(c.diagnostics.len(), 1, "{:?}", c.diagnostics);
    let d = &c.diagnostics[0];
    assert_eq!(d.code, "E001");
    assert!(d.message.contains("num_epochs"), "{}", d.message);
    let lo = d.span.lo as usize;
    assert_eq!(&src[lo..d.span.hi as usize], "num_epochs");
    // The span points into the `range(num_epochs)` call.
    let line = src.lines().nth(d.span.start_line as usize - 1).unwrap();
    assert!(line.contains("range(num_epochs)"));
}

#[test]
fn amended_demo_checks_clean() {
    let src = format!("num_epochs = 3\n{}", demo());
    let c = checked(&src);
    assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
}

#[test]
fn diagnostics_are_deterministic() {
    let src = "print(a)\nmodel X extends Y {}\nfunc f(p: Nope) { q }\nrange(1, 2, 3)";
    let first = checked(src).diagnostics;
    for _ in 0..5 {
        assert_eq!(checked(src).diagnostics, first);
    }
    let codes: Vec<_> = first.iter().map(|d| d.code.as_str()).collect();
    assert_eq!(codes, ["E001", "E006", "E001", "E001", "E002"]);
}

const DECLS: &[&str] = &[
    "metamodel Tiny {\n    d = 4\n    forward = sequentialModel(linear(d, 2), relu())\n}",
    "model A extends Tiny {\n    d = 8\n}",
    "model B extends A {}",
    "model Bad {\n    num_labels = 2\n}",
    "func train(m: A, data: Dataset) {\n    fineTuneModel(m, data, epochs=epochs)\n}",
    "func helper() -> Int {\n    return missing\n}",
];

fn code_set(src: &str) -> Vec<(String, String)> {
    let mut v: Vec<_> = checked(src)
        .diagnostics
        .into_iter()
        .map(|d| (d.code, d.message))
        .collect();
    v.sort();
    v
}

proptest! {
    #[test]
    fn permuting_declarations_keeps_diagnostics(perm in Just((0..DECLS.len()).collect::<Vec<_>>()).prop_shuffle()) {
        let tail = "epochs = 2\nd = syntheticText(8)\ntrain(B(), d)\n";
        let base: String = DECLS.join("\n") + "\n" + tail;
        let shuffled: String = perm.iter().map(|&i| DECLS[i]).collect::<Vec<_>>().join("\n") + "\n" + tail;
        prop_assert_eq!(code_set(&base), code_set(&shuffled));
    }

    #[test]
    fn checker_is_total(src in "[a-z0-9 \n(){}.,=+*<>!&|;:\"-]{0,100}") {
        if let Ok(program) = parse_source(&src, 0) {
            let _ = check(program);
        }
    }
}

#[test]
fn hoisted_set_has_expected_errors() {
    let base = DECLS.join("\n") + "\nepochs = 2\nd = syntheticText(8)\ntrain(B(), d)\n";
    let codes: Vec<String> = code_set(&base).into_iter().map(|(c, _)| c).collect();
    // `Bad` lacks an architecture; `helper` reads an unbound name.
    assert_eq!(codes, ["E001", "E007"]);
}

#[test]
fn checker_is_total_on_corpus_items_in_isolation() {
    let src = format!("num_epochs = 3\n{}", demo());
    let program = parse_source(&src, 0).unwrap();
    for item in program.items {
        let single = mlang_syntax::ast::Program {
            span: item.span(),
            items: vec![item],
        };
        let _ = check(single);
    }
}
