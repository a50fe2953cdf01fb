use std::path::Path;

use mlang_interp::{load_source, Interpreter, RunConfig, SharedBuffer};
use mlang_model::Store;
use mlang_syntax::SourceMap;
use proptest::prelude::*;

fn output(src: &str) -> String {
    let buf = SharedBuffer::new();
    let interp = Interpreter::new(
        RunConfig {
            store: Store::new("/nonexistent"),
            seed: 0,
        },
        Box::new(buf.clone()),
    );
    let mut sources = SourceMap::new();
    let program = load_source("p.m", src, Path::new(""), &mut sources).unwrap();
    let checked = interp.check(program);
    assert!(checked.diagnostics.is_empty());
    interp.run(&checked.program).unwrap();
    buf.contents()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integer_arithmetic_matches_i64(a in -1000i64..1000, b in -1000i64..1000, c in 1i64..50) {
        let src = format!("print(({a}) + ({b}) * ({c}), ({a}) / ({c}), ({a}) % ({c}), ({a}) < ({b}))\n");
        let want = format!("{} {} {} {}\n", a + b * c, a / c, a % c, a < b);
        prop_assert_eq!(output(&src), want);
    }

    #[test]
    fn loops_sum_like_a_fold(n in 0i64..40) {
        let src = format!("s = 0\nfor i in range({n}) {{\n  s = s + i * i\n}}\nprint(s)\n");
        let want: i64 = (0..n).map(|i| i * i).sum();
        prop_assert_eq!(output(&src), format!("{want}\n"));
    }
}
