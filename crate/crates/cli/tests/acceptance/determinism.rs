use crate::common::{ensure, m, program, seeded_store};

pub fn check() -> Result<String, String> {
    let qa = program("qa.m");
    let run = || {
        // A fresh store each time, so nothing carries over between runs.
        let store = seeded_store();
        m(&["--seed", "0", "run", &qa], store.path(), None)
    };
    let (a, b) = (run(), run());
    ensure(a.code == 0 && b.code == 0, || format!("exit codes {} and {}: {}", a.code, b.code, a.stderr))?;
    let history = a
        .stdout
        .lines()
        .find_map(|l| l.strip_prefix("loss history: "))
        .ok_or("no loss history in output")?;
    let epochs = history.matches(',').count() + 1;
    ensure(a.stdout == b.stdout, || format!("outputs differ:\n{}\n---\n{}", a.stdout, b.stdout))?;
    Ok(format!("{} identical bytes, {epochs}-epoch history", a.stdout.len()))
}
