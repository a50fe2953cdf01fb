//! Line-delimited JSON protocol over a pair of byte streams.
//!
//! The server writes a hello line `{"mlang_proto":1}`, then answers each
//! request line `{"id":N,"op":...,"args":{...}}` with exactly one response
//! line, in order: `{"id":N,"ok":true,"value":...}` or
//! `{"id":N,"ok":false,"error":{"kind":...,"message":...}}`.
//!
//! Ops: `eval {source}`, `call {fn, args, named}`, `fine_tune {model,
//! dataset, ...options}`, `evaluate {model, dataset, metrics}`,
//! `save_model {model, path}`, `load_model {path}` and `shutdown`.

pub mod codec;

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use mlang_interp::{load_source, ArgVal, Interpreter, RuntimeError, Value};
use mlang_syntax::SourceMap;
use serde_json::{json, Map, Value as Json};

pub use codec::Handles;

pub const PROTOCOL_VERSION: u64 = 1;

/// Options of `fine_tune` forwarded to `fineTuneModel` by name.
const FINE_TUNE_OPTIONS: [&str; 6] = ["epochs", "lr", "batch_size", "optimizer", "freeze", "seed"];

struct Failure {
    kind: String,
    message: String,
}

impl Failure {
    fn protocol(message: impl Into<String>) -> Failure {
        Failure {
            kind: "protocol".into(),
            message: message.into(),
        }
    }

    fn runtime(e: RuntimeError, sources: &SourceMap) -> Failure {
        Failure {
            kind: e.kind.as_str().into(),
            message: e.render(sources),
        }
    }
}

type Reply = Result<Json, Failure>;

/// State of one protocol session around an interpreter.
pub struct Session {
    interp: Interpreter,
    handles: Handles,
    sources: SourceMap,
    last_id: Option<i64>,
    base: PathBuf,
    evals: usize,
}

impl Session {
    pub fn new(interp: Interpreter) -> Session {
        Session {
            interp,
            handles: Handles::default(),
            sources: SourceMap::new(),
            last_id: None,
            base: std::env::current_dir().unwrap_or_default(),
            evals: 0,
        }
    }

    pub fn interpreter(&self) -> &Interpreter {
        &self.interp
    }

    /// Handles one request line. Returns the response line and whether the
    /// session should end.
    pub fn handle_line(&mut self, line: &str) -> (String, bool) {
        let req: Json = match serde_json::from_str(line) {
            Ok(j) => j,
            Err(e) => return (respond(-1, Err(Failure::protocol(format!("malformed request: {e}")))), false),
        };
        let Some(obj) = req.as_object() else {
            return (respond(-1, Err(Failure::protocol("request must be a JSON object"))), false);
        };
        let Some(id) = obj.get("id").and_then(Json::as_i64) else {
            return (respond(-1, Err(Failure::protocol("request needs an integer `id`"))), false);
        };
        if self.last_id.is_some_and(|last| id <= last) {
            let last = self.last_id.unwrap_or_default();
            return (
                respond(id, Err(Failure::protocol(format!("request id {id} does not exceed previous id {last}")))),
                false,
            );
        }
        self.last_id = Some(id);
        let Some(op) = obj.get("op").and_then(Json::as_str) else {
            return (respond(id, Err(Failure::protocol("request needs a string `op`"))), false);
        };
        let empty = Map::new();
        let args = match obj.get("args") {
            None | Some(Json::Null) => &empty,
            Some(Json::Object(a)) => a,
            Some(_) => return (respond(id, Err(Failure::protocol("`args` must be an object"))), false),
        };
        let reply = match op {
            "eval" => self.eval(args),
            "call" => self.call(args),
            "fine_tune" => self.fine_tune(args),
            "evaluate" => self.evaluate(args),
            "save_model" => self.builtin("saveModel", args, &["model", "path"], &[]),
            "load_model" => self.load_model(args),
            "shutdown" => return (respond(id, Ok(Json::Null)), true),
            other => Err(Failure::protocol(format!(
                "unknown op `{other}` (expected eval, call, fine_tune, evaluate, save_model, load_model or shutdown)"
            ))),
        };
        (respond(id, reply), false)
    }

    fn arg(&self, args: &Map<String, Json>, name: &str) -> Result<Value, Failure> {
        let j = args
            .get(name)
            .ok_or_else(|| Failure::protocol(format!("missing argument `{name}`")))?;
        self.value(j)
    }

    fn value(&self, j: &Json) -> Result<Value, Failure> {
        codec::decode(j, &self.handles).map_err(Failure::protocol)
    }

    /// Like `arg`, but a bare integer is also accepted as a handle.
    fn handle_arg(&self, args: &Map<String, Json>, name: &str) -> Result<Value, Failure> {
        match args.get(name) {
            Some(Json::Number(n)) if n.is_u64() => {
                let id = n.as_u64().unwrap_or_default();
                self.handles
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Failure::protocol(format!("unknown handle {id}")))
            }
            _ => self.arg(args, name),
        }
    }

    fn run_call(&mut self, name: &str, call_args: Vec<ArgVal>) -> Reply {
        let v = self
            .interp
            .call(name, call_args)
            .map_err(|e| Failure::runtime(e, &self.sources))?;
        Ok(codec::encode(&v, &mut self.handles))
    }

    fn builtin(&mut self, name: &str, args: &Map<String, Json>, handles: &[&str], options: &[&str]) -> Reply {
        let mut call_args = Vec::new();
        for h in handles {
            call_args.push(ArgVal::positional(self.handle_arg(args, h)?));
        }
        for o in options {
            if let Some(j) = args.get(*o) {
                call_args.push(ArgVal::named(o, self.value(j)?));
            }
        }
        let known: Vec<&str> = handles.iter().chain(options).copied().collect();
        if let Some(extra) = args.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Failure::protocol(format!("unexpected argument `{extra}`")));
        }
        self.run_call(name, call_args)
    }

    fn eval(&mut self, args: &Map<String, Json>) -> Reply {
        let source = args
            .get("source")
            .and_then(Json::as_str)
            .ok_or_else(|| Failure::protocol("eval needs a string `source`"))?;
        self.evals += 1;
        let name = format!("<eval {}>", self.evals);
        let program = load_source(&name, source, &self.base, &mut self.sources).map_err(|d| Failure {
            kind: d[0].code.to_string(),
            message: d.iter().map(|d| d.render(&self.sources)).collect::<Vec<_>>().join("\n"),
        })?;
        let checked = self.interp.check(program);
        if let Some(first) = checked.diagnostics.iter().find(|d| d.is_error()) {
            return Err(Failure {
                kind: first.code.to_string(),
                message: checked
                    .diagnostics
                    .iter()
                    .map(|d| d.render(&self.sources))
                    .collect::<Vec<_>>()
                    .join("\n"),
            });
        }
        let v = self
            .interp
            .run(&checked.program)
            .map_err(|e| Failure::runtime(e, &self.sources))?;
        Ok(codec::encode(&v.unwrap_or(Value::Unit), &mut self.handles))
    }

    fn call(&mut self, args: &Map<String, Json>) -> Reply {
        let name = args
            .get("fn")
            .and_then(Json::as_str)
            .ok_or_else(|| Failure::protocol("call needs a string `fn`"))?
            .to_string();
        let mut call_args = Vec::new();
        match args.get("args") {
            None | Some(Json::Null) => {}
            Some(Json::Array(items)) => {
                for j in items {
                    call_args.push(ArgVal::positional(self.value(j)?));
                }
            }
            Some(_) => return Err(Failure::protocol("`args` of call must be an array")),
        }
        match args.get("named") {
            None | Some(Json::Null) => {}
            Some(Json::Object(named)) => {
                for (k, j) in named {
                    call_args.push(ArgVal::named(k, self.value(j)?));
                }
            }
            Some(_) => return Err(Failure::protocol("`named` of call must be an object")),
        }
        self.run_call(&name, call_args)
    }

    fn fine_tune(&mut self, args: &Map<String, Json>) -> Reply {
        self.builtin("fineTuneModel", args, &["model", "dataset"], &FINE_TUNE_OPTIONS)
    }

    fn evaluate(&mut self, args: &Map<String, Json>) -> Reply {
        self.builtin("evaluateModel", args, &["model", "dataset"], &["metrics"])
    }

    fn load_model(&mut self, args: &Map<String, Json>) -> Reply {
        match (args.get("path"), args.get("url")) {
            (Some(_), None) => self.builtin("loadModel", args, &[], &["path"]),
            (None, Some(_)) => self.builtin("loadModelFromUrl", args, &[], &["url"]),
            _ => Err(Failure::protocol("load_model needs exactly one of `path` or `url`")),
        }
    }
}

fn respond(id: i64, reply: Reply) -> String {
    let j = match reply {
        Ok(value) => json!({"id": id, "ok": true, "value": value}),
        Err(f) => json!({"id": id, "ok": false, "error": {"kind": f.kind, "message": f.message}}),
    };
    j.to_string()
}

/// Runs a session until `shutdown` or end of input. Blank lines are
/// ignored.
pub fn serve_session(input: impl BufRead, mut output: impl Write, interp: Interpreter) -> io::Result<()> {
    writeln!(output, "{}", json!({ "mlang_proto": PROTOCOL_VERSION }))?;
    output.flush()?;
    let mut session = Session::new(interp);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (resp, done) = session.handle_line(&line);
        writeln!(output, "{resp}")?;
        output.flush()?;
        if done {
            break;
        }
    }
    Ok(())
}
