//! Architecture graphs: an ordered DAG of layer nodes. Node 0 is the only
//! input and the last node is the output; every node reads only from nodes
//! before it, so list order is a topological order.

use serde_json::{json, Map, Value};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Input,
    Embedding { vocab: usize, dim: usize },
    Linear { inp: usize, out: usize },
    Relu,
    Tanh,
    MeanPool,
    Flatten,
    RnnCell { hidden: usize, window: usize },
    Concat,
    Sum,
    Mean,
    Custom { function: String },
}

impl NodeKind {
    pub fn tag(&self) -> &'static str {
        match self {
            NodeKind::Input => "input",
            NodeKind::Embedding { .. } => "embedding",
            NodeKind::Linear { .. } => "linear",
            NodeKind::Relu => "relu",
            NodeKind::Tanh => "tanh",
            NodeKind::MeanPool => "meanPool",
            NodeKind::Flatten => "flatten",
            NodeKind::RnnCell { .. } => "rnnCell",
            NodeKind::Concat => "concat",
            NodeKind::Sum => "sum",
            NodeKind::Mean => "mean",
            NodeKind::Custom { .. } => "custom",
        }
    }

    /// Parameter roles and shapes, in initialization order.
    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        match *self {
            NodeKind::Embedding { vocab, dim } => vec![("weight", vec![vocab, dim])],
            NodeKind::Linear { inp, out } => vec![("weight", vec![out, inp]), ("bias", vec![out])],
            NodeKind::RnnCell { hidden, .. } => vec![
                ("w_x", vec![hidden, 1]),
                ("w_h", vec![hidden, hidden]),
                ("bias", vec![hidden]),
            ],
            _ => vec![],
        }
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            NodeKind::Input => n == 0,
            NodeKind::Concat | NodeKind::Sum | NodeKind::Mean | NodeKind::Custom { .. } => n >= 1,
            _ => n == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub inputs: Vec<usize>,
    pub head: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchGraph {
    pub nodes: Vec<Node>,
}

fn input_node() -> Node {
    Node {
        id: "input".into(),
        kind: NodeKind::Input,
        inputs: vec![],
        head: false,
    }
}

impl ArchGraph {
    /// A single layer reading the model input.
    pub fn layer(id: &str, kind: NodeKind) -> ArchGraph {
        ArchGraph {
            nodes: vec![
                input_node(),
                Node {
                    id: id.to_string(),
                    kind,
                    inputs: vec![0],
                    head: false,
                },
            ],
        }
    }

    /// A chain of layers, each reading the previous one.
    pub fn chain(layers: Vec<(&str, NodeKind)>) -> ArchGraph {
        let mut nodes = vec![input_node()];
        for (id, kind) in layers {
            let prev = nodes.len() - 1;
            nodes.push(Node {
                id: id.to_string(),
                kind,
                inputs: vec![prev],
                head: false,
            });
        }
        ArchGraph { nodes }
    }

    pub fn output(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::Format(m));
        if self.nodes.len() < 2 {
            return bad("a graph needs an input and at least one layer".into());
        }
        let mut heads = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if (i == 0) != (n.kind == NodeKind::Input) {
                return bad(format!("node {i} (`{}`): the input must be node 0 and unique", n.id));
            }
            if n.id.is_empty() || self.nodes[..i].iter().any(|m| m.id == n.id) {
                return bad(format!("node {i}: empty or duplicate id `{}`", n.id));
            }
            if !n.kind.arity_ok(n.inputs.len()) {
                return bad(format!("node `{}`: wrong number of inputs for {}", n.id, n.kind.tag()));
            }
            if n.inputs.iter().any(|&j| j >= i) {
                return bad(format!("node `{}` reads a later node", n.id));
            }
            let zero = n.kind.param_shapes().iter().any(|(_, s)| s.contains(&0))
                || matches!(n.kind, NodeKind::RnnCell { window: 0, .. });
            if zero {
                return bad(format!("node `{}` has a zero dimension", n.id));
            }
            heads += n.head as usize;
        }
        if heads > 1 {
            return bad("more than one head node".into());
        }
        let out = self.output();
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            if i != out && !self.nodes.iter().any(|m| m.inputs.contains(&i)) {
                return bad(format!("node `{}` is unused; the graph must have a single output", n.id));
            }
        }
        Ok(())
    }

    /// (param name, shape) for every weight, in node order.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        self.nodes
            .iter()
            .flat_map(|n| {
                n.kind
                    .param_shapes()
                    .into_iter()
                    .map(move |(role, shape)| (format!("{}.{role}", n.id), shape))
            })
            .collect()
    }

    /// The node whose width follows `num_labels`: the tagged head, or else
    /// the output node when it is linear.
    pub fn head_index(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.head).or_else(|| {
            let out = self.output();
            matches!(self.nodes[out].kind, NodeKind::Linear { .. }).then_some(out)
        })
    }

    pub fn custom_functions(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Custom { function } => Some(function.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Statically known width of the last axis at node `i`.
    pub fn width_at(&self, i: usize) -> Option<usize> {
        let n = &self.nodes[i];
        let of = |k: usize| self.width_at(n.inputs[k]);
        match &n.kind {
            NodeKind::Input | NodeKind::Custom { .. } | NodeKind::Flatten => None,
            NodeKind::Embedding { dim, .. } => Some(*dim),
            NodeKind::Linear { out, .. } => Some(*out),
            NodeKind::RnnCell { hidden, .. } => Some(*hidden),
            NodeKind::Relu | NodeKind::Tanh | NodeKind::MeanPool | NodeKind::Sum | NodeKind::Mean => of(0),
            NodeKind::Concat => (0..n.inputs.len()).map(of).sum(),
        }
    }

    pub fn out_width(&self) -> Option<usize> {
        self.width_at(self.output())
    }

    /// Width the graph requires of its input, when a linear layer reads
    /// the input directly (possibly through elementwise layers).
    pub fn in_width(&self) -> Option<usize> {
        fn from(g: &ArchGraph, src: usize) -> Option<usize> {
            for (i, n) in g.nodes.iter().enumerate() {
                if !n.inputs.contains(&src) {
                    continue;
                }
                let here = match &n.kind {
                    NodeKind::Linear { inp, .. } => Some(*inp),
                    NodeKind::RnnCell { window, .. } => Some(*window),
                    NodeKind::Relu | NodeKind::Tanh => from(g, i),
                    _ => None,
                };
                if here.is_some() {
                    return here;
                }
            }
            None
        }
        from(self, 0)
    }

    fn splice(&self, prefix: &str, into: &mut Vec<Node>, input: usize) -> usize {
        let base = into.len();
        for n in &self.nodes[1..] {
            into.push(Node {
                id: format!("{prefix}{}", n.id),
                kind: n.kind.clone(),
                inputs: n
                    .inputs
                    .iter()
                    .map(|&j| if j == 0 { input } else { base + j - 1 })
                    .collect(),
                head: n.head,
            });
        }
        into.len() - 1
    }

    /// Feeds each graph into the next. Node ids gain a `<position>.` prefix;
    /// only the last graph keeps its head tag.
    pub fn sequential(parts: &[&ArchGraph]) -> ArchGraph {
        let mut nodes = vec![input_node()];
        let mut cur = 0;
        for (i, g) in parts.iter().enumerate() {
            let start = nodes.len();
            cur = g.splice(&format!("{i}."), &mut nodes, cur);
            if i + 1 < parts.len() {
                nodes[start..].iter_mut().for_each(|n| n.head = false);
            }
        }
        ArchGraph { nodes }
    }

    /// Runs every graph on the shared input and merges the outputs with
    /// `combine` (concat, sum, mean or custom). Head tags are dropped.
    pub fn parallel(parts: &[&ArchGraph], id: &str, combine: NodeKind) -> ArchGraph {
        let mut nodes = vec![input_node()];
        let mut outs = Vec::with_capacity(parts.len());
        for (i, g) in parts.iter().enumerate() {
            outs.push(g.splice(&format!("{i}."), &mut nodes, 0));
        }
        nodes.iter_mut().for_each(|n| n.head = false);
        nodes.push(Node {
            id: id.to_string(),
            kind: combine,
            inputs: outs,
            head: false,
        });
        ArchGraph { nodes }
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| {
                let mut m = Map::new();
                m.insert("id".into(), json!(n.id));
                m.insert("kind".into(), json!(n.kind.tag()));
                m.insert("inputs".into(), json!(n.inputs));
                m.insert("head".into(), json!(n.head));
                match &n.kind {
                    NodeKind::Embedding { vocab, dim } => {
                        m.insert("vocab".into(), json!(vocab));
                        m.insert("dim".into(), json!(dim));
                    }
                    NodeKind::Linear { inp, out } => {
                        m.insert("in".into(), json!(inp));
                        m.insert("out".into(), json!(out));
                    }
                    NodeKind::RnnCell { hidden, window } => {
                        m.insert("hidden".into(), json!(hidden));
                        m.insert("window".into(), json!(window));
                    }
                    NodeKind::Custom { function } => {
                        m.insert("function".into(), json!(function));
                    }
                    _ => {}
                }
                Value::Object(m)
            })
            .collect();
        json!({ "nodes": nodes })
    }

    pub fn from_json(v: &Value) -> Result<ArchGraph> {
        let bad = |m: &str| ModelError::Format(format!("arch: {m}"));
        let nodes = v
            .get("nodes")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `nodes` list"))?;
        let mut out = Vec::with_capacity(nodes.len());
        for n in nodes {
            let o = n.as_object().ok_or_else(|| bad("node is not an object"))?;
            let s = |k: &str| o.get(k).and_then(Value::as_str).ok_or_else(|| bad(&format!("node lacks `{k}`")));
            let u = |k: &str| {
                o.get(k)
                    .and_then(Value::as_u64)
                    .map(|x| x as usize)
                    .ok_or_else(|| bad(&format!("node lacks integer `{k}`")))
            };
            let kind = match s("kind")? {
                "input" => NodeKind::Input,
                "embedding" => NodeKind::Embedding { vocab: u("vocab")?, dim: u("dim")? },
                "linear" => NodeKind::Linear { inp: u("in")?, out: u("out")? },
                "relu" => NodeKind::Relu,
                "tanh" => NodeKind::Tanh,
                "meanPool" => NodeKind::MeanPool,
                "flatten" => NodeKind::Flatten,
                "rnnCell" => NodeKind::RnnCell { hidden: u("hidden")?, window: u("window")? },
                "concat" => NodeKind::Concat,
                "sum" => NodeKind::Sum,
                "mean" => NodeKind::Mean,
                "custom" => NodeKind::Custom { function: s("function")?.to_string() },
                other => return Err(bad(&format!("unknown node kind `{other}`"))),
            };
            let inputs = o
                .get("inputs")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("node lacks `inputs`"))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("bad input index")))
                .collect::<Result<Vec<_>>>()?;
            let head = o.get("head").and_then(Value::as_bool).ok_or_else(|| bad("node lacks `head`"))?;
            out.push(Node {
                id: s("id")?.to_string(),
                kind,
                inputs,
                head,
            });
        }
        let g = ArchGraph { nodes: out };
        g.validate()?;
        Ok(g)
    }
}
