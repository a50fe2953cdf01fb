use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use mlang_tensor::{glorot_uniform, leaf_on, DType, Param, SplitMix64, Tape, Tensor, TensorError};

use crate::arch::{ArchGraph, Node, NodeKind};
use crate::config::Config;
use crate::error::{ModelError, Result};

/// Host callback behind a `custom` node.
pub trait CustomFn {
    fn call(&self, inputs: &[Tensor]) -> std::result::Result<Tensor, String>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Declared { decl: String, parent: Option<String> },
    Registry { name: String, version: u32 },
    Composed,
    Loaded(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Declared { decl, parent: Some(p) } => write!(f, "declared {decl} (from {p})"),
            Provenance::Declared { decl, parent: None } => write!(f, "declared {decl}"),
            Provenance::Registry { name, version } => write!(f, "registry {name}@v{version}"),
            Provenance::Composed => f.write_str("composed"),
            Provenance::Loaded(path) => write!(f, "loaded from {path}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Parameters enter the tape as leaves (frozen ones as constants).
    Train,
    /// Nothing is recorded.
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Concat,
    Sum,
    Mean,
}

impl Combine {
    pub fn parse(s: &str) -> Option<Combine> {
        match s {
            "concat" => Some(Combine::Concat),
            "sum" => Some(Combine::Sum),
            "mean" => Some(Combine::Mean),
            _ => None,
        }
    }

    fn kind(self) -> NodeKind {
        match self {
            Combine::Concat => NodeKind::Concat,
            Combine::Sum => NodeKind::Sum,
            Combine::Mean => NodeKind::Mean,
        }
    }
}

#[derive(Clone)]
pub struct Model {
    pub name: String,
    pub arch: ArchGraph,
    params: Vec<(String, Param)>,
    pub config: Config,
    pub provenance: Provenance,
    frozen: BTreeSet<String>,
    customs: BTreeMap<String, Rc<dyn CustomFn>>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("arch", &self.arch)
            .field("params", &self.param_names())
            .field("config", &self.config)
            .field("provenance", &self.provenance)
            .field("frozen", &self.frozen)
            .finish()
    }
}

fn init_params(arch: &ArchGraph, rng: &mut SplitMix64) -> Vec<(String, Param)> {
    arch.param_specs()
        .into_iter()
        .map(|(name, shape)| {
            let data = glorot_uniform(&shape, rng);
            (name, Param::new(shape, data))
        })
        .collect()
}

impl Model {
    /// Fresh model with Glorot weights drawn from `rng` in parameter order.
    pub fn from_arch(name: &str, arch: ArchGraph, rng: &mut SplitMix64) -> Result<Model> {
        arch.validate()?;
        let params = init_params(&arch, rng);
        Ok(Model {
            name: name.to_string(),
            arch,
            params,
            config: Config::new(),
            provenance: Provenance::Composed,
            frozen: BTreeSet::new(),
            customs: BTreeMap::new(),
        })
    }

    /// Assembles a model from existing weights; names and shapes must match
    /// the architecture exactly.
    pub fn from_parts(name: &str, arch: ArchGraph, params: Vec<(String, Param)>, config: Config, provenance: Provenance) -> Result<Model> {
        arch.validate()?;
        let specs = arch.param_specs();
        if specs.len() != params.len() {
            return Err(ModelError::Format(format!(
                "architecture has {} parameters, weights give {}",
                specs.len(),
                params.len()
            )));
        }
        for ((name, shape), (pname, p)) in specs.iter().zip(&params) {
            if name != pname || *shape != p.shape() {
                return Err(ModelError::Format(format!(
                    "weight `{pname}` {:?} does not match `{name}` {shape:?}",
                    p.shape()
                )));
            }
        }
        Ok(Model {
            name: name.to_string(),
            arch,
            params,
            config,
            provenance,
            frozen: BTreeSet::new(),
            customs: BTreeMap::new(),
        })
    }

    /// A one-layer model named after its kind (`linear`, `relu`, ...).
    pub fn layer(kind: NodeKind, rng: &mut SplitMix64) -> Result<Model> {
        let tag = kind.tag();
        Model::from_arch(tag, ArchGraph::layer(tag, kind), rng)
    }

    pub fn params(&self) -> &[(String, Param)] {
        &self.params
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Distinct parameter handles in order; a submodel used twice in a
    /// composition contributes its weights once.
    pub fn parameters(&self) -> Vec<Param> {
        let mut out: Vec<Param> = Vec::new();
        for (_, p) in &self.params {
            if !out.iter().any(|q| q.same(p)) {
                out.push(p.clone());
            }
        }
        out
    }

    pub fn frozen(&self) -> &BTreeSet<String> {
        &self.frozen
    }

    /// Resolves names to parameters: an exact parameter name, or a node id
    /// (or composition prefix) naming every parameter beneath it.
    pub fn expand_names(&self, names: &[String]) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for n in names {
            let hits: Vec<&String> = self
                .params
                .iter()
                .map(|(p, _)| p)
                .filter(|p| *p == n || p.starts_with(&format!("{n}.")))
                .collect();
            if hits.is_empty() {
                return Err(ModelError::UnknownParam(n.clone()));
            }
            out.extend(hits.into_iter().cloned());
        }
        Ok(out)
    }

    pub fn set_frozen(&mut self, names: &[String]) -> Result<()> {
        self.frozen = self.expand_names(names)?;
        Ok(())
    }

    /// Parameters an optimizer should update given extra frozen names.
    pub fn trainable(&self, extra_frozen: &BTreeSet<String>) -> Vec<Param> {
        let mut out: Vec<Param> = Vec::new();
        for (n, p) in &self.params {
            if self.frozen.contains(n) || extra_frozen.contains(n) {
                continue;
            }
            if !out.iter().any(|q| q.same(p)) {
                out.push(p.clone());
            }
        }
        out
    }

    pub fn bind_custom(&mut self, function: &str, f: Rc<dyn CustomFn>) {
        self.customs.insert(function.to_string(), f);
    }

    /// Custom node functions that have no callback bound.
    pub fn unbound_customs(&self) -> Vec<String> {
        self.arch
            .custom_functions()
            .into_iter()
            .filter(|f| !self.customs.contains_key(*f))
            .map(str::to_string)
            .collect()
    }

    pub fn has_customs(&self) -> bool {
        !self.arch.custom_functions().is_empty()
    }

    /// Independent copy: fresh parameter buffers, no gradients.
    pub fn deep_clone(&self) -> Model {
        Model {
            params: self
                .params
                .iter()
                .map(|(n, p)| (n.clone(), Param::new(p.shape(), p.data())))
                .collect(),
            ..self.clone()
        }
    }

    pub fn num_weights(&self) -> usize {
        self.parameters().iter().map(|p| p.numel()).sum()
    }

    // ---- composition ------------------------------------------------------

    fn compose(name: &str, arch: ArchGraph, parts: &[&Model]) -> Model {
        let mut params = Vec::new();
        let mut customs = BTreeMap::new();
        for (i, m) in parts.iter().enumerate() {
            for (n, p) in &m.params {
                params.push((format!("{i}.{n}"), p.clone()));
            }
            customs.extend(m.customs.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        let frozen = parts
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.frozen.iter().map(move |n| format!("{i}.{n}")))
            .collect();
        debug_assert_eq!(
            arch.param_specs().iter().map(|s| &s.0).collect::<Vec<_>>(),
            params.iter().map(|p| &p.0).collect::<Vec<_>>(),
            "composition keeps parameter order"
        );
        Model {
            name: name.to_string(),
            arch,
            params,
            config: Config::new(),
            provenance: Provenance::Composed,
            frozen,
            customs,
        }
    }

    fn need_parts(what: &str, parts: &[&Model]) -> Result<()> {
        if parts.is_empty() {
            return Err(ModelError::Invalid(format!("{what} needs at least one model")));
        }
        Ok(())
    }

    pub fn sequential(parts: &[&Model]) -> Result<Model> {
        Model::need_parts("sequentialModel", parts)?;
        for (i, pair) in parts.windows(2).enumerate() {
            if let (Some(out), Some(inp)) = (pair[0].arch.out_width(), pair[1].arch.in_width()) {
                if out != inp {
                    let first = &pair[1].arch.nodes[1].id;
                    return Err(ModelError::shape(&format!("{}.{first}", i + 1), format!("width {inp}"), &[out]));
                }
            }
        }
        let graphs: Vec<&ArchGraph> = parts.iter().map(|m| &m.arch).collect();
        Ok(Model::compose("sequential", ArchGraph::sequential(&graphs), parts))
    }

    pub fn parallel(parts: &[&Model], combine: Combine) -> Result<Model> {
        Model::need_parts("parallelModel", parts)?;
        if combine != Combine::Concat {
            let widths: Vec<usize> = parts.iter().filter_map(|m| m.arch.out_width()).collect();
            if let Some(w) = widths.iter().find(|&&w| w != widths[0]) {
                return Err(ModelError::shape("combine", format!("width {}", widths[0]), &[*w]));
            }
        }
        let graphs: Vec<&ArchGraph> = parts.iter().map(|m| &m.arch).collect();
        Ok(Model::compose(
            "parallel",
            ArchGraph::parallel(&graphs, "combine", combine.kind()),
            parts,
        ))
    }

    /// Runs every submodel on the input and hands their outputs to `f`.
    pub fn custom(function: &str, f: Rc<dyn CustomFn>, parts: &[&Model]) -> Result<Model> {
        Model::need_parts("customModel", parts)?;
        let graphs: Vec<&ArchGraph> = parts.iter().map(|m| &m.arch).collect();
        let arch = ArchGraph::parallel(
            &graphs,
            "custom",
            NodeKind::Custom {
                function: function.to_string(),
            },
        );
        let mut m = Model::compose("custom", arch, parts);
        m.customs.insert(function.to_string(), f);
        Ok(m)
    }

    // ---- transfer ---------------------------------------------------------

    /// Replaces the head with a fresh Glorot linear layer of width
    /// `num_labels` (seeded by `seed`) when its width differs. Returns
    /// whether a replacement happened; other weights are untouched.
    pub fn resize_head(&mut self, num_labels: usize, seed: u64) -> Result<bool> {
        if num_labels == 0 {
            return Err(ModelError::Invalid("num_labels must be positive".into()));
        }
        let h = self
            .arch
            .head_index()
            .ok_or_else(|| ModelError::Invalid(format!("model `{}` has no head layer to resize", self.name)))?;
        let NodeKind::Linear { inp, out } = self.arch.nodes[h].kind else {
            return Err(ModelError::Invalid(format!(
                "head `{}` of `{}` is not a linear layer",
                self.arch.nodes[h].id, self.name
            )));
        };
        if out == num_labels {
            return Ok(false);
        }
        let kind = NodeKind::Linear { inp, out: num_labels };
        self.arch.nodes[h].kind = kind.clone();
        let id = self.arch.nodes[h].id.clone();
        let mut rng = SplitMix64::new(seed);
        for (role, shape) in kind.param_shapes() {
            let name = format!("{id}.{role}");
            let fresh = Param::new(shape.clone(), glorot_uniform(&shape, &mut rng));
            let slot = self
                .params
                .iter_mut()
                .find(|(n, _)| *n == name)
                .expect("head parameters exist");
            slot.1 = fresh;
        }
        Ok(true)
    }

    // ---- evaluation -------------------------------------------------------

    fn weight(&self, node: &Node, role: &str, mode: Mode, tape: &Tape) -> Tensor {
        let name = format!("{}.{role}", node.id);
        let p = self.param(&name).expect("every weighted node has its parameters");
        if mode == Mode::Train && !self.frozen.contains(&name) {
            leaf_on(tape, p)
        } else {
            Tensor::new(p.shape(), p.data()).expect("parameter shape")
        }
    }

    pub fn forward(&self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let tape = input.tape().unwrap_or_default();
        let mut values: Vec<Tensor> = Vec::with_capacity(self.arch.nodes.len());
        for node in &self.arch.nodes {
            let v = if node.kind == NodeKind::Input {
                input.clone()
            } else {
                let ins: Vec<&Tensor> = node.inputs.iter().map(|&i| &values[i]).collect();
                self.eval_node(node, &ins, mode, &tape)?
            };
            values.push(v);
        }
        Ok(values.pop().expect("graph has an output"))
    }

    fn eval_node(&self, node: &Node, ins: &[&Tensor], mode: Mode, tape: &Tape) -> Result<Tensor> {
        let id = node.id.as_str();
        let at = |e: TensorError| ModelError::Node {
            node: id.to_string(),
            source: e,
        };
        let x = ins[0];
        let w = |role: &str| self.weight(node, role, mode, tape);
        match &node.kind {
            NodeKind::Input => unreachable!("handled by forward"),
            NodeKind::Embedding { .. } => {
                if x.rank() != 2 || x.dtype() != DType::Int {
                    return Err(ModelError::shape(id, "(batch, length) integer ids", x.shape()));
                }
                w("weight").embedding(x).map_err(at)
            }
            NodeKind::Linear { inp, .. } => {
                if x.rank() != 2 || x.shape()[1] != *inp {
                    return Err(ModelError::shape(id, format!("(batch, {inp})"), x.shape()));
                }
                x.linear(&w("weight"), Some(&w("bias"))).map_err(at)
            }
            NodeKind::Relu => x.relu().map_err(at),
            NodeKind::Tanh => x.tanh().map_err(at),
            NodeKind::MeanPool => {
                if x.rank() != 3 {
                    return Err(ModelError::shape(id, "(batch, length, dim)", x.shape()));
                }
                x.mean_pool().map_err(at)
            }
            NodeKind::Flatten => {
                if x.rank() < 2 {
                    return Err(ModelError::shape(id, "(batch, ...)", x.shape()));
                }
                x.flatten().map_err(at)
            }
            NodeKind::RnnCell { hidden, window } => {
                if x.rank() != 2 || x.shape()[1] != *window {
                    return Err(ModelError::shape(id, format!("(batch, {window})"), x.shape()));
                }
                let (w_x, w_h, b) = (w("w_x"), w("w_h"), w("bias"));
                let batch = x.shape()[0];
                let mut h = Tensor::zeros(vec![batch, *hidden]).map_err(at)?;
                for t in 0..*window {
                    let xt = x.slice_cols(t, 1).map_err(at)?;
                    let a = xt.linear(&w_x, None).map_err(at)?;
                    let c = h.linear(&w_h, Some(&b)).map_err(at)?;
                    h = a.add(&c).map_err(at)?.tanh().map_err(at)?;
                }
                Ok(h)
            }
            NodeKind::Concat => {
                for t in ins {
                    if t.rank() != 2 || t.shape()[0] != x.shape()[0] {
                        return Err(ModelError::shape(id, format!("({}, width)", x.shape()[0]), t.shape()));
                    }
                }
                let parts: Vec<Tensor> = ins.iter().map(|t| (*t).clone()).collect();
                Tensor::concat(&parts).map_err(at)
            }
            NodeKind::Sum | NodeKind::Mean => {
                let mut acc = x.clone();
                for t in &ins[1..] {
                    if t.shape() != x.shape() {
                        return Err(ModelError::shape(id, format!("{:?}", x.shape()), t.shape()));
                    }
                    acc = acc.add(t).map_err(at)?;
                }
                if node.kind == NodeKind::Mean {
                    acc = acc.scale(1.0 / ins.len() as f32).map_err(at)?;
                }
                Ok(acc)
            }
            NodeKind::Custom { function } => {
                let f = self
                    .customs
                    .get(function)
                    .ok_or_else(|| ModelError::Invalid(format!("custom function `{function}` is not bound")))?;
                let args: Vec<Tensor> = ins.iter().map(|t| (*t).clone()).collect();
                f.call(&args).map_err(|message| ModelError::Custom {
                    name: function.clone(),
                    message,
                })
            }
        }
    }
}
