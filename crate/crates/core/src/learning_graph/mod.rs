//! Adaptive learning graphs as explicit weighted DAGs with per-input flows.
//!
//! Every L-vertex carries a label `s(v)`: the sorted set of input positions
//! loaded in that state (0-based). An L-edge `u → v` has length
//! `|s(v) − s(u)|` and a positive weight that may depend on the input
//! symbols at `s(v)`. Each 1-input has a unit flow from the root to vertices
//! whose labels contain one of its 1-certificates.

pub mod ops;
pub mod stage;

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{parse_rational, to_f64, Q};

pub use ops::OrderedPartialSubset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LgError {
    #[error("edge {edge}: weight for input {input} is not positive")]
    NonPositiveWeight { edge: String, input: String },
    #[error("edge {edge}: weight table has no entry for loaded values {key:?}")]
    MissingTableEntry { edge: String, key: Vec<u32> },
    #[error("unknown {kind} {id:?}")]
    Unknown { kind: &'static str, id: String },
    #[error("duplicate {kind} {id:?}")]
    Duplicate { kind: &'static str, id: String },
    #[error("no inputs to evaluate")]
    NoInputs,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub type AdaptiveFn = Arc<dyn Fn(&[(usize, u32)]) -> Q + Send + Sync>;

/// Weight of an L-edge as a function of the loaded symbols at `s(v)`.
#[derive(Clone)]
pub enum EdgeWeight {
    Fixed(Q),
    /// Keyed by the symbols at the sorted positions of `s(v)`.
    Table { entries: BTreeMap<Vec<u32>, Q>, default: Option<Q> },
    /// Receives `(position, symbol)` pairs for `s(v)` in position order.
    Adaptive(AdaptiveFn),
}

impl fmt::Debug for EdgeWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeWeight::Fixed(q) => write!(f, "Fixed({q})"),
            EdgeWeight::Table { entries, default } => write!(f, "Table({entries:?}, default {default:?})"),
            EdgeWeight::Adaptive(_) => f.write_str("Adaptive(..)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Input {
    pub id: String,
    pub symbols: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct LVertex {
    pub id: String,
    pub label: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LEdge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub length: usize,
    pub weight: EdgeWeight,
}

/// A learning graph; vertex 0 is the root.
#[derive(Clone, Debug, Default)]
pub struct LearningGraph {
    pub vertices: Vec<LVertex>,
    pub edges: Vec<LEdge>,
    pub inputs: Vec<Input>,
    /// Sparse flow per 1-input id: edge index to value.
    pub flows: BTreeMap<String, BTreeMap<usize, Q>>,
    /// Declared sinks per 1-input id, used when no certificate test is supplied.
    pub sinks: BTreeMap<String, Vec<usize>>,
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

fn difference_len(to: &[usize], from: &[usize]) -> usize {
    to.iter().filter(|x| from.binary_search(x).is_err()).count()
}

/// One violated clause of the learning-graph definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Clause {
    Acyclic,
    RootLabel,
    MonotoneLabels,
    Length,
    PositiveWeight,
    FlowValue,
    Conservation,
    MissingFlow,
}

impl Clause {
    pub fn name(&self) -> &'static str {
        match self {
            Clause::Acyclic => "acyclic",
            Clause::RootLabel => "root label",
            Clause::MonotoneLabels => "monotone labels",
            Clause::Length => "length",
            Clause::PositiveWeight => "positive weight",
            Clause::FlowValue => "flow value",
            Clause::Conservation => "conservation",
            Clause::MissingFlow => "missing flow",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub clause: Clause,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, clause: Clause) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }

    fn push(&mut self, clause: Clause, detail: String) {
        self.violations.push(Violation { clause, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "violation\t{}\t{}", v.clause.name(), v.detail)?;
        }
        Ok(())
    }
}

/// Caches adaptive and table weights by `(edge, loaded symbols)`.
#[derive(Default)]
pub struct WeightCache {
    map: HashMap<(usize, Vec<u32>), Q>,
}

#[derive(Clone, Debug)]
pub struct Complexity {
    pub c0: Q,
    pub c1: Q,
}

impl Complexity {
    pub fn value(&self) -> f64 {
        (to_f64(&self.c0) * to_f64(&self.c1)).sqrt()
    }
}

impl LearningGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: impl Into<String>, mut label: Vec<usize>) -> usize {
        label.sort_unstable();
        label.dedup();
        self.vertices.push(LVertex { id: id.into(), label });
        self.vertices.len() - 1
    }

    /// Adds an edge whose length is computed from the labels.
    pub fn add_edge(&mut self, from: usize, to: usize, weight: EdgeWeight) -> usize {
        let length = difference_len(&self.vertices[to].label, &self.vertices[from].label);
        let id = format!("e{}", self.edges.len());
        self.edges.push(LEdge { id, from, to, length, weight });
        self.edges.len() - 1
    }

    pub fn add_input(&mut self, id: impl Into<String>, symbols: Vec<u32>) -> usize {
        self.inputs.push(Input { id: id.into(), symbols });
        self.inputs.len() - 1
    }

    pub fn set_flow(&mut self, input: &str, edge: usize, value: Q) {
        let f = self.flows.entry(input.to_string()).or_default();
        if value.is_zero() {
            f.remove(&edge);
        } else {
            f.insert(edge, value);
        }
    }

    pub fn flow(&self, input: &str, edge: usize) -> Q {
        self.flows.get(input).and_then(|f| f.get(&edge)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn input(&self, id: &str) -> Result<&Input, LgError> {
        self.inputs.iter().find(|i| i.id == id).ok_or(LgError::Unknown { kind: "input", id: id.into() })
    }

    fn loaded(&self, edge: usize, input: &Input) -> Vec<u32> {
        let label = &self.vertices[self.edges[edge].to].label;
        label.iter().map(|&p| input.symbols.get(p).copied().unwrap_or(0)).collect()
    }

    /// `w_z(e)`.
    pub fn weight(&self, edge: usize, input: &Input) -> Result<Q, LgError> {
        let e = &self.edges[edge];
        match &e.weight {
            EdgeWeight::Fixed(q) => Ok(q.clone()),
            EdgeWeight::Table { entries, default } => {
                let key = self.loaded(edge, input);
                entries
                    .get(&key)
                    .or(default.as_ref())
                    .cloned()
                    .ok_or(LgError::MissingTableEntry { edge: e.id.clone(), key })
            }
            EdgeWeight::Adaptive(f) => {
                let label = &self.vertices[e.to].label;
                let pairs: Vec<(usize, u32)> =
                    label.iter().map(|&p| (p, input.symbols.get(p).copied().unwrap_or(0))).collect();
                Ok(f(&pairs))
            }
        }
    }

    fn cached_weight(&self, edge: usize, input: &Input, cache: &mut WeightCache) -> Result<Q, LgError> {
        if matches!(self.edges[edge].weight, EdgeWeight::Fixed(_)) {
            return self.weight(edge, input);
        }
        let key = (edge, self.loaded(edge, input));
        if let Some(q) = cache.map.get(&key) {
            return Ok(q.clone());
        }
        let q = self.weight(edge, input)?;
        cache.map.insert(key, q.clone());
        Ok(q)
    }

    /// `C0(F, x) = Σ_{e∈F} l(e)·w_x(e)`.
    pub fn c0(&self, edges: &[usize], input: &Input) -> Result<Q, LgError> {
        self.c0_cached(edges, input, &mut WeightCache::default())
    }

    pub fn c0_cached(&self, edges: &[usize], input: &Input, cache: &mut WeightCache) -> Result<Q, LgError> {
        let mut total = Q::zero();
        for &e in edges {
            let l = self.edges[e].length;
            if l == 0 {
                continue;
            }
            total += self.cached_weight(e, input, cache)? * Q::from_integer(l.into());
        }
        Ok(total)
    }

    /// `C1(F, y) = Σ_{e∈F} l(e)·p_y(e)²/w_y(e)`.
    pub fn c1(&self, edges: &[usize], input: &Input) -> Result<Q, LgError> {
        let Some(flow) = self.flows.get(&input.id) else { return Ok(Q::zero()) };
        let mut total = Q::zero();
        for &e in edges {
            let Some(p) = flow.get(&e) else { continue };
            let l = self.edges[e].length;
            if l == 0 {
                continue;
            }
            let w = self.weight(e, input)?;
            if !w.is_positive() {
                return Err(LgError::NonPositiveWeight { edge: self.edges[e].id.clone(), input: input.id.clone() });
            }
            total += p * p * Q::from_integer(l.into()) / w;
        }
        Ok(total)
    }

    pub fn all_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).collect()
    }

    pub fn is_one_input(&self, id: &str) -> bool {
        self.flows.contains_key(id) || self.sinks.contains_key(id)
    }

    /// `max_x C0` over 0-inputs (all inputs when none is a 0-input) and
    /// `max_y C1` over 1-inputs.
    pub fn complexity(&self) -> Result<Complexity, LgError> {
        self.complexity_of(&self.all_edges())
    }

    pub fn complexity_of(&self, edges: &[usize]) -> Result<Complexity, LgError> {
        if self.inputs.is_empty() {
            return Err(LgError::NoInputs);
        }
        let zeros: Vec<&Input> = self.inputs.iter().filter(|i| !self.is_one_input(&i.id)).collect();
        let negatives: Vec<&Input> = if zeros.is_empty() { self.inputs.iter().collect() } else { zeros };
        let mut cache = WeightCache::default();
        let mut c0 = Q::zero();
        for x in negatives {
            let v = self.c0_cached(edges, x, &mut cache)?;
            if v > c0 {
                c0 = v;
            }
        }
        let mut c1 = Q::zero();
        for y in self.inputs.iter().filter(|i| self.is_one_input(&i.id)) {
            let v = self.c1(edges, y)?;
            if v > c1 {
                c1 = v;
            }
        }
        Ok(Complexity { c0, c1 })
    }

    /// Multiplies every weight by `factor`.
    pub fn scale_weights(&mut self, factor: &Q) {
        for e in &mut self.edges {
            e.weight = match std::mem::replace(&mut e.weight, EdgeWeight::Fixed(Q::zero())) {
                EdgeWeight::Fixed(q) => EdgeWeight::Fixed(q * factor),
                EdgeWeight::Table { entries, default } => EdgeWeight::Table {
                    entries: entries.into_iter().map(|(k, v)| (k, v * factor)).collect(),
                    default: default.map(|d| d * factor),
                },
                EdgeWeight::Adaptive(f) => {
                    let factor = factor.clone();
                    EdgeWeight::Adaptive(Arc::new(move |z| f(z) * &factor))
                }
            };
        }
    }

    fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.vertices.len();
        let mut indeg = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            indeg[e.to] += 1;
            out[e.from].push(e.to);
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Checks the structural clauses and, for every 1-input, that its flow is
    /// a unit flow from the root into vertices accepted by `is_sink`.
    pub fn validate_with<F>(&self, is_sink: F) -> ValidationReport
    where
        F: Fn(usize, &Input) -> bool,
    {
        let mut report = ValidationReport::default();
        if self.vertices.is_empty() {
            report.push(Clause::RootLabel, "graph has no root".into());
            return report;
        }
        if !self.vertices[0].label.is_empty() {
            report.push(Clause::RootLabel, format!("root {} has a nonempty label", self.vertices[0].id));
        }
        if self.topological_order().is_none() {
            report.push(Clause::Acyclic, "graph contains a directed cycle".into());
        }
        for e in &self.edges {
            let (u, v) = (&self.vertices[e.from], &self.vertices[e.to]);
            if !is_subset(&u.label, &v.label) {
                report.push(Clause::MonotoneLabels, format!("edge {}: s({}) is not contained in s({})", e.id, u.id, v.id));
            }
            let actual = difference_len(&v.label, &u.label);
            if actual != e.length {
                report.push(Clause::Length, format!("edge {}: declared length {} but |s(v) - s(u)| = {actual}", e.id, e.length));
            }
        }
        for (idx, e) in self.edges.iter().enumerate() {
            for x in &self.inputs {
                match self.weight(idx, x) {
                    Ok(w) if w.is_positive() => {}
                    Ok(w) => report.push(Clause::PositiveWeight, format!("edge {} input {}: weight {w}", e.id, x.id)),
                    Err(err) => report.push(Clause::PositiveWeight, err.to_string()),
                }
            }
        }
        for x in &self.inputs {
            if !self.is_one_input(&x.id) {
                continue;
            }
            let Some(flow) = self.flows.get(&x.id) else {
                report.push(Clause::MissingFlow, format!("input {} has no flow", x.id));
                continue;
            };
            let mut excess = vec![Q::zero(); self.vertices.len()];
            for (&e, p) in flow {
                excess[self.edges[e].from] -= p;
                excess[self.edges[e].to] += p;
            }
            let value = -excess[0].clone();
            if !value.is_one() {
                report.push(Clause::FlowValue, format!("input {}: flow value {value}", x.id));
            }
            let mut into_sinks = Q::zero();
            for (v, ex) in excess.iter().enumerate().skip(1) {
                if is_sink(v, x) {
                    into_sinks += ex;
                } else if !ex.is_zero() {
                    report.push(
                        Clause::Conservation,
                        format!("input {} vertex {}: net inflow {ex}", x.id, self.vertices[v].id),
                    );
                }
            }
            if value.is_one() && !into_sinks.is_one() {
                report.push(Clause::FlowValue, format!("input {}: flow into sinks {into_sinks}", x.id));
            }
        }
        report
    }

    /// Validation against the declared sink lists.
    pub fn validate(&self) -> ValidationReport {
        self.validate_with(|v, x| self.sinks.get(&x.id).is_some_and(|s| s.contains(&v)))
    }

    /// Text format; see [`LearningGraph::parse`].
    pub fn to_text(&self) -> Result<String, LgError> {
        let mut out = String::new();
        for x in &self.inputs {
            let syms: Vec<String> = x.symbols.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "input {} {}", x.id, if syms.is_empty() { "-".into() } else { syms.join(",") });
        }
        for v in &self.vertices {
            let _ = writeln!(out, "vertex {} {}", v.id, fmt_list(&v.label));
        }
        for e in &self.edges {
            let _ = writeln!(out, "edge {} {} {} {}", e.id, self.vertices[e.from].id, self.vertices[e.to].id, e.length);
            match &e.weight {
                EdgeWeight::Fixed(q) => {
                    let _ = writeln!(out, "weight {} {q}", e.id);
                }
                EdgeWeight::Table { entries, default } => {
                    let mut parts: Vec<String> = entries
                        .iter()
                        .map(|(k, v)| {
                            let key: Vec<String> = k.iter().map(|s| s.to_string()).collect();
                            format!("{}={v}", if key.is_empty() { "-".into() } else { key.join(",") })
                        })
                        .collect();
                    if let Some(d) = default {
                        parts.push(format!("*={d}"));
                    }
                    let _ = writeln!(out, "weight {} table {}", e.id, parts.join(" "));
                }
                EdgeWeight::Adaptive(_) => {
                    return Err(LgError::Format { line: 0, msg: format!("edge {}: adaptive weights cannot be written", e.id) })
                }
            }
        }
        for (input, flow) in &self.flows {
            for (&e, p) in flow {
                let _ = writeln!(out, "flow {input} {} {p}", self.edges[e].id);
            }
        }
        for (input, sinks) in &self.sinks {
            for &v in sinks {
                let _ = writeln!(out, "sink {input} {}", self.vertices[v].id);
            }
        }
        Ok(out)
    }

    /// Line-oriented format:
    ///
    /// ```text
    /// input <id> <comma-separated symbols or ->
    /// vertex <id> <comma-separated sorted positions or ->
    /// edge <id> <from-vertex> <to-vertex> <length>
    /// weight <edge-id> <rational>
    /// weight <edge-id> table <symbols>=<rational> ... [*=<rational>]
    /// flow <input-id> <edge-id> <rational>
    /// sink <input-id> <vertex-id>
    /// ```
    ///
    /// The first vertex is the root. Lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, LgError> {
        let mut g = LearningGraph::new();
        let mut vertex_ids: HashMap<String, usize> = HashMap::new();
        let mut edge_ids: HashMap<String, usize> = HashMap::new();
        let mut weighted = vec![];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| LgError::Format { line, msg };
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = raw.split_whitespace().collect();
            let need = |k: usize| {
                if tok.len() == k {
                    Ok(())
                } else {
                    Err(err(format!("{} expects {} fields", tok[0], k - 1)))
                }
            };
            let rational = |s: &str| parse_rational(s).ok_or_else(|| err(format!("bad rational {s:?}")));
            match tok[0] {
                "input" => {
                    need(3)?;
                    if g.inputs.iter().any(|x| x.id == tok[1]) {
                        return Err(err(format!("duplicate input {}", tok[1])));
                    }
                    let syms = parse_list::<u32>(tok[2]).ok_or_else(|| err(format!("bad symbol list {:?}", tok[2])))?;
                    g.add_input(tok[1], syms);
                }
                "vertex" => {
                    need(3)?;
                    let label = parse_list::<usize>(tok[2]).ok_or_else(|| err(format!("bad index list {:?}", tok[2])))?;
                    if label.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(err("index list must be strictly ascending".into()));
                    }
                    if vertex_ids.contains_key(tok[1]) {
                        return Err(err(format!("duplicate vertex {}", tok[1])));
                    }
                    let v = g.add_vertex(tok[1], label);
                    vertex_ids.insert(tok[1].to_string(), v);
                }
                "edge" => {
                    need(5)?;
                    let find = |id: &str| vertex_ids.get(id).copied().ok_or_else(|| err(format!("unknown vertex {id}")));
                    let (u, v) = (find(tok[2])?, find(tok[3])?);
                    let length: usize = tok[4].parse().map_err(|_| err(format!("bad length {:?}", tok[4])))?;
                    if edge_ids.contains_key(tok[1]) {
                        return Err(err(format!("duplicate edge {}", tok[1])));
                    }
                    g.edges.push(LEdge {
                        id: tok[1].to_string(),
                        from: u,
                        to: v,
                        length,
                        weight: EdgeWeight::Fixed(Q::zero()),
                    });
                    edge_ids.insert(tok[1].to_string(), g.edges.len() - 1);
                    weighted.push(false);
                }
                "weight" => {
                    if tok.len() < 3 {
                        return Err(err("weight expects an edge and a value".into()));
                    }
                    let e = *edge_ids.get(tok[1]).ok_or_else(|| err(format!("unknown edge {}", tok[1])))?;
                    let w = if tok[2] == "table" {
                        let mut entries = BTreeMap::new();
                        let mut default = None;
                        for item in &tok[3..] {
                            let (k, v) = item.split_once('=').ok_or_else(|| err(format!("bad table entry {item:?}")))?;
                            let v = rational(v)?;
                            if k == "*" {
                                default = Some(v);
                            } else {
                                let key = parse_list::<u32>(k).ok_or_else(|| err(format!("bad table key {k:?}")))?;
                                entries.insert(key, v);
                            }
                        }
                        EdgeWeight::Table { entries, default }
                    } else {
                        need(3)?;
                        EdgeWeight::Fixed(rational(tok[2])?)
                    };
                    g.edges[e].weight = w;
                    weighted[e] = true;
                }
                "flow" => {
                    need(4)?;
                    if !g.inputs.iter().any(|x| x.id == tok[1]) {
                        return Err(err(format!("unknown input {}", tok[1])));
                    }
                    let e = *edge_ids.get(tok[2]).ok_or_else(|| err(format!("unknown edge {}", tok[2])))?;
                    let p = rational(tok[3])?;
                    g.set_flow(tok[1], e, p);
                    g.flows.entry(tok[1].to_string()).or_default();
                }
                "sink" => {
                    need(3)?;
                    if !g.inputs.iter().any(|x| x.id == tok[1]) {
                        return Err(err(format!("unknown input {}", tok[1])));
                    }
                    let v = *vertex_ids.get(tok[2]).ok_or_else(|| err(format!("unknown vertex {}", tok[2])))?;
                    g.sinks.entry(tok[1].to_string()).or_default().push(v);
                }
                other => return Err(err(format!("unknown directive {other:?}"))),
            }
        }
        if let Some(e) = weighted.iter().position(|w| !w) {
            return Err(LgError::Format { line: 0, msg: format!("edge {} has no weight", g.edges[e].id) });
        }
        Ok(g)
    }
}

fn fmt_list<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        return "-".into();
    }
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    if s == "-" {
        return Some(Vec::new());
    }
    s.split(',').map(|t| t.parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn single_edge(flow: Q) -> LearningGraph {
        let mut g = LearningGraph::new();
        let root = g.add_vertex("root", vec![]);
        let leaf = g.add_vertex("leaf", vec![0]);
        let e = g.add_edge(root, leaf, EdgeWeight::Fixed(int(1)));
        g.add_input("y", vec![1]);
        g.set_flow("y", e, flow);
        g.sinks.insert("y".into(), vec![leaf]);
        g
    }

    #[test]
    fn single_edge_unit_flow() {
        let g = single_edge(int(1));
        assert!(g.validate().ok());
        let c = g.complexity().unwrap();
        assert_eq!((c.c0.clone(), c.c1.clone()), (int(1), int(1)));
        assert_eq!(c.value(), 1.0);
    }

    #[test]
    fn half_flow_is_rejected() {
        let g = single_edge(frac(1, 2));
        let r = g.validate();
        assert!(r.has(Clause::FlowValue), "{r}");
    }

    #[test]
    fn non_monotone_labels_are_rejected() {
        let mut g = LearningGraph::new();
        let root = g.add_vertex("root", vec![]);
        let a = g.add_vertex("a", vec![0]);
        let b = g.add_vertex("b", vec![1]);
        g.add_edge(root, a, EdgeWeight::Fixed(int(1)));
        g.edges.push(LEdge { id: "bad".into(), from: a, to: b, length: 1, weight: EdgeWeight::Fixed(int(1)) });
        assert!(g.validate().has(Clause::MonotoneLabels));
    }

    #[test]
    fn cycles_lengths_and_weights_are_checked() {
        let mut g = LearningGraph::new();
        let root = g.add_vertex("root", vec![]);
        let a = g.add_vertex("a", vec![0]);
        g.add_edge(root, a, EdgeWeight::Fixed(int(0)));
        g.edges.push(LEdge { id: "back".into(), from: a, to: root, length: 3, weight: EdgeWeight::Fixed(int(1)) });
        g.add_input("x", vec![0]);
        let r = g.validate();
        assert!(r.has(Clause::Acyclic));
        assert!(r.has(Clause::Length));
        assert!(r.has(Clause::PositiveWeight));
    }

    fn or_graph(n: usize, one_at: usize) -> LearningGraph {
        let mut g = LearningGraph::new();
        let root = g.add_vertex("root", vec![]);
        let mut edges = vec![];
        for i in 0..n {
            let v = g.add_vertex(format!("v{i}"), vec![i]);
            edges.push(g.add_edge(root, v, EdgeWeight::Fixed(int(1))));
        }
        let mut sym = vec![0; n];
        sym[one_at] = 1;
        g.add_input("y", sym);
        g.add_input("x", vec![0; n]);
        g.set_flow("y", edges[one_at], int(1));
        g.sinks.insert("y".into(), vec![one_at + 1]);
        g
    }

    #[test]
    fn or_search_costs_square_root() {
        let g = or_graph(16, 5);
        assert!(g.validate().ok());
        let c = g.complexity().unwrap();
        assert_eq!(c.c0, int(16));
        assert_eq!(c.c1, int(1));
        assert!((c.value() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weight_scaling_leaves_complexity_unchanged() {
        let mut g = or_graph(9, 2);
        let before = g.complexity().unwrap();
        g.scale_weights(&int(2));
        let after = g.complexity().unwrap();
        assert_eq!(after.c0, before.c0.clone() * int(2));
        assert_eq!(after.c1, before.c1.clone() / int(2));
        assert_eq!(after.c0 * after.c1, before.c0 * before.c1);
    }

    #[test]
    fn zero_weight_on_flow_edge_is_an_error() {
        let mut g = single_edge(int(1));
        g.edges[0].weight = EdgeWeight::Fixed(int(0));
        assert!(matches!(g.c1(&[0], &g.inputs[0]), Err(LgError::NonPositiveWeight { .. })));
    }

    #[test]
    fn adaptive_and_table_weights_see_loaded_symbols() {
        let mut g = or_graph(3, 1);
        g.edges[1].weight = EdgeWeight::Adaptive(Arc::new(|z| if z[0].1 == 1 { int(4) } else { int(1) }));
        let mut entries = BTreeMap::new();
        entries.insert(vec![0], frac(1, 2));
        g.edges[2].weight = EdgeWeight::Table { entries, default: None };
        let (y, x) = (g.inputs[0].clone(), g.inputs[1].clone());
        assert_eq!(g.weight(1, &y).unwrap(), int(4));
        assert_eq!(g.weight(1, &x).unwrap(), int(1));
        assert_eq!(g.c0(&g.all_edges(), &x).unwrap(), frac(5, 2));
        let mut cache = WeightCache::default();
        assert_eq!(g.c0_cached(&g.all_edges(), &x, &mut cache).unwrap(), frac(5, 2));
        assert_eq!(g.c0_cached(&g.all_edges(), &x, &mut cache).unwrap(), frac(5, 2));
    }

    #[test]
    fn text_round_trip() {
        let mut g = or_graph(3, 1);
        let mut entries = BTreeMap::new();
        entries.insert(vec![1], int(3));
        g.edges[2].weight = EdgeWeight::Table { entries, default: Some(frac(1, 3)) };
        let text = g.to_text().unwrap();
        let back = LearningGraph::parse(&text).unwrap();
        assert_eq!(back.to_text().unwrap(), text);
        assert!(back.validate().ok());
        assert_eq!(back.complexity().unwrap().c0, g.complexity().unwrap().c0);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let bad = "vertex r -\nvertex a 0\nedge e r b 1\n";
        assert_eq!(
            LearningGraph::parse(bad).unwrap_err(),
            LgError::Format { line: 3, msg: "unknown vertex b".into() }
        );
        assert!(matches!(LearningGraph::parse("vertex r 1,0\n"), Err(LgError::Format { line: 1, .. })));
        assert!(matches!(LearningGraph::parse("bogus\n"), Err(LgError::Format { line: 1, .. })));
    }
}
