//! Single learning-graph stages between a begin layer and an end layer:
//! symmetric counts, the speciality weighting, and α-symmetric flow surgery.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::{EdgeWeight, LearningGraph};
use crate::rational::{frac, pow_q, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StageError {
    #[error("not symmetric ({bullet}): {detail}")]
    NotSymmetric { bullet: &'static str, detail: String },
    #[error("input {input}: {inequality}")]
    Retention { input: String, inequality: String },
    #[error("invalid rate: {0}")]
    Rate(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageEdge {
    pub from: usize,
    pub to: usize,
    pub length: usize,
}

/// Edges from begin vertices `0..begin` to end vertices `0..end`, with a
/// sparse flow per 1-input.
#[derive(Clone, Debug, Default)]
pub struct Stage {
    pub begin: usize,
    pub end: usize,
    pub edges: Vec<StageEdge>,
    pub flows: BTreeMap<String, BTreeMap<usize, Q>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricCounts {
    pub c: usize,
    pub c_prime: usize,
    pub d: usize,
    pub d_prime: usize,
    pub e: usize,
    pub e_prime: usize,
    /// Largest average length of flow-carrying edges over the inputs.
    pub length: Q,
}

impl SymmetricCounts {
    /// `T = c·d / (c'·d')`.
    pub fn speciality(&self) -> Q {
        frac((self.c * self.d) as i64, (self.c_prime * self.d_prime) as i64)
    }
}

impl Stage {
    fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.begin];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.from].push(i);
        }
        out
    }

    pub fn begin_flow(&self, input: &str) -> BTreeMap<usize, Q> {
        let mut m: BTreeMap<usize, Q> = BTreeMap::new();
        for (&e, p) in self.flows.get(input).into_iter().flatten() {
            *m.entry(self.edges[e].from).or_insert_with(Q::zero) += p;
        }
        m.retain(|_, v| !v.is_zero());
        m
    }

    pub fn end_flow(&self, input: &str) -> BTreeMap<usize, Q> {
        let mut m: BTreeMap<usize, Q> = BTreeMap::new();
        for (&e, p) in self.flows.get(input).into_iter().flatten() {
            *m.entry(self.edges[e].to).or_insert_with(Q::zero) += p;
        }
        m.retain(|_, v| !v.is_zero());
        m
    }

    /// `C0(F) = Σ l(e) w(e)` for input-independent weights.
    pub fn c0(&self, weights: &[Q]) -> Q {
        self.edges
            .iter()
            .zip(weights)
            .fold(Q::zero(), |acc, (e, w)| acc + w * Q::from_integer(e.length.into()))
    }

    pub fn c1(&self, weights: &[Q], input: &str) -> Q {
        let mut total = Q::zero();
        for (&e, p) in self.flows.get(input).into_iter().flatten() {
            total += p * p * Q::from_integer(self.edges[e].length.into()) / &weights[e];
        }
        total
    }

    /// Embeds the stage below a root so the generic validator can check it:
    /// root → every begin vertex (length 0), stage edges, end vertices as sinks.
    pub fn to_learning_graph(&self, weights: &[Q]) -> LearningGraph {
        let mut g = LearningGraph::new();
        let root = g.add_vertex("root", vec![]);
        let begins: Vec<usize> = (0..self.begin).map(|i| g.add_vertex(format!("b{i}"), vec![])).collect();
        let mut next = 0usize;
        let mut end_len = vec![None; self.end];
        for e in &self.edges {
            end_len[e.to].get_or_insert(e.length);
        }
        let ends: Vec<usize> = (0..self.end)
            .map(|j| {
                let l = end_len[j].unwrap_or(1);
                let label = (next..next + l).collect();
                next += l;
                g.add_vertex(format!("t{j}"), label)
            })
            .collect();
        let root_edges: Vec<usize> =
            begins.iter().map(|&b| g.add_edge(root, b, EdgeWeight::Fixed(Q::one()))).collect();
        let stage_edges: Vec<usize> = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, w)| g.add_edge(begins[e.from], ends[e.to], EdgeWeight::Fixed(w.clone())))
            .collect();
        for input in self.flows.keys() {
            g.add_input(input.clone(), vec![1; next]);
            for (v, p) in self.begin_flow(input) {
                g.set_flow(input, root_edges[v], p);
            }
            for (&e, p) in &self.flows[input] {
                g.set_flow(input, stage_edges[e], p.clone());
            }
            g.sinks.insert(input.clone(), ends.clone());
        }
        g
    }
}

/// Checks the four symmetric-stage bullets and returns the counts.
pub fn symmetric_counts(stage: &Stage) -> Result<SymmetricCounts, StageError> {
    let fail = |bullet: &'static str, detail: String| StageError::NotSymmetric { bullet, detail };
    let out = stage.out_edges();
    let d = out.first().map_or(0, Vec::len);
    if let Some(v) = out.iter().position(|o| o.len() != d) {
        return Err(fail("out-degree", format!("begin vertex {v} has out-degree {}, expected {d}", out[v].len())));
    }
    let mut common: Option<(usize, usize, usize)> = None;
    let mut length = Q::zero();
    for (input, flow) in &stage.flows {
        if flow.values().any(|p| !p.is_positive()) {
            return Err(fail("begin flow", format!("input {input} has a non-positive edge flow")));
        }
        let begins = stage.begin_flow(input);
        let c_prime = begins.len();
        if c_prime == 0 {
            return Err(fail("begin flow", format!("input {input} carries no flow")));
        }
        let share = frac(1, c_prime as i64);
        if let Some((v, p)) = begins.iter().find(|(_, p)| **p != share) {
            return Err(fail("begin flow", format!("input {input}: begin vertex {v} has flow {p}, expected {share}")));
        }
        let mut d_prime = None;
        for &v in begins.keys() {
            let carrying: Vec<&Q> = out[v].iter().filter_map(|e| flow.get(e)).collect();
            if carrying.windows(2).any(|w| w[0] != w[1]) {
                return Err(fail("out flow", format!("input {input}: unequal flows out of begin vertex {v}")));
            }
            if *d_prime.get_or_insert(carrying.len()) != carrying.len() {
                return Err(fail("out flow", format!("input {input}: begin vertices disagree on d'")));
            }
        }
        let d_prime = d_prime.unwrap_or(0);
        let ends = stage.end_flow(input);
        let e_prime = ends.len();
        let end_share = frac(1, e_prime as i64);
        if let Some((w, p)) = ends.iter().find(|(_, p)| **p != end_share) {
            return Err(fail("end flow", format!("input {input}: end vertex {w} has flow {p}, expected {end_share}")));
        }
        let triple = (c_prime, d_prime, e_prime);
        if *common.get_or_insert(triple) != triple {
            return Err(fail("independence", format!("input {input} has (c', d', e') = {triple:?}, others {:?}", common.unwrap())));
        }
        let total: usize = flow.keys().map(|&e| stage.edges[e].length).sum();
        let avg = frac(total as i64, flow.len() as i64);
        if avg > length {
            length = avg;
        }
    }
    let (c_prime, d_prime, e_prime) =
        common.ok_or_else(|| fail("begin flow", "stage has no 1-input flows".into()))?;
    Ok(SymmetricCounts { c: stage.begin, c_prime, d, d_prime, e: stage.end, e_prime, length })
}

/// Uniform weight `L/(c'd')` on every edge. Each input then has
/// `C1 = L_y / L ≤ 1`, and `C0 = T·L²` when all lengths equal `L`.
pub fn weight_symmetric_stage(stage: &Stage) -> Result<(Vec<Q>, SymmetricCounts), StageError> {
    let counts = symmetric_counts(stage)?;
    let w = &counts.length / frac((counts.c_prime * counts.d_prime) as i64, 1);
    Ok((vec![w; stage.edges.len()], counts))
}

/// Random symmetric stage: `c` begin vertices with `d` private end vertices
/// each, all edges of length `length`; every input routes `1/c'` through
/// `c'` random begin vertices and splits it over `d'` random out-edges.
pub fn random_symmetric_stage<R: Rng + ?Sized>(
    rng: &mut R,
    c: usize,
    c_prime: usize,
    d: usize,
    d_prime: usize,
    length: usize,
    inputs: usize,
) -> Stage {
    assert!(c_prime >= 1 && c_prime <= c && d_prime >= 1 && d_prime <= d && length >= 1);
    let mut stage = Stage { begin: c, end: c * d, ..Stage::default() };
    for v in 0..c {
        for k in 0..d {
            stage.edges.push(StageEdge { from: v, to: v * d + k, length });
        }
    }
    let p = frac(1, (c_prime * d_prime) as i64);
    for y in 0..inputs {
        let mut begins: Vec<usize> = (0..c).collect();
        begins.shuffle(rng);
        let mut flow = BTreeMap::new();
        for &v in &begins[..c_prime] {
            let mut outs: Vec<usize> = (0..d).collect();
            outs.shuffle(rng);
            for &k in &outs[..d_prime] {
                flow.insert(v * d + k, p.clone());
            }
        }
        stage.flows.insert(format!("y{y}"), flow);
    }
    stage
}

/// Result of removing unavailable vertices from a symmetric stage.
#[derive(Clone, Debug)]
pub struct AlphaStage {
    pub stage: Stage,
    pub base: SymmetricCounts,
    pub alpha: Q,
    pub s: u32,
}

impl AlphaStage {
    /// `(1−α)^{−2(s+1)}`.
    pub fn c1_bound(&self) -> Q {
        pow_q(&(Q::one() - &self.alpha), 2 * (self.s + 1)).recip()
    }
}

/// Drops `bad_begin` and `bad_end` from every input's flow and redistributes
/// the lost value. Each surviving begin vertex receives `1/|V_{i,y}|` and
/// splits it over its surviving flow edges in proportion to the original
/// flow. Rejects when a retention inequality fails.
pub fn make_alpha_symmetric(
    base: &Stage,
    bad_begin: &BTreeSet<usize>,
    bad_end: &BTreeSet<usize>,
    alpha: &Q,
    s: u32,
) -> Result<AlphaStage, StageError> {
    if alpha.is_negative() || *alpha >= Q::one() {
        return Err(StageError::Rate(format!("alpha = {alpha} outside [0, 1)")));
    }
    let counts = symmetric_counts(base)?;
    let keep = Q::one() - alpha;
    let keep_s = pow_q(&keep, s);
    let keep_s1 = &keep_s * &keep;
    let out = base.out_edges();
    let mut stage = Stage { flows: BTreeMap::new(), ..base.clone() };
    for (input, flow) in &base.flows {
        let fail = |inequality: String| StageError::Retention { input: input.clone(), inequality };
        let original_ends: BTreeSet<usize> = base.end_flow(input).into_keys().collect();
        let survivors: Vec<usize> = base.begin_flow(input).into_keys().filter(|v| !bad_begin.contains(v)).collect();
        let lhs = frac(survivors.len() as i64, 1);
        let rhs = &keep_s * frac(counts.c_prime as i64, 1);
        if lhs < rhs {
            return Err(fail(format!("|V_i,y| = {} < (1-alpha)^s c' = {rhs}", survivors.len())));
        }
        let share = frac(1, survivors.len() as i64);
        let mut new_flow = BTreeMap::new();
        for &v in &survivors {
            let carrying: Vec<usize> = out[v].iter().copied().filter(|e| flow.contains_key(e)).collect();
            let kept: Vec<usize> = carrying.iter().copied().filter(|&e| !bad_end.contains(&base.edges[e].to)).collect();
            if frac(kept.len() as i64, carrying.len() as i64) < keep {
                return Err(fail(format!(
                    "begin vertex {v} keeps {}/{} flow edges, below 1 - alpha = {keep}",
                    kept.len(),
                    carrying.len()
                )));
            }
            let nbrs: BTreeSet<usize> =
                out[v].iter().map(|&e| base.edges[e].to).filter(|w| original_ends.contains(w)).collect();
            let kept_nbrs = nbrs.iter().filter(|w| !bad_end.contains(w)).count();
            if frac(kept_nbrs as i64, nbrs.len() as i64) < keep {
                return Err(fail(format!(
                    "begin vertex {v} keeps {kept_nbrs}/{} flow-carrying out-neighbours, below 1 - alpha = {keep}",
                    nbrs.len()
                )));
            }
            let kept_total = kept.iter().fold(Q::zero(), |acc, e| acc + &flow[e]);
            for e in kept {
                let p = &share * &flow[&e] / &kept_total;
                if p > &flow[&e] / &keep_s1 {
                    return Err(fail(format!("edge {e} would be rescaled by more than (1-alpha)^-(s+1)")));
                }
                new_flow.insert(e, p);
            }
        }
        stage.flows.insert(input.clone(), new_flow);
        let ends = stage.end_flow(input).len();
        let rhs = &keep_s1 * frac(counts.e_prime as i64, 1);
        if frac(ends as i64, 1) < rhs {
            return Err(fail(format!("|V_j,y| = {ends} < (1-alpha)^(s+1) e' = {rhs}")));
        }
    }
    Ok(AlphaStage { stage, base: counts, alpha: alpha.clone(), s })
}

/// Greedily grows random bad sets that keep every retention inequality true.
pub fn random_bad_sets<R: Rng + ?Sized>(
    rng: &mut R,
    base: &Stage,
    alpha: &Q,
    s: u32,
    attempts: usize,
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let mut bad_begin = BTreeSet::new();
    let mut bad_end = BTreeSet::new();
    for _ in 0..attempts {
        let (set, limit) = if rng.gen_bool(0.5) { (&mut bad_begin, base.begin) } else { (&mut bad_end, base.end) };
        let x = rng.gen_range(0..limit);
        if !set.insert(x) {
            continue;
        }
        let ok = make_alpha_symmetric(base, &bad_begin, &bad_end, alpha, s).is_ok();
        if !ok {
            bad_begin.remove(&x);
            bad_end.remove(&x);
        }
    }
    (bad_begin, bad_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::seeds::stream_rng;

    #[test]
    fn grover_stage() {
        let n = 12;
        let mut stage = Stage { begin: 1, end: n, ..Stage::default() };
        for k in 0..n {
            stage.edges.push(StageEdge { from: 0, to: k, length: 1 });
        }
        stage.flows.insert("y".into(), BTreeMap::from([(3, int(1))]));
        let (w, counts) = weight_symmetric_stage(&stage).unwrap();
        assert_eq!(counts.speciality(), int(n as i64));
        assert_eq!(stage.c0(&w), int(n as i64));
        assert_eq!(stage.c1(&w, "y"), int(1));
    }

    #[test]
    fn speciality_one() {
        let mut stage = Stage { begin: 1, end: 1, ..Stage::default() };
        stage.edges.push(StageEdge { from: 0, to: 0, length: 3 });
        stage.flows.insert("y".into(), BTreeMap::from([(0, int(1))]));
        let (w, counts) = weight_symmetric_stage(&stage).unwrap();
        assert_eq!(counts.speciality(), int(1));
        assert_eq!(stage.c0(&w), int(9));
        assert_eq!(stage.c1(&w, "y"), int(1));
    }

    #[test]
    fn asymmetric_flows_are_rejected() {
        let mut stage = random_symmetric_stage(&mut stream_rng(1, 0), 4, 2, 3, 2, 1, 2);
        let flow = stage.flows.get_mut("y0").unwrap();
        let (&e, _) = flow.iter().next().unwrap();
        flow.insert(e, frac(1, 3));
        assert!(matches!(symmetric_counts(&stage), Err(StageError::NotSymmetric { .. })));
    }

    #[test]
    fn embedded_stage_validates() {
        let stage = random_symmetric_stage(&mut stream_rng(2, 0), 5, 3, 4, 2, 2, 3);
        let (w, _) = weight_symmetric_stage(&stage).unwrap();
        let g = stage.to_learning_graph(&w);
        assert!(g.validate().ok(), "{}", g.validate());
    }

    #[test]
    fn alpha_zero_is_identity() {
        let stage = random_symmetric_stage(&mut stream_rng(3, 0), 6, 3, 4, 2, 1, 2);
        let a = make_alpha_symmetric(&stage, &BTreeSet::new(), &BTreeSet::new(), &Q::zero(), 2).unwrap();
        assert_eq!(a.stage.flows, stage.flows);
    }

    #[test]
    fn whole_neighbourhood_removal_is_rejected() {
        let stage = random_symmetric_stage(&mut stream_rng(4, 0), 6, 6, 4, 4, 1, 1);
        let bad_end: BTreeSet<usize> = (0..4).collect();
        let err = make_alpha_symmetric(&stage, &BTreeSet::new(), &bad_end, &frac(1, 16), 2).unwrap_err();
        assert!(matches!(err, StageError::Retention { .. }), "{err}");
    }

    #[test]
    fn alpha_stage_respects_bounds() {
        let mut rng = stream_rng(5, 0);
        let stage = random_symmetric_stage(&mut rng, 40, 36, 20, 18, 2, 3);
        let alpha = frac(1, 16);
        let (bb, be) = random_bad_sets(&mut rng, &stage, &alpha, 2, 200);
        assert!(!bb.is_empty() || !be.is_empty());
        let a = make_alpha_symmetric(&stage, &bb, &be, &alpha, 2).unwrap();
        let (w, _) = weight_symmetric_stage(&stage).unwrap();
        for y in a.stage.flows.keys() {
            assert!(a.stage.c1(&w, y) <= a.c1_bound());
        }
        assert_eq!(a.stage.c0(&w), stage.c0(&w));
    }
}
