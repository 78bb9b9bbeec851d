//! Explicit learning graphs for small nested walks.
//!
//! Stages run in the order setup 1..r, update (1,1)..(r,ℓ_r), checking.
//! Every vertex holds one ordered partial subset per level and is labelled
//! with the positions its data structure has loaded. Availability is
//! trivial, so each 1-input routes its flow through all states avoiding its
//! certificates and then loads them.

use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{squared_bound, CostProfile, IntLevel, Level, NestedError};
use crate::learning_graph::stage::{symmetric_counts, Stage, StageEdge, SymmetricCounts};
use crate::learning_graph::{EdgeWeight, LearningGraph, OrderedPartialSubset as Ops};
use crate::rational::{frac, Q};

/// Where a loaded element goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Fill {
    /// The lowest-index star only.
    #[default]
    Lowest,
    /// Any star; one L-edge per choice.
    AnyStar,
}

/// Toy functions with a fixed data structure and certificate structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Toy {
    /// OR of `n` bits; one level, the data structure loads every element.
    OrSearch,
    /// OR of `n` bits; one level, nothing is loaded during the walk and each
    /// final state searches its elements with a star-shaped checking graph.
    OrCheck,
    /// Row flags and an `m × m` matrix; 1 iff some flagged row has a 1.
    /// Level 1 walks over rows, level 2 over cells `slot·m + column + 1`
    /// that point into the level-1 tuple.
    RowColumn,
}

#[derive(Clone, Debug)]
pub struct ExplicitConfig {
    pub toy: Toy,
    pub levels: Vec<IntLevel>,
    pub fill: Fill,
    /// Upper limit on the estimated number of L-edges.
    pub limit: u64,
}

impl ExplicitConfig {
    pub fn new(toy: Toy, levels: Vec<IntLevel>, fill: Fill) -> Self {
        Self { toy, levels, fill, limit: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Witness {
    Or { pos: u32 },
    Cell { row: u32, col: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    Setup { level: usize },
    Update { level: usize, h: usize },
    Check,
}

impl StageKind {
    pub fn name(&self) -> String {
        match self {
            StageKind::Setup { level } => format!("setup {}", level + 1),
            StageKind::Update { level, h } => format!("update {}.{}", level + 1, h),
            StageKind::Check => "check".into(),
        }
    }
}

/// One stage of the built graph.
#[derive(Clone, Debug)]
pub struct BuiltStage {
    pub kind: StageKind,
    pub begin: Vec<usize>,
    pub end: Vec<usize>,
    pub edges: Vec<usize>,
    /// The stage in local indices, with the 1-input flows.
    pub stage: Stage,
    pub weight: Q,
    pub c0: Q,
    pub c1: Q,
    pub counts: Option<SymmetricCounts>,
}

#[derive(Clone, Debug)]
pub struct ExplicitBuild {
    pub graph: LearningGraph,
    pub stages: Vec<BuiltStage>,
    /// `S²`, `U_i²` (largest over sub-steps) and `C²` measured on the states.
    pub measured: CostProfile<Q>,
    pub bound_squared: Q,
    /// Level states of each non-checking vertex.
    pub states: Vec<Option<Vec<Ops>>>,
}

impl ExplicitBuild {
    pub fn c0(&self) -> Q {
        self.stages.iter().fold(Q::zero(), |a, s| a + &s.c0)
    }

    pub fn c1(&self) -> Q {
        self.stages.iter().fold(Q::zero(), |a, s| a + &s.c1)
    }
}

struct Shape<'a> {
    toy: Toy,
    levels: &'a [IntLevel],
}

impl Shape<'_> {
    fn rows(&self) -> u32 {
        self.levels[0].n as u32
    }

    fn input_len(&self) -> usize {
        match self.toy {
            Toy::OrSearch | Toy::OrCheck => self.levels[0].n as usize,
            Toy::RowColumn => {
                let m = self.rows() as usize;
                m + m * m
            }
        }
    }

    fn cell_position(&self, row: u32, col: u32) -> usize {
        let m = self.rows() as usize;
        m + (row as usize - 1) * m + col as usize
    }

    fn inputs(&self) -> Vec<(String, Vec<u32>, Option<Witness>)> {
        let len = self.input_len();
        let mut out = vec![("zero".to_string(), vec![0; len], None)];
        match self.toy {
            Toy::OrSearch | Toy::OrCheck => {
                for pos in 1..=len as u32 {
                    let mut z = vec![0; len];
                    z[pos as usize - 1] = 1;
                    out.push((format!("one{pos}"), z, Some(Witness::Or { pos })));
                }
            }
            Toy::RowColumn => {
                let m = self.rows();
                let mut flags = vec![0; len];
                flags[..m as usize].fill(1);
                out.push(("flags".into(), flags, None));
                let mut cells = vec![1; len];
                cells[..m as usize].fill(0);
                out.push(("cells".into(), cells, None));
                for row in 1..=m {
                    for col in 0..m {
                        let mut z = vec![0; len];
                        z[row as usize - 1] = 1;
                        z[self.cell_position(row, col)] = 1;
                        out.push((format!("hit{row}_{col}"), z, Some(Witness::Cell { row, col })));
                    }
                }
            }
        }
        out
    }

    /// `I_{y,i}` given the setup states of the outer levels. The first
    /// element is the one that matters; the rest pad it to `ℓ_i` elements.
    fn certificate(&self, w: Witness, level: usize, setups: &[Ops]) -> Vec<u32> {
        let l = self.levels[level];
        let first = match w {
            Witness::Or { pos } => pos,
            Witness::Cell { row, .. } if level == 0 => row,
            Witness::Cell { col, .. } => {
                let slot = setups[0].slots().iter().position(Option::is_none).unwrap_or(0) as u32;
                slot * self.rows() + col + 1
            }
        };
        (0..l.ell as u32).map(|j| (first - 1 + j) % l.n as u32 + 1).collect()
    }

    fn label(&self, states: &[Ops]) -> Vec<usize> {
        match self.toy {
            Toy::OrSearch => states[0].elements().iter().map(|&v| v as usize - 1).collect(),
            Toy::OrCheck => Vec::new(),
            Toy::RowColumn => {
                let m = self.rows();
                let mut label: Vec<usize> = states[0].elements().iter().map(|&u| u as usize - 1).collect();
                for t in states[1].elements() {
                    let (slot, col) = ((t - 1) / m, (t - 1) % m);
                    if let Some(row) = states[0].get(slot as usize) {
                        label.push(self.cell_position(row, col));
                    }
                }
                label
            }
        }
    }

    fn check_positions(&self, states: &[Ops]) -> Vec<usize> {
        match self.toy {
            Toy::OrCheck => states[0].elements().iter().map(|&v| v as usize - 1).collect(),
            _ => Vec::new(),
        }
    }

    fn certifies(&self, z: &[u32], label: &[usize]) -> bool {
        match self.toy {
            Toy::OrSearch | Toy::OrCheck => label.iter().any(|&p| z[p] == 1),
            Toy::RowColumn => {
                let m = self.rows();
                (1..=m).any(|row| {
                    label.contains(&(row as usize - 1))
                        && z[row as usize - 1] == 1
                        && (0..m).any(|col| {
                            let p = self.cell_position(row, col);
                            label.contains(&p) && z[p] == 1
                        })
                })
            }
        }
    }

    fn check_target(&self, w: Witness) -> Option<usize> {
        match w {
            Witness::Or { pos } => Some(pos as usize - 1),
            Witness::Cell { .. } => None,
        }
    }

    /// Setup states of all levels, recovered by starring certificates.
    fn setups(&self, w: Witness, states: &[Ops]) -> Vec<Ops> {
        let mut out: Vec<Ops> = Vec::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            let mut a = s.clone();
            for v in self.certificate(w, i, &out) {
                if let Ok(b) = a.remove(v) {
                    a = b;
                }
            }
            out.push(a);
        }
        out
    }
}

fn check_config(cfg: &ExplicitConfig) -> Result<(), NestedError> {
    super::check_int_levels(&cfg.levels)?;
    let bad = |msg: &str| Err(NestedError::Dims(msg.into()));
    match cfg.toy {
        Toy::OrSearch | Toy::OrCheck if cfg.levels.len() != 1 => bad("OR toys have exactly one level"),
        Toy::RowColumn if cfg.levels.len() != 2 => bad("the row/column toy has exactly two levels"),
        Toy::RowColumn if cfg.levels[0].ell != 1 => bad("the row/column toy needs ell_1 = 1"),
        Toy::RowColumn if cfg.levels[1].n != cfg.levels[0].k * cfg.levels[0].n => {
            bad("the row/column toy needs n_2 = k_1 * n_1")
        }
        _ => Ok(()),
    }
}

/// Upper estimate of the number of L-edges.
pub fn estimate_edges(levels: &[IntLevel], fill: Fill) -> f64 {
    let binom = |n: u64, k: u64| crate::rational::to_f64(&crate::rational::q_from_biguint(crate::rational::binomial(n, k)));
    let fall = |n: u64, k: u64| crate::rational::to_f64(&crate::rational::q_from_biguint(crate::rational::falling(n, k)));
    let mut layer = 1.0f64;
    let mut total = 0.0;
    for l in levels {
        let slots = if fill == Fill::AnyStar { binom(l.k, l.ell) } else { 1.0 };
        layer *= slots * fall(l.n, l.k - l.ell);
        total += layer;
    }
    for l in levels {
        for h in 1..=l.ell {
            let stars = if fill == Fill::AnyStar { (l.ell - h + 1) as f64 } else { 1.0 };
            layer *= stars * (l.n - (l.k - l.ell + h - 1)) as f64;
            total += layer;
        }
    }
    total + layer * levels.iter().map(|l| l.k as f64).sum::<f64>()
}

fn fills(state: &Ops, slots: &[usize], n: u32, out: &mut Vec<Ops>) {
    let Some((&first, rest)) = slots.split_first() else {
        out.push(state.clone());
        return;
    };
    for v in 1..=n {
        if let Ok(next) = state.insert_at(first, v) {
            fills(&next, rest, n, out);
        }
    }
}

fn slot_sets(k: usize, m: usize, fill: Fill) -> Vec<Vec<usize>> {
    if fill == Fill::Lowest {
        return vec![(0..m).collect()];
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..m).rev().find(|&i| cur[i] < k - m + i) else { break };
        cur[i] += 1;
        for j in i + 1..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

fn stage_plan(levels: &[IntLevel], check: bool) -> Vec<StageKind> {
    let mut plan: Vec<StageKind> = (0..levels.len()).map(|level| StageKind::Setup { level }).collect();
    for (level, l) in levels.iter().enumerate() {
        for h in 1..=l.ell as usize {
            plan.push(StageKind::Update { level, h });
        }
    }
    if check {
        plan.push(StageKind::Check);
    }
    plan
}

/// Builds the learning graph, its flows and stage weights.
///
/// Each stage gets the uniform weight `max_y Σ_e l(e) p_y(e)²`, so its `C1`
/// is at most 1. On the checking stage this is the rescaling of the
/// unit-weight checking graphs.
pub fn build_explicit(cfg: &ExplicitConfig) -> Result<ExplicitBuild, NestedError> {
    check_config(cfg)?;
    let estimate = estimate_edges(&cfg.levels, cfg.fill);
    if estimate > cfg.limit as f64 {
        return Err(NestedError::TooLarge { estimate: estimate.ceil() as u64, limit: cfg.limit });
    }
    let shape = Shape { toy: cfg.toy, levels: &cfg.levels };
    let r = cfg.levels.len();
    let mut graph = LearningGraph::new();
    let root_states: Vec<Ops> = cfg.levels.iter().map(|l| Ops::empty(l.k as usize)).collect();
    graph.add_vertex("v0", shape.label(&root_states));
    let mut states: Vec<Option<Vec<Ops>>> = vec![Some(root_states)];
    let has_check = cfg.toy == Toy::OrCheck;

    // Structure. `loaded[e]` is the element an update edge inserts, or the
    // position a checking edge loads.
    let mut loaded: Vec<Option<u32>> = Vec::new();
    let mut frontier = vec![0usize];
    let mut plan = Vec::new();
    for kind in stage_plan(&cfg.levels, has_check) {
        let mut index: HashMap<Vec<Ops>, usize> = HashMap::new();
        let (mut end, mut edges) = (Vec::new(), Vec::new());
        for &v in &frontier {
            let cur = states[v].clone().expect("walk vertex");
            let mut succ: Vec<(Option<Vec<Ops>>, Vec<usize>, Option<u32>)> = Vec::new();
            match kind {
                StageKind::Setup { level } => {
                    let l = cfg.levels[level];
                    let mut out = Vec::new();
                    for slots in slot_sets(l.k as usize, (l.k - l.ell) as usize, cfg.fill) {
                        fills(&cur[level], &slots, l.n as u32, &mut out);
                    }
                    for a in out {
                        let mut s = cur.clone();
                        s[level] = a;
                        succ.push((Some(s), Vec::new(), None));
                    }
                }
                StageKind::Update { level, .. } => {
                    let a = &cur[level];
                    let stars: Vec<usize> = (0..a.capacity()).filter(|&p| a.get(p).is_none()).collect();
                    let stars = if cfg.fill == Fill::Lowest { &stars[..1] } else { &stars[..] };
                    for x in 1..=cfg.levels[level].n as u32 {
                        if a.contains(x) {
                            continue;
                        }
                        for &p in stars {
                            let mut s = cur.clone();
                            s[level] = a.insert_at(p, x).expect("free star");
                            succ.push((Some(s), Vec::new(), Some(x)));
                        }
                    }
                }
                StageKind::Check => {
                    let label = &graph.vertices[v].label;
                    for p in shape.check_positions(&cur) {
                        if label.binary_search(&p).is_err() {
                            let mut l = label.clone();
                            l.push(p);
                            succ.push((None, l, Some(p as u32)));
                        }
                    }
                }
            }
            for (s, extra, x) in succ {
                let to = match s {
                    Some(s) => match index.get(&s) {
                        Some(&w) => w,
                        None => {
                            let w = graph.add_vertex(format!("v{}", graph.vertices.len()), shape.label(&s));
                            states.push(Some(s.clone()));
                            index.insert(s, w);
                            end.push(w);
                            w
                        }
                    },
                    None => {
                        let w = graph.add_vertex(format!("v{}", graph.vertices.len()), extra);
                        states.push(None);
                        end.push(w);
                        w
                    }
                };
                edges.push(graph.add_edge(v, to, EdgeWeight::Fixed(Q::one())));
                loaded.push(x);
            }
        }
        plan.push((kind, frontier.clone(), end.clone(), edges));
        if kind != StageKind::Check {
            frontier = end;
        }
    }

    // Inputs, sinks and flows.
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); graph.vertices.len()];
    for (i, e) in graph.edges.iter().enumerate() {
        out_edges[e.from].push(i);
    }
    for (id, z, witness) in shape.inputs() {
        graph.add_input(id.clone(), z.clone());
        let Some(w) = witness else { continue };
        let sinks: Vec<usize> =
            (0..graph.vertices.len()).filter(|&v| shape.certifies(&z, &graph.vertices[v].label)).collect();
        graph.sinks.insert(id.clone(), sinks);
        let mut at: HashMap<usize, Q> = HashMap::from([(0, Q::one())]);
        for (kind, begin, _, _) in &plan {
            let mut next: HashMap<usize, Q> = HashMap::new();
            for &v in begin {
                let Some(p) = at.remove(&v) else { continue };
                let eligible: Vec<usize> = match *kind {
                    StageKind::Setup { level } => {
                        let setups = shape.setups(w, states[v].as_ref().unwrap());
                        let cert = shape.certificate(w, level, &setups[..level]);
                        out_edges[v]
                            .iter()
                            .copied()
                            .filter(|&e| {
                                let a = &states[graph.edges[e].to].as_ref().unwrap()[level];
                                cert.iter().all(|&c| !a.contains(c))
                            })
                            .collect()
                    }
                    StageKind::Update { level, .. } => {
                        let setups = shape.setups(w, states[v].as_ref().unwrap());
                        let cert = shape.certificate(w, level, &setups[..level]);
                        out_edges[v].iter().copied().filter(|&e| cert.contains(&loaded[e].unwrap())).collect()
                    }
                    StageKind::Check => {
                        let target = shape.check_target(w);
                        out_edges[v].iter().copied().filter(|&e| loaded[e].map(|x| x as usize) == target).collect()
                    }
                };
                if eligible.is_empty() {
                    at.insert(v, p);
                    continue;
                }
                let share = p / frac(eligible.len() as i64, 1);
                for e in eligible {
                    graph.set_flow(&id, e, share.clone());
                    *next.entry(graph.edges[e].to).or_insert_with(Q::zero) += &share;
                }
            }
            for (v, p) in next {
                *at.entry(v).or_insert_with(Q::zero) += p;
            }
        }
    }

    // Stage weights and costs.
    let ones: Vec<String> = graph.flows.keys().cloned().collect();
    let mut stages = Vec::new();
    for (kind, begin, end, edges) in plan {
        let local_b: HashMap<usize, usize> = begin.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let local_e: HashMap<usize, usize> = end.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut stage = Stage {
            begin: begin.len(),
            end: end.len(),
            edges: edges
                .iter()
                .map(|&e| {
                    let ed = &graph.edges[e];
                    StageEdge { from: local_b[&ed.from], to: local_e[&ed.to], length: ed.length }
                })
                .collect(),
            flows: Default::default(),
        };
        let mut kappa = Q::zero();
        for y in &ones {
            let mut f = std::collections::BTreeMap::new();
            let mut sum = Q::zero();
            for (i, &e) in edges.iter().enumerate() {
                let p = graph.flow(y, e);
                if !p.is_zero() {
                    sum += &p * &p * Q::from_integer(graph.edges[e].length.into());
                    f.insert(i, p);
                }
            }
            if !f.is_empty() {
                stage.flows.insert(y.clone(), f);
            }
            if sum > kappa {
                kappa = sum;
            }
        }
        if kappa.is_zero() {
            kappa = Q::one();
        }
        for &e in &edges {
            graph.edges[e].weight = EdgeWeight::Fixed(kappa.clone());
        }
        let weights = vec![kappa.clone(); edges.len()];
        let c0 = stage.c0(&weights);
        let c1 = ones.iter().map(|y| stage.c1(&weights, y)).max().unwrap_or_else(Q::zero);
        let counts = symmetric_counts(&stage).ok();
        stages.push(BuiltStage { kind, begin, end, edges, stage, weight: kappa, c0, c1, counts });
    }

    let measured = measure(&graph, &stages, r);
    let levels: Vec<Level> = cfg
        .levels
        .iter()
        .map(|l| Level { n: frac(l.n as i64, 1), k: frac(l.k as i64, 1), ell: l.ell as u32 })
        .collect();
    let bound_squared = squared_bound(&levels, &measured)?;
    Ok(ExplicitBuild { graph, stages, measured, bound_squared, states })
}

fn measure(graph: &LearningGraph, stages: &[BuiltStage], r: usize) -> CostProfile<Q> {
    let avg = |vals: Vec<usize>| {
        if vals.is_empty() {
            return Q::zero();
        }
        let n = vals.len() as i64;
        frac(vals.into_iter().map(|v| (v * v) as i64).sum(), n)
    };
    let mut setup = Q::zero();
    let mut update: Vec<Q> = vec![Q::zero(); r];
    let mut check = None;
    for s in stages {
        match s.kind {
            StageKind::Setup { level } if level + 1 == r => {
                setup = avg(s.end.iter().map(|&v| graph.vertices[v].label.len()).collect());
            }
            StageKind::Setup { .. } => {}
            StageKind::Update { level, .. } => {
                let u = avg(s.edges.iter().map(|&e| graph.edges[e].length).collect());
                if u > update[level] {
                    update[level] = u;
                }
            }
            StageKind::Check => {
                // C0·C1 of each star-shaped checking graph is its size.
                let mut size = vec![0i64; graph.vertices.len()];
                for &e in &s.edges {
                    size[graph.edges[e].from] += 1;
                }
                let total: i64 = s.begin.iter().map(|&v| size[v]).sum();
                check = Some(frac(total, s.begin.len() as i64));
            }
        }
    }
    CostProfile { setup: Some(setup), update: update.into_iter().map(Some).collect(), check }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::{setup_stage_counts, update_stage_counts};
    use crate::rational::{binomial, falling, int, q_from_biguint};

    fn lv(n: u64, k: u64, ell: u64) -> IntLevel {
        IntLevel { n, k, ell }
    }

    fn within_bound(b: &ExplicitBuild) {
        assert!(b.c0() <= int(8) * &b.bound_squared, "C0 {} vs bound² {}", b.c0(), b.bound_squared);
        for s in &b.stages {
            assert!(s.c1 <= Q::one(), "{}: C1 {}", s.kind.name(), s.c1);
        }
    }

    #[test]
    fn or_search_lowest_fill() {
        let b = build_explicit(&ExplicitConfig::new(Toy::OrSearch, vec![lv(8, 4, 1)], Fill::Lowest)).unwrap();
        let report = b.graph.validate();
        assert!(report.ok(), "{report}");
        let names: Vec<String> = b.stages.iter().map(|s| s.kind.name()).collect();
        assert_eq!(names, ["setup 1", "update 1.1"]);
        assert_eq!(b.measured.setup, Some(int(9)));
        assert_eq!(b.bound_squared, int(9) + int(8));
        assert!(b.stages.iter().all(|s| s.counts.is_some()));
        within_bound(&b);
    }

    #[test]
    fn or_check_has_checking_stage() {
        for fill in [Fill::Lowest, Fill::AnyStar] {
            let b = build_explicit(&ExplicitConfig::new(Toy::OrCheck, vec![lv(6, 3, 2)], fill)).unwrap();
            let report = b.graph.validate();
            assert!(report.ok(), "{report}");
            let names: Vec<String> = b.stages.iter().map(|s| s.kind.name()).collect();
            assert_eq!(names, ["setup 1", "update 1.1", "update 1.2", "check"]);
            assert_eq!(b.measured.check, Some(int(3)));
            within_bound(&b);
        }
    }

    #[test]
    fn any_star_counts_match_formulas() {
        for levels in [vec![lv(6, 3, 2)], vec![lv(7, 3, 1)], vec![lv(5, 4, 3)]] {
            let b = build_explicit(&ExplicitConfig::new(Toy::OrSearch, levels.clone(), Fill::AnyStar)).unwrap();
            assert!(b.graph.validate().ok());
            for s in &b.stages {
                let got = s.counts.clone().unwrap_or_else(|| panic!("{} not symmetric", s.kind.name()));
                let (want, extra) = match s.kind {
                    StageKind::Setup { level } => (setup_stage_counts(&levels, level + 1).unwrap(), 1u64),
                    StageKind::Update { level, h } => {
                        let w = update_stage_counts(&levels, level + 1, h as u64).unwrap();
                        // Flow-carrying vertices also differ in which
                        // certificate elements are loaded and where they sit.
                        let (ell, h) = (levels[level].ell, h as u64 - 1);
                        let order = binomial(ell, h) * falling(ell, h);
                        (w, order.try_into().unwrap())
                    }
                    StageKind::Check => unreachable!(),
                };
                assert_eq!(int(got.c as i64), want.c, "{}", s.kind.name());
                assert_eq!(int(got.c_prime as i64), &want.c_prime * int(extra as i64), "{}", s.kind.name());
                assert_eq!(int(got.d as i64), want.d, "{}", s.kind.name());
                assert_eq!(int(got.d_prime as i64), want.d_prime, "{}", s.kind.name());
            }
        }
    }

    #[test]
    fn two_level_counts_match_formulas() {
        let levels = vec![lv(3, 2, 1), lv(6, 2, 1)];
        let b = build_explicit(&ExplicitConfig::new(Toy::RowColumn, levels.clone(), Fill::AnyStar)).unwrap();
        assert!(b.graph.validate().ok());
        for s in &b.stages {
            let got = s.counts.clone().unwrap();
            let want = match s.kind {
                StageKind::Setup { level } => setup_stage_counts(&levels, level + 1).unwrap(),
                StageKind::Update { level, h } => update_stage_counts(&levels, level + 1, h as u64).unwrap(),
                StageKind::Check => unreachable!(),
            };
            assert_eq!(
                frac((got.c * got.d) as i64, (got.c_prime * got.d_prime) as i64),
                want.speciality(),
                "{}",
                s.kind.name()
            );
        }
    }

    #[test]
    fn row_column_replays_certificates() {
        for fill in [Fill::Lowest, Fill::AnyStar] {
            let levels = vec![lv(4, 2, 1), lv(8, 2, 1)];
            let b = build_explicit(&ExplicitConfig::new(Toy::RowColumn, levels.clone(), fill)).unwrap();
            let report = b.graph.validate();
            assert!(report.ok(), "{report}");
            within_bound(&b);
            let shape = Shape { toy: Toy::RowColumn, levels: &levels };
            let last = b.stages.last().unwrap();
            for (id, z, w) in shape.inputs() {
                let Some(w @ Witness::Cell { row, col }) = w else { continue };
                let mut reached = 0;
                for &v in &last.end {
                    let into: Q = last.edges.iter().filter(|&&e| b.graph.edges[e].to == v).map(|&e| b.graph.flow(&id, e)).sum();
                    if into.is_zero() {
                        continue;
                    }
                    reached += 1;
                    let st = b.states[v].as_ref().unwrap();
                    let setups = shape.setups(w, st);
                    let slot = setups[0].slots().iter().position(Option::is_none).unwrap();
                    assert_eq!(st[0].get(slot), Some(row));
                    assert!(st[1].contains(slot as u32 * 4 + col + 1));
                    assert!(shape.certifies(&z, &b.graph.vertices[v].label));
                }
                assert!(reached > 0);
            }
        }
    }

    #[test]
    fn measured_costs_for_or_search() {
        let b = build_explicit(&ExplicitConfig::new(Toy::OrSearch, vec![lv(7, 3, 1)], Fill::Lowest)).unwrap();
        assert_eq!(b.measured.update, vec![Some(int(1))]);
        let setup = &b.stages[0];
        assert_eq!(setup.end.len(), 42);
        assert_eq!(setup.c1, Q::one());
        let update = b.stages[1].counts.clone().unwrap();
        assert_eq!(update.speciality(), int(7));
        assert_eq!(int(update.c as i64), q_from_biguint(falling(7, 2)));
    }

    #[test]
    fn bad_configs() {
        let too_big = ExplicitConfig::new(Toy::OrSearch, vec![lv(30, 10, 1)], Fill::AnyStar);
        assert!(matches!(build_explicit(&too_big), Err(NestedError::TooLarge { .. })));
        let two = ExplicitConfig::new(Toy::OrSearch, vec![lv(4, 2, 1), lv(4, 2, 1)], Fill::Lowest);
        assert!(build_explicit(&two).is_err());
        let mismatch = ExplicitConfig::new(Toy::RowColumn, vec![lv(4, 2, 1), lv(7, 2, 1)], Fill::Lowest);
        assert!(build_explicit(&mismatch).is_err());
    }
}
