//! Randomized rank increase: an OR of `n` rank-`r` simplex instances becomes
//! one rank-`(r+1)` instance on `2n` vertices.
//!
//! Label vertices are `A = 1..=n`; shared vertices are `B = n+1..=2n`, and
//! vertex `b` of every input graph maps to `n + b`. Stored edges are
//! `{v} ∪ (e + n)` for `e ∈ E(G_v)`. A random equal partition of `B` into
//! `r+1` blocks supplies the complete `(r+1)`-partite edges inside `B` for
//! free.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::hypergraph::{all_simplices, parse_edge_block, Hypergraph, HypergraphError, Multipartite, Simplex, Vertex};
use crate::rational::{frac, fmt_fixed, Q};
use crate::seeds::stream_rng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("invalid dimensions: {0}")]
    Domain(String),
    #[error("input for label {label}: {msg}")]
    Input { label: Vertex, msg: String },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] HypergraphError),
}

fn check_dims(n: usize, r: usize) -> Result<(), ReductionError> {
    if n <= r {
        return Err(ReductionError::Domain(format!("need n > r, got n={n} r={r}")));
    }
    if n % (r + 1) != 0 {
        return Err(ReductionError::Domain(format!("n={n} is not divisible by r+1={}", r + 1)));
    }
    Ok(())
}

/// Equal partition of the local vertex set `1..=n` into `r+1` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<Vertex>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<Vertex>>) -> Result<Self, ReductionError> {
        let parts = blocks.len();
        if parts < 2 || n % parts != 0 {
            return Err(ReductionError::Domain(format!("cannot split {n} vertices into {parts} equal blocks")));
        }
        let mut seen = vec![false; n + 1];
        for b in &blocks {
            if b.len() != n / parts {
                return Err(ReductionError::Domain(format!("block sizes must all be {}", n / parts)));
            }
            for &v in b {
                if v == 0 || v as usize > n || seen[v as usize] {
                    return Err(ReductionError::Domain(format!("vertex {v} missing, repeated or out of range")));
                }
                seen[v as usize] = true;
            }
        }
        Ok(Self { blocks })
    }

    /// Uniform equal partition: shuffle, then cut into consecutive chunks.
    pub fn random<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Self, ReductionError> {
        check_dims(n, r)?;
        let mut order: Vec<Vertex> = (1..=n as Vertex).collect();
        order.shuffle(rng);
        let size = n / (r + 1);
        Ok(Self { blocks: order.chunks(size).map(|c| c.to_vec()).collect() })
    }

    pub fn blocks(&self) -> &[Vec<Vertex>] {
        &self.blocks
    }

    pub fn separates(&self, vertices: &[Vertex]) -> bool {
        let mut ids: Vec<usize> = vertices
            .iter()
            .map(|v| self.blocks.iter().position(|b| b.contains(v)).expect("vertex in partition"))
            .collect();
        ids.sort_unstable();
        ids.windows(2).all(|w| w[0] != w[1])
    }
}

/// Rank-`(r+1)` hypergraph on `A ∪ B` with its decoding data.
#[derive(Clone, Debug)]
pub struct CombinedHypergraph {
    pub n: usize,
    pub r: usize,
    pub graph: Hypergraph,
}

impl CombinedHypergraph {
    /// Splits a simplex into its label vertex and the local `r`-simplex.
    /// Returns `None` unless exactly one vertex lies in `A`.
    pub fn decode(&self, s: &Simplex) -> Option<(Vertex, Simplex)> {
        let n = self.n as Vertex;
        let (a, b): (Vec<Vertex>, Vec<Vertex>) = s.vertices().iter().partition(|&&v| v <= n);
        if a.len() != 1 {
            return None;
        }
        let local: Vec<Vertex> = b.iter().map(|v| v - n).collect();
        Some((a[0], Simplex::new(&local)))
    }
}

/// Inputs indexed by label vertex `v ∈ 1..=n`; each is a rank-`r` graph on `n`
/// vertices. Missing labels stand for empty graphs.
pub type Inputs = BTreeMap<Vertex, Hypergraph>;

fn check_inputs(inputs: &Inputs, n: usize, r: usize) -> Result<(), ReductionError> {
    for (&v, g) in inputs {
        let bad = |msg: String| ReductionError::Input { label: v, msg };
        if v == 0 || v as usize > n {
            return Err(bad(format!("label outside 1..={n}")));
        }
        if g.n() != n {
            return Err(bad(format!("has {} vertices, expected {n}", g.n())));
        }
        if g.r() != r {
            return Err(bad(format!("has rank {}, expected {r}", g.r())));
        }
    }
    Ok(())
}

/// Relabels the inputs into the combined graph. No input edge is queried.
pub fn build_reduction(
    inputs: &Inputs,
    n: usize,
    r: usize,
    partition: &Partition,
) -> Result<CombinedHypergraph, ReductionError> {
    check_dims(n, r)?;
    check_inputs(inputs, n, r)?;
    if partition.blocks.len() != r + 1 || partition.blocks.iter().map(Vec::len).sum::<usize>() != n {
        return Err(ReductionError::Domain(format!("partition must split {n} vertices into {} blocks", r + 1)));
    }
    let shift = n as Vertex;
    let mut edges = Vec::new();
    for (&v, g) in inputs {
        for e in g.edges() {
            let mut lifted = vec![v];
            lifted.extend(e.iter().map(|b| b + shift));
            edges.push(lifted);
        }
    }
    let shifted: Vec<Vec<Vertex>> =
        partition.blocks.iter().map(|b| b.iter().map(|v| v + shift).collect()).collect();
    let implicit = Multipartite::new(2 * n, &shifted);
    let graph = Hypergraph::with_implicit(2 * n, r + 1, edges, Some(implicit))?;
    Ok(CombinedHypergraph { n, r, graph })
}

/// Probability that a fixed `(r+1)`-set of `B` lands in distinct blocks:
/// `∏_{i=1..r} ((r+1−i)/(r+1)) · (n/(n−i))`.
pub fn success_probability(n: usize, r: usize) -> Result<Q, ReductionError> {
    if r > 0 {
        check_dims(n, r)?;
    }
    let (n, r) = (n as i64, r as i64);
    Ok((1..=r).fold(Q::one(), |acc, i| acc * frac(r + 1 - i, r + 1) * frac(n, n - i)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Decoded `(label, r-simplex)` pairs, each verified against its input.
    pub recovered: Vec<(Vertex, Simplex)>,
    /// Simplices of the combined graph that failed to decode or verify.
    pub decode_failures: usize,
}

impl TrialOutcome {
    pub fn success(&self) -> bool {
        !self.recovered.is_empty()
    }
}

/// One trial with its own random partition; pure in `(seed, index)`.
pub fn run_trial(inputs: &Inputs, n: usize, r: usize, seed: u64, index: u64) -> Result<TrialOutcome, ReductionError> {
    let mut rng = stream_rng(seed, index);
    let partition = Partition::random(n, r, &mut rng)?;
    let combined = build_reduction(inputs, n, r, &partition)?;
    let mut outcome = TrialOutcome { recovered: Vec::new(), decode_failures: 0 };
    for s in all_simplices(&combined.graph) {
        match combined.decode(&s) {
            Some((v, local)) if inputs.get(&v).is_some_and(|g| g.is_simplex(local.vertices())) => {
                outcome.recovered.push((v, local));
            }
            _ => outcome.decode_failures += 1,
        }
    }
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub n: usize,
    pub r: usize,
    pub trials: u64,
    pub successes: u64,
    pub exact: Q,
    pub has_simplex: bool,
    /// Distinct decoded simplices with the number of trials that found them.
    pub recovered: BTreeMap<(Vertex, Simplex), u64>,
    pub decode_failures: u64,
}

impl ReductionReport {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }

    /// Standard error of the empirical rate under the exact probability.
    pub fn stderr(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.exact.to_f64().unwrap_or(0.0);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        let p = self.exact.to_f64().unwrap_or(0.0);
        (self.rate() - p).abs() <= k * self.stderr() + 1e-12
    }

    pub fn render(&self, exact_output: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "r={}", self.r);
        let _ = writeln!(out, "trials={}", self.trials);
        let _ = writeln!(out, "successes={}", self.successes);
        if exact_output {
            let _ = writeln!(out, "exact={}", self.exact);
        } else {
            let _ = writeln!(out, "exact={}", fmt_fixed(&self.exact, 6));
        }
        let _ = writeln!(out, "empirical={:.6}", self.rate());
        let _ = writeln!(out, "stderr={:.6}", self.stderr());
        let _ = writeln!(out, "decode_failures={}", self.decode_failures);
        if !self.has_simplex {
            let _ = writeln!(out, "note=no input contains an r-simplex");
        }
        for ((v, s), count) in &self.recovered {
            let _ = writeln!(out, "recovered\t{v}\t{s}\t{count}");
        }
        out
    }
}

pub fn run_reduction_trials(
    inputs: &Inputs,
    n: usize,
    r: usize,
    trials: u64,
    seed: u64,
) -> Result<ReductionReport, ReductionError> {
    check_dims(n, r)?;
    check_inputs(inputs, n, r)?;
    let has_simplex = inputs.values().any(|g| !all_simplices(g).is_empty());
    let mut report = ReductionReport {
        n,
        r,
        trials,
        successes: 0,
        exact: success_probability(n, r)?,
        has_simplex,
        recovered: BTreeMap::new(),
        decode_failures: 0,
    };
    for t in 0..trials {
        let outcome = run_trial(inputs, n, r, seed, t)?;
        if outcome.success() {
            report.successes += 1;
        }
        report.decode_failures += outcome.decode_failures as u64;
        for key in outcome.recovered {
            *report.recovered.entry(key).or_insert(0) += 1;
        }
    }
    Ok(report)
}

/// Reads `n r m`, then `m` blocks separated by blank lines; each block is a
/// label line `v` followed by that input's edges.
pub fn parse_instances(text: &str) -> Result<(usize, usize, Inputs), ReductionError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#'))
        .peekable();
    let (hline, header) = lines.next().ok_or(ReductionError::Format { line: 1, msg: "empty file".into() })?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| ReductionError::Format { line: hline, msg: "header must be \"n r m\"".into() })?;
    let [n, r, m] = nums[..] else {
        return Err(ReductionError::Format { line: hline, msg: "header must be \"n r m\"".into() });
    };
    if !text.ends_with('\n') {
        return Err(ReductionError::Format { line: text.lines().count(), msg: "missing trailing newline".into() });
    }
    let mut inputs = Inputs::new();
    loop {
        while lines.peek().is_some_and(|(_, l)| l.trim().is_empty()) {
            lines.next();
        }
        let Some((vline, label)) = lines.next() else { break };
        let v: Vertex = label
            .trim()
            .parse()
            .map_err(|_| ReductionError::Format { line: vline, msg: format!("expected label vertex, got {label:?}") })?;
        if v == 0 || v as usize > n {
            return Err(ReductionError::Format { line: vline, msg: format!("label {v} outside 1..={n}") });
        }
        let mut block = Vec::new();
        while let Some(&(i, l)) = lines.peek() {
            if l.trim().is_empty() {
                break;
            }
            block.push((i, l));
            lines.next();
        }
        let g = parse_edge_block(n, r, block).map_err(|e| match e {
            HypergraphError::Format { line, msg } => ReductionError::Format { line, msg },
            other => ReductionError::Format { line: vline, msg: other.to_string() },
        })?;
        if inputs.insert(v, g).is_some() {
            return Err(ReductionError::Format { line: vline, msg: format!("duplicate label {v}") });
        }
    }
    if inputs.len() != m {
        return Err(ReductionError::Format { line: hline, msg: format!("header promises {m} blocks, found {}", inputs.len()) });
    }
    Ok((n, r, inputs))
}
