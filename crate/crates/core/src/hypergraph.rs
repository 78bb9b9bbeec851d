//! Uniform hypergraphs, a query-counting oracle view, and brute-force
//! simplex search.
//!
//! Vertices are `1..=n`. An `r`-simplex is a set of `r+1` vertices all of
//! whose `r`-subsets are edges.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rational::{binomial, frac, Q};

pub type Vertex = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("invalid dimensions: {0}")]
    Domain(String),
    #[error("edge {edge:?}: {msg}")]
    BadEdge { edge: Vec<Vertex>, msg: String },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Complete multipartite edges over a labelled subset of the vertices.
///
/// A subset lies in the domain when every vertex has a block; inside the
/// domain it is an edge iff its vertices sit in pairwise distinct blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multipartite {
    block_of: Vec<Option<u32>>,
}

impl Multipartite {
    /// `blocks[b]` lists the vertices of block `b`.
    pub fn new(n: usize, blocks: &[Vec<Vertex>]) -> Self {
        let mut block_of = vec![None; n + 1];
        for (b, members) in blocks.iter().enumerate() {
            for &v in members {
                block_of[v as usize] = Some(b as u32);
            }
        }
        Self { block_of }
    }

    pub fn block(&self, v: Vertex) -> Option<u32> {
        self.block_of.get(v as usize).copied().flatten()
    }

    /// `None` when the subset is outside the predicate's responsibility.
    pub fn decide(&self, subset: &[Vertex]) -> Option<bool> {
        let mut seen = Vec::with_capacity(subset.len());
        for &v in subset {
            seen.push(self.block(v)?);
        }
        seen.sort_unstable();
        Some(seen.windows(2).all(|w| w[0] != w[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    r: usize,
    edges: BTreeSet<Vec<Vertex>>,
    implicit: Option<Multipartite>,
}

fn canonical(edge: &[Vertex]) -> Vec<Vertex> {
    let mut e = edge.to_vec();
    e.sort_unstable();
    e
}

impl Hypergraph {
    pub fn new<I>(n: usize, r: usize, edges: I) -> Result<Self, HypergraphError>
    where
        I: IntoIterator,
        I::Item: AsRef<[Vertex]>,
    {
        Self::with_implicit(n, r, edges, None)
    }

    pub fn with_implicit<I>(
        n: usize,
        r: usize,
        edges: I,
        implicit: Option<Multipartite>,
    ) -> Result<Self, HypergraphError>
    where
        I: IntoIterator,
        I::Item: AsRef<[Vertex]>,
    {
        if r == 0 || r > n {
            return Err(HypergraphError::Domain(format!("need 1 <= r <= n, got n={n} r={r}")));
        }
        let mut set = BTreeSet::new();
        for edge in edges {
            let e = canonical(edge.as_ref());
            let bad = |msg: &str| HypergraphError::BadEdge { edge: e.clone(), msg: msg.to_string() };
            if e.len() != r {
                return Err(bad(&format!("expected {r} vertices")));
            }
            if e.iter().any(|&v| v == 0 || v as usize > n) {
                return Err(bad(&format!("vertex outside 1..={n}")));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(bad("repeated vertex"));
            }
            if implicit.as_ref().is_some_and(|p| p.decide(&e).is_some()) {
                return Err(bad("subset is decided by the implicit predicate"));
            }
            if !set.insert(e.clone()) {
                return Err(bad("duplicate edge"));
            }
        }
        Ok(Self { n, r, edges: set, implicit })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Stored edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = &[Vertex]> {
        self.edges.iter().map(Vec::as_slice)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn implicit(&self) -> Option<&Multipartite> {
        self.implicit.as_ref()
    }

    /// Membership without query accounting. `subset` must be sorted.
    pub fn is_edge(&self, subset: &[Vertex]) -> bool {
        if let Some(ans) = self.implicit.as_ref().and_then(|p| p.decide(subset)) {
            return ans;
        }
        self.edges.contains(subset)
    }

    /// Checks every face of `set` directly.
    pub fn is_simplex(&self, set: &[Vertex]) -> bool {
        let set = canonical(set);
        set.len() == self.r + 1 && faces(&set).all(|f| self.is_edge(&f))
    }

    /// Parses the text format: header `n r`, then one ascending edge per line.
    pub fn parse(text: &str) -> Result<Self, HypergraphError> {
        Self::parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), None, text.ends_with('\n'))
    }

    fn parse_lines<'a, I>(
        lines: I,
        mut header: Option<(usize, usize)>,
        trailing_newline: bool,
    ) -> Result<Self, HypergraphError>
    where
        I: IntoIterator<Item = (usize, &'a str)>,
    {
        let mut edges: BTreeSet<Vec<Vertex>> = BTreeSet::new();
        let mut last_line = 0;
        for (line, raw) in lines {
            last_line = line;
            let fmt_err = |msg: String| HypergraphError::Format { line, msg };
            if raw.starts_with('#') {
                continue;
            }
            let nums: Result<Vec<u64>, _> = raw.split_whitespace().map(str::parse::<u64>).collect();
            let nums = nums.map_err(|_| fmt_err(format!("expected integers, got {raw:?}")))?;
            match header {
                None => {
                    if nums.len() != 2 {
                        return Err(fmt_err("header must be \"n r\"".into()));
                    }
                    header = Some((nums[0] as usize, nums[1] as usize));
                }
                Some((n, r)) => {
                    if nums.len() != r {
                        return Err(fmt_err(format!("edge must list {r} vertices")));
                    }
                    if nums.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(fmt_err("edge vertices must be strictly ascending".into()));
                    }
                    if nums.iter().any(|&v| v == 0 || v as usize > n) {
                        return Err(fmt_err(format!("vertex outside 1..={n}")));
                    }
                    let e: Vec<Vertex> = nums.iter().map(|&v| v as Vertex).collect();
                    if edges.contains(&e) {
                        return Err(fmt_err("duplicate edge".into()));
                    }
                    edges.insert(e);
                }
            }
        }
        let (n, r) = header.ok_or(HypergraphError::Format { line: 1, msg: "missing header".into() })?;
        if r == 0 || r > n {
            return Err(HypergraphError::Format { line: 1, msg: format!("need 1 <= r <= n, got n={n} r={r}") });
        }
        if !trailing_newline {
            return Err(HypergraphError::Format { line: last_line, msg: "missing trailing newline".into() });
        }
        Self::new(n, r, edges).map_err(|e| HypergraphError::Format { line: last_line, msg: e.to_string() })
    }

    /// Inverse of [`Hypergraph::parse`]; stored edges only.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.r);
        for e in &self.edges {
            let parts: Vec<String> = e.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", parts.join(" "));
        }
        out
    }
}

/// Parses edge lines (no header) for a known `n` and `r`; used by the
/// multi-instance reader. `lines` carry their 1-based file line numbers.
pub fn parse_edge_block<'a, I>(n: usize, r: usize, lines: I) -> Result<Hypergraph, HypergraphError>
where
    I: IntoIterator<Item = (usize, &'a str)>,
{
    Hypergraph::parse_lines(lines, Some((n, r)), true)
}

/// Faces of a sorted set: the subsets omitting one element, in lexicographic
/// order (omit the last element first).
pub fn faces(set: &[Vertex]) -> impl Iterator<Item = Vec<Vertex>> + '_ {
    (0..set.len()).rev().map(move |skip| {
        set.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect()
    })
}

/// Advances `c` to the next `k`-subset of `1..=n` in lexicographic order.
pub fn next_combination(c: &mut [Vertex], n: usize) -> bool {
    let k = c.len();
    let n = n as Vertex;
    for i in (0..k).rev() {
        if c[i] < n - (k - 1 - i) as Vertex {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Hypergraph access that counts stored-edge lookups.
#[derive(Debug)]
pub struct OracleView<'a> {
    graph: &'a Hypergraph,
    queries: u64,
}

impl<'a> OracleView<'a> {
    pub fn new(graph: &'a Hypergraph) -> Self {
        Self { graph, queries: 0 }
    }

    pub fn graph(&self) -> &'a Hypergraph {
        self.graph
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    /// Implicitly decided subsets are free; everything else costs one query.
    pub fn query(&mut self, subset: &[Vertex]) -> bool {
        if let Some(ans) = self.graph.implicit.as_ref().and_then(|p| p.decide(subset)) {
            return ans;
        }
        self.queries += 1;
        self.graph.edges.contains(subset)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex {
    vertices: Vec<Vertex>,
}

impl Simplex {
    pub fn new(vertices: &[Vertex]) -> Self {
        Self { vertices: canonical(vertices) }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Scans `(r+1)`-subsets in lexicographic order, testing faces in order and
/// stopping at the first missing one.
pub fn find_simplex(view: &mut OracleView<'_>) -> Result<Option<Simplex>, HypergraphError> {
    let (n, r) = (view.graph.n, view.graph.r);
    if r + 1 > n {
        return Err(HypergraphError::Domain(format!("r+1 = {} exceeds n = {n}", r + 1)));
    }
    let mut c: Vec<Vertex> = (1..=(r + 1) as Vertex).collect();
    loop {
        if faces(&c).all(|f| view.query(&f)) {
            let s = Simplex::new(&c);
            debug_assert!(view.graph.is_simplex(s.vertices()));
            return Ok(Some(s));
        }
        if !next_combination(&mut c, n) {
            return Ok(None);
        }
    }
}

/// Every simplex of `g`, by backtracking over sorted vertex sets. A partial
/// set is extended only while all of its `r`-subsets through the newest
/// vertex are edges.
pub fn all_simplices(g: &Hypergraph) -> Vec<Simplex> {
    fn extend(g: &Hypergraph, cur: &mut Vec<Vertex>, out: &mut Vec<Simplex>) {
        if cur.len() == g.r + 1 {
            out.push(Simplex::new(cur));
            return;
        }
        let start = cur.last().map_or(1, |&v| v + 1);
        for v in start..=g.n as Vertex {
            cur.push(v);
            if cur.len() < g.r || closes_faces(g, cur) {
                extend(g, cur, out);
            }
            cur.pop();
        }
    }
    // All r-subsets of `cur` that contain its last vertex are edges.
    fn closes_faces(g: &Hypergraph, cur: &[Vertex]) -> bool {
        let (last, head) = cur.split_last().expect("nonempty");
        let k = g.r - 1;
        if k == 0 {
            return g.is_edge(&[*last]);
        }
        let mut idx: Vec<Vertex> = (1..=k as Vertex).collect();
        loop {
            let mut sub: Vec<Vertex> = idx.iter().map(|&i| head[i as usize - 1]).collect();
            sub.push(*last);
            if !g.is_edge(&sub) {
                return false;
            }
            if !next_combination(&mut idx, head.len()) {
                return true;
            }
        }
    }
    let mut out = Vec::new();
    if g.r < g.n {
        extend(g, &mut Vec::new(), &mut out);
    }
    out
}

/// Largest number of `r`-subsets [`planted_instance`] will enumerate.
pub const MAX_PLANT_SUBSETS: u64 = 5_000_000;

/// A random hypergraph containing a planted simplex on a random vertex set;
/// every other `r`-subset is present with probability `noise_density`.
pub fn planted_instance(
    n: usize,
    r: usize,
    noise_density: f64,
    seed: u64,
) -> Result<(Hypergraph, Simplex), HypergraphError> {
    if r == 0 || r + 1 > n {
        return Err(HypergraphError::Domain(format!("need 1 <= r and r+1 <= n, got n={n} r={r}")));
    }
    if !(0.0..=1.0).contains(&noise_density) {
        return Err(HypergraphError::Domain(format!("noise density {noise_density} outside [0, 1]")));
    }
    let count = binomial(n as u64, r as u64);
    if count > MAX_PLANT_SUBSETS.into() {
        return Err(HypergraphError::Domain(format!("C({n},{r}) = {count} subsets is too many")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = Simplex::new(&rand::seq::index::sample(&mut rng, n, r + 1)
        .into_iter()
        .map(|i| i as Vertex + 1)
        .collect::<Vec<_>>());
    let planted_faces: BTreeSet<Vec<Vertex>> = faces(planted.vertices()).collect();
    let mut edges = Vec::new();
    let mut c: Vec<Vertex> = (1..=r as Vertex).collect();
    loop {
        // Draw for every subset so the noise stream does not depend on the plant.
        let keep = rng.gen_bool(noise_density);
        if keep || planted_faces.contains(&c) {
            edges.push(c.clone());
        }
        if !next_combination(&mut c, n) {
            break;
        }
    }
    Ok((Hypergraph::new(n, r, edges)?, planted))
}

/// Exponents `(r/2, (r+1)/2)` of the elementary lower and upper bounds on
/// the query complexity of detecting an `r`-simplex.
pub fn trivial_exponents(r: u32) -> Result<(Q, Q), HypergraphError> {
    if r == 0 {
        return Err(HypergraphError::Domain("rank must be at least 1".into()));
    }
    Ok((frac(r as i64, 2), frac(r as i64 + 1, 2)))
}

/// Upper bound on the queries made by [`find_simplex`].
pub fn max_find_queries(n: usize, r: usize) -> u64 {
    let c: u64 = binomial(n as u64, r as u64 + 1).try_into().unwrap_or(u64::MAX);
    c.saturating_mul(r as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, r: usize, edges: &[&[Vertex]]) -> Hypergraph {
        Hypergraph::new(n, r, edges.iter().copied()).unwrap()
    }

    #[test]
    fn triangle_is_found() {
        let g = graph(3, 2, &[&[1, 2], &[1, 3], &[2, 3]]);
        let mut view = OracleView::new(&g);
        let s = find_simplex(&mut view).unwrap().unwrap();
        assert_eq!(s.vertices(), &[1, 2, 3]);
        assert_eq!(view.query_count(), 3);
    }

    #[test]
    fn empty_graph_has_no_simplex() {
        let g = graph(6, 3, &[]);
        let mut view = OracleView::new(&g);
        assert!(find_simplex(&mut view).unwrap().is_none());
        assert!(view.query_count() <= max_find_queries(6, 3));
    }

    #[test]
    fn rank_one_pairs_of_ones() {
        // Indicator string 1010: the first pair of ones is {1,3}.
        let g = graph(4, 1, &[&[1], &[3]]);
        let s = find_simplex(&mut OracleView::new(&g)).unwrap().unwrap();
        assert_eq!(s.vertices(), &[1, 3]);
    }

    #[test]
    fn rejects_rank_too_large_for_search() {
        let g = graph(3, 3, &[]);
        assert!(matches!(find_simplex(&mut OracleView::new(&g)), Err(HypergraphError::Domain(_))));
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(Hypergraph::new(4, 2, [[1u32, 1]]).is_err());
        assert!(Hypergraph::new(4, 2, [vec![1u32]]).is_err());
        assert!(Hypergraph::new(4, 2, [[1u32, 5]]).is_err());
        assert!(Hypergraph::new(4, 2, [[1u32, 2], [2, 1]]).is_err());
    }

    #[test]
    fn implicit_edges_are_free() {
        let p = Multipartite::new(4, &[vec![1, 2], vec![3, 4]]);
        let g = Hypergraph::with_implicit(4, 2, Vec::<Vec<Vertex>>::new(), Some(p)).unwrap();
        let mut view = OracleView::new(&g);
        assert!(view.query(&[1, 3]));
        assert!(!view.query(&[1, 2]));
        assert_eq!(view.query_count(), 0);
    }

    #[test]
    fn stored_edges_may_not_overlap_implicit_domain() {
        let p = Multipartite::new(4, &[vec![1, 2], vec![3, 4]]);
        assert!(Hypergraph::with_implicit(4, 2, [[1u32, 3]], Some(p)).is_err());
    }

    #[test]
    fn planted_instances() {
        let (g, s) = planted_instance(5, 2, 0.0, 3).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_simplex(s.vertices()));
        let (g, s) = planted_instance(6, 3, 0.0, 1).unwrap();
        assert_eq!(g.edge_count(), 4);
        let found = find_simplex(&mut OracleView::new(&g)).unwrap().unwrap();
        assert_eq!(found, s);
        let (g, _) = planted_instance(5, 2, 1.0, 9).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!(find_simplex(&mut OracleView::new(&g)).unwrap().is_some());
        assert_eq!(planted_instance(7, 3, 0.3, 42).unwrap(), planted_instance(7, 3, 0.3, 42).unwrap());
        assert!(planted_instance(3, 3, 0.1, 0).is_err());
        assert!(planted_instance(5, 2, 1.5, 0).is_err());
    }

    #[test]
    fn trivial_bounds() {
        assert_eq!(trivial_exponents(2).unwrap(), (frac(1, 1), frac(3, 2)));
        assert_eq!(trivial_exponents(4).unwrap(), (frac(2, 1), frac(5, 2)));
        assert_eq!(trivial_exponents(1).unwrap(), (frac(1, 2), frac(1, 1)));
        assert!(trivial_exponents(0).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let text = "# a triangle\n3 2\n1 2\n1 3\n2 3\n";
        let g = Hypergraph::parse(text).unwrap();
        assert_eq!(g.to_text(), "3 2\n1 2\n1 3\n2 3\n");
        assert_eq!(Hypergraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn text_format_errors_name_the_line() {
        let e = Hypergraph::parse("3 2\n1 2\n2 1\n").unwrap_err();
        assert_eq!(e, HypergraphError::Format { line: 3, msg: "edge vertices must be strictly ascending".into() });
        assert!(matches!(Hypergraph::parse("3 2\n1 x\n"), Err(HypergraphError::Format { line: 2, .. })));
        assert!(matches!(Hypergraph::parse("3 2\n1 2"), Err(HypergraphError::Format { .. })));
        assert!(matches!(Hypergraph::parse("3 2\n1 2 3\n"), Err(HypergraphError::Format { line: 2, .. })));
    }

    #[test]
    fn combination_order() {
        let mut c = vec![1, 2];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen, vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
    }

    #[test]
    fn backtracking_finds_every_simplex() {
        let g = graph(4, 2, &[&[1, 2], &[1, 3], &[2, 3], &[1, 4], &[2, 4]]);
        let all = all_simplices(&g);
        assert_eq!(all, vec![Simplex::new(&[1, 2, 3]), Simplex::new(&[1, 2, 4])]);
    }
}
