//! Sampled walk states of the 4-simplex algorithm at desk scale.
//!
//! Only slot indices matter for the sizes of the derived sets, so level `i`
//! is the slot range `0..k_i` with `k_i = ⌊n^{a_i}⌋`. A pair level picks
//! indices into the grid `A_i × A_j` (index `t` is slot pair
//! `(t / k_j, t mod k_j)`), and a triple level picks indices into
//! `[⌊11·n^{m_ijk}⌋]` that select entries of `Γ_ijk` listed in
//! lexicographic slot order.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;

use super::ConcError;
use crate::lp::ParamSet;
use crate::rational::to_f64;
use crate::seeds::stream_rng;

/// Sorted index tuples of `{0,..,4}` of size `k`, lexicographic.
pub fn tuples(k: usize) -> Vec<Vec<usize>> {
    crate::lp::subsets(k).into_iter().map(|s| s.into_iter().map(|v| v - 1).collect()).collect()
}

/// 1-based digits, as in parameter names.
pub fn level_name(levels: &[usize]) -> String {
    levels.iter().map(|v| (v + 1).to_string()).collect()
}

fn sorted<const N: usize>(mut v: [usize; N]) -> [usize; N] {
    v.sort_unstable();
    v
}

/// Parameter exponents as floats.
#[derive(Clone, Debug)]
pub struct Exponents {
    values: HashMap<Vec<usize>, f64>,
}

impl Exponents {
    pub fn from_params(p: &ParamSet) -> Self {
        let mut values = HashMap::new();
        for k in 1..=4 {
            for t in tuples(k) {
                let one_based: Vec<usize> = t.iter().map(|v| v + 1).collect();
                values.insert(t, to_f64(p.get(&crate::lp::param_name(&one_based))));
            }
        }
        Self { values }
    }

    /// Exponent of a sorted 0-based index tuple.
    pub fn get(&self, set: &[usize]) -> f64 {
        self.values[set]
    }

    pub fn set(&mut self, set: &[usize], value: f64) {
        self.values.insert(set.to_vec(), value);
    }

    pub fn m3(&self, t: [usize; 3]) -> f64 {
        let [i, j, k] = sorted(t);
        self.get(&[i, j]) + self.get(&[i, k]) + self.get(&[j, k]) - self.get(&[i]) - self.get(&[j]) - self.get(&[k])
    }

    pub fn m4(&self, q: [usize; 4]) -> f64 {
        let mut e = 0.0;
        for t in tuples(3).into_iter().filter(|t| t.iter().all(|v| q.contains(v))) {
            e += self.get(&t);
        }
        for p in tuples(2).into_iter().filter(|p| p.iter().all(|v| q.contains(v))) {
            e -= self.get(&p);
        }
        e + q.iter().map(|&v| self.get(&[v])).sum::<f64>()
    }
}

/// `⌊n^e⌋`, at least 1.
pub fn scaled(n: usize, e: f64) -> usize {
    ((n as f64).powf(e) + 1e-9).floor().max(1.0) as usize
}

fn pow(n: usize, e: f64) -> f64 {
    (n as f64).powf(e)
}

/// Level sizes at one `n`.
#[derive(Clone, Debug)]
pub struct Sizes {
    pub n: usize,
    pub k: [usize; 5],
    pub pair: HashMap<[usize; 2], usize>,
    pub triple_universe: HashMap<[usize; 3], usize>,
    pub triple: HashMap<[usize; 3], usize>,
}

impl Sizes {
    pub fn new(n: usize, e: &Exponents) -> Self {
        let mut k = [0usize; 5];
        for (i, slot) in k.iter_mut().enumerate() {
            *slot = scaled(n, e.get(&[i]));
        }
        let mut pair = HashMap::new();
        for p in tuples(2) {
            let [i, j] = [p[0], p[1]];
            pair.insert([i, j], scaled(n, e.get(&p)).min(k[i] * k[j]));
        }
        let mut triple_universe = HashMap::new();
        let mut triple = HashMap::new();
        for t in tuples(3) {
            let t3 = [t[0], t[1], t[2]];
            let u = ((11.0 * pow(n, e.m3(t3))) + 1e-9).floor().max(1.0) as usize;
            triple_universe.insert(t3, u);
            triple.insert(t3, scaled(n, e.get(&t)).min(u));
        }
        Self { n, k, pair, triple_universe, triple }
    }
}

/// Which levels to sample, and an optional unfinished level for loads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scope {
    pub levels: Vec<usize>,
    /// Vertex level whose last slot is still a star.
    pub star: Option<usize>,
    /// Pair level holding one index fewer than its size.
    pub short_pair: Option<[usize; 2]>,
}

impl Scope {
    pub fn full() -> Self {
        Self { levels: (0..5).collect(), star: None, short_pair: None }
    }

    pub fn quad(q: [usize; 4]) -> Self {
        Self { levels: q.to_vec(), star: None, short_pair: None }
    }
}

#[derive(Clone, Debug)]
pub struct PairLevel {
    pub levels: [usize; 2],
    pub dims: [usize; 2],
    /// Chosen grid indices, sorted.
    pub chosen: Vec<u32>,
    present: Vec<bool>,
    pub fwd: Vec<Vec<u32>>,
    pub back: Vec<Vec<u32>>,
}

impl PairLevel {
    pub fn has(&self, x: u32, y: u32) -> bool {
        self.present[x as usize * self.dims[1] + y as usize]
    }

    /// Neighbours of slot `s` of vertex level `level`.
    pub fn neighbours(&self, level: usize, s: u32) -> &[u32] {
        if level == self.levels[0] {
            &self.fwd[s as usize]
        } else {
            &self.back[s as usize]
        }
    }

    pub fn len(&self) -> usize {
        self.fwd.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot pair of a grid index.
    pub fn slots(&self, t: u32) -> (u32, u32) {
        let w = self.dims[1] as u32;
        (t / w, t % w)
    }
}

#[derive(Clone, Debug)]
pub struct TripleLevel {
    pub levels: [usize; 3],
    pub universe: usize,
    chosen: Vec<u64>,
    pub gamma_len: usize,
    members: HashSet<[u32; 3]>,
    by_omit: [HashMap<[u32; 2], Vec<u32>>; 3],
}

impl TripleLevel {
    pub fn is_chosen(&self, idx: usize) -> bool {
        idx < self.universe && self.chosen[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn has(&self, t: [u32; 3]) -> bool {
        self.members.contains(&t)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = &[u32; 3]> {
        self.members.iter()
    }

    /// Values of coordinate `omit` completing the other two to a member.
    pub fn completions(&self, omit: usize, key: [u32; 2]) -> &[u32] {
        self.by_omit[omit].get(&key).map_or(&[], Vec::as_slice)
    }

    /// Largest number of completions over all keys.
    pub fn max_completions(&self, omit: usize) -> usize {
        self.by_omit[omit].values().map(Vec::len).max().unwrap_or(0)
    }

    fn insert(&mut self, t: [u32; 3]) {
        self.members.insert(t);
        for omit in 0..3 {
            let key = match omit {
                0 => [t[1], t[2]],
                1 => [t[0], t[2]],
                _ => [t[0], t[1]],
            };
            self.by_omit[omit].entry(key).or_default().push(t[omit]);
        }
    }
}

fn intersect_sorted(a: &[u32], b: &[u32], mut f: impl FnMut(u32)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// One sampled state.
#[derive(Clone, Debug)]
pub struct NestedState {
    pub sizes: Sizes,
    pub scope: Scope,
    pub pairs: HashMap<[usize; 2], PairLevel>,
    pub triples: HashMap<[usize; 3], TripleLevel>,
}

/// Upper limit on the total number of grid cells and triple indices.
pub const STATE_LIMIT: usize = 80_000_000;

impl NestedState {
    pub fn pair(&self, p: [usize; 2]) -> &PairLevel {
        &self.pairs[&sorted(p)]
    }

    pub fn triple(&self, t: [usize; 3]) -> &TripleLevel {
        &self.triples[&sorted(t)]
    }

    /// Whether a slot holds an element (the star slot of a load does not).
    pub fn active(&self, level: usize, slot: u32) -> bool {
        self.scope.star != Some(level) || (slot as usize) + 1 < self.sizes.k[level]
    }

    /// Triples of `Γ_T` in lexicographic slot order.
    pub fn gamma(&self, t: [usize; 3], mut f: impl FnMut([u32; 3])) {
        let [x, y, z] = t;
        let (pxy, pxz, pyz) = (self.pair([x, y]), self.pair([x, z]), self.pair([y, z]));
        for px in 0..self.sizes.k[x] as u32 {
            for &py in &pxy.fwd[px as usize] {
                intersect_sorted(&pxz.fwd[px as usize], &pyz.fwd[py as usize], |pz| f([px, py, pz]));
            }
        }
    }

    /// `|Γ_q|`: quadruples all of whose triples are selected.
    pub fn gamma_quad(&self, q: [usize; 4]) -> usize {
        let [w, x, y, z] = q;
        let (t_wxy, t_wxz, t_wyz, t_xyz) =
            (self.triple([w, x, y]), self.triple([w, x, z]), self.triple([w, y, z]), self.triple([x, y, z]));
        let mut count = 0;
        for &[pw, px, py] in t_wxy.members() {
            for &pz in t_wxz.completions(2, [pw, px]) {
                if t_wyz.has([pw, py, pz]) && t_xyz.has([px, py, pz]) {
                    count += 1;
                }
            }
        }
        count
    }
}

fn check_size(sizes: &Sizes, scope: &Scope) -> Result<(), ConcError> {
    let mut total = 0usize;
    for p in tuples(2) {
        if p.iter().all(|v| scope.levels.contains(v)) {
            total += sizes.k[p[0]] * sizes.k[p[1]];
        }
    }
    for t in tuples(3) {
        if t.iter().all(|v| scope.levels.contains(v)) {
            total += sizes.triple_universe[&[t[0], t[1], t[2]]];
        }
    }
    if total > STATE_LIMIT {
        return Err(ConcError::TooLarge(format!("n={} needs {total} cells (limit {STATE_LIMIT})", sizes.n)));
    }
    Ok(())
}

/// Samples every pair and triple level among `scope.levels`.
pub fn sample_state<R: Rng + ?Sized>(
    n: usize,
    e: &Exponents,
    scope: &Scope,
    rng: &mut R,
) -> Result<NestedState, ConcError> {
    let sizes = Sizes::new(n, e);
    check_size(&sizes, scope)?;
    let mut state = NestedState { sizes, scope: scope.clone(), pairs: HashMap::new(), triples: HashMap::new() };
    for p in tuples(2) {
        if !p.iter().all(|v| scope.levels.contains(v)) {
            continue;
        }
        let (i, j) = (p[0], p[1]);
        let dims = [state.sizes.k[i], state.sizes.k[j]];
        let universe = dims[0] * dims[1];
        let mut size = state.sizes.pair[&[i, j]];
        if scope.short_pair == Some([i, j]) {
            size = size.saturating_sub(1);
        }
        let mut chosen: Vec<u32> = sample(rng, universe, size).into_iter().map(|t| t as u32).collect();
        chosen.sort_unstable();
        let mut present = vec![false; universe];
        let mut fwd = vec![Vec::new(); dims[0]];
        let mut back = vec![Vec::new(); dims[1]];
        for &t in &chosen {
            let (x, y) = (t / dims[1] as u32, t % dims[1] as u32);
            if state.active(i, x) && state.active(j, y) {
                present[t as usize] = true;
                fwd[x as usize].push(y);
                back[y as usize].push(x);
            }
        }
        // `chosen` is sorted, so `fwd` lists are sorted; `back` lists too,
        // since x increases along the sorted indices.
        state.pairs.insert([i, j], PairLevel { levels: [i, j], dims, chosen, present, fwd, back });
    }
    for t in tuples(3) {
        if !t.iter().all(|v| scope.levels.contains(v)) {
            continue;
        }
        let t3 = [t[0], t[1], t[2]];
        let universe = state.sizes.triple_universe[&t3];
        let size = state.sizes.triple[&t3];
        let mut chosen = vec![0u64; universe.div_ceil(64)];
        for idx in sample(rng, universe, size) {
            chosen[idx / 64] |= 1 << (idx % 64);
        }
        let mut level = TripleLevel {
            levels: t3,
            universe,
            chosen,
            gamma_len: 0,
            members: HashSet::new(),
            by_omit: Default::default(),
        };
        let mut selected = Vec::new();
        let mut idx = 0usize;
        state.gamma(t3, |tr| {
            if level.is_chosen(idx) {
                selected.push(tr);
            }
            idx += 1;
        });
        level.gamma_len = idx;
        for tr in selected {
            level.insert(tr);
        }
        state.triples.insert(t3, level);
    }
    Ok(state)
}

/// Result of one condition on one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub name: String,
    pub violated: bool,
}

/// Values of a triple's coordinates taken from a level-to-slot lookup.
fn key3(levels: [usize; 3], val: impl Fn(usize) -> u32) -> [u32; 3] {
    [val(levels[0]), val(levels[1]), val(levels[2])]
}

/// Degree windows and caps for every pair and triple level, in nesting order.
pub fn conditions(state: &NestedState, e: &Exponents) -> Vec<Outcome> {
    let n = state.sizes.n;
    let k = state.sizes.k;
    let mut out = Vec::new();
    for p in tuples(2) {
        let (i, j) = (p[0], p[1]);
        let pl = state.pair([i, j]);
        let b = e.get(&p);
        let window = |deg: usize, a: f64| {
            let centre = pow(n, b - a);
            (deg as f64) < centre / 2.0 || (deg as f64) > 2.0 * centre
        };
        let name = level_name(&p);
        out.push(Outcome { name: format!("B{name}.2"), violated: pl.fwd.iter().any(|l| window(l.len(), e.get(&[i]))) });
        out.push(Outcome { name: format!("B{name}.3"), violated: pl.back.iter().any(|l| window(l.len(), e.get(&[j]))) });
        let others: Vec<usize> = (0..j).filter(|&x| x != i).collect();
        if others.is_empty() {
            continue;
        }
        let mut violated = false;
        for &x in &others {
            let cap = 11.0 * pow(n, e.m3([i, j, x]) - e.get(&sorted([j, x])));
            let pix = state.pair([i, x]);
            let mut counts = vec![0u32; k[j] * k[x]];
            for pi in 0..k[i] as u32 {
                for &pj in &pl.fwd[pi as usize] {
                    for &px in pix.neighbours(i, pi) {
                        counts[pj as usize * k[x] + px as usize] += 1;
                    }
                }
            }
            if counts.iter().any(|&c| c as f64 > cap) {
                violated = true;
            }
        }
        out.push(Outcome { name: format!("B{name}.4"), violated });
    }
    for t in tuples(3) {
        let t3 = [t[0], t[1], t[2]];
        let [i, j, kk] = t3;
        let tl = state.triple(t3);
        let c = e.get(&t);
        let name = level_name(&t);
        for (cond, omit, pair) in [(2, 0, [j, kk]), (3, 1, [i, kk]), (4, 2, [i, j])] {
            let cap = pow(n, c - e.get(&pair)) / 6.0;
            out.push(Outcome { name: format!("C{name}.{cond}"), violated: tl.max_completions(omit) as f64 > cap });
        }
        let extras: Vec<usize> = (0..j).filter(|&l| l != i).collect();
        if extras.is_empty() {
            continue;
        }
        let mut violated = false;
        for &l in &extras {
            let (t1, t2) = (sorted([i, j, l]), sorted([i, kk, l]));
            let (v1, v2) = (state.triple(t1), state.triple(t2));
            let omit = t1.iter().position(|&x| x == l).unwrap();
            let cap = pow(n, e.m4(sorted([i, j, kk, l])) - e.get(&sorted([j, kk, l]))) / 11.0;
            let mut counts: HashMap<[u32; 3], u32> = HashMap::new();
            for &[pi, pj, pk] in tl.members() {
                let rest: Vec<usize> = t1.iter().copied().filter(|&x| x != l).collect();
                let key = [if rest[0] == i { pi } else { pj }, if rest[1] == i { pi } else { pj }];
                for &pl in v1.completions(omit, key) {
                    let val = |lev: usize| match lev {
                        x if x == i => pi,
                        x if x == kk => pk,
                        _ => pl,
                    };
                    if v2.has(key3(t2, val)) {
                        *counts.entry([pj, pk, pl]).or_default() += 1;
                    }
                }
            }
            if counts.values().any(|&c| c as f64 > cap) {
                violated = true;
            }
        }
        out.push(Outcome { name: format!("C{name}.5"), violated });
    }
    out
}

/// Cap checks on one state: `(name, applicable, holds)`.
pub fn caps(state: &NestedState, e: &Exponents, outcomes: &[Outcome]) -> Vec<(String, bool, bool)> {
    let n = state.sizes.n;
    let ok = |prefix: String| outcomes.iter().filter(|o| o.name.starts_with(&prefix)).all(|o| !o.violated);
    let mut out = Vec::new();
    for t in tuples(3) {
        let t3 = [t[0], t[1], t[2]];
        let marked = tuples(2).iter().filter(|p| p.iter().all(|v| t.contains(v))).all(|p| ok(format!("B{}.", level_name(p))));
        let holds = state.triple(t3).gamma_len as f64 <= 11.0 * pow(n, e.m3(t3));
        out.push((format!("G{}", level_name(&t)), marked, holds));
    }
    for q in tuples(4) {
        let q4 = [q[0], q[1], q[2], q[3]];
        let marked = tuples(2).iter().filter(|p| p.iter().all(|v| q.contains(v))).all(|p| ok(format!("B{}.", level_name(p))))
            && tuples(3).iter().filter(|t| t.iter().all(|v| q.contains(v))).all(|t| ok(format!("C{}.", level_name(t))));
        let holds = state.gamma_quad(q4) as f64 <= pow(n, e.m4(q4)) / 11.0;
        out.push((format!("G{}", level_name(&q)), marked, holds));
    }
    out
}

/// Per-condition violation rates across a grid of `n`.
#[derive(Clone, Debug, Default)]
pub struct ViolationReport {
    pub trials: usize,
    /// `(n, condition, violations)`.
    pub counts: Vec<(usize, String, usize)>,
    /// `(n, cap, marked samples, failures)`.
    pub caps: Vec<(usize, String, usize, usize)>,
}

impl ViolationReport {
    pub fn rate(&self, violations: usize) -> (f64, f64) {
        let r = violations as f64 / self.trials as f64;
        (r, (r * (1.0 - r) / self.trials as f64).sqrt())
    }

    pub fn conditions(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for (_, c, _) in &self.counts {
            if !names.contains(c) {
                names.push(c.clone());
            }
        }
        names
    }

    fn series(&self, condition: &str) -> Vec<(usize, f64, f64)> {
        self.counts
            .iter()
            .filter(|(_, c, _)| c == condition)
            .map(|&(n, _, v)| {
                let (r, s) = self.rate(v);
                (n, r, s)
            })
            .collect()
    }

    /// Whether each rate is at most the previous one plus `sigmas` combined
    /// standard errors (`sigmas = 0` is the plain comparison).
    pub fn nonincreasing(&self, condition: &str, sigmas: f64) -> bool {
        self.series(condition)
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 + sigmas * (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt())
    }

    pub fn cap_failures(&self) -> usize {
        self.caps.iter().map(|c| c.3).sum()
    }

    /// Rows `n condition rate stderr`, then `cap` rows
    /// `n cap:<name> marked failures` and `check` rows
    /// `check <condition> nonincreasing yes|no` (3σ allowance).
    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.trials == 0 {
            return out;
        }
        for (n, c, v) in &self.counts {
            let (r, s) = self.rate(*v);
            let _ = writeln!(out, "{n}\t{c}\t{r:.6}\t{s:.6}");
        }
        for (n, name, marked, failures) in &self.caps {
            let _ = writeln!(out, "{n}\tcap:{name}\t{marked}\t{failures}");
        }
        for c in self.conditions() {
            let _ = writeln!(out, "check\t{c}\tnonincreasing\t{}", if self.nonincreasing(&c, 3.0) { "yes" } else { "no" });
        }
        out
    }
}

/// Samples `trials` full states per `n`; trial `t` at size `n` uses stream
/// `(n << 32) | t` of `seed`.
pub fn violation_rate(grid: &[usize], e: &Exponents, trials: usize, seed: u64) -> Result<ViolationReport, ConcError> {
    let mut report = ViolationReport { trials, ..Default::default() };
    if trials == 0 {
        return Ok(report);
    }
    for &n in grid {
        let mut counts: Vec<(String, usize)> = Vec::new();
        let mut cap_counts: Vec<(String, usize, usize)> = Vec::new();
        for trial in 0..trials {
            let mut rng = stream_rng(seed, ((n as u64) << 32) | trial as u64);
            let state = sample_state(n, e, &Scope::full(), &mut rng)?;
            let outcomes = conditions(&state, e);
            if counts.is_empty() {
                counts = outcomes.iter().map(|o| (o.name.clone(), 0)).collect();
            }
            for (slot, o) in counts.iter_mut().zip(&outcomes) {
                slot.1 += o.violated as usize;
            }
            let cs = caps(&state, e, &outcomes);
            if cap_counts.is_empty() {
                cap_counts = cs.iter().map(|c| (c.0.clone(), 0, 0)).collect();
            }
            for (slot, (_, marked, holds)) in cap_counts.iter_mut().zip(cs) {
                if marked {
                    slot.1 += 1;
                    slot.2 += !holds as usize;
                }
            }
        }
        report.counts.extend(counts.into_iter().map(|(c, v)| (n, c, v)));
        report.caps.extend(cap_counts.into_iter().map(|(c, m, f)| (n, c, m, f)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn published() -> Exponents {
        Exponents::from_params(&ParamSet::published())
    }

    #[test]
    fn full_density_state() {
        let mut e = published();
        for i in 0..5 {
            e.set(&[i], 1.0);
        }
        for p in tuples(2) {
            e.set(&p, 2.0);
        }
        let n = 6;
        let state = sample_state(n, &e, &Scope::full(), &mut stream_rng(1, 0)).unwrap();
        for p in tuples(2) {
            assert_eq!(state.pair([p[0], p[1]]).len(), n * n);
        }
        for t in tuples(3) {
            assert_eq!(state.triple([t[0], t[1], t[2]]).gamma_len, n * n * n);
        }
    }

    #[test]
    fn sparse_pairs_leave_gamma_empty() {
        let mut e = published();
        for p in tuples(2) {
            e.set(&p, 0.0);
        }
        let state = sample_state(256, &e, &Scope::full(), &mut stream_rng(2, 0)).unwrap();
        for p in tuples(2) {
            assert_eq!(state.pair([p[0], p[1]]).len(), 1);
        }
        let total: usize = tuples(3).iter().map(|t| state.triple([t[0], t[1], t[2]]).gamma_len).sum();
        assert!(total <= 1);
    }

    #[test]
    fn seeded_repeat_is_identical() {
        let e = published();
        let a = sample_state(64, &e, &Scope::full(), &mut stream_rng(5, 9)).unwrap();
        let b = sample_state(64, &e, &Scope::full(), &mut stream_rng(5, 9)).unwrap();
        for p in tuples(2) {
            assert_eq!(a.pair([p[0], p[1]]).chosen, b.pair([p[0], p[1]]).chosen);
        }
        for t in tuples(3) {
            let t3 = [t[0], t[1], t[2]];
            assert_eq!(a.triple(t3).gamma_len, b.triple(t3).gamma_len);
            assert_eq!(a.triple(t3).len(), b.triple(t3).len());
        }
        assert_eq!(conditions(&a, &e), conditions(&b, &e));
    }

    /// Γ recomputed from the definitions by brute force over all slot triples.
    #[test]
    fn gamma_matches_brute_force() {
        let e = published();
        let state = sample_state(64, &e, &Scope::full(), &mut stream_rng(3, 1)).unwrap();
        for t in [[0, 1, 2], [1, 3, 4]] {
            let [x, y, z] = t;
            let k = state.sizes.k;
            let mut brute = Vec::new();
            for a in 0..k[x] as u32 {
                for b in 0..k[y] as u32 {
                    for c in 0..k[z] as u32 {
                        if state.pair([x, y]).has(a, b) && state.pair([x, z]).has(a, c) && state.pair([y, z]).has(b, c) {
                            brute.push([a, b, c]);
                        }
                    }
                }
            }
            let mut listed = Vec::new();
            state.gamma(t, |tr| listed.push(tr));
            assert_eq!(listed, brute);
            let tl = state.triple(t);
            let selected: Vec<[u32; 3]> =
                brute.iter().enumerate().filter(|(s, _)| tl.is_chosen(*s)).map(|(_, tr)| *tr).collect();
            assert_eq!(selected.len(), tl.len());
            assert!(selected.iter().all(|tr| tl.has(*tr)));
        }
        let q = [0, 1, 2, 3];
        let k = state.sizes.k;
        let mut brute = 0;
        for a in 0..k[0] as u32 {
            for b in 0..k[1] as u32 {
                for c in 0..k[2] as u32 {
                    if !state.triple([0, 1, 2]).has([a, b, c]) {
                        continue;
                    }
                    for d in 0..k[3] as u32 {
                        if state.triple([0, 1, 3]).has([a, b, d])
                            && state.triple([0, 2, 3]).has([a, c, d])
                            && state.triple([1, 2, 3]).has([b, c, d])
                        {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(state.gamma_quad(q), brute);
    }

    #[test]
    fn caps_hold_on_marked_samples() {
        let e = published();
        let report = violation_rate(&[64], &e, 20, 11).unwrap();
        assert_eq!(report.cap_failures(), 0);
        assert!(report.render().lines().count() > 40);
    }

    #[test]
    fn zero_trials_is_empty() {
        let report = violation_rate(&[64, 128], &published(), 0, 0).unwrap();
        assert!(report.render().is_empty());
    }

    #[test]
    fn degenerate_window_fails_often() {
        let mut p = ParamSet::published();
        p.set("b_34", parse_rational("0.82609").unwrap());
        let e = Exponents::from_params(&p);
        let report = violation_rate(&[64, 128], &e, 30, 4).unwrap();
        for (_, c, v) in &report.counts {
            if c == "B34.2" {
                assert!(*v >= 25, "{c}: {v}");
            }
        }
    }

    #[test]
    fn size_guard() {
        let e = published();
        assert!(matches!(sample_state(1 << 14, &e, &Scope::full(), &mut stream_rng(0, 0)), Err(ConcError::TooLarge(_))));
    }
}
