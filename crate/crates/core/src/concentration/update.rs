//! Size of `Γ′_q − Γ_q` when one element is loaded into a level of the
//! quadruple `q`, and log–log slopes of its mean across `n`.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;

use super::state::{level_name, sample_state, Exponents, NestedState, Scope};
use super::{mean_stderr, ols_slope, ConcError};
use crate::seeds::stream_rng;

/// Candidate loads averaged per sampled state for pair and triple loads.
pub const CANDIDATES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Load {
    Vertex(usize),
    Pair([usize; 2]),
    Triple([usize; 3]),
}

impl Load {
    pub fn levels(&self) -> Vec<usize> {
        let mut v = match self {
            Load::Vertex(i) => vec![*i],
            Load::Pair(p) => p.to_vec(),
            Load::Triple(t) => t.to_vec(),
        };
        v.sort_unstable();
        v
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Load::Vertex(_) => "vertex",
            Load::Pair(_) => "pair",
            Load::Triple(_) => "triple",
        }
    }

    /// `"a_1"`, `"b_12"` or `"c_123"` style label.
    pub fn name(&self) -> String {
        let prefix = ["a", "b", "c"][self.levels().len() - 1];
        format!("{prefix}_{}", level_name(&self.levels()))
    }

    /// The load for `kind` on the leading levels of `q`.
    pub fn leading(kind: &str, q: [usize; 4]) -> Result<Self, ConcError> {
        match kind {
            "vertex" => Ok(Load::Vertex(q[0])),
            "pair" => Ok(Load::Pair([q[0], q[1]])),
            "triple" => Ok(Load::Triple([q[0], q[1], q[2]])),
            other => Err(ConcError::Load(format!("unknown level kind {other:?}"))),
        }
    }
}

/// Mean `|Γ′_q − Γ_q|` per `n` and the fitted slope.
#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub load: Load,
    pub quad: [usize; 4],
    /// `(n, mean, stderr)`.
    pub points: Vec<(usize, f64, f64)>,
    pub predicted: f64,
    pub fitted: f64,
}

impl ScalingReport {
    pub fn residual(&self) -> f64 {
        self.fitted - self.predicted
    }

    /// Rows `n mean stderr` as comments, then `level predicted fitted residual`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (n, m, s) in &self.points {
            let _ = writeln!(out, "# {n}\t{m:.6e}\t{s:.6e}");
        }
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:+.4}",
            self.load.name(),
            self.predicted,
            self.fitted,
            self.residual()
        );
        out
    }
}

fn check_load(load: &Load, q: [usize; 4]) -> Result<(), ConcError> {
    let levels = load.levels();
    if levels.iter().any(|v| !q.contains(v)) || levels.windows(2).any(|w| w[0] == w[1]) {
        return Err(ConcError::Load(format!("{} is not inside quadruple {}", load.name(), level_name(&q))));
    }
    if q.iter().any(|&v| v > 4) || q.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConcError::Load(format!("bad quadruple {q:?}")));
    }
    Ok(())
}

/// The levels of `q` outside `inside`, in order.
fn rest(q: [usize; 4], inside: &[usize]) -> Vec<usize> {
    q.iter().copied().filter(|v| !inside.contains(v)).collect()
}

fn sorted3(t: [usize; 3]) -> [usize; 3] {
    let mut t = t;
    t.sort_unstable();
    t
}


/// Completions of `free` in triple level `t` given slots for its other two levels.
fn complete<'a>(state: &'a NestedState, t: [usize; 3], free: usize, slot: impl Fn(usize) -> u32) -> &'a [u32] {
    let t = sorted3(t);
    let omit = t.iter().position(|&l| l == free).expect("free level in triple");
    let others: Vec<u32> = t.iter().filter(|&&l| l != free).map(|&l| slot(l)).collect();
    state.triple(t).completions(omit, [others[0], others[1]])
}

fn has(state: &NestedState, t: [usize; 3], slot: impl Fn(usize) -> u32) -> bool {
    let t = sorted3(t);
    state.triple(t).has(t.map(slot))
}

/// Slots of level `other` paired with slot `s` of level `v` among the chosen
/// grid indices of `{v, other}`, sorted.
fn chosen_neighbours(state: &NestedState, v: usize, s: u32, other: usize) -> Vec<u32> {
    let pl = state.pair([v.min(other), v.max(other)]);
    pl.chosen
        .iter()
        .map(|&t| pl.slots(t))
        .filter_map(|(x, y)| if v < other { (x == s).then_some(y) } else { (y == s).then_some(x) })
        .collect()
}

/// Appended `Γ_t` entries at positions `gamma_len, gamma_len + 1, ..` that
/// the chosen index set of `t` selects.
fn selected_appended(state: &NestedState, t: [usize; 3], appended: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let tl = state.triple(sorted3(t));
    appended.into_iter().enumerate().filter(|(o, _)| tl.is_chosen(tl.gamma_len + o)).map(|(_, x)| x).collect()
}

/// `Δ` for the star slot of vertex level `v`.
fn vertex_delta(state: &NestedState, q: [usize; 4], v: usize) -> usize {
    let s = state.sizes.k[v] as u32 - 1;
    let r = rest(q, &[v]);
    let nb: Vec<Vec<u32>> = r.iter().map(|&u| chosen_neighbours(state, v, s, u)).collect();
    // New members of {v, r[a], r[b]} as slot pairs (p_{r[a]}, p_{r[b]}).
    let new_members = |a: usize, b: usize| -> Vec<(u32, u32)> {
        let (ua, ub) = (r[a], r[b]);
        let wide = state.pair([ua, ub]);
        let mut appended = Vec::new();
        for &pa in &nb[a] {
            for &pb in wide.neighbours(ua, pa) {
                if nb[b].binary_search(&pb).is_ok() {
                    appended.push((pa, pb));
                }
            }
        }
        let tl = state.triple(sorted3([v, ua, ub]));
        appended.into_iter().enumerate().filter(|(o, _)| tl.is_chosen(tl.gamma_len + o)).map(|(_, x)| x).collect()
    };
    let m01 = new_members(0, 1);
    let m02 = new_members(0, 2);
    let m12: std::collections::HashSet<(u32, u32)> = new_members(1, 2).into_iter().collect();
    let mut by_first: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
    for (p0, p2) in m02 {
        by_first.entry(p0).or_default().push(p2);
    }
    let mut count = 0;
    for (p0, p1) in m01 {
        for &p2 in by_first.get(&p0).map_or(&[][..], Vec::as_slice) {
            if m12.contains(&(p1, p2)) && has(state, [r[0], r[1], r[2]], |l| [p0, p1, p2][r.iter().position(|&x| x == l).unwrap()]) {
                count += 1;
            }
        }
    }
    count
}

/// `Δ` for adding slot pair `(x, y)` to pair level `{i, j}`.
fn pair_delta(state: &NestedState, q: [usize; 4], [i, j]: [usize; 2], x: u32, y: u32) -> usize {
    let r = rest(q, &[i, j]);
    let (u, w) = (r[0], r[1]);
    let new_for = |other: usize| -> Vec<u32> {
        let a = state.pair([i.min(other), i.max(other)]).neighbours(i, x);
        let b = state.pair([j.min(other), j.max(other)]).neighbours(j, y);
        let appended: Vec<u32> = a.iter().copied().filter(|z| b.binary_search(z).is_ok()).collect();
        selected_appended(state, [i, j, other], appended)
    };
    let (nu, nw) = (new_for(u), new_for(w));
    let mut count = 0;
    for &pu in &nu {
        for &pw in &nw {
            let slot = |l: usize| if l == i { x } else if l == j { y } else if l == u { pu } else { pw };
            if has(state, [i, u, w], slot) && has(state, [j, u, w], slot) {
                count += 1;
            }
        }
    }
    count
}

/// `Δ` for selecting the `Γ_t` entry `tr` (slots in the order of `t`).
fn triple_delta(state: &NestedState, q: [usize; 4], t: [usize; 3], tr: [u32; 3]) -> usize {
    let u = rest(q, &t)[0];
    let base = |l: usize| tr[t.iter().position(|&x| x == l).unwrap_or(0)];
    let mut count = 0;
    for &pu in complete(state, [t[0], t[1], u], u, base) {
        let slot = |l: usize| if l == u { pu } else { base(l) };
        if has(state, [t[0], t[2], u], slot) && has(state, [t[1], t[2], u], slot) {
            count += 1;
        }
    }
    count
}

/// Mean `Δ` over up to [`CANDIDATES`] unchosen grid indices of pair level
/// `p`; a full level admits no load and gives 0.
pub(crate) fn pair_load_mean<R: Rng + ?Sized>(state: &NestedState, q: [usize; 4], p: [usize; 2], rng: &mut R) -> f64 {
    let pl = state.pair(p);
    let universe = pl.dims[0] * pl.dims[1];
    let mut complement = Vec::with_capacity(universe - pl.chosen.len());
    let mut next = pl.chosen.iter().peekable();
    for t in 0..universe as u32 {
        if next.peek() == Some(&&t) {
            next.next();
        } else {
            complement.push(t);
        }
    }
    if complement.is_empty() {
        return 0.0;
    }
    let picks = sample(rng, complement.len(), complement.len().min(CANDIDATES));
    let total: usize = picks
        .iter()
        .map(|r| {
            let (x, y) = pl.slots(complement[r]);
            pair_delta(state, q, p, x, y)
        })
        .sum();
    total as f64 / picks.len() as f64
}

/// Mean `Δ` of one sampled state for the given load.
fn state_delta<R: Rng + ?Sized>(n: usize, e: &Exponents, load: Load, q: [usize; 4], rng: &mut R) -> Result<f64, ConcError> {
    let mut scope = Scope::quad(q);
    match load {
        Load::Vertex(v) => {
            scope.star = Some(v);
            let state = sample_state(n, e, &scope, rng)?;
            Ok(vertex_delta(&state, q, v) as f64)
        }
        Load::Pair(p) => {
            let p = [p[0].min(p[1]), p[0].max(p[1])];
            scope.short_pair = Some(p);
            let state = sample_state(n, e, &scope, rng)?;
            Ok(pair_load_mean(&state, q, p, rng))
        }
        Load::Triple(t) => {
            let t = sorted3(t);
            let state = sample_state(n, e, &scope, rng)?;
            let tl = state.triple(t);
            let mut open = Vec::new();
            let mut idx = 0;
            state.gamma(t, |tr| {
                if !tl.is_chosen(idx) {
                    open.push(tr);
                }
                idx += 1;
            });
            if open.is_empty() {
                return Ok(0.0);
            }
            let picks = sample(rng, open.len(), open.len().min(CANDIDATES));
            let total: usize = picks.iter().map(|r| triple_delta(&state, q, t, open[r])).sum();
            Ok(total as f64 / picks.len() as f64)
        }
    }
}

/// Mean `|Γ′_q − Γ_q|` under `load` at each `n`, with the log–log slope
/// compared against `m_q` minus the exponent of the loaded level.
pub fn update_size_scaling(
    grid: &[usize],
    e: &Exponents,
    load: Load,
    q: [usize; 4],
    trials: usize,
    seed: u64,
) -> Result<ScalingReport, ConcError> {
    if grid.len() < 3 {
        return Err(ConcError::Grid { need: 3, got: grid.len() });
    }
    check_load(&load, q)?;
    let mut points = Vec::new();
    for &n in grid {
        let mut deltas = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = stream_rng(seed, ((n as u64) << 32) | trial as u64);
            deltas.push(state_delta(n, e, load, q, &mut rng)?);
        }
        let (mean, se) = mean_stderr(&deltas);
        if mean <= 0.0 {
            return Err(ConcError::ZeroMean { level: load.name(), n });
        }
        points.push((n, mean, se));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(ScalingReport {
        load,
        quad: q,
        predicted: e.m4(q) - e.get(&load.levels()),
        fitted: ols_slope(&xs, &ys),
        points,
    })
}

/// Mean `Δ` at a single `n`, without fitting.
pub fn mean_update_size(n: usize, e: &Exponents, load: Load, q: [usize; 4], trials: usize, seed: u64) -> Result<(f64, f64), ConcError> {
    check_load(&load, q)?;
    let mut deltas = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = stream_rng(seed, ((n as u64) << 32) | trial as u64);
        deltas.push(state_delta(n, e, load, q, &mut rng)?);
    }
    Ok(mean_stderr(&deltas))
}
