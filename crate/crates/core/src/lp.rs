//! The 30-parameter system behind the 4-simplex finding walk: admissibility
//! constraints, per-level cost exponents, the objective and the exponent LP.
//!
//! Parameters are named `a_i`, `b_ij`, `c_ijk`, `d_ijkl` for sorted index
//! tuples drawn from `{1,..,5}`. Every derived quantity is a
//! [`LinearExponent`] over those names, so the same expressions drive both
//! exact evaluation and the LP rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exponent::{Assignment, LinearExponent, MaxExpr};
use crate::rational::{fmt_fixed, frac, parse_rational, Q};
use crate::simplex::{self, LpError, Row};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("missing parameter(s): {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Sorted `k`-subsets of `{1,..,5}` in lexicographic order.
pub fn subsets(k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..=5 {
            cur.push(v);
            rec(v + 1, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, k, &mut Vec::new(), &mut out);
    out
}

fn label(set: &[usize]) -> String {
    set.iter().map(|v| v.to_string()).collect()
}

/// Parameter name for a sorted index tuple of size 1..4.
pub fn param_name(set: &[usize]) -> String {
    let prefix = ["a", "b", "c", "d"][set.len() - 1];
    format!("{prefix}_{}", label(set))
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn var(set: &[usize]) -> LinearExponent {
    LinearExponent::var(&param_name(&sorted(set.to_vec())))
}

/// All 30 parameter names in nesting order.
pub fn param_names() -> Vec<String> {
    (1..=4).flat_map(subsets).map(|s| param_name(&s)).collect()
}

/// `m_ijk = b_ij + b_ik + b_jk − a_i − a_j − a_k`.
pub fn m3(t: &[usize]) -> LinearExponent {
    let (i, j, k) = (t[0], t[1], t[2]);
    var(&[i, j]) + var(&[i, k]) + var(&[j, k]) - var(&[i]) - var(&[j]) - var(&[k])
}

/// `m_ijkl`: sum over the four triples minus the six pairs plus the four vertices.
pub fn m4(q: &[usize]) -> LinearExponent {
    let mut e = LinearExponent::zero();
    for t in subsets_of(q, 3) {
        e += var(&t);
    }
    for p in subsets_of(q, 2) {
        e = e - var(&p);
    }
    for v in q {
        e += var(&[*v]);
    }
    e
}

fn subsets_of(set: &[usize], k: usize) -> Vec<Vec<usize>> {
    subsets(k).into_iter().filter(|s| s.iter().all(|v| set.contains(v))).collect()
}

/// Values for all 30 parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSet {
    values: BTreeMap<String, Q>,
}

impl ParamSet {
    pub fn from_assignment(values: Assignment) -> Result<Self, ParamError> {
        let missing: Vec<String> = param_names().into_iter().filter(|n| !values.contains_key(n)).collect();
        if !missing.is_empty() {
            return Err(ParamError::Missing(missing));
        }
        let values = param_names().into_iter().map(|n| {
            let v = values[&n].clone();
            (n, v)
        });
        Ok(Self { values: values.collect() })
    }

    pub fn zero() -> Self {
        Self { values: param_names().into_iter().map(|n| (n, Q::zero())).collect() }
    }

    /// The published parameter values (five decimal digits).
    pub fn published() -> Self {
        const TABLE: [(&str, &str); 30] = [
            ("a_1", "0.30435"),
            ("a_2", "0.65217"),
            ("a_3", "0.82609"),
            ("a_4", "0.91304"),
            ("a_5", "0.95652"),
            ("b_12", "0.95652"),
            ("b_13", "1.13043"),
            ("b_14", "1.21739"),
            ("b_15", "1.16579"),
            ("b_23", "1.45059"),
            ("b_24", "1.45059"),
            ("b_25", "1.54567"),
            ("b_34", "1.49802"),
            ("b_35", "1.64032"),
            ("b_45", "1.75494"),
            ("c_123", "1.75494"),
            ("c_124", "1.75494"),
            ("c_125", "1.75494"),
            ("c_134", "1.80237"),
            ("c_135", "1.84958"),
            ("c_145", "1.87440"),
            ("c_234", "1.95477"),
            ("c_235", "2.04985"),
            ("c_245", "2.13966"),
            ("c_345", "2.07817"),
            ("d_1234", "2.25911"),
            ("d_1235", "2.25911"),
            ("d_1245", "2.25911"),
            ("d_1345", "2.16864"),
            ("d_2345", "2.13966"),
        ];
        let values = TABLE
            .iter()
            .map(|(k, v)| (k.to_string(), parse_rational(v).expect("valid literal")))
            .collect();
        Self { values }
    }

    pub fn get(&self, name: &str) -> &Q {
        &self.values[name]
    }

    pub fn set(&mut self, name: &str, value: Q) {
        assert!(self.values.contains_key(name), "unknown parameter {name}");
        self.values.insert(name.to_string(), value);
    }

    pub fn assignment(&self) -> &Assignment {
        &self.values
    }

    pub fn eval(&self, e: &LinearExponent) -> Q {
        e.evaluate(&self.values).expect("all parameters bound")
    }

    pub fn m3(&self, t: &[usize]) -> Q {
        self.eval(&m3(t))
    }

    pub fn m4(&self, q: &[usize]) -> Q {
        self.eval(&m4(q))
    }

    /// Parses `name=value` lines; `#` comments and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, ParamError> {
        let known: Vec<String> = param_names();
        let mut values = Assignment::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| ParamError::Format { line: idx + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected name=value".into()))?;
            let k = k.trim();
            if !known.iter().any(|n| n == k) {
                return Err(err(format!("unknown parameter {k:?}")));
            }
            let v = parse_rational(v).ok_or_else(|| err(format!("bad value {:?}", v.trim())))?;
            if values.insert(k.to_string(), v).is_some() {
                return Err(err(format!("duplicate parameter {k}")));
            }
        }
        Self::from_assignment(values)
    }
}

/// Constraint `expr ≤ 0` (or `< 0` when strict).
#[derive(Clone, Debug)]
pub struct Constraint {
    pub family: u8,
    pub label: String,
    pub expr: LinearExponent,
    pub strict: bool,
}

/// Which role assignments the last constraint family ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Family7 {
    /// Sorted `i<j<k<l`: `l` is the largest index, `i` the smallest.
    #[default]
    AsStated,
    /// Every choice of `l` and of the distinguished `i` inside a quadruple.
    AllRoles,
}

fn family7_row(i: usize, j: usize, k: usize, l: usize) -> Constraint {
    let expr = -var(&[i, j, l]) - var(&[i, k, l]) + var(&[i, l]) + var(&[j, l]) + var(&[k, l]) - var(&[l]);
    Constraint { family: 7, label: format!("i={i} j={j} k={k} l={l}"), expr, strict: true }
}

pub fn constraints(variant: Family7) -> Vec<Constraint> {
    let mut out = Vec::new();
    for p in subsets(2) {
        let (i, j) = (p[0], p[1]);
        out.push(Constraint {
            family: 1,
            label: label(&p),
            expr: var(&p) - var(&[i]) - var(&[j]),
            strict: false,
        });
    }
    for t in subsets(3) {
        out.push(Constraint { family: 2, label: label(&t), expr: var(&t) - m3(&t), strict: false });
    }
    for q in subsets(4) {
        out.push(Constraint { family: 3, label: label(&q), expr: var(&q) - m4(&q), strict: false });
    }
    for p in subsets(2) {
        for &x in &p {
            out.push(Constraint {
                family: 4,
                label: format!("{} via a_{x}", label(&p)),
                expr: var(&[x]) - var(&p),
                strict: true,
            });
        }
    }
    for t in subsets(3) {
        for p in subsets_of(&t, 2) {
            out.push(Constraint {
                family: 5,
                label: format!("{} via b_{}", label(&t), label(&p)),
                expr: var(&p) - m3(&t),
                strict: true,
            });
        }
    }
    for q in subsets(4) {
        for t in subsets_of(&q, 3) {
            out.push(Constraint {
                family: 6,
                label: format!("{} via c_{}", label(&q), label(&t)),
                expr: var(&t) - m4(&q),
                strict: true,
            });
        }
    }
    for q in subsets(4) {
        match variant {
            Family7::AsStated => out.push(family7_row(q[0], q[1], q[2], q[3])),
            Family7::AllRoles => {
                for &l in &q {
                    let rest: Vec<usize> = q.iter().copied().filter(|&v| v != l).collect();
                    for &i in &rest {
                        let jk: Vec<usize> = rest.iter().copied().filter(|&v| v != i).collect();
                        out.push(family7_row(i, jk[0], jk[1], l));
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub family: u8,
    pub label: String,
    pub strict: bool,
    /// Value of `expr`; positive means violated by that much.
    pub value: Q,
}

#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub violations: Vec<Violation>,
    /// Strict constraints whose value lies in `(-eps, 0)`.
    pub tight_strict: Vec<Violation>,
    pub min_strict_margin: Q,
}

impl AdmissibilityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Non-strict rows pass when `expr ≤ eps`; strict rows when `expr < −eps`.
pub fn admissible(p: &ParamSet, eps: &Q, variant: Family7) -> AdmissibilityReport {
    let mut violations = Vec::new();
    let mut tight_strict = Vec::new();
    let mut min_margin: Option<Q> = None;
    for c in constraints(variant) {
        let value = p.eval(&c.expr);
        let entry = || Violation { family: c.family, label: c.label.clone(), strict: c.strict, value: value.clone() };
        if c.strict {
            let margin = -value.clone();
            if min_margin.as_ref().is_none_or(|m| margin < *m) {
                min_margin = Some(margin.clone());
            }
            if !(value < -eps.clone()) {
                if value.is_negative() {
                    tight_strict.push(entry());
                } else {
                    violations.push(entry());
                }
            }
        } else if value > *eps {
            violations.push(entry());
        }
    }
    // Strict rows inside (-eps, 0) still count as failing the strict test.
    let mut all = violations;
    all.extend(tight_strict.iter().cloned());
    AdmissibilityReport { violations: all, tight_strict, min_strict_margin: min_margin.unwrap_or_else(Q::zero) }
}

/// One level of the nested walk.
#[derive(Clone, Debug)]
pub struct Level {
    pub set: Vec<usize>,
    pub nu: LinearExponent,
    pub kappa: LinearExponent,
    pub upsilon: Vec<LinearExponent>,
}

impl Level {
    pub fn label(&self) -> String {
        label(&self.set)
    }
}

/// The 30 levels: vertices, pairs, triples, quadruples, each lexicographic.
pub fn stage_table() -> Vec<Level> {
    let quads = subsets(4);
    let containing = |s: &[usize]| -> Vec<Vec<usize>> {
        quads.iter().filter(|q| s.iter().all(|v| q.contains(v))).cloned().collect()
    };
    let mut levels = Vec::with_capacity(30);
    for s in (1..=4).flat_map(subsets) {
        let kappa = var(&s);
        let nu = match s.len() {
            1 => LinearExponent::constant(Q::one()),
            2 => var(&[s[0]]) + var(&[s[1]]),
            3 => m3(&s),
            _ => m4(&s),
        };
        let upsilon = if s.len() == 4 {
            vec![LinearExponent::zero()]
        } else {
            containing(&s).iter().map(|q| var(q) - &kappa).collect()
        };
        levels.push(Level { set: s, nu, kappa, upsilon });
    }
    levels
}

/// Cost exponent of every level as a max over its update candidates, plus
/// the setup exponent `max_q d_q`.
pub fn stage_expressions() -> (MaxExpr, Vec<(String, MaxExpr)>) {
    let mut prefix = LinearExponent::zero();
    let mut stages = Vec::new();
    let half = frac(1, 2);
    for level in stage_table() {
        prefix += (level.nu.clone() - &level.kappa).scale(&half);
        let base = prefix.clone() + level.kappa.scale(&half);
        let terms = level.upsilon.iter().map(|u| base.clone() + u);
        stages.push((level.label(), MaxExpr::new(terms).expect("nonempty")));
    }
    let setup = MaxExpr::new(subsets(4).iter().map(|q| var(q))).expect("nonempty");
    (setup, stages)
}

#[derive(Clone, Debug)]
pub struct StageExponents {
    pub setup: Q,
    pub stages: Vec<(String, Q)>,
}

impl StageExponents {
    pub fn objective(&self) -> Q {
        self.stages.iter().map(|(_, v)| v).chain([&self.setup]).max().cloned().expect("nonempty")
    }

    pub fn stage(&self, label: &str) -> Option<&Q> {
        self.stages.iter().find(|(l, _)| l == label).map(|(_, v)| v)
    }
}

pub fn stage_exponents(p: &ParamSet) -> StageExponents {
    let (setup, stages) = stage_expressions();
    let eval = |m: &MaxExpr| m.evaluate(p.assignment()).expect("all parameters bound");
    StageExponents { setup: eval(&setup), stages: stages.iter().map(|(l, m)| (l.clone(), eval(m))).collect() }
}

pub fn objective(p: &ParamSet) -> Q {
    stage_exponents(p).objective()
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub params: ParamSet,
    pub t: Q,
    pub pivots: usize,
}

fn linear_row(expr: &LinearExponent, names: &[String], t_coeff: Q) -> Row {
    let mut coeffs: Vec<Q> = names.iter().map(|n| expr.coefficient(n)).collect();
    coeffs.push(t_coeff);
    Row { coeffs, rhs: -expr.constant_term().clone() }
}

/// Minimizes the objective exponent `t` subject to the non-strict closure of
/// the admissibility constraints, `0 ≤ a_i ≤ 1`, and nonnegativity of all
/// other parameters.
pub fn solve_lp(variant: Family7) -> Result<LpSolution, ParamError> {
    solve_with_objective(variant, None)
}

/// Same feasible region with `t` free of the objective: minimizes
/// `weights · params + t`. Used to reach other vertices of the region.
pub fn solve_with_objective(variant: Family7, weights: Option<&[Q]>) -> Result<LpSolution, ParamError> {
    // With t = 5/2 − τ every row has a nonnegative right-hand side, so the
    // origin (the all-zero parameters at t = 5/2) is a feasible start.
    let corner = frac(5, 2);
    let names = param_names();
    let mut rows = Vec::new();
    for c in constraints(variant) {
        rows.push(linear_row(&c.expr, &names, Q::zero()));
    }
    let (setup, stages) = stage_expressions();
    for m in std::iter::once(&setup).chain(stages.iter().map(|(_, m)| m)) {
        for term in m.terms() {
            rows.push(linear_row(&(term.clone() + (-corner.clone())), &names, Q::one()));
        }
    }
    for i in 1..=5 {
        rows.push(linear_row(&(var(&[i]) + (-Q::one())), &names, Q::zero()));
    }
    let mut objective = vec![Q::zero(); names.len() + 1];
    if let Some(w) = weights {
        for (o, v) in objective.iter_mut().zip(w) {
            *o = v.clone();
        }
    }
    objective[names.len()] = -Q::one();
    let sol = simplex::minimize(&objective, &rows)?;
    let values = names.iter().cloned().zip(sol.x.iter().cloned()).collect();
    let t = corner - &sol.x[names.len()];
    Ok(LpSolution { params: ParamSet { values }, t, pivots: sol.pivots })
}

/// Epigraph LP with every parameter pinned: only `t` is free.
pub fn solve_fixed(p: &ParamSet) -> Result<Q, ParamError> {
    let ex = stage_exponents(p);
    let rows: Vec<Row> = ex
        .stages
        .iter()
        .map(|(_, v)| v)
        .chain([&ex.setup])
        .map(|v| Row { coeffs: vec![-Q::one()], rhs: -v.clone() })
        .collect();
    Ok(simplex::minimize(&[Q::one()], &rows)?.value)
}

fn fmt_value(q: &Q, exact: bool) -> String {
    if exact {
        q.to_string()
    } else {
        fmt_fixed(q, 6)
    }
}

/// `param=value` lines, setup, per-stage exponents and the objective.
pub fn report(p: &ParamSet, exact: bool) -> String {
    let mut out = String::new();
    for name in param_names() {
        let _ = writeln!(out, "{name}={}", fmt_value(p.get(&name), exact));
    }
    let ex = stage_exponents(p);
    let _ = writeln!(out, "setup_exponent={}", fmt_value(&ex.setup, exact));
    for (l, v) in &ex.stages {
        let _ = writeln!(out, "stage:{l}={}", fmt_value(v, exact));
    }
    let _ = writeln!(out, "objective={}", fmt_value(&ex.objective(), exact));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, to_f64};

    #[test]
    fn index_sets_and_names() {
        assert_eq!(subsets(1).len(), 5);
        assert_eq!(subsets(2).len(), 10);
        assert_eq!(subsets(3).len(), 10);
        assert_eq!(subsets(4).len(), 5);
        let names = param_names();
        assert_eq!(names.len(), 30);
        assert_eq!(names[0], "a_1");
        assert_eq!(names[5], "b_12");
        assert_eq!(names[29], "d_2345");
    }

    #[test]
    fn dependent_values_at_published_parameters() {
        let p = ParamSet::published();
        let m123 = to_f64(&p.m3(&[1, 2, 3]));
        assert!((m123 - 1.75494).abs() < 2e-5, "{m123}");
        let m1234 = to_f64(&p.m4(&[1, 2, 3, 4]));
        assert!((m1234 - 2.25913).abs() < 2e-5, "{m1234}");
        let z = ParamSet::zero();
        assert!(z.m3(&[2, 4, 5]).is_zero());
    }

    #[test]
    fn m4_expands_to_the_expected_signs() {
        let e = m4(&[1, 2, 3, 4]);
        assert_eq!(e.coefficient("c_123"), int(1));
        assert_eq!(e.coefficient("b_12"), int(-1));
        assert_eq!(e.coefficient("a_4"), int(1));
        assert_eq!(e.names().count(), 14);
    }

    #[test]
    fn constraint_counts() {
        assert_eq!(constraints(Family7::AsStated).len(), 10 + 10 + 5 + 20 + 30 + 20 + 5);
        assert_eq!(constraints(Family7::AllRoles).len(), 10 + 10 + 5 + 20 + 30 + 20 + 60);
    }

    #[test]
    fn zero_point_violates_strict_family() {
        let r = admissible(&ParamSet::zero(), &Q::zero(), Family7::AsStated);
        assert!(r.violations.iter().any(|v| v.family == 4));
    }

    #[test]
    fn large_b12_violates_first_family() {
        let mut p = ParamSet::published();
        p.set("b_12", int(2));
        let r = admissible(&p, &frac(1, 10_000), Family7::AsStated);
        assert!(r.violations.iter().any(|v| v.family == 1 && v.label == "12"));
    }

    #[test]
    fn zero_point_hits_the_grover_corner() {
        assert_eq!(objective(&ParamSet::zero()), frac(5, 2));
    }

    #[test]
    fn stage_table_shape() {
        let t = stage_table();
        assert_eq!(t.len(), 30);
        assert_eq!(t[0].upsilon.len(), 4);
        assert_eq!(t[5].upsilon.len(), 3);
        assert_eq!(t[15].upsilon.len(), 2);
        assert_eq!(t[25].upsilon.len(), 1);
        assert_eq!(t[25].label(), "1234");
    }

    #[test]
    fn parse_round_trip() {
        let p = ParamSet::published();
        let text = report(&p, true);
        let back = ParamSet::parse(
            &text.lines().filter(|l| l.starts_with(['a', 'b', 'c', 'd'])).collect::<Vec<_>>().join("\n"),
        )
        .unwrap();
        assert_eq!(back, p);
        assert!(matches!(ParamSet::parse("a_1=0.3\nzz=1"), Err(ParamError::Format { line: 2, .. })));
        assert!(matches!(ParamSet::parse("a_1=0.3"), Err(ParamError::Missing(_))));
    }

    #[test]
    fn fixed_lp_reproduces_objective() {
        let p = ParamSet::published();
        assert_eq!(solve_fixed(&p).unwrap(), objective(&p));
    }
}
