//! Nested Johnson walks expressed as learning graphs: the complexity
//! calculus over per-level dimensions and costs, exact stage specialities,
//! and explicit construction of toy instances.
//!
//! The squared bound for levels `(n_i, k_i, ℓ_i)` with setup cost `S`,
//! update costs `U_i` and checking cost `C` is
//!
//! ```text
//! S² + Σ_i (∏_{j≤i} (n_j/k_j)^{ℓ_j}) k_i U_i² + (∏_i (n_i/k_i)^{ℓ_i}) C²
//! ```
//!
//! and the query bound is its square root.

pub mod explicit;

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exponent::{ExprError, LinearExponent, MaxExpr};
use crate::rational::{binomial, falling, frac, parse_rational, pow_q, q_from_biguint, to_f64, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NestedError {
    #[error("invalid dimensions: {0}")]
    Dims(String),
    #[error("invalid stage: {0}")]
    Stage(String),
    #[error("every cost is zero")]
    NoCost,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("explicit build too large: about {estimate} L-vertices (limit {limit})")]
    TooLarge { estimate: u64, limit: u64 },
}

/// Numeric dimensions of one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub n: Q,
    pub k: Q,
    pub ell: u32,
}

/// Dimensions as exponents of `n`: `n_i = n^nu`, `k_i = n^kappa`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpLevel {
    pub nu: LinearExponent,
    pub kappa: LinearExponent,
    pub ell: u32,
}

/// Costs; `None` stands for a zero cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostProfile<T> {
    pub setup: Option<T>,
    pub update: Vec<Option<T>>,
    pub check: Option<T>,
}

fn check_levels(levels: &[Level]) -> Result<(), NestedError> {
    if levels.is_empty() {
        return Err(NestedError::Dims("at least one level is required".into()));
    }
    for (i, l) in levels.iter().enumerate() {
        let ell = frac(l.ell as i64, 1);
        if l.ell == 0 || ell > l.k || l.k > l.n || !l.k.is_positive() {
            return Err(NestedError::Dims(format!(
                "level {}: need 0 < ell <= k <= n, got n={} k={} ell={}",
                i + 1,
                l.n,
                l.k,
                l.ell
            )));
        }
    }
    Ok(())
}

fn check_profile_len<T>(levels: usize, p: &CostProfile<T>) -> Result<(), NestedError> {
    if p.update.len() != levels {
        return Err(NestedError::Dims(format!("{} update costs for {levels} levels", p.update.len())));
    }
    Ok(())
}

/// The squared bound with every cost given as its square.
pub fn squared_bound(levels: &[Level], costs_squared: &CostProfile<Q>) -> Result<Q, NestedError> {
    check_levels(levels)?;
    check_profile_len(levels.len(), costs_squared)?;
    let mut total = costs_squared.setup.clone().unwrap_or_else(Q::zero);
    let mut prefix = Q::one();
    for (l, u2) in levels.iter().zip(&costs_squared.update) {
        prefix *= pow_q(&(&l.n / &l.k), l.ell);
        if let Some(u2) = u2 {
            total += &prefix * &l.k * u2;
        }
    }
    if let Some(c2) = &costs_squared.check {
        total += prefix * c2;
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct NumericBound {
    pub squared: Q,
}

impl NumericBound {
    pub fn value(&self) -> f64 {
        to_f64(&self.squared).sqrt()
    }
}

/// Numeric bound from costs `S`, `U_i`, `C` (not squared).
pub fn complexity_bound(levels: &[Level], costs: &CostProfile<Q>) -> Result<NumericBound, NestedError> {
    let sq = |v: &Option<Q>| v.as_ref().map(|x| x * x);
    let squared = CostProfile {
        setup: sq(&costs.setup),
        update: costs.update.iter().map(sq).collect(),
        check: sq(&costs.check),
    };
    Ok(NumericBound { squared: squared_bound(levels, &squared)? })
}

/// Named terms of the exponent bound: setup, one per level, checking.
#[derive(Clone, Debug)]
pub struct ExponentBound {
    pub terms: Vec<(String, LinearExponent)>,
}

impl ExponentBound {
    pub fn max_expr(&self) -> MaxExpr {
        MaxExpr::new(self.terms.iter().map(|(_, t)| t.clone())).expect("nonempty by construction")
    }
}

/// `max(S, ½Σ_{j≤i} ℓ_j(ν_j−κ_j) + κ_i/2 + U_i, ½Σ_j ℓ_j(ν_j−κ_j) + C)`.
pub fn complexity_bound_exponent(
    levels: &[ExpLevel],
    costs: &CostProfile<LinearExponent>,
) -> Result<ExponentBound, NestedError> {
    if levels.is_empty() {
        return Err(NestedError::Dims("at least one level is required".into()));
    }
    check_profile_len(levels.len(), costs)?;
    for (i, l) in levels.iter().enumerate() {
        if l.ell == 0 {
            return Err(NestedError::Dims(format!("level {}: ell must be positive", i + 1)));
        }
        if l.nu.is_constant() && l.kappa.is_constant() {
            let (nu, kappa) = (l.nu.constant_term(), l.kappa.constant_term());
            if kappa.is_negative() || kappa > nu {
                return Err(NestedError::Dims(format!("level {}: need 0 <= kappa <= nu", i + 1)));
            }
        }
    }
    let half = frac(1, 2);
    let mut terms = Vec::new();
    if let Some(s) = &costs.setup {
        terms.push(("setup".to_string(), s.clone()));
    }
    let mut prefix = LinearExponent::zero();
    for (i, (l, u)) in levels.iter().zip(&costs.update).enumerate() {
        prefix += (l.nu.clone() - &l.kappa).scale(&frac(l.ell as i64, 2));
        if let Some(u) = u {
            terms.push((format!("update_{}", i + 1), prefix.clone() + l.kappa.scale(&half) + u));
        }
    }
    if let Some(c) = &costs.check {
        terms.push(("check".to_string(), prefix + c));
    }
    if terms.is_empty() {
        return Err(NestedError::NoCost);
    }
    Ok(ExponentBound { terms })
}

/// Integer dimensions for exact stage counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntLevel {
    pub n: u64,
    pub k: u64,
    pub ell: u64,
}

fn check_int_levels(levels: &[IntLevel]) -> Result<(), NestedError> {
    for (i, l) in levels.iter().enumerate() {
        if l.ell == 0 || l.ell > l.k || l.k > l.n {
            return Err(NestedError::Dims(format!("level {}: need 0 < ell <= k <= n", i + 1)));
        }
    }
    Ok(())
}

fn qb(v: num_bigint::BigUint) -> Q {
    q_from_biguint(v)
}

/// Begin/end counts of one stage of the explicit construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageCounts {
    pub c: Q,
    pub c_prime: Q,
    pub d: Q,
    pub d_prime: Q,
}

impl StageCounts {
    pub fn speciality(&self) -> Q {
        &self.c * &self.d / (&self.c_prime * &self.d_prime)
    }
}

/// Counts for update stage `(i, h)` (1-based).
pub fn update_stage_counts(levels: &[IntLevel], i: usize, h: u64) -> Result<StageCounts, NestedError> {
    check_int_levels(levels)?;
    if i == 0 || i > levels.len() {
        return Err(NestedError::Stage(format!("level {i} outside 1..={}", levels.len())));
    }
    let li = levels[i - 1];
    if h == 0 || h > li.ell {
        return Err(NestedError::Stage(format!("sub-step {h} outside 1..={}", li.ell)));
    }
    let filled = li.k - li.ell + h - 1;
    let stars = li.ell - h + 1;
    let mut c = qb(binomial(li.k, stars)) * qb(falling(li.n, filled));
    for l in &levels[..i - 1] {
        c *= qb(falling(l.n, l.k));
    }
    for l in &levels[i..] {
        c *= qb(binomial(l.k, l.ell)) * qb(falling(l.n, l.k - l.ell));
    }
    let c_prime = levels
        .iter()
        .fold(Q::one(), |acc, l| acc * qb(binomial(l.k, l.ell)) * qb(falling(l.n - l.ell, l.k - l.ell)));
    let d = frac((stars * (li.n - filled)) as i64, 1);
    let d_prime = frac((stars * stars) as i64, 1);
    Ok(StageCounts { c, c_prime, d, d_prime })
}

/// Counts for setup stage `i` (1-based).
pub fn setup_stage_counts(levels: &[IntLevel], i: usize) -> Result<StageCounts, NestedError> {
    check_int_levels(levels)?;
    if i == 0 || i > levels.len() {
        return Err(NestedError::Stage(format!("level {i} outside 1..={}", levels.len())));
    }
    let mut c = Q::one();
    let mut c_prime = Q::one();
    for l in &levels[..i - 1] {
        c *= qb(binomial(l.k, l.ell)) * qb(falling(l.n, l.k - l.ell));
        c_prime *= qb(binomial(l.k, l.ell)) * qb(falling(l.n - l.ell, l.k - l.ell));
    }
    let l = levels[i - 1];
    let d = qb(binomial(l.k, l.ell)) * qb(falling(l.n, l.k - l.ell));
    let d_prime = qb(binomial(l.k, l.ell)) * qb(falling(l.n - l.ell, l.k - l.ell));
    Ok(StageCounts { c, c_prime, d, d_prime })
}

/// Exact speciality `cd/(c'd')` of update stage `(i, h)`.
pub fn stage_speciality(levels: &[IntLevel], i: usize, h: u64) -> Result<Q, NestedError> {
    Ok(update_stage_counts(levels, i, h)?.speciality())
}

/// Exact speciality of setup stage `i`; bounded by a constant for fixed `ℓ`.
pub fn setup_speciality(levels: &[IntLevel], i: usize) -> Result<Q, NestedError> {
    Ok(setup_stage_counts(levels, i)?.speciality())
}

/// Exponent of the update-stage speciality:
/// `ν_i + (h−1)(ν_i−κ_i) + Σ_{j<i} ℓ_j(ν_j−κ_j)`. Setup stages have exponent 0.
pub fn stage_speciality_exponent(levels: &[ExpLevel], i: usize, h: u32) -> Result<LinearExponent, NestedError> {
    if i == 0 || i > levels.len() {
        return Err(NestedError::Stage(format!("level {i} outside 1..={}", levels.len())));
    }
    let li = &levels[i - 1];
    if h == 0 || h > li.ell {
        return Err(NestedError::Stage(format!("sub-step {h} outside 1..={}", li.ell)));
    }
    let mut e = li.nu.clone() + (li.nu.clone() - &li.kappa).scale(&frac(h as i64 - 1, 1));
    for l in &levels[..i - 1] {
        e += (l.nu.clone() - &l.kappa).scale(&frac(l.ell as i64, 1));
    }
    Ok(e)
}

/// A parsed configuration file.
#[derive(Clone, Debug)]
pub enum NestedConfig {
    Numeric { levels: Vec<Level>, costs: CostProfile<Q> },
    Exponent { levels: Vec<ExpLevel>, costs: CostProfile<LinearExponent> },
}

/// Reads
///
/// ```text
/// mode: exponent | numeric
/// level <i>: <n> <k> <ell>
/// S: <value or none>
/// U_<i>: <value or none>
/// C: <value or none>
/// ```
///
/// In exponent mode `n` and `k` are single-token exponent forms and cost
/// values are exponent forms; in numeric mode all are rationals.
pub fn parse_config(text: &str) -> Result<NestedConfig, NestedError> {
    #[derive(Default)]
    struct Raw<'a> {
        mode: Option<(usize, &'a str)>,
        levels: Vec<(usize, usize, [&'a str; 3])>,
        setup: Option<(usize, &'a str)>,
        updates: Vec<(usize, usize, &'a str)>,
        check: Option<(usize, &'a str)>,
    }
    let mut raw = Raw::default();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| NestedError::Format { line: lineno, msg };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| err("expected \"key: value\"".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "mode" {
            raw.mode = Some((lineno, value));
        } else if let Some(i) = key.strip_prefix("level ") {
            let i: usize = i.trim().parse().map_err(|_| err(format!("bad level index {i:?}")))?;
            let tok: Vec<&str> = value.split_whitespace().collect();
            let [n, k, ell] = tok[..] else {
                return Err(err("level line needs \"n k ell\"".into()));
            };
            raw.levels.push((lineno, i, [n, k, ell]));
        } else if key == "S" {
            raw.setup = Some((lineno, value));
        } else if let Some(i) = key.strip_prefix("U_") {
            let i: usize = i.parse().map_err(|_| err(format!("bad update index {i:?}")))?;
            raw.updates.push((lineno, i, value));
        } else if key == "C" {
            raw.check = Some((lineno, value));
        } else {
            return Err(err(format!("unknown key {key:?}")));
        }
    }
    let r = raw.levels.len();
    for (pos, (line, i, _)) in raw.levels.iter().enumerate() {
        if *i != pos + 1 {
            return Err(NestedError::Format { line: *line, msg: format!("expected level {}", pos + 1) });
        }
    }
    if r == 0 {
        return Err(NestedError::Format { line: 1, msg: "no level lines".into() });
    }
    let mut update_src: Vec<Option<(usize, &str)>> = vec![None; r];
    for &(line, i, v) in &raw.updates {
        if i == 0 || i > r {
            return Err(NestedError::Format { line, msg: format!("U_{i} has no matching level") });
        }
        update_src[i - 1] = Some((line, v));
    }
    let (mode_line, mode) = raw.mode.unwrap_or((1, "numeric"));
    let ell_of = |line: usize, s: &str| -> Result<u32, NestedError> {
        s.parse().map_err(|_| NestedError::Format { line, msg: format!("bad ell {s:?}") })
    };
    match mode {
        "numeric" => {
            let num = |line: usize, s: &str| {
                parse_rational(s).ok_or_else(|| NestedError::Format { line, msg: format!("bad number {s:?}") })
            };
            let cost = |src: Option<(usize, &str)>| -> Result<Option<Q>, NestedError> {
                match src {
                    None => Ok(None),
                    Some((_, "none")) => Ok(None),
                    Some((line, v)) => num(line, v).map(Some),
                }
            };
            let mut levels = Vec::new();
            for (line, _, [n, k, ell]) in &raw.levels {
                levels.push(Level { n: num(*line, n)?, k: num(*line, k)?, ell: ell_of(*line, ell)? });
            }
            let costs = CostProfile {
                setup: cost(raw.setup)?,
                update: update_src.into_iter().map(cost).collect::<Result<_, _>>()?,
                check: cost(raw.check)?,
            };
            Ok(NestedConfig::Numeric { levels, costs })
        }
        "exponent" => {
            let form = |line: usize, s: &str| {
                s.parse::<LinearExponent>().map_err(|e| NestedError::Format { line, msg: e.to_string() })
            };
            let cost = |src: Option<(usize, &str)>| -> Result<Option<LinearExponent>, NestedError> {
                match src {
                    None => Ok(None),
                    Some((_, "none")) => Ok(None),
                    Some((line, v)) => form(line, v).map(Some),
                }
            };
            let mut levels = Vec::new();
            for (line, _, [n, k, ell]) in &raw.levels {
                levels.push(ExpLevel { nu: form(*line, n)?, kappa: form(*line, k)?, ell: ell_of(*line, ell)? });
            }
            let costs = CostProfile {
                setup: cost(raw.setup)?,
                update: update_src.into_iter().map(cost).collect::<Result<_, _>>()?,
                check: cost(raw.check)?,
            };
            Ok(NestedConfig::Exponent { levels, costs })
        }
        other => Err(NestedError::Format { line: mode_line, msg: format!("unknown mode {other:?}") }),
    }
}

/// Evaluates a configuration into report lines.
pub fn render_bound(config: &NestedConfig, exact: bool) -> Result<String, NestedError> {
    let mut out = String::new();
    match config {
        NestedConfig::Numeric { levels, costs } => {
            let b = complexity_bound(levels, costs)?;
            if exact {
                let _ = writeln!(out, "bound_squared={}", b.squared);
            } else {
                let _ = writeln!(out, "bound_squared={}", crate::rational::fmt_fixed(&b.squared, 6));
            }
            let _ = writeln!(out, "bound={:.6}", b.value());
        }
        NestedConfig::Exponent { levels, costs } => {
            let b = complexity_bound_exponent(levels, costs)?;
            for (name, t) in &b.terms {
                let _ = writeln!(out, "term:{name}={t}");
            }
            let m = b.max_expr();
            let _ = writeln!(out, "exponent={m}");
            if let Ok(v) = m.evaluate(&Default::default()) {
                if exact {
                    let _ = writeln!(out, "value={v}");
                } else {
                    let _ = writeln!(out, "value={}", crate::rational::fmt_fixed(&v, 6));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Assignment;
    use crate::rational::int;
    use crate::seeds::stream_rng;
    use rand::Rng;

    fn lvl(n: u64, k: u64, ell: u64) -> IntLevel {
        IntLevel { n, k, ell }
    }

    #[test]
    fn element_distinctness_exponent() {
        let levels = [ExpLevel { nu: LinearExponent::constant(int(1)), kappa: LinearExponent::constant(frac(2, 3)), ell: 2 }];
        let costs = CostProfile {
            setup: Some(LinearExponent::constant(frac(2, 3))),
            update: vec![Some(LinearExponent::zero())],
            check: None,
        };
        let b = complexity_bound_exponent(&levels, &costs).unwrap();
        assert_eq!(b.max_expr().evaluate(&Assignment::new()).unwrap(), frac(2, 3));
    }

    #[test]
    fn setup_only_bound() {
        let levels = [Level { n: int(100), k: int(10), ell: 1 }];
        let costs = CostProfile { setup: Some(int(7)), update: vec![None], check: None };
        assert_eq!(complexity_bound(&levels, &costs).unwrap().squared, int(49));
        let costs = CostProfile { setup: Some(int(7)), update: vec![Some(int(0))], check: Some(int(0)) };
        assert_eq!(complexity_bound(&levels, &costs).unwrap().squared, int(49));
    }

    #[test]
    fn single_level_matches_walk_formula() {
        let mut rng = stream_rng(17, 0);
        for _ in 0..20 {
            let n = rng.gen_range(4..200i64);
            let k = rng.gen_range(1..=n);
            let ell = rng.gen_range(1..=k.min(4)) as u32;
            let (s, u, c) = (rng.gen_range(0..50i64), rng.gen_range(0..50i64), rng.gen_range(0..50i64));
            let levels = [Level { n: int(n), k: int(k), ell }];
            let costs = CostProfile { setup: Some(int(s)), update: vec![Some(int(u))], check: Some(int(c)) };
            let sq = complexity_bound(&levels, &costs).unwrap().squared;
            // S² + (n/k)^ℓ (k U² + C²), term by term.
            let ratio = pow_q(&frac(n, k), ell);
            let expected = int(s * s) + &ratio * (int(k) * int(u * u) + int(c * c));
            assert_eq!(sq, expected);
        }
    }

    #[test]
    fn dimension_errors() {
        let costs = CostProfile { setup: Some(int(1)), update: vec![None], check: None };
        assert!(complexity_bound(&[Level { n: int(4), k: int(5), ell: 1 }], &costs).is_err());
        assert!(complexity_bound(&[Level { n: int(4), k: int(2), ell: 3 }], &costs).is_err());
        assert!(complexity_bound(&[Level { n: int(4), k: int(2), ell: 0 }], &costs).is_err());
    }

    #[test]
    fn first_level_speciality_is_n() {
        for (n, k) in [(10, 3), (8, 8), (50, 7)] {
            assert_eq!(stage_speciality(&[lvl(n, k, 1)], 1, 1).unwrap(), int(n as i64));
        }
    }

    #[test]
    fn second_level_speciality_carries_outer_ratio() {
        let levels = [lvl(9, 3, 1), lvl(12, 4, 1)];
        assert_eq!(stage_speciality(&levels, 2, 1).unwrap(), int(12) * frac(9, 3));
    }

    #[test]
    fn invalid_stage_indices() {
        let levels = [lvl(9, 3, 2)];
        assert!(stage_speciality(&levels, 0, 1).is_err());
        assert!(stage_speciality(&levels, 2, 1).is_err());
        assert!(stage_speciality(&levels, 1, 3).is_err());
    }

    #[test]
    fn setup_speciality_is_bounded() {
        let levels = [lvl(1000, 30, 1), lvl(500, 20, 2)];
        let t = setup_speciality(&levels, 2).unwrap();
        assert!(t >= Q::one() && to_f64(&t) < 1.2);
        assert_eq!(setup_speciality(&[lvl(5, 5, 1)], 1).unwrap(), int(5));
    }

    #[test]
    fn speciality_exponent_shape() {
        let lv = |nu: i64, kappa: (i64, i64), ell| ExpLevel {
            nu: LinearExponent::constant(int(nu)),
            kappa: LinearExponent::constant(frac(kappa.0, kappa.1)),
            ell,
        };
        let levels = [lv(1, (1, 2), 2), lv(1, (1, 3), 1)];
        let e = stage_speciality_exponent(&levels, 2, 1).unwrap();
        assert_eq!(e.constant_term(), &(int(1) + int(2) * frac(1, 2)));
    }

    #[test]
    fn config_files() {
        let text = "mode: exponent\nlevel 1: 1 2/3 2\nS: 2/3\nU_1: 0\nC: none\n";
        let cfg = parse_config(text).unwrap();
        let out = render_bound(&cfg, true).unwrap();
        assert!(out.contains("value=2/3"), "{out}");
        let text = "mode: numeric\nlevel 1: 16 4 1\nS: 3\nU_1: 1\nC: 2\n";
        let out = render_bound(&parse_config(text).unwrap(), true).unwrap();
        assert!(out.contains("bound_squared=41"), "{out}");
        assert!(matches!(parse_config("level 1: 4 2\n"), Err(NestedError::Format { line: 1, .. })));
        assert!(matches!(parse_config("level 1: 4 2 1\nU_2: 1\n"), Err(NestedError::Format { line: 2, .. })));
        assert!(matches!(parse_config("mode: weird\nlevel 1: 4 2 1\n"), Err(NestedError::Format { line: 1, .. })));
    }
}
