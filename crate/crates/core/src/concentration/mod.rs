//! Hypergeometric tails, and Monte Carlo checks of the marked-state
//! conditions and update costs of the 4-simplex walk on sampled states.

pub mod state;
pub mod update;

use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::rational::{binomial, frac, ln_abs, q_from_biguint, to_f64, Q};

pub use state::{sample_state, violation_rate, Exponents, NestedState, Scope, Sizes, ViolationReport};
pub use update::{update_size_scaling, Load, ScalingReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcError {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("delta {delta} outside the range of {bound}")]
    Delta { bound: &'static str, delta: f64 },
    #[error("grid needs at least {need} sizes, got {got}")]
    Grid { need: usize, got: usize },
    #[error("state too large: {0}")]
    TooLarge(String),
    #[error("invalid load: {0}")]
    Load(String),
    #[error("cannot fit {level}: mean update size is zero at n={n}")]
    ZeroMean { level: String, n: usize },
}

/// `HG(N, M, K)`: number of good items among `K` draws without replacement
/// from `N` items of which `M` are good.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HyperGeom {
    pub population: u64,
    pub good: u64,
    pub draws: u64,
}

impl HyperGeom {
    pub fn new(population: u64, good: u64, draws: u64) -> Result<Self, ConcError> {
        if good > population || draws > population {
            return Err(ConcError::Distribution(format!(
                "need M <= N and K <= N, got N={population} M={good} K={draws}"
            )));
        }
        Ok(Self { population, good, draws })
    }

    /// `μ = K·M/N`.
    pub fn mean(&self) -> Q {
        if self.population == 0 {
            return Q::zero();
        }
        frac((self.draws * self.good) as i64, self.population as i64)
    }

    pub fn pmf(&self, x: u64) -> Q {
        let (n, m, k) = (self.population, self.good, self.draws);
        if x > m || x > k || k - x > n - m {
            return Q::zero();
        }
        q_from_biguint(binomial(m, x) * binomial(n - m, k - x)) / q_from_biguint(binomial(n, k))
    }
}

/// `Pr(X ≥ threshold)` by exact summation of the pmf.
pub fn exact_tail(h: &HyperGeom, threshold: u64) -> Q {
    let top = h.good.min(h.draws);
    if threshold > top {
        return Q::zero();
    }
    let mut num = num_bigint::BigUint::zero();
    for x in threshold..=top {
        if h.draws - x <= h.population - h.good {
            num += binomial(h.good, x) * binomial(h.population - h.good, h.draws - x);
        }
    }
    q_from_biguint(num) / q_from_biguint(binomial(h.population, h.draws))
}

/// `2e − 1`, the lower end of the range of [`bound2`].
pub fn bound2_min_delta() -> f64 {
    2.0 * std::f64::consts::E - 1.0
}

/// `ln exp(−μδ²/3)` for `0 < δ ≤ 1`.
pub fn ln_bound1(mu: f64, delta: f64) -> Result<f64, ConcError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(ConcError::Delta { bound: "bound1 (0 < delta <= 1)", delta });
    }
    Ok(-mu * delta * delta / 3.0)
}

/// `exp(−μδ²/3)`: bound on `Pr(X ≥ (1+δ)μ)`.
pub fn bound1(mu: f64, delta: f64) -> Result<f64, ConcError> {
    ln_bound1(mu, delta).map(f64::exp)
}

/// `ln 2^{−(1+δ)μ}` for `δ > 2e − 1`.
pub fn ln_bound2(mu: f64, delta: f64) -> Result<f64, ConcError> {
    if !(delta > bound2_min_delta()) {
        return Err(ConcError::Delta { bound: "bound2 (delta > 2e-1)", delta });
    }
    Ok(-(1.0 + delta) * mu * std::f64::consts::LN_2)
}

/// `2^{−(1+δ)μ}`: bound on `Pr(X > (1+δ)μ)`.
pub fn bound2(mu: f64, delta: f64) -> Result<f64, ConcError> {
    ln_bound2(mu, delta).map(f64::exp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailBound {
    /// `Pr(X ≥ (1+δ)μ) ≤ exp(−μδ²/3)`.
    First,
    /// `Pr(X > (1+δ)μ) < 2^{−(1+δ)μ}`.
    Second,
}

#[derive(Clone, Debug)]
pub struct TailCheck {
    pub h: HyperGeom,
    pub delta: Q,
    pub bound: TailBound,
    pub threshold: u64,
    pub exact: Q,
    pub ln_exact: f64,
    pub ln_bound: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.exact.is_zero() || self.ln_exact <= self.ln_bound
    }
}

/// Compares the exact tail with one of the bounds in log space.
pub fn check_tail(h: &HyperGeom, delta: &Q, bound: TailBound) -> Result<TailCheck, ConcError> {
    let mu = h.mean();
    let d = to_f64(delta);
    let level = (Q::from_integer(1.into()) + delta) * &mu;
    let (threshold, ln_bound) = match bound {
        TailBound::First => (level.ceil(), ln_bound1(to_f64(&mu), d)?),
        TailBound::Second => (level.floor() + Q::from_integer(1.into()), ln_bound2(to_f64(&mu), d)?),
    };
    let threshold = threshold.to_integer().to_u64().unwrap_or(u64::MAX).max(0);
    let exact = exact_tail(h, threshold);
    Ok(TailCheck { h: *h, delta: delta.clone(), bound, threshold, ln_exact: ln_abs(&exact), exact, ln_bound })
}

/// Parameter grid for the tail comparison: `(N, M, K, δ)` with `δ` in
/// `(0, 1]` for the first bound and above `2e − 1` for the second.
pub fn tail_grid() -> Vec<(HyperGeom, Q, TailBound)> {
    let mut out = Vec::new();
    let deltas1 = [frac(1, 20), frac(1, 5), frac(1, 3), frac(1, 2), frac(3, 4), frac(1, 1)];
    let deltas2 = [frac(9, 2), frac(5, 1), frac(6, 1), frac(8, 1)];
    for n in [20u64, 50, 100, 200, 400] {
        for (num, den) in [(1u64, 2u64), (3, 10), (1, 4), (1, 10), (1, 20)] {
            let m = (n * num / den).max(1);
            for k in [n / 10, n / 4, n / 2] {
                let h = HyperGeom::new(n, m, k.max(1)).expect("grid within range");
                for d in &deltas1 {
                    out.push((h, d.clone(), TailBound::First));
                }
                for d in &deltas2 {
                    out.push((h, d.clone(), TailBound::Second));
                }
            }
        }
    }
    out
}

/// Runs the grid; one tab-separated row per point:
/// `N M K delta bound threshold exact_tail bound_value holds`.
pub fn tail_report(grid: &[(HyperGeom, Q, TailBound)]) -> Result<(String, usize), ConcError> {
    let mut out = String::new();
    let mut failures = 0;
    for (h, d, b) in grid {
        let c = check_tail(h, d, *b)?;
        if !c.holds() {
            failures += 1;
        }
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{}",
            h.population,
            h.good,
            h.draws,
            d,
            if *b == TailBound::First { "bound1" } else { "bound2" },
            c.threshold,
            to_f64(&c.exact),
            c.ln_bound.exp(),
            if c.holds() { "yes" } else { "no" }
        );
    }
    Ok((out, failures))
}

/// Mean and standard error of a sample.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use num_traits::One;

    /// Direct pmf sum through `pmf`, independent of `exact_tail`.
    fn oracle_tail(h: &HyperGeom, t: u64) -> Q {
        (t..=h.draws).map(|x| h.pmf(x)).fold(Q::zero(), |a, b| a + b)
    }

    #[test]
    fn pmf_sums_to_one() {
        let h = HyperGeom::new(30, 12, 9).unwrap();
        assert_eq!(oracle_tail(&h, 0), Q::one());
        assert_eq!(exact_tail(&h, 0), Q::one());
    }

    #[test]
    fn example_point() {
        let h = HyperGeom::new(100, 10, 20).unwrap();
        assert_eq!(h.mean(), int(2));
        let c = check_tail(&h, &int(1), TailBound::First).unwrap();
        assert_eq!(c.threshold, 4);
        assert!((bound1(2.0, 1.0).unwrap() - 0.513417).abs() < 1e-6);
        assert_eq!(c.exact, oracle_tail(&h, 4));
        assert!(c.holds());
    }

    #[test]
    fn tail_shape() {
        let h = HyperGeom::new(40, 15, 12).unwrap();
        let mut prev = exact_tail(&h, 0);
        for t in 1..=13 {
            let cur = exact_tail(&h, t);
            assert!(cur <= prev);
            assert_eq!(cur, oracle_tail(&h, t));
            prev = cur;
        }
        assert!(exact_tail(&h, 13).is_zero());
    }

    #[test]
    fn no_good_items() {
        let h = HyperGeom::new(50, 0, 10).unwrap();
        assert!(exact_tail(&h, 1).is_zero());
        assert!(check_tail(&h, &frac(1, 2), TailBound::First).unwrap().holds());
    }

    #[test]
    fn delta_ranges() {
        assert!(bound1(1.0, 0.0).is_err());
        assert!(bound1(1.0, 1.5).is_err());
        assert!(bound2(1.0, 4.0).is_err());
        assert!(bound2(1.0, 4.5).is_ok());
        assert!((bound1(3.0, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        assert!(HyperGeom::new(5, 6, 1).is_err());
    }

    #[test]
    fn grid_holds() {
        let grid = tail_grid();
        assert!(grid.len() >= 200);
        let (_, failures) = tail_report(&grid[..40]).unwrap();
        assert_eq!(failures, 0);
    }
}
