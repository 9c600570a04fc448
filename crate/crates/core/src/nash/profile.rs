//! Decay profiles `m(t)` and the transforms built from them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::linspace;

type Real = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Decreasing profile `m`, stored through `M = −log m` and `M′` so that
/// profiles such as `e^{t^{−γ}}` stay representable near `t = 0`.
#[derive(Clone)]
pub struct DecayProfile {
    name: String,
    big_m: Real,
    dm: Real,
    domain: (f64, f64),
}

impl fmt::Debug for DecayProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecayProfile")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl DecayProfile {
    /// Profile from `M = −log m` and its derivative `M′`.
    pub fn from_log(
        name: impl Into<String>,
        big_m: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dm: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), big_m: Arc::new(big_m), dm: Arc::new(dm), domain: (1e-12, 1e12) }
    }

    /// `m(t) = t^{−n/2}`.
    pub fn power(n: f64) -> Self {
        Self::from_log(format!("t^-{}", n / 2.0), move |t| 0.5 * n * t.ln(), move |t| 0.5 * n / t)
    }

    /// `m(t) = e^{−t}`.
    pub fn exponential() -> Self {
        Self::from_log("exp(-t)", |t| t, |_| 1.0)
    }

    /// `m(t) = e^{a t^{−γ}}`.
    pub fn stretched_exp_scaled(gamma: f64, a: f64) -> Self {
        Self::from_log(
            format!("exp({a}*t^-{gamma})"),
            move |t| -a * t.powf(-gamma),
            move |t| a * gamma * t.powf(-gamma - 1.0),
        )
    }

    /// `m(t) = e^{t^{−γ}}`.
    pub fn stretched_exp(gamma: f64) -> Self {
        Self::stretched_exp_scaled(gamma, 1.0)
    }

    /// `c · m(t)`.
    pub fn times(&self, c: f64) -> Self {
        let (m, dm) = (self.big_m.clone(), self.dm.clone());
        let lc = c.ln();
        Self {
            name: format!("{c}*{}", self.name),
            big_m: Arc::new(move |t| m(t) - lc),
            dm,
            domain: self.domain,
        }
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn m(&self, t: f64) -> f64 {
        (-(self.big_m)(t)).exp()
    }

    /// `M(t) = −log m(t)`.
    pub fn big_m(&self, t: f64) -> f64 {
        (self.big_m)(t)
    }

    /// `M′(t)`; equals `−m′(t)/m(t)`.
    pub fn dm(&self, t: f64) -> f64 {
        (self.dm)(t)
    }

    /// Checks that `m` strictly decreases on `grid` and that `M′` matches a
    /// central difference of `M` to `1e−5` relative. Returns the worst
    /// relative derivative mismatch.
    pub fn check_consistency(&self, grid: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in grid.windows(2) {
            if self.big_m(w[1]) <= self.big_m(w[0]) {
                return Err(Error::NotDecreasing { t: w[1], derivative: self.dm(w[1]) });
            }
        }
        for &t in grid {
            let h = 1e-5 * t;
            let fd = (self.big_m(t + h) - self.big_m(t - h)) / (2.0 * h);
            let d = self.dm(t);
            let rel = (fd - d).abs() / d.abs().max(1e-300);
            worst = worst.max(rel);
        }
        if worst > 1e-5 {
            return Err(Error::InvalidArgument(format!(
                "derivative rule of {} disagrees with finite differences (relative {worst:e})",
                self.name
            )));
        }
        Ok(worst)
    }

    /// `m⁻¹(x)` by bisection in `log t` to `1e−10` relative.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::OutsideRange { x });
        }
        let target = -x.ln();
        let (mut lo, mut hi) = (self.domain.0.ln(), self.domain.1.ln());
        let (m_lo, m_hi) = (self.big_m(lo.exp()), self.big_m(hi.exp()));
        if !(target >= m_lo && target <= m_hi) {
            return Err(Error::OutsideRange { x });
        }
        while hi - lo > 1e-11 {
            let mid = 0.5 * (lo + hi);
            if self.big_m(mid.exp()) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }
}

/// `Θ(x) = −m′(m⁻¹(x)) = x · M′(m⁻¹(x))`.
pub fn theta_from_profile(p: &DecayProfile, x: f64) -> Result<f64> {
    let t = p.inverse(x)?;
    Ok(x * p.dm(t))
}

const RATE_GRID_POINTS: usize = 400;
const RATE_LOG_T_LIMIT: f64 = 690.0;

/// `B(x) = sup_{t>0} (t log x + t M(1/t))` for `x > 1`.
pub fn rate_from_profile(p: &DecayProfile, x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::InvalidArgument(format!("rate needs x > 1, got {x}")));
    }
    rate_from_profile_at_log(p, x.ln())
}

/// Same as [`rate_from_profile`] with `y = log x > 0`, usable where `x` overflows.
pub fn rate_from_profile_at_log(p: &DecayProfile, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("rate needs log x > 0, got {y}")));
    }
    let obj = |lt: f64| {
        let t = lt.exp();
        t * y + t * p.big_m(1.0 / t)
    };
    // slide a window of width log(1e16) while the maximum sits on an edge
    let width = 16.0 * 10f64.ln();
    let mut lo = -0.5 * width;
    let mut moved: i8 = 0;
    loop {
        let grid: Vec<f64> = linspace(lo, lo + width, RATE_GRID_POINTS - 1);
        let vals: Vec<f64> = grid.iter().map(|&lt| obj(lt)).collect();
        let (mut best, mut best_v) = (0, f64::NEG_INFINITY);
        for (i, &v) in vals.iter().enumerate() {
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        if best_v == f64::INFINITY {
            return Err(Error::UnboundedRate(format!("t log x + t M(1/t) overflows for {} at log x = {y}", p.name())));
        }
        let last = grid.len() - 1;
        let step = if best == last && vals[last] > vals[last - 1] && moved >= 0 {
            1
        } else if best == 0 && vals[0] > vals[1] && moved <= 0 {
            -1
        } else {
            0
        };
        if step != 0 {
            lo += step as f64 * (width - 1.0);
            moved = step;
            if lo < -RATE_LOG_T_LIMIT || lo + width > RATE_LOG_T_LIMIT {
                return Err(Error::UnboundedRate(format!(
                    "sup over t for {} is not attained for |log t| ≤ {RATE_LOG_T_LIMIT} at log x = {y}",
                    p.name()
                )));
            }
            continue;
        }
        let (a, b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(last)]);
        let (lt, v) = golden_max(obj, a, b, 1e-13);
        return Ok(v.max(best_v).max(obj(lt)));
    }
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Best constant `c` with `M′(u) ≥ c M′(t)` for `u ∈ [t, 2t]`, over `t_grid`.
pub fn check_condition_d(p: &DecayProfile, t_grid: &[f64]) -> Result<f64> {
    const SUB: usize = 64;
    let mut c = f64::INFINITY;
    for &t in t_grid {
        let d0 = p.dm(t);
        if !(d0 > 0.0) {
            return Err(Error::NotDecreasing { t, derivative: d0 });
        }
        for k in 0..=SUB {
            let u = t * (1.0 + k as f64 / SUB as f64);
            let du = p.dm(u);
            if !(du > 0.0) {
                return Err(Error::NotDecreasing { t: u, derivative: du });
            }
            c = c.min(du / d0);
        }
    }
    Ok(c)
}

/// Smallest `C₁` with `m₁(t) ≤ C₁ m₂(C₂ t)` on `grid`, or `None` when the
/// ratio keeps growing beyond the grid ends.
pub fn feasible_constant(p1: &DecayProfile, p2: &DecayProfile, c2: f64, grid: &[f64]) -> Option<f64> {
    let log_ratio = |t: f64| -p1.big_m(t) + p2.big_m(c2 * t);
    let mut sup = grid.iter().map(|&t| log_ratio(t)).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    // probe beyond both ends: the ratio is bounded only if its increments
    // over successive factors of 1e3 shrink geometrically
    for (end, near, far) in [(lo, lo * 1e-3, lo * 1e-6), (hi, hi * 1e3, hi * 1e6)] {
        let (e, a, b) = (log_ratio(end), log_ratio(near), log_ratio(far));
        if !a.is_finite() || !b.is_finite() {
            return None;
        }
        let (d1, d2) = (a - e, b - a);
        if d2 > 1e-12 * (1.0 + b.abs()) {
            if d1 <= 0.0 || d2 > 0.1 * d1 {
                return None;
            }
            let q = d2 / d1;
            sup = sup.max(b + d2 * q / (1.0 - q));
        }
        sup = sup.max(a).max(b);
    }
    Some(sup.exp())
}

/// Grid search over `C₂ = 2^{k/8}`, `|k| ≤ 80`, for the relation
/// `m₁(t) ≤ C₁ m₂(C₂ t)`. Among feasible pairs returns the one closest to
/// `(1, 1)` in `|log C₁| + |log C₂|`, preferring smaller `|log C₂|` on ties.
pub fn profile_equivalence(p1: &DecayProfile, p2: &DecayProfile, grid: &[f64]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for k in -80..=80 {
        let c2 = 2f64.powf(k as f64 / 8.0);
        if let Some(c1) = feasible_constant(p1, p2, c2, grid) {
            let cost = c1.ln().abs() + c2.ln().abs();
            let better = match best {
                None => true,
                Some((_, bc2, bcost)) => {
                    cost < bcost - 1e-12 || (cost < bcost + 1e-12 && c2.ln().abs() < bc2.ln().abs())
                }
            };
            if better {
                best = Some((c1, c2, cost));
            }
        }
    }
    best.map(|(c1, c2, _)| (c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::logspace;
    use std::f64::consts::E;

    #[test]
    fn theta_examples() {
        let exp = DecayProfile::exponential();
        for x in [0.9, 0.3, 1e-5] {
            assert!((theta_from_profile(&exp, x).unwrap() - x).abs() < 1e-9 * x);
        }
        let inv = DecayProfile::power(2.0);
        for x in [1e-3, 0.5, 2.0, 100.0] {
            let th = theta_from_profile(&inv, x).unwrap();
            assert!((th / (x * x) - 1.0).abs() < 1e-9);
        }
        assert!(matches!(theta_from_profile(&exp, 2.0), Err(Error::OutsideRange { .. })));
        let grid = logspace(1e-4, 1e4, 50);
        let vals: Vec<f64> = grid.iter().map(|&x| theta_from_profile(&inv, x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rate_closed_forms() {
        let b = rate_from_profile(&DecayProfile::power(2.0), 10.0).unwrap();
        assert!((b - 10.0 / E).abs() < 1e-6 * b);
        assert!((b - 3.6788).abs() < 1e-4);
        let y = 5.0f64;
        let b = rate_from_profile_at_log(&DecayProfile::stretched_exp(1.0), y).unwrap();
        assert!((b - y * y / 4.0).abs() < 1e-6 * b);
        let xs = logspace(1.5, 1e6, 40);
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x| rate_from_profile(&DecayProfile::power(3.0), x).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rate_errors() {
        assert!(rate_from_profile(&DecayProfile::power(2.0), 1.0).is_err());
        // tM(1/t) = t² grows without bound
        let p = DecayProfile::from_log("exp(-t^-1)", |t| 1.0 / t, |t| -1.0 / (t * t));
        assert!(matches!(rate_from_profile(&p, 5.0), Err(Error::UnboundedRate(_))));
    }

    #[test]
    fn condition_d_constants() {
        let grid = logspace(1e-3, 1e3, 100);
        let c = check_condition_d(&DecayProfile::power(3.0), &grid).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        let c = check_condition_d(&DecayProfile::exponential(), &grid).unwrap();
        assert_eq!(c, 1.0);
        let c = check_condition_d(&DecayProfile::stretched_exp(2.0), &grid).unwrap();
        assert!((c - 0.125).abs() < 1e-12);
        let bad = DecayProfile::from_log("bad", |t| -t, |_| -1.0);
        assert!(check_condition_d(&bad, &grid).is_err());
    }

    #[test]
    fn equivalence_examples() {
        let grid = logspace(1e-3, 1e3, 200);
        let p = DecayProfile::power(2.0);
        let (c1, c2) = profile_equivalence(&p, &p, &grid).unwrap();
        assert!((c1 - 1.0).abs() < 1e-12 && c2 == 1.0);
        let (c1, c2) = profile_equivalence(&p.times(2.0), &p, &grid).unwrap();
        assert!((c1 - 2.0).abs() < 1e-12 && c2 == 1.0);
        let m1 = DecayProfile::stretched_exp(1.0);
        let m2 = DecayProfile::stretched_exp_scaled(1.0, 2.0);
        let c1 = feasible_constant(&m1, &m2, 0.5, &grid).unwrap();
        assert!((c1 - 1.0).abs() < 1e-9);
        assert!(profile_equivalence(&m1, &m2, &grid).is_some());
        // t^{-1} is not dominated by any multiple of t^{-2}(C₂ t) near infinity
        assert!(profile_equivalence(&DecayProfile::power(2.0), &DecayProfile::power(4.0), &grid).is_none());
    }

    #[test]
    fn consistency_check() {
        let grid = logspace(1e-2, 1e2, 30);
        assert!(DecayProfile::stretched_exp(1.5).check_consistency(&grid).unwrap() < 1e-5);
        let wrong = DecayProfile::from_log("wrong", |t| t.ln(), |t| 2.0 / t);
        assert!(wrong.check_consistency(&grid).is_err());
    }
}
