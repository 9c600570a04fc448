//! Product Gaussian semigroups on the truncated infinite torus and their
//! α-stable subordinates.
//!
//! With coefficients `a_k`, the heat kernel at the identity is
//! `μ_t(e) = Π_k θ(a_k t)` where `θ(t) = Σ_{m∈Z} e^{−tm²}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::subordination::StableSubordinator;

/// Relative truncation tolerance for `log μ_t(e)`.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Direct sum `1 + 2Σ_{m≥1} e^{−tm²}` with tail below `tol`.
pub fn theta_direct(t: f64, tol: f64) -> f64 {
    let mut sum = 1.0;
    let mut m = 1.0f64;
    loop {
        let term = 2.0 * (-t * m * m).exp();
        sum += term;
        // remaining terms are dominated by a geometric series of ratio e^{−t(2m+1)}
        let ratio = (-t * (2.0 * m + 1.0)).exp();
        if term * ratio / (1.0 - ratio) < tol || term == 0.0 {
            return sum;
        }
        m += 1.0;
    }
}

/// Dual form `√(π/t) (1 + 2Σ_{k≥1} e^{−π²k²/t})`.
pub fn theta_dual(t: f64, tol: f64) -> f64 {
    let pref = (PI / t).sqrt();
    pref * theta_direct(PI * PI / t, tol / pref)
}

/// `θ(t)`; the dual form is used for `t < 1`.
pub fn theta(t: f64, tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("theta needs t > 0, got {t}")));
    }
    Ok(if t >= 1.0 { theta_direct(t, tol) } else { theta_dual(t, tol) })
}

/// `log θ(x)` to full relative precision, including for large `x`.
pub fn log_theta(x: f64) -> f64 {
    if x >= 1.0 {
        // 2(q + q⁴ + q⁹ + …) with q = e^{−x}
        let mut s = 0.0;
        let mut m = 1.0f64;
        loop {
            let term = (-x * m * m).exp();
            s += term;
            if term < 1e-18 * s || term == 0.0 {
                break;
            }
            m += 1.0;
        }
        (2.0 * s).ln_1p()
    } else {
        let y = PI * PI / x;
        let mut s = 0.0;
        let mut k = 1.0f64;
        loop {
            let term = (-y * k * k).exp();
            s += term;
            if term < 1e-18 * s.max(1e-300) || term == 0.0 {
                break;
            }
            k += 1.0;
        }
        0.5 * (PI / x).ln() + (2.0 * s).ln_1p()
    }
}

/// Diagonal spectrum `(a_k)_{k ≤ K}` of the product generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusSpectrum {
    pub gamma: f64,
    /// Truncation level `K` (number of coordinates).
    pub k: usize,
    /// Explicit coefficients; `None` means `a_k = k^{1/γ}`.
    pub coefficients: Option<Vec<f64>>,
}

impl TorusSpectrum {
    pub fn new(gamma: f64, k: usize) -> Result<Self> {
        if !(gamma > 0.0) || k == 0 {
            return Err(Error::InvalidArgument(format!("need gamma > 0 and K ≥ 1, got {gamma}, {k}")));
        }
        Ok(Self { gamma, k, coefficients: None })
    }

    pub fn with_coefficients(gamma: f64, a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|&v| !(v > 0.0)) || a.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("coefficients must be positive and non-decreasing".into()));
        }
        Ok(Self { gamma, k: a.len(), coefficients: Some(a) })
    }

    /// `a_k` for `k ≥ 1`.
    pub fn a(&self, k: usize) -> f64 {
        match &self.coefficients {
            Some(a) => a[k - 1],
            None => (k as f64).powf(1.0 / self.gamma),
        }
    }

    /// `N_A(s) = #{k ≤ K : a_k ≤ s}`.
    pub fn counting(&self, s: f64) -> usize {
        let (mut lo, mut hi) = (0usize, self.k);
        // invariant: a_k ≤ s for k ≤ lo, a_k > s for k > hi
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.a(mid) <= s {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// Bound on `Σ_{k > K'} log θ(a_k t)` for the power-law rule, from
    /// `log θ(x) ≤ 2e^{−x}/(1−e^{−x})` and an integral bound of the sum.
    fn power_law_tail(&self, from: usize, t: f64) -> f64 {
        let g = self.gamma;
        let x0 = t * ((from + 1) as f64).powf(1.0 / g);
        let lead = 1.0 / (-(-t * (from as f64 + 1.0).powf(1.0 / g)).exp_m1());
        // Σ_{k>K'} e^{−t k^{1/γ}} ≤ e^{−x0} + ∫_{K'+1}^∞ e^{−t k^{1/γ}} dk
        //   = e^{−x0} + γ t^{−γ} Γ(γ, x0)
        let upper_gamma = quad::integrate(
            |u| (u.ln() * (g - 1.0) - u).exp(),
            &quad::linspace(x0, x0 + 60.0 + 4.0 * g, 16),
            QuadOptions::new(1e-300, 1e-10, 50_000),
        )
        .map(|r| r.value)
        .unwrap_or(f64::INFINITY);
        2.0 * lead * ((-x0).exp() + g * t.powf(-g) * upper_gamma)
    }
}

pub fn counting(spec: &TorusSpectrum, s: f64) -> usize {
    spec.counting(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogDensity {
    /// `Σ_{k ≤ terms} log θ(a_k t)`, a lower bound for the infinite product.
    pub value: f64,
    /// Certified bound on the omitted coordinates.
    pub remainder: f64,
    pub terms: usize,
}

/// Terms with `a_k t` above this are summed only through the tail bound.
const NEGLIGIBLE_X: f64 = 45.0;

/// `log μ_t(e)` with a certified truncation remainder at most `rel_tol`
/// of the retained sum.
pub fn log_density_at_e_tol(spec: &TorusSpectrum, t: f64, rel_tol: f64) -> Result<LogDensity> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    let terms = match &spec.coefficients {
        Some(_) => spec.k,
        None => spec.k.min(spec.counting(NEGLIGIBLE_X / t).max(1)),
    };
    let mut value = 0.0;
    for k in 1..=terms {
        value += log_theta(spec.a(k) * t);
    }
    let remainder = match &spec.coefficients {
        Some(_) => 0.0,
        None => spec.power_law_tail(terms, t),
    };
    if remainder > rel_tol * value.abs().max(f64::MIN_POSITIVE) && remainder > 1e-300 {
        if terms < spec.k {
            // only the omitted exponentially small terms remain
            return Ok(LogDensity { value, remainder, terms });
        }
        return Err(Error::TruncationTooSmall {
            k: spec.k,
            remainder,
            suggested: tail_rule_k(spec.gamma, t, rel_tol),
        });
    }
    Ok(LogDensity { value, remainder, terms })
}

pub fn log_density_at_e(spec: &TorusSpectrum, t: f64) -> Result<LogDensity> {
    log_density_at_e_tol(spec, t, DEFAULT_REL_TOL)
}

/// Smallest `K` (power-law rule) whose remainder at `s_min` is below
/// `rel_tol` of the retained sum.
pub fn tail_rule_k(gamma: f64, s_min: f64, rel_tol: f64) -> usize {
    let mut k = ((1.0 / s_min).powf(gamma).ceil() as usize).max(1);
    loop {
        let spec = TorusSpectrum { gamma, k, coefficients: None };
        let mut value = 0.0;
        for j in 1..=k {
            value += log_theta(spec.a(j) * s_min);
        }
        if spec.power_law_tail(k, s_min) <= rel_tol * value.abs().max(f64::MIN_POSITIVE) || k > 1 << 40 {
            return k;
        }
        k = k + k / 2 + 1;
    }
}

/// Smallest `s` at which `K` coordinates certify `log μ_s(e)` (power-law rule).
pub fn certified_s_min(spec: &TorusSpectrum) -> f64 {
    NEGLIGIBLE_X / (spec.k as f64).powf(1.0 / spec.gamma)
}

/// `c₁ = γ ∫₀^∞ u^{γ−1} log θ(u) du`, the leading coefficient of
/// `log μ_s(e) ~ c₁ s^{−γ}` for `a_k = k^{1/γ}`.
pub fn c1_integral(gamma: f64) -> f64 {
    let mut bp: Vec<f64> = (1..=60).rev().map(|j| 0.5f64.powi(j)).collect();
    bp.insert(0, 0.0);
    bp.extend(quad::linspace(1.0, 80.0, 40).into_iter().skip(1));
    gamma
        * quad::integrate(|u| if u == 0.0 { 0.0 } else { u.powf(gamma - 1.0) * log_theta(u) }, &bp, QuadOptions::new(1e-14, 1e-13, 100_000))
            .expect("c1 integral converges")
            .value
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallSFit {
    pub c1: f64,
    pub log_coefficient: f64,
    pub constant: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub max_residual: f64,
}

/// Regression of `log μ_s(e)` on `[s^{−γ}, log s, 1]` over the certified
/// small-`s` window `[s_min(K), 30 s_min(K)]`.
pub fn small_s_fit(spec: &TorusSpectrum) -> Result<SmallSFit> {
    let s_lo = certified_s_min(spec);
    let s_hi = 30.0 * s_lo;
    let ss = quad::logspace(s_lo, s_hi, 24);
    let ys: Vec<f64> = ss
        .par_iter()
        .map(|&s| log_density_at_e(spec, s).map(|d| d.value))
        .collect::<Result<_>>()?;
    let g = spec.gamma;
    let design = nalgebra::DMatrix::from_fn(ss.len(), 3, |i, j| match j {
        0 => ss[i].powf(-g) * s_lo.powf(g),
        1 => ss[i].ln(),
        _ => 1.0,
    });
    let y = nalgebra::DVector::from_column_slice(&ys);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Classification(format!("small-s regression failed: {e}")))?;
    let resid = (&design * &coef - &y).amax();
    Ok(SmallSFit {
        c1: coef[0] * s_lo.powf(g),
        log_coefficient: coef[1],
        constant: coef[2],
        s_lo,
        s_hi,
        max_residual: resid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Finite,
    Divergent,
    Inconclusive,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Finite => "finite",
            Status::Divergent => "divergent",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinatedResult {
    pub status: Status,
    /// `log μ_{t,α}(e)` when finite and computed.
    pub value: Option<f64>,
    pub alpha: f64,
    pub t: f64,
    /// Growth exponent `γ` of `log μ_s(e)`.
    pub growth_exponent: f64,
    /// Decay exponent `α/(1−α)` of the stable density at 0.
    pub density_exponent: f64,
    pub c1: f64,
    pub c2: f64,
    /// `log μ_s(e) + log ρ_t(s)` at `s = 8, 4, 2, 1 × s_min(K)`.
    pub integrand_witness: Vec<f64>,
}

/// Classifier for one spectrum, caching the small-`s` fit.
#[derive(Debug, Clone)]
pub struct TorusClassifier {
    pub spec: TorusSpectrum,
    pub fit: SmallSFit,
    /// Relative band around `c₁ = c₂(t)` reported as inconclusive.
    pub band: f64,
}

impl TorusClassifier {
    pub fn new(spec: TorusSpectrum) -> Result<Self> {
        let fit = small_s_fit(&spec)?;
        Ok(Self { spec, fit, band: 1e-2 })
    }

    pub fn classify(&self, alpha: f64, t: f64) -> Result<SubordinatedResult> {
        let sub = StableSubordinator::new(alpha, t)?;
        let r = sub.small_s_exponent();
        let g = self.spec.gamma;
        let c2 = sub.small_s_rate();
        let c1 = self.fit.c1;
        let exp_gap = (g - r) / g.max(r);
        let status = if exp_gap > 1e-9 {
            Status::Divergent
        } else if exp_gap < -1e-9 {
            Status::Finite
        } else if c1 > c2 * (1.0 + self.band) {
            Status::Divergent
        } else if c2 > c1 * (1.0 + self.band) {
            Status::Finite
        } else {
            Status::Inconclusive
        };
        let s0 = self.fit.s_lo;
        let integrand_witness = [8.0, 4.0, 2.0, 1.0]
            .iter()
            .map(|&m| {
                let s = m * s0;
                Ok(log_density_at_e(&self.spec, s)?.value + sub.log_density(s)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(SubordinatedResult {
            status,
            value: None,
            alpha,
            t,
            growth_exponent: g,
            density_exponent: r,
            c1,
            c2,
            integrand_witness,
        })
    }

    /// Classification plus, for finite cases, `log ∫ μ_s(e) dμ_t^α(s)`.
    pub fn evaluate(&self, alpha: f64, t: f64) -> Result<SubordinatedResult> {
        let mut res = self.classify(alpha, t)?;
        if res.status == Status::Finite {
            res.value = Some(self.log_value(alpha, t)?);
        }
        Ok(res)
    }

    /// `log(1 + ∫ expm1(log μ_s(e)) ρ_t(s) ds)` in `u = log s`.
    fn log_value(&self, alpha: f64, t: f64) -> Result<f64> {
        let sub = StableSubordinator::new(alpha, t)?;
        let s_cert = self.fit.s_lo;
        let h = |u: f64| -> Result<f64> {
            let s = u.exp();
            let l = log_density_at_e(&self.spec, s)?.value;
            let lm = if l > 30.0 { l } else { l.exp_m1().ln() };
            Ok(lm + sub.log_density(s)? + u)
        };
        let u_hi = 60f64.ln();
        // walk down until the integrand has dropped far below its maximum
        let mut u = u_hi;
        let mut h_max = f64::NEG_INFINITY;
        let mut below = 0;
        let u_lo = loop {
            let v = h(u)?;
            h_max = h_max.max(v);
            if v < h_max - 60.0 {
                below += 1;
                if below >= 4 {
                    break u;
                }
            } else {
                below = 0;
            }
            u -= 0.25;
            if u.exp() < s_cert {
                return Err(Error::TruncationTooSmall {
                    k: self.spec.k,
                    remainder: f64::NAN,
                    suggested: tail_rule_k(self.spec.gamma, u.exp(), DEFAULT_REL_TOL),
                });
            }
        };
        let bp = quad::linspace(u_lo, u_hi, ((u_hi - u_lo) * 2.0).ceil() as usize);
        let mut err = None;
        let r = quad::integrate(
            |u| match h(u) {
                Ok(v) => (v - h_max).exp(),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            &bp,
            QuadOptions::new(1e-300, 1e-10, 20_000),
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        let log_int = h_max + r.value.ln();
        // log(1 + e^{log_int})
        Ok(if log_int > 0.0 { log_int + (-log_int).exp().ln_1p() } else { log_int.exp().ln_1p() })
    }

    /// Bisection on `t` for the sign change of `c₂(t) − c₁`, the critical
    /// case `γ = α/(1−α)`.
    pub fn threshold(&self, alpha: f64) -> Result<f64> {
        let r = alpha / (1.0 - alpha);
        if ((self.spec.gamma - r) / r).abs() > 1e-9 {
            return Err(Error::Classification(format!(
                "threshold exists only at the critical exponent, got alpha/(1-alpha) = {r} vs gamma = {}",
                self.spec.gamma
            )));
        }
        let gap = |t: f64| -> Result<f64> {
            Ok(StableSubordinator::new(alpha, t)?.small_s_rate() - self.fit.c1)
        };
        let (mut lo, mut hi) = (1e-6, 1.0);
        while gap(hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        while hi / lo - 1.0 > 1e-12 {
            let mid = (lo * hi).sqrt();
            if gap(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}

pub fn subordinated_log_density(spec: &TorusSpectrum, alpha: f64, t: f64) -> Result<SubordinatedResult> {
    TorusClassifier::new(spec.clone())?.evaluate(alpha, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub points: Vec<(f64, f64)>,
}

fn loglog_fit(points: Vec<(f64, f64)>) -> Result<ExponentFit> {
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::Classification("log density must be positive to fit its growth".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.0).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let slope = crate::nash::fit_slope(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let intercept = my - slope * mx;
    let max_residual = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    Ok(ExponentFit { exponent: slope, intercept, max_residual, points })
}

/// Slope of `log log μ_{t,α}(e)` against `log(1/t)`; expected `α_c/(α−α_c)`.
pub fn decay_exponent_fit(spec: &TorusSpectrum, alpha: f64, t_grid: &[f64]) -> Result<ExponentFit> {
    let clf = TorusClassifier::new(spec.clone())?;
    let vals: Vec<Result<(f64, f64)>> = t_grid
        .par_iter()
        .map(|&t| {
            let r = clf.evaluate(alpha, t)?;
            match (r.status, r.value) {
                (Status::Finite, Some(v)) => Ok((t, v)),
                _ => Err(Error::Classification(format!("alpha = {alpha}, t = {t} classified {}", r.status))),
            }
        })
        .collect();
    loglog_fit(vals.into_iter().collect::<Result<_>>()?)
}

/// Slope of `log log μ_t(e)` against `log(1/t)`; expected `γ`.
pub fn profile_exponent_fit(spec: &TorusSpectrum, t_grid: &[f64]) -> Result<ExponentFit> {
    let pts: Vec<Result<(f64, f64)>> =
        t_grid.par_iter().map(|&t| Ok((t, log_density_at_e(spec, t)?.value))).collect();
    loglog_fit(pts.into_iter().collect::<Result<_>>()?)
}
