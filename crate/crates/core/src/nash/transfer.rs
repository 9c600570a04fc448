//! Passing a Nash inequality from `A` to `A^{1/2}`, to `A^{1/2^n}` and,
//! through convex functions, to general powers.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::spectral::{ScalarFunction, SpectralOperator};

use super::rate::RateFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPowerCheck {
    /// `∫_{v(T)}^{v(0)} B(√x) dx`.
    pub lhs: f64,
    /// `(A^{1/2} g, g)²`.
    pub rhs: f64,
    pub v0: f64,
    pub v_t: f64,
}

impl HalfPowerCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Integral inequality along the Poisson trajectory `φ(t) = ‖P_t g‖₂²`,
/// `v = φ²`. The grid is used to confirm that `φ` decreases; the integral
/// itself is computed by adaptive quadrature in `x`.
pub fn halfpower_integral_check(
    op: &SpectralOperator,
    b: &RateFunction,
    g: &DVector<f64>,
    big_t: f64,
    time_grid: &[f64],
) -> Result<HalfPowerCheck> {
    if !(big_t > 0.0) {
        return Err(Error::InvalidArgument(format!("T = {big_t} must be positive")));
    }
    let l1 = op.space().norm1(g);
    if l1 > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("needs ‖g‖₁ ≤ 1, got {l1}")));
    }
    let spec = op.spectral_measure(g)?;
    let phi = |t: f64| -> f64 { spec.iter().map(|&(l, c2)| (-2.0 * t * l.sqrt()).exp() * c2).sum() };
    let mut prev = f64::INFINITY;
    let mut grid: Vec<f64> = time_grid.iter().copied().filter(|&t| t <= big_t).collect();
    grid.push(big_t);
    for &t in &grid {
        let p = phi(t);
        if p > prev * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::CoarseGrid { t });
        }
        prev = p;
    }
    let v0 = phi(0.0).powi(2);
    let v_t = phi(big_t).powi(2);
    let half = op.quadratic_form(0.5, g)?;
    let rhs = half * half;
    let lhs = if v0 > v_t {
        let bp = quad::linspace(v_t, v0, 16);
        quad::integrate(|x| b.value(x.sqrt()), &bp, QuadOptions::new(1e-14, 1e-13, 100_000))?.value
    } else {
        0.0
    };
    Ok(HalfPowerCheck { lhs, rhs, v0, v_t })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenReport {
    /// Minimal `(Φ(A)f,f) − ‖f‖₂² Φ(Λ(‖f‖₂²))` over samples where the base
    /// inequality holds; `None` when it holds for none of them.
    pub transfer_slack: Option<f64>,
    /// Minimal `(Φ(A)f,f) − Φ((Af,f))` over `‖f‖₂ = 1` normalizations.
    pub raw_slack: f64,
    /// Minimal base slack `(Af,f) − ‖f‖₂² Λ(‖f‖₂²)` over all samples.
    pub base_slack: f64,
    pub base_holds: usize,
    pub samples: usize,
}

/// Convexity transfer: where `‖f‖₂² Λ(‖f‖₂²) ≤ (Af,f)` (after `‖f‖₁ = 1`),
/// check `‖f‖₂² (Φ∘Λ)(‖f‖₂²) ≤ (Φ(A)f,f)`; also the raw Jensen step.
pub fn jensen_transfer_check(
    op: &SpectralOperator,
    lambda: &ScalarFunction,
    phi: &ScalarFunction,
    ensemble: &Ensemble,
) -> Result<JensenReport> {
    if !phi.non_decreasing || !phi.convex {
        return Err(Error::FlagViolation(format!("{} is not declared convex non-decreasing", phi.name())));
    }
    if !lambda.non_decreasing {
        return Err(Error::FlagViolation(format!("{} is not declared non-decreasing", lambda.name())));
    }
    let top = op.max_eigenvalue().max(1.0);
    let grid = quad::linspace(0.0, top, 400);
    phi.check_flags(&grid)?;
    lambda.check_flags(&grid)?;
    let space = op.space();
    let rows: Vec<Result<(f64, Option<f64>, f64)>> = ensemble
        .vectors()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|f| {
            let g = *f / space.norm1(f);
            let x = space.norm2_sq(&g);
            let base = op.quadratic_form(1.0, &g)? - x * lambda.eval(x);
            let phi_form = op.form_of(|l| phi.eval(l), &g)?;
            let transfer = if base >= 0.0 { Some(phi_form - x * phi.eval(lambda.eval(x))) } else { None };
            let u = *f / space.norm2(f);
            let raw = op.form_of(|l| phi.eval(l), &u)? - phi.eval(op.quadratic_form(1.0, &u)?);
            Ok((base, transfer, raw))
        })
        .collect();
    let mut report = JensenReport {
        transfer_slack: None,
        raw_slack: f64::INFINITY,
        base_slack: f64::INFINITY,
        base_holds: 0,
        samples: 0,
    };
    for r in rows {
        let (base, transfer, raw) = r?;
        report.samples += 1;
        report.base_slack = report.base_slack.min(base);
        report.raw_slack = report.raw_slack.min(raw);
        if let Some(t) = transfer {
            report.base_holds += 1;
            report.transfer_slack = Some(report.transfer_slack.map_or(t, |s: f64| s.min(t)));
        }
    }
    Ok(report)
}

/// Random points of the `L¹(μ)` unit sphere: exponential magnitudes with
/// random signs, plus sparse draws supported on one or two sites.
pub fn l1_sphere_samples(op: &SpectralOperator, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let n = op.dim();
    let space = op.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + n);
    for i in 0..n {
        let mut f = DVector::zeros(n);
        f[i] = 1.0;
        out.push(f / space.weights()[i]);
    }
    while out.len() < count {
        let mut f = DVector::zeros(n);
        match rng.random_range(0..4) {
            0 => {
                let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                f[i] = 1.0;
                f[j] += rng.random_range(-1.0..1.0);
            }
            _ => {
                let sharp = rng.random_range(0.5..4.0);
                for k in 0..n {
                    let e: f64 = Exp1.sample(&mut rng);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    f[k] = sign * e.powf(sharp);
                }
            }
        }
        let l1 = space.norm1(&f);
        if l1 > 0.0 {
            out.push(f / l1);
        }
    }
    out.truncate(count.max(n));
    out
}

/// Infimum of `(Af,f) / (‖f‖₂² B(‖f‖₂²))` over a dense sphere sample; used
/// as the oracle for whether `B` is a valid Nash rate on small spaces.
pub fn sphere_search_infimum(op: &SpectralOperator, b: &RateFunction, count: usize, seed: u64) -> Result<f64> {
    let samples = l1_sphere_samples(op, count, seed);
    let vals: Vec<Result<f64>> = samples
        .par_iter()
        .map(|g| {
            let x = op.space().norm2_sq(g);
            let d = x * b.value(x);
            if d > 0.0 {
                Ok(op.quadratic_form(1.0, g)? / d)
            } else {
                Ok(f64::INFINITY)
            }
        })
        .collect();
    let mut inf = f64::INFINITY;
    for v in vals {
        inf = inf.min(v?);
    }
    Ok(inf)
}

/// Minimal slack of `(1−ε²)^{1/2} ‖g‖₂² [B(ε‖g‖₂²)]^{1/2} ≤ (A^{1/2}g,g)` over
/// the `‖f‖₁`-normalized ensemble.
pub fn square_transfer_slack(op: &SpectralOperator, b: &RateFunction, eps: f64, ensemble: &Ensemble) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {eps} outside (0, 1)")));
    }
    let space = op.space();
    let c = (1.0 - eps * eps).sqrt();
    let rows: Vec<Result<f64>> = ensemble
        .vectors()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|f| {
            let g = *f / space.norm1(f);
            let x = space.norm2_sq(&g);
            let lhs = c * x * b.value(eps * x).max(0.0).sqrt();
            Ok(op.quadratic_form(0.5, &g)? - lhs)
        })
        .collect();
    let mut worst = f64::INFINITY;
    for r in rows {
        worst = worst.min(r?);
    }
    Ok(worst)
}

/// Constants after `n` half-power steps with parameter `ε`:
/// `a_n [B(b_n x)]^{1/2^n}` is a Nash rate for `A^{1/2^n}`.
pub fn iteration_constants(n: u32, eps: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0f64, 1.0f64);
    for _ in 0..n {
        // a'[B'(x)] with B'(x) = (1−ε²)^{1/2} [a B(b ε x)]^{1/2}
        a = (1.0 - eps * eps).sqrt() * a.sqrt();
        b *= eps;
    }
    (a, b)
}
