//! One-sided α-stable subordinators and the subordinated semigroups
//! `T_{t,α} = ∫ T_s dμ_t^α(s)`.
//!
//! The general-α density uses Kanter's single-integral representation of the
//! positive stable law with Laplace transform `e^{-λ^α}`; its only ground truth
//! here is that Laplace transform, see [`laplace_check`].

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions, QuadResult};
use crate::spectral::SpectralOperator;

/// Node budget for operator-valued subordination integrals.
pub const MAX_SUBORDINATION_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSubordinator {
    alpha: f64,
    t: f64,
}

impl StableSubordinator {
    pub fn new(alpha: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1)")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
        }
        Ok(Self { alpha, t })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Scale `t^{1/α}` mapping the standard law to `μ_t^α`.
    pub fn scale(&self) -> f64 {
        self.t.powf(1.0 / self.alpha)
    }

    /// `log` of the density of `μ_t^α` at `s > 0`.
    pub fn log_density(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("density needs s > 0, got {s}")));
        }
        if self.alpha == 0.5 {
            // t/(2√π) s^{-3/2} e^{-t²/(4s)}
            let t = self.t;
            return Ok(t.ln() - (2.0 * PI.sqrt()).ln() - 1.5 * s.ln() - t * t / (4.0 * s));
        }
        let c = self.scale();
        Ok(kanter_log_density(self.alpha, s / c) - c.ln())
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        Ok(self.log_density(s)?.exp())
    }

    /// Coefficient `c₂(t)` in `log density(s) ≈ −c₂(t) s^{−α/(1−α)}` as `s → 0`.
    pub fn small_s_rate(&self) -> f64 {
        let a = self.alpha;
        kanter_floor(a) * self.t.powf(1.0 / (1.0 - a))
    }

    /// Exponent `α/(1−α)` of the small-`s` decay.
    pub fn small_s_exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    /// Integration range in `u = log s` outside which the measure carries
    /// negligible mass for transforms with decay rate at least `lambda_min`.
    fn log_range(&self, lambda_min: f64) -> (f64, f64) {
        let r = self.small_s_exponent();
        let c2 = self.small_s_rate();
        let u_lo = (c2 / 90.0).ln() / r;
        let u_center = self.scale().ln();
        // heavy tail ~ t s^{-α}: e^{-α (u - u_center)} below 1e-14
        let tail = u_center + 32.0 / self.alpha;
        let u_hi = if lambda_min > 0.0 {
            (60.0 / lambda_min).ln().min(tail)
        } else {
            tail
        };
        let u_hi = u_hi.max(u_center + 3.0).max(u_lo + 1.0);
        (u_lo.min(u_center - 3.0), u_hi)
    }
}

/// `K(0⁺) = α^{α/(1−α)} (1−α)`, the minimum of Kanter's function.
fn kanter_floor(alpha: f64) -> f64 {
    alpha.powf(alpha / (1.0 - alpha)) * (1.0 - alpha)
}

/// `log K(φ)` with `K(φ) = (sin αφ / sin φ)^{1/(1−α)} · sin((1−α)φ) / sin αφ`.
fn kanter_log_k(alpha: f64, phi: f64) -> f64 {
    let sin_phi = if phi > 0.5 * PI { (PI - phi).sin() } else { phi.sin() };
    let sa = (alpha * phi).sin();
    let sb = ((1.0 - alpha) * phi).sin();
    (sa / sin_phi).ln() / (1.0 - alpha) + (sb / sa).ln()
}

/// Log-density of the standard positive α-stable law (Laplace transform
/// `e^{-λ^α}`) at `x > 0`, via Kanter's representation
/// `g(x) = α/(1−α) · x^{−1/(1−α)} / π · ∫₀^π K(φ) e^{−K(φ) x^{−α/(1−α)}} dφ`.
pub fn kanter_log_density(alpha: f64, x: f64) -> f64 {
    if x.powf(-alpha) <= 0.5 {
        return tail_series_log_density(alpha, x);
    }
    let y = x.powf(-alpha / (1.0 - alpha));
    let k0 = kanter_floor(alpha);
    let prefactor = (alpha / (1.0 - alpha)).ln() - x.ln() / (1.0 - alpha) - PI.ln() - k0 * y;
    if k0 * y > 1e10 {
        // Laplace's method at φ = 0, where K(φ) = K0 (1 + αφ²/2 + O(φ⁴))
        return prefactor + 0.5 * (PI * k0 / (2.0 * alpha * y)).ln();
    }
    // integrand shifted by e^{K0 y} so deep-tail values keep relative accuracy
    let integrand = |phi: f64| {
        let lk = kanter_log_k(alpha, phi);
        let k = lk.exp();
        if !k.is_finite() {
            return 0.0;
        }
        let e = lk - (k - k0) * y;
        if e < -745.0 {
            0.0
        } else {
            e.exp()
        }
    };
    let mut bp = Vec::with_capacity(160);
    // refine toward φ = 0 down to the peak width 1/√y
    let j0 = (PI * y.max(1.0).sqrt() * 64.0).log2().ceil().clamp(2.0, 120.0) as i32;
    // refine toward φ = π where K ~ 1/y
    let jp = (PI / (0.01 * y.powf(1.0 - alpha).min(1.0))).log2().ceil().clamp(2.0, 200.0) as i32;
    bp.push(0.0);
    for j in (1..=j0).rev() {
        bp.push(PI * 0.5f64.powi(j));
    }
    for j in 1..=jp {
        bp.push(PI - PI * 0.5f64.powi(j));
    }
    bp.push(PI);
    bp.dedup();
    // K − K0 cancels near φ = 0, leaving integrand noise of order y·K0·ε
    let rel = (64.0 * f64::EPSILON * y * k0).max(1e-13);
    let res = quad::integrate(integrand, &bp, QuadOptions::new(1e-300, rel, 200_000));
    let integral = match res {
        Ok(r) => r.value,
        Err(_) => {
            // fall back to a fixed composite rule; only reached for extreme x
            let fine = quad::linspace(0.0, PI, 4096);
            fine.windows(2)
                .map(|w| 0.5 * (w[1] - w[0]) * (integrand(w[0]) + integrand(w[1])))
                .sum()
        }
    };
    prefactor + integral.ln()
}

/// Large-`x` expansion
/// `g(x) = (1/π) Σ_{k≥1} (−1)^{k+1} Γ(kα+1)/k! · sin(πkα) · x^{−kα−1}`.
fn tail_series_log_density(alpha: f64, x: f64) -> f64 {
    let lx = x.ln();
    let mut sum = 0.0;
    for k in 1..400 {
        let kf = k as f64;
        let log_mag = libm::lgamma(kf * alpha + 1.0) - libm::lgamma(kf + 1.0) - kf * alpha * lx;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * (PI * kf * alpha).sin() * log_mag.exp();
        sum += term;
        if log_mag.exp() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln() - lx - PI.ln()
}

/// Density of `μ_t^α` at `s`.
pub fn stable_density(sub: &StableSubordinator, s: f64) -> Result<f64> {
    sub.density(s)
}

/// `∫₀^∞ e^{−λ s} dμ_t^α(s)` by adaptive quadrature in `u = log s`.
pub fn laplace_transform(sub: &StableSubordinator, lambda: f64) -> Result<QuadResult<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let (u_lo, u_hi) = sub.log_range(lambda);
    let bp = quad::linspace(u_lo, u_hi, ((u_hi - u_lo).ceil() as usize).max(4));
    let integrand = |u: f64| {
        let s = u.exp();
        let e = -lambda * s + sub.log_density(s).unwrap_or(f64::NEG_INFINITY) + u;
        if e < -745.0 {
            0.0
        } else {
            e.exp()
        }
    };
    let tol = if sub.alpha == 0.5 { 1e-12 } else { 1e-10 };
    quad::integrate(integrand, &bp, QuadOptions::new(tol, 1e-13, 200_000))
}

/// `|∫ e^{−λs} dμ_t^α(s) − e^{−tλ^α}|`.
pub fn laplace_check(sub: &StableSubordinator, lambda: f64) -> Result<f64> {
    let r = laplace_transform(sub, lambda)?;
    Ok((r.value - (-sub.t * lambda.powf(sub.alpha)).exp()).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatedSemigroup {
    pub matrix: DMatrix<f64>,
    /// Multiplier applied to each eigenvalue of the base operator.
    pub multipliers: Vec<f64>,
    pub error_estimate: f64,
    pub nodes: usize,
}

/// `T_{t,α} = ∫₀^∞ e^{−sA} dμ_t^α(s)` by quadrature over `s`.
///
/// The operator-valued integrand `e^{−sA} ρ_t(s)` is accumulated on the
/// eigenbasis of `A`, so the result is `U diag(Σ_q w_q ρ_t(s_q) e^{−s_q λ_i}) Uᵀ W`.
/// The kernel of `A` gets the total mass 1 of the probability measure.
pub fn subordinate_semigroup_detailed(
    op: &SpectralOperator,
    alpha: f64,
    t: f64,
) -> Result<SubordinatedSemigroup> {
    let sub = StableSubordinator::new(alpha, t)?;
    let lambdas: Vec<f64> = op.eigenvalues().iter().copied().filter(|&l| l > 0.0).collect();
    let mut multipliers = vec![1.0; op.dim()];
    let (mut error_estimate, mut nodes) = (0.0, 0);
    if !lambdas.is_empty() {
        let lmin = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        let (u_lo, u_hi) = sub.log_range(lmin);
        let bp = quad::linspace(u_lo, u_hi, ((u_hi - u_lo) / 2.0).ceil().max(2.0) as usize);
        let integrand = |u: f64| {
            let s = u.exp();
            let ld = sub.log_density(s).unwrap_or(f64::NEG_INFINITY) + u;
            lambdas
                .iter()
                .map(|&l| {
                    let e = ld - l * s;
                    if e < -745.0 {
                        0.0
                    } else {
                        e.exp()
                    }
                })
                .collect()
        };
        let tol = if alpha == 0.5 { 1e-11 } else { 1e-9 };
        let r = quad::integrate_vec(
            integrand,
            &bp,
            lambdas.len(),
            QuadOptions::new(tol, 0.0, MAX_SUBORDINATION_NODES),
        )?;
        error_estimate = r.error;
        nodes = r.nodes;
        let mut it = r.value.into_iter();
        for (m, &l) in multipliers.iter_mut().zip(op.eigenvalues()) {
            if l > 0.0 {
                *m = it.next().expect("one value per positive eigenvalue");
            }
        }
    }
    Ok(SubordinatedSemigroup {
        matrix: op.matrix_from_multipliers(&multipliers),
        multipliers,
        error_estimate,
        nodes,
    })
}

pub fn subordinate_semigroup(op: &SpectralOperator, alpha: f64, t: f64) -> Result<DMatrix<f64>> {
    Ok(subordinate_semigroup_detailed(op, alpha, t)?.matrix)
}

/// Poisson semigroup `P_t = e^{−t√A}` from
/// `P_t = (1/√π) ∫₀^∞ e^{−u} u^{−1/2} T_{t²/4u} du`, evaluated with `u = v²`.
pub fn poisson_semigroup(op: &SpectralOperator, t: f64) -> Result<DMatrix<f64>> {
    Ok(op.matrix_from_multipliers(&poisson_multipliers(op, t)?))
}

pub fn poisson_multipliers(op: &SpectralOperator, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    let lambdas = op.eigenvalues().to_vec();
    let mut bp: Vec<f64> = (1..=50).rev().map(|j| 8.0 * 0.5f64.powi(j)).collect();
    bp.insert(0, 0.0);
    bp.extend(quad::linspace(8.0 * 0.5f64.powi(1), 8.0, 8).into_iter().skip(1));
    let c = 2.0 / PI.sqrt();
    let integrand = |v: f64| {
        let base = -v * v;
        lambdas
            .iter()
            .map(|&l| {
                if v == 0.0 {
                    return if l == 0.0 { c } else { 0.0 };
                }
                let e = base - l * t * t / (4.0 * v * v);
                if e < -745.0 {
                    0.0
                } else {
                    c * e.exp()
                }
            })
            .collect()
    };
    let r = quad::integrate_vec(
        integrand,
        &bp,
        lambdas.len(),
        QuadOptions::new(1e-12, 0.0, 50_000),
    )?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{build, GeneratorSpec};
    use crate::spectral::MeasureSpace;

    #[test]
    fn half_density_closed_form() {
        let sub = StableSubordinator::new(0.5, 1.0).unwrap();
        let d = stable_density(&sub, 1.0).unwrap();
        let expected = (-0.25f64).exp() / (2.0 * PI.sqrt());
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.21970).abs() < 1e-5);
    }

    #[test]
    fn kanter_agrees_with_half_closed_form() {
        for x in [1e-3, 0.05, 0.3, 1.0, 3.9, 4.1, 50.0, 1e4, 1e12] {
            let k = kanter_log_density(0.5, x);
            let exact = -(2.0 * PI.sqrt()).ln() - 1.5 * x.ln() - 1.0 / (4.0 * x);
            assert!((k - exact).abs() < 1e-9 * exact.abs().max(1.0), "x={x}: {k} vs {exact}");
        }
        // deep tail: compare after removing the dominant −1/(4x)
        for x in [1e-6, 1e-9, 1e-12] {
            let k = kanter_log_density(0.5, x) + 0.25 / x;
            let exact = -(2.0 * PI.sqrt()).ln() - 1.5 * x.ln();
            assert!((k - exact).abs() < 1e-4, "x={x}: {k} vs {exact}");
        }
    }

    #[test]
    fn mass_and_transform() {
        for t in [0.3, 1.0, 5.0] {
            let sub = StableSubordinator::new(0.5, t).unwrap();
            assert!(laplace_check(&sub, 1e-12).unwrap() < 1e-8);
        }
        let sub = StableSubordinator::new(0.7, 1.0).unwrap();
        let r = laplace_transform(&sub, 1.0).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-6);
        let sub = StableSubordinator::new(0.5, 1.0).unwrap();
        assert!(laplace_check(&sub, 1.0).unwrap() < 1e-8);
        let sub = StableSubordinator::new(0.3, 2.0).unwrap();
        assert!(laplace_check(&sub, 5.0).unwrap() < 1e-6);
        assert!(laplace_check(&sub, 1e-9).unwrap() < 1e-6);
    }

    #[test]
    fn scaling_relation() {
        // μ_t^α is the law of t^{1/α} X₁: check through independent transforms
        let a = 0.4;
        let one = StableSubordinator::new(a, 1.0).unwrap();
        let two = StableSubordinator::new(a, 2.5).unwrap();
        let lam = 0.8;
        let c = two.scale();
        let lhs = laplace_transform(&two, lam).unwrap().value;
        let rhs = laplace_transform(&one, lam * c).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-8);
        for s in [0.1, 1.0, 10.0] {
            let d2 = two.density(s).unwrap();
            let d1 = one.density(s / c).unwrap() / c;
            assert!((d2 - d1).abs() < 1e-12 * d1.max(1e-300));
        }
    }

    #[test]
    fn small_s_rate_matches_density() {
        let sub = StableSubordinator::new(0.6, 1.3).unwrap();
        let r = sub.small_s_exponent();
        let (s1, s2) = (1e-3, 2e-3);
        let (l1, l2) = (sub.log_density(s1).unwrap(), sub.log_density(s2).unwrap());
        // log density = -c2 s^{-r} + O(log s); the difference isolates c2 up to log terms
        let est = -(l1 - l2) / (s1.powf(-r) - s2.powf(-r));
        assert!((est / sub.small_s_rate() - 1.0).abs() < 0.01, "{est}");
    }

    #[test]
    fn invalid_arguments() {
        assert!(StableSubordinator::new(1.0, 1.0).is_err());
        assert!(StableSubordinator::new(0.5, 0.0).is_err());
        let sub = StableSubordinator::new(0.5, 1.0).unwrap();
        assert!(sub.density(0.0).is_err());
        assert!(laplace_check(&sub, 0.0).is_err());
    }

    #[test]
    fn scalar_operators() {
        let one = SpectralOperator::diagonal(MeasureSpace::counting(1), &[1.0]).unwrap();
        let m = subordinate_semigroup(&one, 0.5, 2.0).unwrap();
        assert!((m[(0, 0)] - (-2.0f64).exp()).abs() < 1e-10);
        let zero = SpectralOperator::diagonal(MeasureSpace::counting(1), &[0.0]).unwrap();
        assert_eq!(subordinate_semigroup(&zero, 0.3, 1.7).unwrap()[(0, 0)], 1.0);

        let four = SpectralOperator::diagonal(MeasureSpace::counting(1), &[4.0]).unwrap();
        let p = poisson_semigroup(&four, 1.0).unwrap();
        assert!((p[(0, 0)] - (-2.0f64).exp()).abs() < 1e-10);
        let one_p = poisson_semigroup(&one, 1e-6).unwrap();
        assert!((one_p[(0, 0)] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn cycle_route_equivalence() {
        let op = build(&GeneratorSpec::cycle(16)).unwrap();
        let sub = subordinate_semigroup(&op, 0.5, 1.0).unwrap();
        let spectral = op.apply(|x| (-x.sqrt()).exp()).unwrap();
        assert!((sub - &spectral).amax() < 1e-6);
        let p = poisson_semigroup(&op, 1.0).unwrap();
        assert!((p - spectral).amax() < 1e-8);
    }

    #[test]
    fn route_equivalence_grid() {
        let op = build(&GeneratorSpec::cycle(10)).unwrap();
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            for t in [0.1, 1.0, 10.0] {
                let sub = subordinate_semigroup(&op, alpha, t).unwrap();
                let spectral = op.apply(|x| (-t * x.powf(alpha)).exp()).unwrap();
                let dev = (sub - spectral).amax();
                assert!(dev < 1e-6, "alpha={alpha} t={t}: {dev:e}");
            }
        }
    }

    #[test]
    fn poisson_semigroup_law() {
        let op = build(&GeneratorSpec::cycle(8)).unwrap();
        let (s, t) = (0.4, 1.1);
        let lhs = poisson_semigroup(&op, s).unwrap() * poisson_semigroup(&op, t).unwrap();
        let rhs = poisson_semigroup(&op, s + t).unwrap();
        assert!((lhs - rhs).amax() < 1e-8);
    }

    #[test]
    fn l1_contraction_for_markov_generators() {
        let op = build(&GeneratorSpec::cycle(12)).unwrap();
        let space = op.space().clone();
        for alpha in [0.3, 0.7] {
            let m = subordinate_semigroup(&op, alpha, 0.5).unwrap();
            for j in 0..12 {
                let mut f = nalgebra::DVector::zeros(12);
                f[j] = 1.0;
                f[(j + 5) % 12] = -0.4;
                let g = &m * &f;
                assert!(space.norm1(&g) <= space.norm1(&f) + 1e-9);
            }
        }
    }
}
