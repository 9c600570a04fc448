//! The Ornstein–Uhlenbeck semigroup in the normalized Hermite basis of the
//! standard Gaussian measure `γ₁`.
//!
//! Functions are coefficient vectors `c` with `f = Σ_k c_k h_k`,
//! `h_k = He_k/√k!`. The generator is diagonal with eigenvalues `k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{Ensemble, Family, Sample};
use crate::error::{Error, Result};
use crate::nash::{NashCertificate, SampleRecord};
use crate::quad::{self, QuadOptions};
use crate::spectral::{MeasureSpace, SpectralOperator};

/// `h_0(x), …, h_{m−1}(x)` by the three-term recurrence.
pub fn hermite_values(m: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(m);
    if m == 0 {
        return h;
    }
    h.push(1.0);
    if m > 1 {
        h.push(x);
    }
    for k in 1..m.saturating_sub(1) {
        let kf = k as f64;
        h.push((x * h[k] - kf.sqrt() * h[k - 1]) / (kf + 1.0).sqrt());
    }
    h
}

/// Gauss–Hermite rule for `γ₁` with `q` nodes: Golub–Welsch followed by
/// Newton polishing of the nodes and Christoffel weights `1/Σ_{k<q} h_k²`.
pub fn gauss_hermite(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let jacobi = DMatrix::from_fn(q, q, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let h = hermite_values(q + 1, *x);
            let dx = h[q] / ((q as f64).sqrt() * h[q - 1]);
            *x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    // exact symmetry about 0
    for i in 0..q / 2 {
        let m = 0.5 * (nodes[q - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[q - 1 - i] = m;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    let weights = nodes.iter().map(|&x| 1.0 / hermite_values(q, x).iter().map(|v| v * v).sum::<f64>()).collect();
    (nodes, weights)
}

#[derive(Debug, Clone)]
pub struct HermiteModel {
    n: usize,
    q: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `h_k(x_i)`, one row per node.
    basis: DMatrix<f64>,
}

impl HermiteModel {
    /// Degrees `0..n−1` with `q = 2n` nodes.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_nodes(n, 2 * n)
    }

    pub fn with_nodes(n: usize, q: usize) -> Result<Self> {
        if n == 0 || q < n {
            return Err(Error::InvalidArgument(format!("need 1 ≤ n ≤ q, got n = {n}, q = {q}")));
        }
        let (nodes, weights) = gauss_hermite(q);
        let mut basis = DMatrix::zeros(q, n);
        for (i, &x) in nodes.iter().enumerate() {
            for (k, v) in hermite_values(n, x).into_iter().enumerate() {
                basis[(i, k)] = v;
            }
        }
        Ok(Self { n, q, nodes, weights, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, c: &DVector<f64>) -> Result<()> {
        if c.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: c.len() });
        }
        Ok(())
    }

    pub fn eval(&self, c: &DVector<f64>, x: f64) -> f64 {
        hermite_values(c.len(), x).iter().zip(c.iter()).map(|(h, c)| h * c).sum()
    }

    pub fn values_at_nodes(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(c)?;
        Ok(&self.basis * c)
    }

    /// Largest `|Σ_i w_i h_j(x_i) h_k(x_i) − δ_jk|` over `j + k ≤ 2q − 2`.
    pub fn gram_defect(&self) -> f64 {
        let m = self.q;
        let rows: Vec<Vec<f64>> = self.nodes.iter().map(|&x| hermite_values(m, x)).collect();
        let mut worst = 0.0f64;
        for j in 0..m {
            for k in j..m {
                if j + k > 2 * m - 2 {
                    break;
                }
                let s: f64 = rows.iter().zip(&self.weights).map(|(h, w)| w * h[j] * h[k]).sum();
                worst = worst.max((s - if j == k { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// The generator on coefficient space (Euclidean = `L²(γ₁)` by Parseval).
    pub fn operator(&self) -> SpectralOperator {
        let eig: Vec<f64> = (0..self.n).map(|k| k as f64).collect();
        SpectralOperator::diagonal(MeasureSpace::counting(self.n), &eig).expect("diagonal OU generator")
    }

    /// `(A^α f, f) = Σ k^α c_k²`.
    pub fn energy(&self, c: &DVector<f64>, alpha: f64) -> f64 {
        c.iter().enumerate().skip(1).map(|(k, v)| (k as f64).powf(alpha) * v * v).sum()
    }

    /// `T_{t,α} f`, i.e. `c_k ↦ e^{−t k^α} c_k`.
    pub fn semigroup(&self, c: &DVector<f64>, t: f64, alpha: f64) -> DVector<f64> {
        DVector::from_iterator(c.len(), c.iter().enumerate().map(|(k, v)| v * (-t * (k as f64).powf(alpha)).exp()))
    }

    /// `|‖f‖₂ (quadrature) − ‖c‖₂|`.
    pub fn parseval_defect(&self, c: &DVector<f64>) -> Result<f64> {
        Ok((self.quadrature_norm(c, 2)? - c.norm()).abs())
    }

    fn quadrature_norm(&self, c: &DVector<f64>, p: u32) -> Result<f64> {
        let degree = p as usize * (self.n - 1);
        if degree > 2 * self.q - 1 {
            return Err(Error::InvalidArgument(format!(
                "q = {} nodes integrate degree ≤ {}, the L^{p} norm needs {degree}",
                self.q,
                2 * self.q - 1
            )));
        }
        let v = self.values_at_nodes(c)?;
        let s: f64 = v.iter().zip(&self.weights).map(|(f, w)| w * f.abs().powi(p as i32)).sum();
        Ok(s.powf(1.0 / p as f64))
    }

    /// Real sign changes of `f`, located on a fine grid and refined by bisection.
    pub fn roots(&self, c: &DVector<f64>) -> Vec<f64> {
        let r = self.support_radius(2.0);
        let grid = quad::linspace(-r, r, 64 * self.n.max(4));
        let mut roots = Vec::new();
        let f = |x: f64| self.eval(c, x);
        let mut prev = (grid[0], f(grid[0]));
        for &x in &grid[1..] {
            let v = f(x);
            if v == 0.0 {
                roots.push(x);
            } else if prev.1 * v < 0.0 {
                let (mut a, mut b, fa) = (prev.0, x, prev.1);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if (f(m) < 0.0) == (fa < 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-15 * m.abs().max(1.0) {
                        break;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev = (x, v);
        }
        roots
    }

    /// Radius beyond which `|f|^p` times the Gaussian density is negligible.
    fn support_radius(&self, p: f64) -> f64 {
        8.0 + 2.0 * (p * self.n as f64).sqrt()
    }

    /// `∫ g(f(x)) dγ₁(x)` split at the roots of `f`.
    fn integrate_split(&self, c: &DVector<f64>, p: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        let r = self.support_radius(p);
        let mut bp = quad::linspace(-r, r, (2.0 * r).ceil() as usize);
        bp.extend(self.roots(c));
        bp.sort_by(f64::total_cmp);
        bp.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let norm = 1.0 / (2.0 * PI).sqrt();
        Ok(quad::integrate(
            |x| g(self.eval(c, x)) * (-0.5 * x * x).exp() * norm,
            &bp,
            QuadOptions::new(1e-300, 1e-12, 400_000),
        )?
        .value)
    }

    /// `∫ f² log(|f|/‖f‖₂) dγ₁`, with `‖f‖₂` the coefficient norm.
    pub fn entropy(&self, c: &DVector<f64>) -> Result<f64> {
        self.check(c)?;
        let l2 = c.norm();
        if l2 == 0.0 {
            return Ok(0.0);
        }
        let ll = l2.ln();
        self.integrate_split(c, 2.0, |f| if f == 0.0 { 0.0 } else { f * f * (f.abs().ln() - ll) })
    }
}

/// `‖f‖_p` with respect to `γ₁`. Even integer `p` uses the exact Gauss rule
/// (which needs `q ≥ p(n−1)/2 + 1`); other `p` integrate `|f|^p` adaptively
/// between the real roots of `f`.
pub fn mixed_norm(model: &HermiteModel, c: &DVector<f64>, p: f64) -> Result<f64> {
    model.check(c)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be a finite value ≥ 1")));
    }
    if p.fract() == 0.0 && (p as u32) % 2 == 0 {
        return model.quadrature_norm(c, p as u32);
    }
    Ok(model.integrate_split(c, p, |f| f.abs().powf(p))?.powf(1.0 / p))
}

/// Random coefficient vectors of length `n`: i.i.d. Gaussian, algebraically
/// decaying, and small perturbations of the constant.
pub fn coefficient_ensemble(n: usize, count: usize, seed: u64) -> Ensemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let (family, f) = match i % 3 {
            0 => (Family::Gaussian, DVector::from_fn(n, |_, _| z())),
            1 => (Family::HeatSmoothed, DVector::from_fn(n, |k, _| z() / (k as f64 + 1.0))),
            _ => (Family::Custom, DVector::from_fn(n, |k, _| if k == 0 { 1.0 } else { 0.3 * z() / (k as f64) })),
        };
        samples.push(Sample { family, f });
    }
    Ensemble { descriptor: format!("hermite(n={n},count={count},seed={seed})"), samples }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsiReport {
    pub min_slack: f64,
    pub witness_index: usize,
    /// `(Af,f) − ∫ f² log(|f|/‖f‖₂) dγ₁` per sample.
    pub slacks: Vec<f64>,
}

pub fn ou_lsi_check(model: &HermiteModel, ensemble: &Ensemble) -> Result<LsiReport> {
    let slacks: Vec<f64> = ensemble
        .samples
        .par_iter()
        .map(|s| Ok(model.energy(&s.f, 1.0) - model.entropy(&s.f)?))
        .collect::<Result<_>>()?;
    let (witness_index, min_slack) = slacks
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(LsiReport { min_slack, witness_index, slacks })
}

/// Ratios `(A^α g, g)/(‖g‖₂² (log ‖g‖₂)^α)` for `g = f/‖f‖₁`; samples with
/// `‖g‖₂ ≤ 1` are recorded but not scored.
pub fn ou_log_nash_check(model: &HermiteModel, alpha: f64, ensemble: &Ensemble) -> Result<NashCertificate> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    let rows: Vec<(SampleRecord, DVector<f64>)> = ensemble
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let l1 = mixed_norm(model, &s.f, 1.0)?;
            if !(l1 > 0.0) {
                return Err(Error::InvalidArgument(format!("sample {index} vanishes")));
            }
            let g = &s.f / l1;
            let l2sq = g.norm_squared();
            let form = model.energy(&g, alpha);
            let lg = 0.5 * l2sq.ln();
            let rate = if lg > 0.0 { lg.powf(alpha) } else { 0.0 };
            let d = l2sq * rate;
            let ratio = (d > 0.0).then(|| form / d);
            Ok((SampleRecord { index, family: s.family.to_string(), l1, l2sq, form, rate, ratio }, g))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, usize, DVector<f64>)> = None;
    let mut degenerate = 0;
    let mut records = Vec::with_capacity(rows.len());
    for (rec, g) in rows {
        match rec.ratio {
            Some(r) if best.as_ref().map_or(true, |b| r < b.0) => best = Some((r, rec.index, g)),
            Some(_) => {}
            None => degenerate += 1,
        }
        records.push(rec);
    }
    let (ratio_infimum, witness_index, witness) =
        best.ok_or_else(|| Error::DegenerateEnsemble("no sample has ‖f‖₂ > 1 after L¹ normalization".into()))?;
    Ok(NashCertificate {
        ratio_infimum,
        witness,
        witness_index,
        alpha,
        ensemble: ensemble.descriptor.clone(),
        rate: format!("(log x)^{alpha} on x = ‖f‖₂"),
        records,
        degenerate,
        constants: Vec::new(),
    })
}

/// First `n` Hermite coefficients of `e^{θx}` up to the factor `e^{θ²/2}`,
/// i.e. `θ^k/√k!`, and the relative `L²` projection error.
pub fn exponential_candidate(n: usize, theta: f64) -> (DVector<f64>, f64) {
    let mut c = DVector::zeros(n);
    let mut v = 1.0;
    for k in 0..n {
        if k > 0 {
            v *= theta / (k as f64).sqrt();
        }
        c[k] = v;
    }
    // e^{−θ²} Σ_{k≥n} θ^{2k}/k!
    let x = theta * theta;
    let mut term = (-x + n as f64 * x.max(f64::MIN_POSITIVE).ln() - libm::lgamma(n as f64 + 1.0)).exp();
    let mut tail = 0.0;
    let mut k = n as f64;
    while term > 1e-300 && (term > 1e-17 * tail || k < x) {
        tail += term;
        k += 1.0;
        term *= x / k;
    }
    if theta == 0.0 {
        tail = if n == 0 { 1.0 } else { 0.0 };
    }
    (c, tail.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    /// `sup ‖T_{t,α} f‖₄ / ‖f‖₂` over the candidate set.
    pub ratio: f64,
    /// `exp(θ)` or `ensemble[i]`.
    pub argmax: String,
    /// Projection error of the maximizing exponential, 0 for ensemble samples.
    pub projection_error: f64,
}

/// Candidate-set maximization of `‖T_{t,α} f‖₄/‖f‖₂` for each truncation.
pub fn hypercontractivity_probe(
    n_list: &[usize],
    alpha: f64,
    t: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<Vec<GrowthRow>> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("need alpha in (0,1] and t > 0, got {alpha}, {t}")));
    }
    n_list
        .iter()
        .map(|&n| {
            let model = HermiteModel::new(n)?;
            let ratio_of = |c: &DVector<f64>| -> Result<f64> {
                let scale = c.amax();
                let c = c / scale;
                Ok(mixed_norm(&model, &model.semigroup(&c, t, alpha), 4.0)? / c.norm())
            };
            let mut best = GrowthRow { n, ratio: 1.0, argmax: "h0".into(), projection_error: 0.0 };
            let theta_max = 1.5 * (n as f64).sqrt();
            for theta in quad::linspace(0.0, theta_max, 60).into_iter().skip(1) {
                let (c, err) = exponential_candidate(n, theta);
                let r = ratio_of(&c)?;
                if r > best.ratio {
                    best = GrowthRow { n, ratio: r, argmax: format!("exp({theta:.6})"), projection_error: err };
                }
            }
            let ens = coefficient_ensemble(n, ensemble_size, seed);
            for (i, s) in ens.samples.iter().enumerate() {
                let r = ratio_of(&s.f)?;
                if r > best.ratio {
                    best = GrowthRow { n, ratio: r, argmax: format!("ensemble[{i}]"), projection_error: 0.0 };
                }
            }
            Ok(best)
        })
        .collect()
}

/// Tensor-product Hermite truncation in `d ≤ 3` dimensions with `n ≤ 8`
/// degrees per axis; coefficients are stored with the last axis fastest.
#[derive(Debug, Clone)]
pub struct TensorHermite {
    pub d: usize,
    axis: HermiteModel,
}

impl TensorHermite {
    /// Gauss rule with `q` nodes per axis.
    pub fn new(d: usize, n: usize, q: usize) -> Result<Self> {
        if !(1..=3).contains(&d) || !(1..=8).contains(&n) {
            return Err(Error::InvalidArgument(format!("tensor models need d ≤ 3 and n ≤ 8, got d = {d}, n = {n}")));
        }
        Ok(Self { d, axis: HermiteModel::with_nodes(n, q)? })
    }

    pub fn len(&self) -> usize {
        self.axis.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let n = self.axis.n;
        let mut idx = vec![0; self.d];
        for slot in idx.iter_mut().rev() {
            *slot = i % n;
            i /= n;
        }
        idx
    }

    /// `(Af,f) = Σ |k| c_k²` with `|k| = k₁ + … + k_d`.
    pub fn energy(&self, c: &DVector<f64>) -> f64 {
        c.iter().enumerate().map(|(i, v)| self.multi_index(i).iter().sum::<usize>() as f64 * v * v).sum()
    }

    /// `∫ f² log(|f|/‖f‖₂) dγ_d` by the tensor Gauss rule. Accurate for `f`
    /// bounded away from zero, where the integrand is smooth.
    pub fn entropy(&self, c: &DVector<f64>) -> Result<f64> {
        if c.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: c.len() });
        }
        let q = self.axis.q;
        let ll = c.norm().ln();
        let mut total = 0.0;
        for node in 0..q.pow(self.d as u32) {
            let mut rem = node;
            let mut pos = vec![0; self.d];
            for slot in pos.iter_mut().rev() {
                *slot = rem % q;
                rem /= q;
            }
            let w: f64 = pos.iter().map(|&p| self.axis.weights[p]).product();
            let f: f64 = c
                .iter()
                .enumerate()
                .map(|(i, v)| v * self.multi_index(i).iter().zip(&pos).map(|(&k, &p)| self.axis.basis[(p, k)]).product::<f64>())
                .sum();
            if f != 0.0 {
                total += w * f * f * (f.abs().ln() - ll);
            }
        }
        Ok(total)
    }

    pub fn lsi_slack(&self, c: &DVector<f64>) -> Result<f64> {
        Ok(self.energy(c) - self.entropy(c)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, k: usize) -> DVector<f64> {
        DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })
    }

    #[test]
    fn quadrature_is_exact() {
        for q in [1, 2, 5, 16, 64, 128] {
            let m = HermiteModel::with_nodes(q.min(8), q).unwrap();
            assert!(m.gram_defect() < 1e-10, "q={q}: {}", m.gram_defect());
            assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
        let (x, w) = gauss_hermite(3);
        assert!((x[2] - 3f64.sqrt()).abs() < 1e-15 && x[1] == 0.0);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let m = HermiteModel::new(8).unwrap();
        for p in [1.0, 2.0, 4.0, 3.0] {
            assert!((mixed_norm(&m, &unit(8, 0), p).unwrap() - 1.0).abs() < 1e-12);
        }
        let x = unit(8, 1);
        assert!((mixed_norm(&m, &x, 2.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((mixed_norm(&m, &x, 1.0).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-11);
        assert!((mixed_norm(&m, &x, 4.0).unwrap() - 3f64.powf(0.25)).abs() < 1e-13);
        assert!(mixed_norm(&m, &x, 0.5).is_err());
        let small = HermiteModel::with_nodes(8, 10).unwrap();
        assert!(mixed_norm(&small, &x, 4.0).is_err());
        assert!(mixed_norm(&small, &x, 2.0).is_ok());
    }

    #[test]
    fn parseval_and_holder() {
        let m = HermiteModel::new(16).unwrap();
        for s in coefficient_ensemble(16, 30, 7).samples {
            assert!(m.parseval_defect(&s.f).unwrap() < 1e-9 * s.f.norm().max(1.0));
            let n1 = mixed_norm(&m, &s.f, 1.0).unwrap();
            let n2 = mixed_norm(&m, &s.f, 2.0).unwrap();
            let n4 = mixed_norm(&m, &s.f, 4.0).unwrap();
            assert!(n1 <= n2 * (1.0 + 1e-10) && n2 <= n4 * (1.0 + 1e-10));
        }
    }

    #[test]
    fn eigenvector_relation() {
        let m = HermiteModel::new(6).unwrap();
        let x = unit(6, 1);
        assert_eq!(m.operator().apply_to(|l| l, &x).unwrap(), x);
        let tx = m.semigroup(&x, 0.7, 1.0);
        assert!((tx[1] - (-0.7f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn lsi_examples() {
        let m = HermiteModel::new(16).unwrap();
        assert!(m.entropy(&unit(16, 0)).unwrap().abs() < 1e-14);
        let eps = 0.1;
        let mut f = unit(16, 0);
        f[1] = eps;
        let ent = m.entropy(&f).unwrap();
        // ½ Ent(f²) ≈ ε² Var(x): the energy ε² is matched to second order
        assert!((ent - eps * eps).abs() < 5.0 * eps.powi(4), "{ent}");
        assert!(m.energy(&f, 1.0) - ent > 0.0);
        let rep = ou_lsi_check(&m, &coefficient_ensemble(16, 60, 3)).unwrap();
        assert!(rep.min_slack >= -1e-9, "{rep:?}");
    }

    #[test]
    fn log_nash() {
        let m = HermiteModel::new(16).unwrap();
        let ens = coefficient_ensemble(16, 60, 11);
        let cert = ou_log_nash_check(&m, 1.0, &ens).unwrap();
        assert!(cert.ratio_infimum >= 1.0 - 1e-9, "{}", cert.ratio_infimum);
        let only_const = Ensemble::from_vectors("const", vec![unit(16, 0)]);
        assert!(matches!(ou_log_nash_check(&m, 1.0, &only_const), Err(Error::DegenerateEnsemble(_))));
        let half = ou_log_nash_check(&HermiteModel::new(32).unwrap(), 0.5, &coefficient_ensemble(32, 30, 5)).unwrap();
        assert!(half.ratio_infimum > 0.0);
    }

    #[test]
    fn exponential_projection() {
        let (c, err) = exponential_candidate(40, 1.0);
        assert!(err < 1e-20);
        let m = HermiteModel::new(40).unwrap();
        // e^{θx − θ²/2} at θ = 1, x = 0.3
        assert!((m.eval(&c, 0.3) - (0.3f64 - 0.5).exp()).abs() < 1e-12);
        let (_, big) = exponential_candidate(4, 3.0);
        assert!(big > 0.5 && big < 1.0);
    }

    #[test]
    fn hypercontractivity() {
        let classical = hypercontractivity_probe(&[32], 1.0, 3f64.sqrt().ln() * 1.01, 20, 1).unwrap();
        assert!(classical[0].ratio <= 1.0 + 1e-6, "{classical:?}");
        let frac = hypercontractivity_probe(&[16, 64], 0.5, 0.1, 20, 1).unwrap();
        assert!(frac[1].ratio / frac[0].ratio > 1.5, "{frac:?}");
    }

    #[test]
    fn tensor_lsi() {
        let t = TensorHermite::new(2, 4, 24).unwrap();
        let mut c = DVector::zeros(t.len());
        c[0] = 1.0;
        assert!(t.lsi_slack(&c).unwrap().abs() < 1e-14);
        c[1] = 0.1;
        c[4] = 0.05;
        c[5] = 0.02;
        assert!(t.lsi_slack(&c).unwrap() > 0.0);
        // a function of the first coordinate agrees with the 1-d model
        let mut g = DVector::zeros(t.len());
        g[0] = 1.0;
        g[4] = 0.2;
        let one = HermiteModel::new(4).unwrap();
        let mut g1 = unit(4, 0);
        g1[1] = 0.2;
        assert!((t.entropy(&g).unwrap() - one.entropy(&g1).unwrap()).abs() < 1e-8);
        assert!(TensorHermite::new(4, 2, 4).is_err());
    }
}
