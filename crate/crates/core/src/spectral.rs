//! Weighted finite-dimensional model of `L²(X, μ)`: measure spaces,
//! eigendecomposition of self-adjoint operators and their functional calculus.
//!
//! Vectors are functions on the `n` points of the space; matrices act on them
//! by `(Mf)_i = Σ_j M_ij f_j`. Adjointness and norms always refer to the
//! weights, so a matrix is self-adjoint when `w_i M_ij = w_j M_ji`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues within `CLAMP_TOL * max(1, |λ|_max)` of zero are set to zero; more negative ones are rejected.
pub const CLAMP_TOL: f64 = 1e-10;
/// Relative tolerance for the weighted self-adjointness check.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    weights: Vec<f64>,
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("no points".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidSpace(format!("weight {w} is not positive")));
        }
        Ok(Self { weights })
    }

    /// Counting measure on `n` points.
    pub fn counting(n: usize) -> Self {
        Self {
            weights: vec![1.0; n.max(1)],
        }
    }

    /// Uniform probability measure on `n` points.
    pub fn uniform_probability(n: usize) -> Self {
        let n = n.max(1);
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn check_dim(&self, f: &DVector<f64>) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `‖f‖_p`; `p = f64::INFINITY` gives the sup norm.
    pub fn norm(&self, f: &DVector<f64>, p: f64) -> f64 {
        if p.is_infinite() {
            return f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(f.iter())
            .map(|(w, v)| w * v.abs().powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    pub fn norm1(&self, f: &DVector<f64>) -> f64 {
        self.weights.iter().zip(f.iter()).map(|(w, v)| w * v.abs()).sum()
    }

    pub fn norm2_sq(&self, f: &DVector<f64>) -> f64 {
        self.inner(f, f)
    }

    pub fn norm2(&self, f: &DVector<f64>) -> f64 {
        self.norm2_sq(f).sqrt()
    }
}

/// A real function on `[0, ∞)` with optional shape flags.
#[derive(Clone)]
pub struct ScalarFunction {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub non_decreasing: bool,
    pub convex: bool,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("ScalarFunction")
            .field("name", &self.name)
            .field("non_decreasing", &self.non_decreasing)
            .field("convex", &self.convex)
            .finish()
    }
}

impl ScalarFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            non_decreasing: false,
            convex: false,
        }
    }

    pub fn with_flags(mut self, non_decreasing: bool, convex: bool) -> Self {
        self.non_decreasing = non_decreasing;
        self.convex = convex;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn identity() -> Self {
        Self::new("x", |x| x).with_flags(true, true)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c).with_flags(true, true)
    }

    /// `x ↦ x^p` on `[0, ∞)`.
    pub fn power(p: f64) -> Self {
        Self::new(format!("x^{p}"), move |x: f64| x.max(0.0).powf(p))
            .with_flags(p >= 0.0, p >= 1.0 || p == 0.0)
    }

    pub fn exp() -> Self {
        Self::new("exp(x)", f64::exp).with_flags(true, true)
    }

    /// Heat multiplier `x ↦ e^{-t x}`.
    pub fn heat(t: f64) -> Self {
        Self::new(format!("exp(-{t} x)"), move |x| (-t * x).exp())
    }

    /// Compose `self ∘ inner`.
    pub fn compose(&self, inner: &ScalarFunction) -> Self {
        let (outer_f, inner_f) = (self.f.clone(), inner.f.clone());
        Self::new(format!("{}∘{}", self.name, inner.name), move |x| {
            outer_f(inner_f(x))
        })
    }

    /// Spot-check the declared flags on a grid of sample points.
    pub fn check_flags(&self, grid: &[f64]) -> Result<()> {
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        if self.non_decreasing {
            for i in 1..vals.len() {
                if vals[i] < vals[i - 1] - tol {
                    return Err(Error::FlagViolation(format!(
                        "{} decreases between {} and {}",
                        self.name,
                        grid[i - 1],
                        grid[i]
                    )));
                }
            }
        }
        if self.convex {
            for i in 1..vals.len().saturating_sub(1) {
                let (x0, x1, x2) = (grid[i - 1], grid[i], grid[i + 1]);
                let lam = (x1 - x0) / (x2 - x0);
                let chord = (1.0 - lam) * vals[i - 1] + lam * vals[i + 1];
                if vals[i] > chord + tol {
                    return Err(Error::FlagViolation(format!(
                        "{} is not convex near {}",
                        self.name, x1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Non-negative self-adjoint operator stored through its eigendecomposition.
///
/// Eigenvectors are the columns of `eigenvectors` and are orthonormal in the
/// weighted inner product of `space`. Eigenvalues are sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    space: MeasureSpace,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Largest weighted asymmetry `|w_i M_ij − w_j M_ji|`, relative to the entries.
pub fn weighted_asymmetry(matrix: &DMatrix<f64>, space: &MeasureSpace) -> f64 {
    let w = space.weights();
    let n = matrix.nrows();
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let a = w[i] * matrix[(i, j)];
            scale = scale.max(a.abs());
            if j > i {
                asym = asym.max((a - w[j] * matrix[(j, i)]).abs());
            }
        }
    }
    asym / scale.max(1.0)
}

/// Eigendecompose a matrix that is self-adjoint in the weighted inner product.
pub fn eigendecompose(matrix: &DMatrix<f64>, space: &MeasureSpace) -> Result<SpectralOperator> {
    let n = space.len();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: matrix.nrows(),
        });
    }
    let asym = weighted_asymmetry(matrix, space);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSelfAdjoint { asymmetry: asym });
    }
    let sqrt_w: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    // S = W^{1/2} M W^{-1/2} is symmetric
    let mut s = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * matrix[(i, j)] / sqrt_w[j]);
    let st = s.transpose();
    s = (s + st) * 0.5;
    let eig = SymmetricEigen::new(s);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lmax = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut lam = eig.eigenvalues[k];
        if lam < -CLAMP_TOL * lmax {
            return Err(Error::NegativeSpectrum { eigenvalue: lam });
        }
        // roundoff on either side of a null eigenvalue would leak into λ^α
        if lam.abs() <= CLAMP_TOL * lmax {
            lam = 0.0;
        }
        eigenvalues.push(lam);
        for i in 0..n {
            eigenvectors[(i, col)] = eig.eigenvectors[(i, k)] / sqrt_w[i];
        }
    }
    Ok(SpectralOperator {
        space: space.clone(),
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralOperator {
    /// Multiplication operator `f ↦ λ_i f_i` (diagonal in the point basis).
    pub fn diagonal(space: MeasureSpace, eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.len() != space.len() {
            return Err(Error::Dimension {
                expected: space.len(),
                got: eigenvalues.len(),
            });
        }
        if let Some(&l) = eigenvalues.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::NegativeSpectrum { eigenvalue: l });
        }
        let n = space.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        let mut vecs = DMatrix::zeros(n, n);
        let mut vals = Vec::with_capacity(n);
        for (col, &k) in order.iter().enumerate() {
            vecs[(k, col)] = 1.0 / space.weights()[k].sqrt();
            vals.push(eigenvalues[k]);
        }
        Ok(Self {
            space,
            eigenvalues: vals,
            eigenvectors: vecs,
        })
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Coefficients `c_i = ⟨f, u_i⟩_μ`.
    pub fn coefficients(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.space.check_dim(f)?;
        let wf = DVector::from_iterator(
            f.len(),
            f.iter().zip(self.space.weights()).map(|(v, w)| v * w),
        );
        Ok(self.eigenvectors.tr_mul(&wf))
    }

    /// Discrete spectral measure `d(E_λ f, f)` as `(λ_i, |c_i|²)` pairs.
    pub fn spectral_measure(&self, f: &DVector<f64>) -> Result<Vec<(f64, f64)>> {
        let c = self.coefficients(f)?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(c.iter())
            .map(|(&l, &ci)| (l, ci * ci))
            .collect())
    }

    fn multipliers(&self, phi: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let v = phi(l);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteAtEigenvalue { eigenvalue: l })
                }
            })
            .collect()
    }

    /// Matrix with the given multipliers on the eigenbasis: `U diag(m) Uᵀ W`.
    pub fn matrix_from_multipliers(&self, m: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let w = self.space.weights();
        let mut left = self.eigenvectors.clone();
        for (j, &mj) in m.iter().enumerate() {
            left.column_mut(j).scale_mut(mj);
        }
        let mut right = self.eigenvectors.transpose();
        for k in 0..n {
            right.column_mut(k).scale_mut(w[k]);
        }
        left * right
    }

    /// `Φ(A) = Σ_i Φ(λ_i) u_i ⟨u_i, ·⟩_μ`.
    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let m = self.multipliers(phi)?;
        Ok(self.matrix_from_multipliers(&m))
    }

    pub fn apply_function(&self, phi: &ScalarFunction) -> Result<DMatrix<f64>> {
        self.apply(|x| phi.eval(x))
    }

    /// `Φ(A) f` without forming the matrix.
    pub fn apply_to(&self, phi: impl Fn(f64) -> f64, f: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.multipliers(phi)?;
        let mut c = self.coefficients(f)?;
        for (ci, mi) in c.iter_mut().zip(m) {
            *ci *= mi;
        }
        Ok(&self.eigenvectors * c)
    }

    /// The matrix of `A` itself.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.matrix_from_multipliers(&self.eigenvalues)
    }

    /// Heat semigroup `e^{-tA}`.
    pub fn heat(&self, t: f64) -> DMatrix<f64> {
        let m: Vec<f64> = self.eigenvalues.iter().map(|l| (-t * l).exp()).collect();
        self.matrix_from_multipliers(&m)
    }

    /// `(A^α f, f) = Σ λ_i^α |⟨f, u_i⟩_μ|²`, with `0^0 = 1`.
    pub fn quadratic_form(&self, alpha: f64, f: &DVector<f64>) -> Result<f64> {
        let c = self.coefficients(f)?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(c.iter())
            .map(|(&l, &ci)| l.powf(alpha) * ci * ci)
            .sum())
    }

    /// `(Φ(A) f, f)`.
    pub fn form_of(&self, phi: impl Fn(f64) -> f64, f: &DVector<f64>) -> Result<f64> {
        let c = self.coefficients(f)?;
        let m = self.multipliers(phi)?;
        Ok(m.iter().zip(c.iter()).map(|(mi, ci)| mi * ci * ci).sum())
    }

    /// `A^α` as a new spectral operator with the same eigenbasis.
    pub fn powered(&self, alpha: f64) -> Self {
        Self {
            space: self.space.clone(),
            eigenvalues: self.eigenvalues.iter().map(|l| l.powf(alpha)).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }

    /// `A + ρ I`.
    pub fn shifted(&self, rho: f64) -> Self {
        Self {
            space: self.space.clone(),
            eigenvalues: self.eigenvalues.iter().map(|l| l + rho).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }

    /// `factor · A`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            space: self.space.clone(),
            eigenvalues: self.eigenvalues.iter().map(|l| l * factor).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }

    /// Max deviation of `⟨u_i, u_j⟩_μ` from `δ_ij`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        let w = self.space.weights();
        let mut wu = self.eigenvectors.clone();
        for i in 0..n {
            wu.row_mut(i).scale_mut(w[i]);
        }
        let g = self.eigenvectors.tr_mul(&wu);
        (g - DMatrix::identity(n, n)).abs().max()
    }
}

/// `‖K‖_{1→∞}` for the operator with matrix `M`: the largest integral-kernel
/// entry `|M_ij| / w_j`.
pub fn norm_1_to_inf(kernel: &DMatrix<f64>, space: &MeasureSpace) -> f64 {
    let w = space.weights();
    let mut best = 0.0f64;
    for j in 0..kernel.ncols() {
        for i in 0..kernel.nrows() {
            best = best.max(kernel[(i, j)].abs() / w[j]);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cycle(n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            m[(i, i)] += 1.0;
            m[(j, j)] += 1.0;
            m[(i, j)] -= 1.0;
            m[(j, i)] -= 1.0;
        }
        m
    }

    #[test]
    fn cycle_four_spectrum() {
        let op = eigendecompose(&cycle(4), &MeasureSpace::counting(4)).unwrap();
        let expected: Vec<f64> = {
            let mut v: Vec<f64> = (0..4).map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / 4.0).cos()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        for (a, b) in op.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((op.matrix() - cycle(4)).abs().max() < 1e-9);
        assert!(op.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn zero_and_diagonal() {
        let op = eigendecompose(&DMatrix::zeros(3, 3), &MeasureSpace::counting(3)).unwrap();
        assert!(op.eigenvalues().iter().all(|&l| l == 0.0));
        assert!(op.orthonormality_defect() < 1e-10);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let op = eigendecompose(&d, &MeasureSpace::counting(2)).unwrap();
        assert_eq!(op.eigenvalues(), &[1.0, 3.0]);
        assert!((op.eigenvector(0)[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_self_adjointness() {
        // M = W^{-1} S for symmetric S is self-adjoint in ⟨·,·⟩_w
        let space = MeasureSpace::new(vec![0.5, 2.0, 1.5]).unwrap();
        let s = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 3.0, -1.0, 0.0, -1.0, 1.0]);
        let m = DMatrix::from_fn(3, 3, |i, j| s[(i, j)] / space.weights()[i]);
        let op = eigendecompose(&m, &space).unwrap();
        assert!((op.matrix() - &m).abs().max() < 1e-9);
        assert!(op.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn rejects_asymmetric_and_negative() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        match eigendecompose(&m, &MeasureSpace::counting(2)) {
            Err(Error::NotSelfAdjoint { asymmetry }) => assert!(asymmetry > 0.1),
            other => panic!("{other:?}"),
        }
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            eigendecompose(&m, &MeasureSpace::counting(2)),
            Err(Error::NegativeSpectrum { .. })
        ));
        // tiny negative noise is clamped
        let m = DMatrix::from_row_slice(2, 2, &[-1e-13, 0.0, 0.0, 1.0]);
        let op = eigendecompose(&m, &MeasureSpace::counting(2)).unwrap();
        assert_eq!(op.eigenvalues()[0], 0.0);
    }

    #[test]
    fn functional_calculus_examples() {
        let op = SpectralOperator::diagonal(MeasureSpace::counting(2), &[0.0, 4.0]).unwrap();
        let r = op.apply_function(&ScalarFunction::power(0.5)).unwrap();
        assert!((r - DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0]))).abs().max() < 1e-15);

        let a = eigendecompose(&cycle(5), &MeasureSpace::counting(5)).unwrap();
        let id = a.apply_function(&ScalarFunction::heat(0.0)).unwrap();
        assert!((id - DMatrix::identity(5, 5)).abs().max() < 1e-12);
        let back = a.apply_function(&ScalarFunction::identity()).unwrap();
        assert!((back - cycle(5)).abs().max() < 1e-12);

        let bad = a.apply(|x| 1.0 / x);
        assert!(matches!(bad, Err(Error::NonFiniteAtEigenvalue { eigenvalue }) if eigenvalue == 0.0));
    }

    #[test]
    fn quadratic_form_examples() {
        let a = eigendecompose(&cycle(6), &MeasureSpace::counting(6)).unwrap();
        for i in 0..6 {
            let u = a.eigenvector(i);
            let q = a.quadratic_form(0.7, &u).unwrap();
            assert!((q - a.eigenvalues()[i].powf(0.7)).abs() < 1e-12);
        }
        let ones = DVector::from_element(6, 1.0);
        assert!(a.quadratic_form(1.0, &ones).unwrap().abs() < 1e-12);
        assert!((a.quadratic_form(0.0, &ones).unwrap() - 6.0).abs() < 1e-12);

        // two code paths: spectral sum vs matrix product
        let d = SpectralOperator::diagonal(MeasureSpace::counting(2), &[1.0, 4.0]).unwrap();
        let f = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let via_form = d.quadratic_form(0.5, &f).unwrap();
        let m = d.apply_function(&ScalarFunction::power(0.5)).unwrap();
        let via_matrix = d.space().inner(&(m * &f), &f);
        assert!((via_form - via_matrix).abs() < 1e-14);
        assert!((via_form - (0.5 + 2.0 * 0.5)).abs() < 1e-14);
    }

    #[test]
    fn one_to_inf_norms() {
        let space = MeasureSpace::counting(4);
        assert_eq!(norm_1_to_inf(&DMatrix::identity(4, 4), &space), 1.0);

        let space = MeasureSpace::new(vec![0.5, 1.0, 2.5]).unwrap();
        let total = space.total_mass();
        let proj = DMatrix::from_fn(3, 3, |_, j| space.weights()[j] / total);
        assert!((norm_1_to_inf(&proj, &space) - 1.0 / total).abs() < 1e-15);

        // heat kernel: brute force over point masses δ_j / w_j
        let a = eigendecompose(&cycle(8), &MeasureSpace::counting(8)).unwrap();
        let h = a.heat(0.3);
        let mut brute = 0.0f64;
        for j in 0..8 {
            let mut delta = DVector::zeros(8);
            delta[j] = 1.0;
            let out = &h * delta;
            brute = brute.max(out.amax());
        }
        let diag_max = (0..8).fold(0.0f64, |m, i| m.max(h[(i, i)]));
        assert!((norm_1_to_inf(&h, a.space()) - brute).abs() < 1e-14);
        assert!((brute - diag_max).abs() < 1e-14);
    }
}
