//! Entropy, range-slice truncations and logarithmic Sobolev checks.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::gallery::{build, dirichlet_energy, GeneratorSpec};
use crate::spectral::{MeasureSpace, SpectralOperator};

fn check_non_negative(f: &DVector<f64>) -> Result<()> {
    match f.iter().position(|&v| v < 0.0 || v.is_nan()) {
        Some(i) => Err(Error::InvalidArgument(format!("f[{i}] = {} is negative", f[i]))),
        None => Ok(()),
    }
}

/// `f_k = min((f − 2^k)₊, 2^k)`.
pub fn truncate(f: &DVector<f64>, k: i32) -> Result<DVector<f64>> {
    check_non_negative(f)?;
    let c = 2f64.powi(k);
    Ok(f.map(|v| (v - c).max(0.0).min(c)))
}

/// Dyadic window `[floor(log₂ min⁺ f), ceil(log₂ max f)]`; `None` for `f ≡ 0`.
pub fn default_window(f: &DVector<f64>) -> Option<(i32, i32)> {
    let min_pos = f.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    if !min_pos.is_finite() {
        return None;
    }
    let max = f.max();
    Some((min_pos.log2().floor() as i32, max.log2().ceil() as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub energy: f64,
    pub slice_energy: f64,
    /// `E(f) − Σ_k E(f_k)`.
    pub slack: f64,
    pub k_min: i32,
    pub k_max: i32,
    /// Closed-form contribution of slices below `k_min` (default window only).
    pub lower_tail: f64,
}

/// `E(f) − Σ_k E(f_k)` for a graph Dirichlet form.
///
/// With `k_range = None` the sum runs over the default window, and the
/// slices below it, each equal to `2^k 1_{f>0}`, are added in closed form
/// as `E(1_{f>0}) 4^{k_min}/3`.
pub fn truncation_energy_check(
    spec: &GeneratorSpec,
    f: &DVector<f64>,
    k_range: Option<(i32, i32)>,
) -> Result<TruncationReport> {
    if !spec.is_graph() {
        return Err(Error::InvalidGenerator(format!("{} has no edge form", spec.kind())));
    }
    check_non_negative(f)?;
    let energy = dirichlet_energy(spec, f)?;
    let (range, tail_k) = match k_range {
        Some(r) => (Some(r), None),
        None => match default_window(f) {
            Some(r) => (Some(r), Some(r.0)),
            None => (None, None),
        },
    };
    let Some((k_min, k_max)) = range else {
        return Ok(TruncationReport { energy, slice_energy: 0.0, slack: energy, k_min: 0, k_max: -1, lower_tail: 0.0 });
    };
    let mut slice_energy = 0.0;
    for k in k_min..=k_max {
        slice_energy += dirichlet_energy(spec, &truncate(f, k)?)?;
    }
    let lower_tail = match tail_k {
        Some(k0) => {
            let support = f.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
            dirichlet_energy(spec, &support)? * 4f64.powi(k0) / 3.0
        }
        None => 0.0,
    };
    slice_energy += lower_tail;
    Ok(TruncationReport { energy, slice_energy, slack: energy - slice_energy, k_min, k_max, lower_tail })
}

/// Worst `2^{−k}‖f_k‖₂ − ‖f_k‖₁` over `ks`, after scaling `f` to `‖f‖₂ = 1`.
pub fn markov_step_slack(f: &DVector<f64>, space: &MeasureSpace, ks: impl IntoIterator<Item = i32>) -> Result<f64> {
    check_non_negative(f)?;
    let n2 = space.norm2(f);
    if !(n2 > 0.0) {
        return Err(Error::InvalidArgument("zero function".into()));
    }
    let g = f / n2;
    let mut worst = f64::INFINITY;
    for k in ks {
        let fk = truncate(&g, k)?;
        worst = worst.min(2f64.powi(-k) * space.norm2(&fk) - space.norm1(&fk));
    }
    Ok(worst)
}

/// `Σ_i w_i f_i² log(|f_i|/‖f‖₂)` with `0 log 0 = 0`.
pub fn entropy(f: &DVector<f64>, space: &MeasureSpace) -> Result<f64> {
    if f.len() != space.len() {
        return Err(Error::Dimension { expected: space.len(), got: f.len() });
    }
    let n2 = space.norm2(f);
    if !(n2 > 0.0) {
        return Err(Error::InvalidArgument("entropy of the zero function".into()));
    }
    Ok(f.iter()
        .zip(space.weights())
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, w)| w * v * v * (v.abs() / n2).ln())
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub entropy: f64,
    pub energy: f64,
    pub l2sq: f64,
    pub constant_used: f64,
    /// `constant_used · (energy + l2sq) − entropy`.
    pub slack: f64,
}

impl EntropyReport {
    pub fn new(entropy: f64, energy: f64, l2sq: f64, constant_used: f64) -> Self {
        Self { entropy, energy, l2sq, constant_used, slack: constant_used * (energy + l2sq) - entropy }
    }
}

fn require_probability(space: &MeasureSpace) -> Result<()> {
    let m = space.total_mass();
    if (m - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpace(format!("log-Sobolev checks need total mass 1, got {m}")));
    }
    Ok(())
}

/// Per-sample reports of `C[(A^α f,f) + ‖f‖₂²] − ∫ f² log(f/‖f‖₂)`.
pub fn logsob_reports(op: &SpectralOperator, alpha: f64, c: f64, ensemble: &Ensemble) -> Result<Vec<EntropyReport>> {
    require_probability(op.space())?;
    let space = op.space();
    let vs: Vec<&DVector<f64>> = ensemble.vectors().collect();
    vs.par_iter()
        .map(|f| {
            let ent = entropy(f, space)?;
            let energy = op.quadratic_form(alpha, f)?;
            Ok(EntropyReport::new(ent, energy, space.norm2_sq(f), c))
        })
        .collect()
}

/// Report with the smallest slack over the ensemble.
pub fn logsob_check(op: &SpectralOperator, alpha: f64, c: f64, ensemble: &Ensemble) -> Result<EntropyReport> {
    let reports = logsob_reports(op, alpha, c, ensemble)?;
    reports
        .into_iter()
        .min_by(|a, b| a.slack.total_cmp(&b.slack))
        .ok_or_else(|| Error::DegenerateEnsemble("empty ensemble".into()))
}

/// Smallest `C` making every slack non-negative on the ensemble.
pub fn calibrate_logsob_constant(op: &SpectralOperator, alpha: f64, ensemble: &Ensemble) -> Result<f64> {
    let reports = logsob_reports(op, alpha, 1.0, ensemble)?;
    Ok(reports.iter().map(|r| r.entropy / (r.energy + r.l2sq)).fold(0.0, f64::max))
}

/// Convenience for graph specs: energy slack over many functions.
pub fn truncation_sweep(spec: &GeneratorSpec, ensemble: &Ensemble) -> Result<f64> {
    build(spec)?;
    let vs: Vec<&DVector<f64>> = ensemble.vectors().collect();
    let slacks: Vec<Result<f64>> = vs.par_iter().map(|f| Ok(truncation_energy_check(spec, f, None)?.slack)).collect();
    let mut worst = f64::INFINITY;
    for s in slacks {
        worst = worst.min(s?);
    }
    Ok(worst)
}
