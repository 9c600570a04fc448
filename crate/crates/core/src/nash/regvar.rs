//! Smooth convex representatives of regularly varying functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::spectral::ScalarFunction;

#[derive(Debug, Clone)]
pub struct RegularVariation {
    pub phi: ScalarFunction,
    pub report: RegularVariationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularVariationReport {
    pub alpha: f64,
    pub increasing: bool,
    pub convex: bool,
    /// `Φ(x)/(x^α ℓ(x))` at the largest grid point.
    pub asymptotic_ratio: f64,
    pub x_max: f64,
}

impl RegularVariationReport {
    pub fn asymptotic_within(&self, rel: f64) -> bool {
        (self.asymptotic_ratio - 1.0).abs() <= rel
    }
}

/// `Φ(x) = ∫₀^x ∫₀^τ α(α−1) s^{α−2} ℓ(s) ds dτ`, evaluated as
/// `x^α · α ∫₀¹ (1 − v^{1/(α−1)}) ℓ(x v^{1/(α−1)}) dv`
/// (from `s = x r`, `v = r^{α−1}`), which has a bounded integrand.
pub fn smooth_regular_variation(alpha: f64, ell: &ScalarFunction, x_grid: &[f64]) -> Result<RegularVariation> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inner integral of s^(alpha-2) diverges at 0 for alpha = {alpha} <= 1"
        )));
    }
    if let Some(&x) = x_grid.iter().find(|&&x| !(ell.eval(x) > 0.0)) {
        return Err(Error::InvalidArgument(format!("{} is not positive at {x}", ell.name())));
    }
    let ell_f = ell.clone();
    let k = 1.0 / (alpha - 1.0);
    let mut bp: Vec<f64> = (1..=40).rev().map(|j| 0.5f64.powi(j)).collect();
    bp.insert(0, 0.0);
    bp.push(1.0);
    let phi = ScalarFunction::new(format!("smooth_rv({alpha},{})", ell.name()), move |x| {
        if x <= 0.0 {
            return 0.0;
        }
        let integrand = |v: f64| {
            let r = v.powf(k);
            (1.0 - r) * ell_f.eval(x * r)
        };
        let i = quad::integrate(integrand, &bp, QuadOptions::new(1e-300, 1e-12, 200_000))
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        x.powf(alpha) * alpha * i
    })
    .with_flags(true, true);

    let mut grid: Vec<f64> = x_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let increasing = ScalarFunction::new("", {
        let p = phi.clone();
        move |x| p.eval(x)
    })
    .with_flags(true, false)
    .check_flags(&grid)
    .is_ok();
    let convex = phi.check_flags(&grid).is_ok();
    let x_max = *grid.last().unwrap_or(&1.0);
    let asymptotic_ratio = phi.eval(x_max) / (x_max.powf(alpha) * ell.eval(x_max));
    Ok(RegularVariation {
        phi,
        report: RegularVariationReport { alpha, increasing, convex, asymptotic_ratio, x_max },
    })
}
