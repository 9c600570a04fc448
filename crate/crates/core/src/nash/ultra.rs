//! From a Nash rate to an ultracontractivity bound.
//!
//! For `‖g‖₁ ≤ 1`, `φ(s) = ‖T_s g‖₂²` obeys `φ′ ≤ −2φB(φ)`, hence
//! `∫_{φ(t)}^∞ dx/(xB(x)) ≥ 2t` and `‖T_t‖²_{1→2} ≤ U(t)` where
//! `∫_{U(t)}^∞ dx/(xB(x)) = 2t`. Symmetry then gives
//! `‖T_t‖_{1→∞} ≤ ‖T_{t/2}‖²_{1→2} ≤ U(t/2)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};

use super::rate::RateFunction;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UltracontractivityBound {
    pub t: f64,
    /// `log U(t)`, bounding `log ‖T_t‖²_{1→2}`.
    pub log_l1_to_l2_sq: f64,
    /// `log U(t/2)`, bounding `log ‖T_t‖_{1→∞}`.
    pub log_l1_to_inf: f64,
    pub composition: String,
}

/// `∫_Y^∞ dy / B(e^y)` with the tail summed over doubling blocks and
/// extrapolated geometrically.
pub fn tail_integral(b: &RateFunction, y: f64) -> Result<f64> {
    let opts = QuadOptions::new(1e-300, 1e-12, 100_000);
    let inv = |u: f64| {
        let v = b.value_at_log(u);
        if v > 0.0 {
            1.0 / v
        } else {
            f64::INFINITY
        }
    };
    if !inv(y).is_finite() {
        return Ok(f64::INFINITY);
    }
    let y0 = y.max(1.0);
    let mut total = if y0 > y {
        quad::integrate(inv, &quad::linspace(y, y0, 8), opts)?.value
    } else {
        0.0
    };
    let mut prev_piece = f64::NAN;
    let mut ratios = Vec::new();
    let mut a = y0;
    for _ in 0..80 {
        let piece = quad::integrate(inv, &quad::linspace(a, 2.0 * a, 8), opts)?.value;
        total += piece;
        if piece <= 1e-15 * total {
            return Ok(total);
        }
        if prev_piece.is_finite() {
            let r = piece / prev_piece;
            ratios.push(r);
            let n = ratios.len();
            if n >= 6 && ratios[n - 4..].iter().all(|&q| q > 0.995) {
                return Err(Error::NonIntegrableRate(format!(
                    "∫ dx/(x B(x)) diverges for {} (block ratio {r:.4})",
                    b.name()
                )));
            }
            if r < 0.99 && n >= 3 && (ratios[n - 2] - r).abs() < 0.01 {
                let tail = piece * r / (1.0 - r);
                if tail < 1e-12 * total {
                    return Ok(total + tail);
                }
            }
        }
        prev_piece = piece;
        a *= 2.0;
    }
    Err(Error::NonIntegrableRate(format!("tail of ∫ dx/(x B(x)) does not settle for {}", b.name())))
}

/// `log U(τ)` with `∫_{U}^∞ dx/(xB(x)) = 2τ`.
///
/// `F(y) = ∫_y^∞ du/B(e^u)` is computed once and then updated over finite
/// segments; the root of `F(y) = 2τ` is found by safeguarded Newton steps,
/// using `F′(y) = −1/B(e^y)`.
pub fn log_u(b: &RateFunction, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {tau} must be positive")));
    }
    let target = 2.0 * tau;
    let opts = QuadOptions::new(1e-300, 1e-13, 100_000);
    // ∫_a^c du/B(e^u), signed
    let seg = |a: f64, c: f64| -> Result<f64> {
        if a == c {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < c { (a, c, 1.0) } else { (c, a, -1.0) };
        let pieces = ((hi - lo) / (1.0 + lo.abs().min(hi.abs()))).ceil().clamp(1.0, 64.0) as usize;
        let inv = |u: f64| {
            let v = b.value_at_log(u);
            if v > 0.0 {
                1.0 / v
            } else {
                f64::INFINITY
            }
        };
        if !inv(lo).is_finite() {
            return Ok(sign * f64::INFINITY);
        }
        let v = quad::integrate(inv, &quad::linspace(lo, hi, pieces), opts)?.value;
        Ok(sign * v)
    };
    let (mut lo, mut f_lo, mut hi, mut f_hi);
    let f0 = tail_integral(b, 1.0)?;
    if f0 > target {
        (lo, f_lo) = (1.0, f0);
        (hi, f_hi) = (2.0, f0 - seg(1.0, 2.0)?);
        while f_hi > target {
            (lo, f_lo) = (hi, f_hi);
            hi *= 2.0;
            f_hi = f_lo - seg(lo, hi)?;
            if hi > 1e300 {
                return Err(Error::InvalidArgument("no finite U(t)".into()));
            }
        }
    } else {
        (hi, f_hi) = (1.0, f0);
        (lo, f_lo) = (0.0, f0 + seg(0.0, 1.0)?);
        while f_lo < target {
            if !f_lo.is_finite() {
                break;
            }
            (hi, f_hi) = (lo, f_lo);
            lo = if lo == 0.0 { -1.0 } else { 2.0 * lo };
            f_lo = f_hi + seg(lo, hi)?;
            if lo < -1e6 {
                return Err(Error::InvalidArgument(format!(
                    "∫ dx/(xB) stays below 2t = {target} for all x ≥ e^(-1e6)"
                )));
            }
        }
    }
    // Newton from the better end, falling back to bisection
    let (mut y, mut fy) = if (f_lo - target).abs() < (f_hi - target).abs() && f_lo.is_finite() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    for _ in 0..200 {
        let bval = b.value_at_log(y);
        let mut next = y + (fy - target) * bval;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let f_next = if fy.is_finite() { fy - seg(y, next)? } else { f_hi + seg(next, hi)? };
        if f_next > target {
            lo = next;
        } else {
            (hi, f_hi) = (next, f_next);
        }
        let step = (next - y).abs();
        (y, fy) = (next, f_next);
        if step <= 1e-13 * (1.0 + y.abs()) || hi - lo <= 1e-13 * (1.0 + y.abs()) {
            break;
        }
    }
    Ok(y)
}

pub fn ultracontractivity_from_nash(b: &RateFunction, t: f64) -> Result<UltracontractivityBound> {
    let log_l1_to_l2_sq = log_u(b, t)?;
    let log_l1_to_inf = log_u(b, 0.5 * t)?;
    Ok(UltracontractivityBound {
        t,
        log_l1_to_l2_sq,
        log_l1_to_inf,
        composition: format!("‖T_t‖_1→∞ ≤ ‖T_(t/2)‖²_1→2 ≤ U(t/2), U from {}", b.name()),
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
