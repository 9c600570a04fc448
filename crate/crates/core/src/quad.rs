//! Adaptive Gauss–Kronrod (7/15) quadrature for scalar and vector integrands.
//!
//! The error estimate follows the QUADPACK heuristic. Intervals are bisected
//! greedily by largest local error until the tolerance is met or the node
//! budget is spent; running out of budget is an error, never a silent
//! truncation.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Nodes consumed by one Kronrod panel.
pub const NODES_PER_PANEL: usize = 15;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_nodes: 30_000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64, max_nodes: usize) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub nodes: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn kronrod_panel<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Panel
where
    F: FnMut(f64) -> Vec<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut asc = vec![0.0; dim];

    let fc = f(center);
    for d in 0..dim {
        kron[d] = fc[d] * WGK[7];
        gauss[d] = fc[d] * WG[3];
    }
    let mut samples: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(7);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for d in 0..dim {
            kron[d] += WGK[j] * (f1[d] + f2[d]);
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * (f1[d] + f2[d]);
            }
        }
        samples.push((f1, f2));
    }
    // resasc: integral of |f - mean| for the QUADPACK error scaling
    let mut error = 0.0f64;
    for d in 0..dim {
        let mean = 0.5 * kron[d];
        let mut s = WGK[7] * (fc[d] - mean).abs();
        for (j, (f1, f2)) in samples.iter().enumerate() {
            s += WGK[j] * ((f1[d] - mean).abs() + (f2[d] - mean).abs());
        }
        asc[d] = s * half.abs();
        let raw = ((kron[d] - gauss[d]) * half).abs();
        let est = if asc[d] > 0.0 && raw > 0.0 {
            asc[d] * (200.0 * raw / asc[d]).powf(1.5).min(1.0)
        } else {
            raw
        };
        let est = est.max(50.0 * f64::EPSILON * (kron[d] * half).abs());
        if est.is_nan() {
            error = f64::NAN;
        } else {
            error = error.max(est);
        }
    }
    for v in kron.iter_mut() {
        *v *= half;
    }
    Panel {
        a,
        b,
        value: kron,
        error,
    }
}

/// Integrate a vector-valued function over consecutive breakpoint intervals.
///
/// The error is the maximum over components. Convergence requires
/// `error <= max(abs_tol, rel_tol * max_d |value_d|)`.
pub fn integrate_vec<F>(
    mut f: F,
    breakpoints: &[f64],
    dim: usize,
    opts: QuadOptions,
) -> Result<QuadResult<Vec<f64>>>
where
    F: FnMut(f64) -> Vec<f64>,
{
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut panels: Vec<Panel> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod_panel(&mut f, w[0], w[1], dim))
        .collect();
    let mut nodes = panels.len() * NODES_PER_PANEL;

    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for p in &panels {
            for d in 0..dim {
                total[d] += p.value[d];
            }
            err += p.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = opts.abs_tol.max(opts.rel_tol * scale);
        if err.is_nan() || total.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature {
                error: f64::NAN,
                nodes,
            });
        }
        if err <= tol {
            return Ok(QuadResult {
                value: total,
                error: err,
                nodes,
            });
        }
        if nodes + 2 * NODES_PER_PANEL > opts.max_nodes {
            return Err(Error::Quadrature { error: err, nodes });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| {
                if p.error > be {
                    (i, p.error)
                } else {
                    (bi, be)
                }
            });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval can no longer be split in floating point
            return Err(Error::Quadrature { error: err, nodes });
        }
        panels.push(kronrod_panel(&mut f, p.a, mid, dim));
        panels.push(kronrod_panel(&mut f, mid, p.b, dim));
        nodes += 2 * NODES_PER_PANEL;
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, breakpoints: &[f64], opts: QuadOptions) -> Result<QuadResult<f64>>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vec(|x| vec![f(x)], breakpoints, 1, opts)?;
    Ok(QuadResult {
        value: r.value[0],
        error: r.error,
        nodes: r.nodes,
    })
}

/// Evenly spaced breakpoints including both ends.
pub fn linspace(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    let pieces = pieces.max(1);
    (0..=pieces)
        .map(|i| a + (b - a) * i as f64 / pieces as f64)
        .collect()
}

/// Logarithmically spaced points including both ends.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (l, h) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (l + (h - l) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, &[0.0, 2.0], QuadOptions::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn smooth_and_singular() {
        let r = integrate(|x| x.exp(), &[0.0, 1.0], QuadOptions::default()).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        // integrable endpoint singularity
        let r = integrate(|x| 1.0 / x.sqrt(), &[0.0, 1.0], QuadOptions::new(1e-10, 1e-10, 100_000)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let err = integrate(|x| (1.0 / x).sin() / x, &[1e-6, 1.0], QuadOptions::new(1e-14, 1e-14, 300));
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn vector_integrand() {
        let r = integrate_vec(|x| vec![x, x * x], &[0.0, 1.0], 2, QuadOptions::default()).unwrap();
        assert!((r.value[0] - 0.5).abs() < 1e-14);
        assert!((r.value[1] - 1.0 / 3.0).abs() < 1e-14);
    }
}
