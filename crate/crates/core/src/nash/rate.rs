//! Nash rate functions `B`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::logspace;
use crate::spectral::{norm_1_to_inf, SpectralOperator};

use super::profile::{rate_from_profile_at_log, DecayProfile};

type Real = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Non-decreasing rate `B ≥ 0`, evaluable either at `x` or at `y = log x`.
#[derive(Clone)]
pub struct RateFunction {
    name: String,
    value: Real,
    log_value: Real,
}

impl fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateFunction({})", self.name)
    }
}

impl RateFunction {
    /// Rate from a closure in `x`; the log form is `y ↦ B(e^y)`.
    pub fn custom(name: impl Into<String>, b: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let value: Real = Arc::new(b);
        let v = value.clone();
        Self { name: name.into(), value, log_value: Arc::new(move |y| v(y.exp())) }
    }

    fn with_log(
        name: String,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_value: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name, value: Arc::new(value), log_value: Arc::new(log_value) }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_log(format!("{c}"), move |_| c, move |_| c)
    }

    /// `c x^p`.
    pub fn power(c: f64, p: f64) -> Self {
        Self::with_log(format!("{c}*x^{p}"), move |x| c * x.powf(p), move |y| c * (p * y).exp())
    }

    /// `c (log₊ x)^p`.
    pub fn log_power(c: f64, p: f64) -> Self {
        Self::with_log(
            format!("{c}*log(x)^{p}"),
            move |x| if x > 1.0 { c * x.ln().powf(p) } else { 0.0 },
            move |y| if y > 0.0 { c * y.powf(p) } else { 0.0 },
        )
    }

    /// `log x`, negative below 1.
    pub fn log() -> Self {
        Self::with_log("log(x)".into(), |x| x.ln(), |y| y)
    }

    /// `max(log x, 0)`.
    pub fn log_plus() -> Self {
        Self::with_log("log+(x)".into(), |x| x.ln().max(0.0), |y| y.max(0.0))
    }

    /// `(n/(2e)) x^{2/n}`, the rate of `m(t) = t^{−n/2}`.
    pub fn polynomial_family(n: f64) -> Self {
        Self::power(n / (2.0 * std::f64::consts::E), 2.0 / n).renamed(format!("power_family(n={n})"))
    }

    /// `γ(1+γ)^{−(1+1/γ)} (log x)^{1+1/γ}`, the rate of `m(t) = e^{t^{−γ}}`.
    pub fn stretched_family(gamma: f64) -> Self {
        let c = gamma * (1.0 + gamma).powf(-(1.0 + 1.0 / gamma));
        Self::log_power(c, 1.0 + 1.0 / gamma).renamed(format!("stretched_family(gamma={gamma})"))
    }

    /// Numerical transform of a decay profile; zero for `x ≤ 1`.
    pub fn from_profile(p: &DecayProfile) -> Self {
        let p1 = p.clone();
        let p2 = p.clone();
        Self::with_log(
            format!("rate({})", p.name()),
            move |x| if x > 1.0 { rate_from_profile_at_log(&p1, x.ln()).unwrap_or(f64::NAN) } else { 0.0 },
            move |y| if y > 0.0 { rate_from_profile_at_log(&p2, y).unwrap_or(f64::NAN) } else { 0.0 },
        )
    }

    /// Certified rate from the spectral gap: for `‖f‖₁ ≤ 1`,
    /// `(Af,f) ≥ λ₁(‖f‖₂² − 1/μ(X))`, i.e. `B(x) = λ₁ (1 − 1/(x μ(X)))₊`.
    /// Requires a simple null eigenvalue carrying the constants.
    pub fn spectral_gap(op: &SpectralOperator) -> Result<Self> {
        let ev = op.eigenvalues();
        if ev.len() < 2 || ev[0] != 0.0 || ev[1] <= 0.0 {
            return Err(Error::InvalidGenerator(
                "gap rate needs a simple zero eigenvalue and a positive gap".into(),
            ));
        }
        let gap = ev[1];
        let mass = op.space().total_mass();
        Ok(Self::custom(format!("gap(lambda1={gap:.6})"), move |x| {
            if x > 0.0 {
                gap * (1.0 - 1.0 / (x * mass)).max(0.0)
            } else {
                0.0
            }
        }))
    }

    /// `B(x) = c · Θ_emp(x)/x` from the measured decay `m(t) = ‖e^{−tA}‖_{1→∞}`.
    pub fn empirical(op: &SpectralOperator, c: f64) -> Self {
        let table = EmpiricalDecay::measure(op);
        let b = table.rate_table();
        Self::custom(format!("empirical(c={c})"), move |x| c * b.eval(x))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `a · B(b x)`.
    pub fn rescaled(&self, a: f64, b: f64) -> Self {
        let (v, lv) = (self.value.clone(), self.log_value.clone());
        let lb = b.ln();
        Self::with_log(
            format!("{a}*{}({b}x)", self.name),
            move |x| a * v(b * x),
            move |y| a * lv(y + lb),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    /// `B(e^y)`.
    pub fn value_at_log(&self, y: f64) -> f64 {
        (self.log_value)(y)
    }

    /// Non-decreasing on the sampled grid.
    pub fn check_monotone(&self, grid: &[f64]) -> Result<()> {
        let vals: Vec<f64> = grid.iter().map(|&x| self.value(x)).collect();
        for i in 1..vals.len() {
            if vals[i] < vals[i - 1] - 1e-12 * vals[i - 1].abs().max(1.0) {
                return Err(Error::FlagViolation(format!(
                    "{} decreases between {} and {}",
                    self.name,
                    grid[i - 1],
                    grid[i]
                )));
            }
        }
        Ok(())
    }

    /// Whether `B(x)/log x` keeps increasing over `log x ∈ ys` (a sampled
    /// witness of `B(x)/log x → ∞`).
    pub fn superlogarithmic_on(&self, ys: &[f64]) -> bool {
        let r: Vec<f64> = ys.iter().map(|&y| self.value_at_log(y) / y).collect();
        r.windows(2).all(|w| w[1] > w[0])
    }
}

/// Tabulated `m(t) = ‖e^{−tA}‖_{1→∞}` on a log grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDecay {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    /// Limit of `m(t)` as `t → ∞`, the kernel of the projection on constants.
    pub floor: f64,
}

impl EmpiricalDecay {
    pub fn measure(op: &SpectralOperator) -> Self {
        let gap = op.eigenvalues().iter().copied().find(|&l| l > 0.0).unwrap_or(1.0);
        let t_hi = 40.0 / gap;
        let t: Vec<f64> = logspace(1e-4 / op.max_eigenvalue().max(1.0), t_hi, 240);
        let mut m: Vec<f64> = t.iter().map(|&s| norm_1_to_inf(&op.heat(s), op.space())).collect();
        for i in 1..m.len() {
            m[i] = m[i].min(m[i - 1]);
        }
        let floor = op.apply(|l| if l == 0.0 { 1.0 } else { 0.0 }).map(|p| norm_1_to_inf(&p, op.space())).unwrap_or(0.0);
        Self { t, m, floor }
    }

    /// `x ↦ Θ_emp(x)/x` with `Θ_emp(m(t)) = −m′(t)`, made non-decreasing in `x`
    /// by a running maximum.
    pub fn rate_table(&self) -> Table {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 1..self.t.len() - 1 {
            let (t0, t2) = (self.t[i - 1], self.t[i + 1]);
            let slope = -(self.m[i + 1] - self.m[i - 1]) / (t2 - t0);
            let x = self.m[i];
            if x > self.floor * (1.0 + 1e-9) && slope.is_finite() {
                pts.push((x, (slope / x).max(0.0)));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        let mut run = 0.0f64;
        for p in pts.iter_mut() {
            run = run.max(p.1);
            p.1 = run;
        }
        Table { points: pts }
    }
}

/// Non-decreasing piecewise-linear table; zero to the left, constant to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub points: Vec<(f64, f64)>,
}

impl Table {
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.points;
        if p.is_empty() || x < p[0].0 {
            return 0.0;
        }
        let k = p.partition_point(|q| q.0 <= x);
        if k >= p.len() {
            return p[p.len() - 1].1;
        }
        let (a, b) = (p[k - 1], p[k]);
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{build, GeneratorSpec};

    #[test]
    fn families_agree_with_profiles() {
        for n in [2.0, 4.0] {
            let exact = RateFunction::polynomial_family(n);
            let numeric = RateFunction::from_profile(&DecayProfile::power(n));
            for y in [2.0, 5.0, 10.0] {
                let (a, b) = (exact.value_at_log(y), numeric.value_at_log(y));
                assert!((a - b).abs() < 1e-7 * a);
            }
        }
        let r = RateFunction::stretched_family(1.0);
        assert!((r.value(std::f64::consts::E.powi(4)) - 4.0).abs() < 1e-12);
        assert!(r.superlogarithmic_on(&[1.0, 10.0, 100.0]));
        assert!(!RateFunction::log().superlogarithmic_on(&[1.0, 10.0, 100.0]));
    }

    #[test]
    fn log_form_avoids_overflow() {
        let b = RateFunction::log_power(1.0, 2.0);
        assert_eq!(b.value_at_log(1e3), 1e6);
        let p = RateFunction::power(1.0, 0.5).rescaled(2.0, 4.0);
        assert!((p.value(4.0) - 8.0).abs() < 1e-12);
        assert!((p.value_at_log(4f64.ln()) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gap_rate_is_a_nash_rate() {
        let op = build(&GeneratorSpec::cycle(16)).unwrap();
        let b = RateFunction::spectral_gap(&op).unwrap();
        b.check_monotone(&logspace(1e-3, 10.0, 100)).unwrap();
        let e = crate::ensemble::Ensemble::standard(&op, &crate::ensemble::EnsembleConfig::sized(50, 4));
        for f in e.vectors() {
            let g = f / op.space().norm1(f);
            let x = op.space().norm2_sq(&g);
            assert!(x * b.value(x) <= op.quadratic_form(1.0, &g).unwrap() + 1e-12);
        }
    }

    #[test]
    fn empirical_rate_shape() {
        let op = build(&GeneratorSpec::cycle(16)).unwrap();
        let d = EmpiricalDecay::measure(&op);
        assert!((d.m[0] - 1.0).abs() < 1e-3);
        assert!((d.floor - 1.0 / 16.0).abs() < 1e-12);
        assert!(d.m.windows(2).all(|w| w[1] <= w[0]));
        let b = RateFunction::empirical(&op, 1.0);
        b.check_monotone(&logspace(1.0 / 16.0, 1.0, 200)).unwrap();
        assert!(b.value(0.9) > 0.0);
        assert_eq!(b.value(1.0 / 32.0), 0.0);
    }
}
