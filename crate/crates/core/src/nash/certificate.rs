//! Empirical certificates for Nash-type inequalities over ensembles.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::quad::linspace;
use crate::spectral::{ScalarFunction, SpectralOperator};

use super::rate::RateFunction;

/// One row of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub family: String,
    pub l1: f64,
    pub l2sq: f64,
    pub form: f64,
    pub rate: f64,
    /// `None` for degenerate samples, whose denominator is not positive.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashCertificate {
    pub ratio_infimum: f64,
    pub witness: DVector<f64>,
    pub witness_index: usize,
    pub alpha: f64,
    pub ensemble: String,
    pub rate: String,
    pub records: Vec<SampleRecord>,
    pub degenerate: usize,
    /// Constants folded into the rate, e.g. `(a, b)` of `a [B(b·)]^α`.
    pub constants: Vec<(String, f64)>,
}

impl NashCertificate {
    /// Minimum recorded ratio; equals `ratio_infimum` by construction.
    pub fn recomputed_infimum(&self) -> f64 {
        self.records.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min)
    }

    /// Text form: a header of `key = value` lines followed by one CSV row per sample.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("alpha = {}\n", self.alpha));
        s.push_str(&format!("rate = {}\n", self.rate));
        s.push_str(&format!("ensemble = {}\n", self.ensemble));
        s.push_str(&format!("ratio_infimum = {:.12e}\n", self.ratio_infimum));
        s.push_str(&format!("witness_index = {}\n", self.witness_index));
        s.push_str(&format!("degenerate = {}\n", self.degenerate));
        for (k, v) in &self.constants {
            s.push_str(&format!("constant.{k} = {v}\n"));
        }
        s.push_str("index,family,l1,l2sq,form,rate,ratio\n");
        for r in &self.records {
            let ratio = r.ratio.map(|v| format!("{v:.12e}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                r.index, r.family, r.l1, r.l2sq, r.form, r.rate, ratio
            ));
        }
        s
    }
}

/// Core loop shared by the certificates: normalize each `f` to `‖g‖₁ = 1`,
/// compare `form(g)` with `‖g‖₂² · denom(‖g‖₂²)`.
pub fn certify(
    op: &SpectralOperator,
    ensemble: &Ensemble,
    alpha: f64,
    rate_name: &str,
    form: impl Fn(&DVector<f64>) -> Result<f64> + Sync,
    denom: impl Fn(f64) -> f64 + Sync,
) -> Result<NashCertificate> {
    if ensemble.is_empty() {
        return Err(Error::DegenerateEnsemble("empty ensemble".into()));
    }
    let space = op.space();
    let rows: Vec<Result<(SampleRecord, DVector<f64>)>> = ensemble
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let l1 = space.norm1(&s.f);
            if !(l1 > 0.0) {
                return Err(Error::InvalidArgument(format!("sample {index} has zero L1 norm")));
            }
            let g = &s.f / l1;
            let l2sq = space.norm2_sq(&g);
            let q = form(&g)?;
            let rate = denom(l2sq);
            let d = l2sq * rate;
            let ratio = if d > 0.0 && d.is_finite() { Some(q / d) } else { None };
            Ok((SampleRecord { index, family: s.family.to_string(), l1, l2sq, form: q, rate, ratio }, g))
        })
        .collect();
    let mut records = Vec::with_capacity(rows.len());
    let mut best: Option<(f64, usize, DVector<f64>)> = None;
    let mut degenerate = 0;
    for row in rows {
        let (rec, g) = row?;
        match rec.ratio {
            Some(r) => {
                if best.as_ref().map_or(true, |b| r < b.0) {
                    best = Some((r, rec.index, g));
                }
            }
            None => degenerate += 1,
        }
        records.push(rec);
    }
    let (ratio_infimum, witness_index, witness) = best.ok_or_else(|| {
        Error::DegenerateEnsemble(format!("all {} samples have non-positive denominators", records.len()))
    })?;
    Ok(NashCertificate {
        ratio_infimum,
        witness,
        witness_index,
        alpha,
        ensemble: ensemble.descriptor.clone(),
        rate: rate_name.to_string(),
        records,
        degenerate,
        constants: Vec::new(),
    })
}

/// Ratios `(A^α g, g) / (‖g‖₂² [B(‖g‖₂²)]^α)` with `g = f/‖f‖₁`.
pub fn nash_ratio(op: &SpectralOperator, b: &RateFunction, alpha: f64, ensemble: &Ensemble) -> Result<NashCertificate> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    certify(
        op,
        ensemble,
        alpha,
        b.name(),
        |g| op.quadratic_form(alpha, g),
        |x| {
            let v = b.value(x);
            if v > 0.0 {
                v.powf(alpha)
            } else {
                0.0
            }
        },
    )
}

/// `a · [B(b x)]^α` in place of `[B(x)]^α`, the form produced by iterating
/// the half-power transfer.
pub fn nash_ratio_with_constants(
    op: &SpectralOperator,
    b: &RateFunction,
    alpha: f64,
    a_const: f64,
    b_const: f64,
    ensemble: &Ensemble,
) -> Result<NashCertificate> {
    let mut cert = certify(
        op,
        ensemble,
        alpha,
        b.name(),
        |g| op.quadratic_form(alpha, g),
        |x| {
            let v = b.value(b_const * x);
            if v > 0.0 {
                a_const * v.powf(alpha)
            } else {
                0.0
            }
        },
    )?;
    cert.constants = vec![("a".into(), a_const), ("b".into(), b_const)];
    Ok(cert)
}

/// `A + ρ I`.
pub fn rho_shift(op: &SpectralOperator, rho: f64) -> Result<SpectralOperator> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must be positive")));
    }
    Ok(op.shifted(rho))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinStats {
    pub function: String,
    pub rate: String,
    pub infimum: f64,
    pub mean: f64,
    pub median: f64,
    pub samples: usize,
    pub degenerate: usize,
}

/// Empirical infimum of `(g(A)f,f) / (‖f‖₂² (g∘B)(‖f‖₂²))` over the
/// `‖f‖₁`-normalized ensemble. Exploratory only.
pub fn bernstein_explore(
    op: &SpectralOperator,
    g: &ScalarFunction,
    b: &RateFunction,
    ensemble: &Ensemble,
) -> Result<BernsteinStats> {
    let top = op.max_eigenvalue().max(1.0) * 2.0;
    let grid = linspace(0.0, top, 200);
    if g.eval(0.0) < 0.0 {
        return Err(Error::InvalidArgument(format!("{}(0) < 0", g.name())));
    }
    let probe = g.clone().with_flags(true, false);
    probe.check_flags(&grid)?;
    let neg = ScalarFunction::new("-g", {
        let g = g.clone();
        move |x| -g.eval(x)
    })
    .with_flags(false, true);
    neg.check_flags(&grid)
        .map_err(|_| Error::FlagViolation(format!("{} is not concave on the sampled grid", g.name())))?;

    let cert = certify(
        op,
        ensemble,
        f64::NAN,
        &format!("{}∘{}", g.name(), b.name()),
        |f| op.form_of(|x| g.eval(x), f),
        |x| {
            let v = b.value(x);
            if v > 0.0 {
                g.eval(v)
            } else {
                0.0
            }
        },
    )?;
    let mut ratios: Vec<f64> = cert.records.iter().filter_map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(BernsteinStats {
        function: g.name().to_string(),
        rate: b.name().to_string(),
        infimum: cert.ratio_infimum,
        mean,
        median: ratios[ratios.len() / 2],
        samples: ratios.len(),
        degenerate: cert.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EnsembleConfig;
    use crate::gallery::{build, GeneratorSpec};
    use crate::spectral::MeasureSpace;

    #[test]
    fn identity_and_point() {
        let op = SpectralOperator::diagonal(MeasureSpace::counting(5), &[1.0; 5]).unwrap();
        let e = Ensemble::standard(&op, &EnsembleConfig::sized(10, 2));
        let c = nash_ratio(&op, &RateFunction::constant(1.0), 1.0, &e).unwrap();
        assert!((c.ratio_infimum - 1.0).abs() < 1e-12);
        assert_eq!(c.ratio_infimum, c.recomputed_infimum());
        assert!(c.records.iter().all(|r| (r.ratio.unwrap() - 1.0).abs() < 1e-12));

        let pt = SpectralOperator::diagonal(MeasureSpace::counting(1), &[3.5]).unwrap();
        let e = Ensemble::from_vectors("one", vec![DVector::from_element(1, 2.0)]);
        let c = nash_ratio(&pt, &RateFunction::constant(3.5), 1.0, &e).unwrap();
        assert!((c.ratio_infimum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_samples_are_counted() {
        let op = build(&GeneratorSpec::cycle(8)).unwrap();
        let e = Ensemble::standard(&op, &EnsembleConfig::sized(10, 3));
        // log(x) ≤ 0 for every ‖g‖₂² ≤ 1 on the counting measure
        let err = nash_ratio(&op, &RateFunction::log(), 1.0, &e).unwrap_err();
        assert!(matches!(err, Error::DegenerateEnsemble(_)));
        let c = nash_ratio(&op, &RateFunction::log().rescaled(1.0, 4.0), 1.0, &e).unwrap();
        assert!(c.degenerate > 0 && c.degenerate < e.len());
        assert!(c.to_text().lines().count() > e.len());
    }

    #[test]
    fn shift_improves_ratios() {
        let op = build(&GeneratorSpec::cycle(12)).unwrap();
        let shifted = rho_shift(&op, 1.0).unwrap();
        assert!(rho_shift(&op, 0.0).is_err());
        let b = RateFunction::spectral_gap(&op).unwrap();
        let e = Ensemble::standard(&op, &EnsembleConfig::sized(20, 9));
        let c0 = nash_ratio(&op, &b, 1.0, &e).unwrap();
        let c1 = nash_ratio(&shifted, &b, 1.0, &e).unwrap();
        for (r0, r1) in c0.records.iter().zip(&c1.records) {
            if let (Some(a), Some(b)) = (r0.ratio, r1.ratio) {
                assert!(b >= a);
            }
        }
        let f = DVector::from_fn(12, |i, _| (i as f64).sin() + 2.0);
        let decayed = shifted.apply_to(|x| (-100.0 * x.sqrt()).exp(), &f).unwrap();
        assert!(shifted.space().norm2(&decayed) < 1e-40);
    }

    #[test]
    fn bernstein_reduces_to_power() {
        let op = build(&GeneratorSpec::cycle(16)).unwrap();
        let b = RateFunction::spectral_gap(&op).unwrap();
        let e = Ensemble::standard(&op, &EnsembleConfig::sized(20, 5));
        let alpha = 0.6;
        let stats = bernstein_explore(&op, &ScalarFunction::power(alpha), &b, &e).unwrap();
        let cert = nash_ratio(&op, &b, alpha, &e).unwrap();
        assert!((stats.infimum - cert.ratio_infimum).abs() < 1e-10);
        let id = bernstein_explore(&op, &ScalarFunction::identity(), &b, &e).unwrap();
        let base = nash_ratio(&op, &b, 1.0, &e).unwrap();
        assert!((id.infimum - base.ratio_infimum).abs() < 1e-10);
        let sat = ScalarFunction::new("1-exp(-x)", |x| 1.0 - (-x).exp());
        assert!(bernstein_explore(&op, &sat, &b, &e).unwrap().infimum > 0.0);
        assert!(bernstein_explore(&op, &ScalarFunction::power(2.0), &b, &e).is_err());
    }
}
