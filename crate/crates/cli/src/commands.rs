//! One runner per command. Each returns its tables, extra text artifacts and
//! the list of failed assertions; the driver in `lib.rs` persists them.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use fracnash_core::ensemble::{Ensemble, EnsembleConfig};
use fracnash_core::gallery::build;
use fracnash_core::log_sobolev::{calibrate_logsob_constant, entropy, logsob_reports, truncation_energy_check};
use fracnash_core::nash::{
    bernstein_explore, fit_slope, halfpower_integral_check, jensen_transfer_check, nash_ratio, rate_from_profile,
    ultracontractivity_from_nash,
};
use fracnash_core::ou::{coefficient_ensemble, hypercontractivity_probe, ou_log_nash_check, ou_lsi_check, HermiteModel};
use fracnash_core::quad::linspace;
use fracnash_core::spectral::{eigendecompose, MeasureSpace, ScalarFunction, SpectralOperator};
use fracnash_core::subordination::{poisson_semigroup, subordinate_semigroup_detailed};
use fracnash_core::torus::{decay_exponent_fit, Status, TorusClassifier, TorusSpectrum};
use fracnash_core::Error;

use crate::config::{Command, ExperimentConfig};
use crate::output::{flag, num, opt, Table};
use crate::selftest;

/// A failed assertion, pointing at the table or certificate that shows it.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub artifact: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// `(file name, contents)` of non-tabular artifacts such as certificates.
    pub texts: Vec<(String, String)>,
    pub failures: Vec<Failure>,
}

impl Outcome {
    fn fail(&mut self, artifact: impl Into<String>, message: impl Into<String>) {
        self.failures.push(Failure { artifact: artifact.into(), message: message.into() });
    }

    fn check(&mut self, ok: bool, artifact: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.fail(format!("{artifact}.csv"), message());
        }
    }
}

/// Scalar functions that configs may name.
pub fn named_function(name: &str) -> Result<ScalarFunction> {
    Ok(match name {
        "square" => ScalarFunction::power(2.0).with_flags(true, true),
        "cube" => ScalarFunction::power(3.0).with_flags(true, true),
        "exp" => ScalarFunction::exp().with_flags(true, true),
        "sqrt" => ScalarFunction::power(0.5).with_flags(true, false),
        "log1p" => ScalarFunction::new("log1p", f64::ln_1p).with_flags(true, false),
        "one_minus_exp" => ScalarFunction::new("one_minus_exp", |x: f64| -(-x).exp_m1()).with_flags(true, false),
        other => bail!("unknown function `{other}` (known: square, cube, exp, sqrt, log1p, one_minus_exp)"),
    })
}

pub fn execute(cfg: &ExperimentConfig, strict: bool) -> Result<Outcome> {
    match cfg.command {
        Command::CertifyNash => certify_nash(cfg),
        Command::RateFromProfile => rate_from_profile_cmd(cfg),
        Command::Subordinate => subordinate(cfg),
        Command::UltraProfile => ultra_profile(cfg),
        Command::HalfPowerCheck => half_power(cfg),
        Command::JensenCheck => jensen(cfg),
        Command::LogsobCheck => logsob(cfg),
        Command::TorusSweep => torus_sweep(cfg, strict),
        Command::OuSuite => ou_suite(cfg),
        Command::ExploreBernstein => explore_bernstein(cfg),
        Command::Selftest => selftest_cmd(cfg),
    }
}

fn operator(cfg: &ExperimentConfig) -> Result<SpectralOperator> {
    let spec = cfg.generator.as_ref().context("no generator configured")?;
    Ok(build(spec)?)
}

fn standard_ensemble(cfg: &ExperimentConfig, op: &SpectralOperator) -> Ensemble {
    Ensemble::standard(op, &EnsembleConfig::sized(cfg.ensemble.per_family, cfg.seed()))
}

fn rate(cfg: &ExperimentConfig, op: Option<&SpectralOperator>) -> Result<fracnash_core::RateFunction> {
    cfg.rate.as_ref().context("no rate configured")?.rate(op)
}

fn certify_nash(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = operator(cfg)?;
    let b = rate(cfg, Some(&op))?;
    let ens = standard_ensemble(cfg, &op);
    let mut out = Outcome::default();
    let mut t = Table::new("certify_nash", &["alpha", "rate", "samples", "degenerate", "infimum", "witness_index", "status"]);
    for (i, &alpha) in cfg.alpha.iter().enumerate() {
        let cert = nash_ratio(&op, &b, alpha, &ens)?;
        let name = format!("certificate_{i:02}.txt");
        let ok = cert.ratio_infimum > cfg.tolerance.min_infimum;
        if !ok {
            out.fail(&name, format!("infimum {} at alpha {alpha} not above {}", cert.ratio_infimum, cfg.tolerance.min_infimum));
        }
        t.push(vec![
            num(alpha),
            cert.rate.clone(),
            cert.records.len().to_string(),
            cert.degenerate.to_string(),
            num(cert.ratio_infimum),
            cert.witness_index.to_string(),
            flag(ok),
        ]);
        out.texts.push((name, cert.to_text()));
    }
    out.tables.push(t);
    Ok(out)
}

fn rate_from_profile_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.rate.as_ref().context("no rate configured")?;
    let p = spec.profile().context("rate-from-profile needs a profile family")?;
    let mut out = Outcome::default();
    let mut t = Table::new("rate_from_profile", &["profile", "x", "rate", "closed_form", "relative_error", "status"]);
    let mut worst = 0.0f64;
    for &x in &cfg.x {
        let v = rate_from_profile(&p, x)?;
        let closed = spec.closed_form(x);
        let rel = closed.map(|c| ((v - c) / c).abs());
        let ok = rel.map_or(true, |r| r <= cfg.tolerance.relative);
        worst = worst.max(rel.unwrap_or(0.0));
        t.push(vec![p.name().to_string(), num(x), num(v), opt(closed), opt(rel), flag(ok)]);
    }
    let tol = cfg.tolerance.relative;
    out.check(worst <= tol, &t.name, || format!("relative error {worst:e} above {tol:e}"));
    out.tables.push(t);
    Ok(out)
}

fn subordinate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = operator(cfg)?;
    let cells: Vec<(f64, f64)> = cfg.alpha.iter().flat_map(|&a| cfg.t.iter().map(move |&t| (a, t))).collect();
    let rows = cells
        .par_iter()
        .map(|&(alpha, time)| -> Result<(f64, Option<f64>, usize)> {
            let q = subordinate_semigroup_detailed(&op, alpha, time)?;
            let spectral = op.apply(|l| (-time * l.powf(alpha)).exp())?;
            let dev = (&q.matrix - spectral).amax();
            let poisson = if alpha == 0.5 { Some((&q.matrix - poisson_semigroup(&op, time)?).amax()) } else { None };
            Ok((dev, poisson, q.nodes))
        })
        .collect::<Vec<_>>();
    let mut out = Outcome::default();
    let mut t = Table::new("subordinate", &["alpha", "t", "route_deviation", "poisson_deviation", "nodes"]);
    let mut worst = 0.0f64;
    for (&(alpha, time), r) in cells.iter().zip(rows) {
        let (dev, poisson, nodes) = r?;
        worst = worst.max(dev).max(poisson.unwrap_or(0.0));
        t.push(vec![num(alpha), num(time), num(dev), opt(poisson), nodes.to_string()]);
    }
    let tol = cfg.tolerance.max_deviation;
    out.check(worst <= tol, &t.name, || format!("max route deviation {worst:e} above {tol:e}"));
    out.tables.push(t);
    Ok(out)
}

fn ultra_profile(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.rate.as_ref().context("no rate configured")?;
    let b = spec.rate(None)?;
    let profile = spec.profile();
    let mut out = Outcome::default();
    let mut t = Table::new("ultra_profile", &["t", "log_u", "log_l1_to_inf", "profile_log_m", "composition"]);
    let mut lus = Vec::new();
    for &time in &cfg.t {
        let u = ultracontractivity_from_nash(&b, time)?;
        lus.push(u.log_l1_to_l2_sq);
        let lm = profile.as_ref().map(|p| p.m(time).ln());
        t.push(vec![num(time), num(u.log_l1_to_l2_sq), num(u.log_l1_to_inf), opt(lm), u.composition]);
    }
    out.tables.push(t);
    // recovered exponent of the profile, when the family is known
    if let (Some(p), true) = (profile, cfg.t.len() >= 3) {
        let lt: Vec<f64> = cfg.t.iter().map(|t| t.ln()).collect();
        let (fitted, expected, tol) = match *spec {
            crate::config::RateSpec::Power { n } => (-fit_slope(&lt, &lus), n / 2.0, 0.01),
            crate::config::RateSpec::Stretched { gamma } => {
                let ll: Vec<f64> = lus.iter().map(|v| v.ln()).collect();
                (-fit_slope(&lt, &ll), gamma, 0.03)
            }
            _ => unreachable!("profile families are power and stretched"),
        };
        let rel = (fitted / expected - 1.0).abs();
        let mut f = Table::new("ultra_profile_fit", &["profile", "fitted", "expected", "relative_error", "status"]);
        f.push(vec![p.name().to_string(), num(fitted), num(expected), num(rel), flag(rel <= tol)]);
        out.check(rel <= tol, &f.name, || format!("exponent {fitted} vs {expected}"));
        out.tables.push(f);
    }
    Ok(out)
}

fn half_power(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = operator(cfg)?;
    let b = rate(cfg, Some(&op))?;
    let ens = standard_ensemble(cfg, &op);
    let mut out = Outcome::default();
    let mut t = Table::new("half_power_check", &["t_final", "sample", "family", "lhs", "rhs", "slack"]);
    let mut worst = f64::INFINITY;
    let samples: Vec<_> = ens.samples.iter().take(cfg.ensemble.count).collect();
    for &big_t in &cfg.t {
        let grid = linspace(0.0, big_t, 200);
        let rows = samples
            .par_iter()
            .map(|s| {
                let g = &s.f / op.space().norm1(&s.f);
                halfpower_integral_check(&op, &b, &g, big_t, &grid)
            })
            .collect::<Vec<_>>();
        for (i, (s, r)) in samples.iter().zip(rows).enumerate() {
            let r = r?;
            worst = worst.min(r.slack());
            t.push(vec![num(big_t), i.to_string(), s.family.to_string(), num(r.lhs), num(r.rhs), num(r.slack())]);
        }
    }
    let tol = cfg.tolerance.min_slack;
    out.check(worst >= tol, &t.name, || format!("min slack {worst:e} below {tol:e}"));
    out.tables.push(t);
    Ok(out)
}

fn jensen(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = operator(cfg)?;
    let ens = Ensemble::gaussian_directions(op.dim(), cfg.ensemble.count, cfg.seed());
    let lambda = ScalarFunction::identity().with_flags(true, true);
    let mut out = Outcome::default();
    let mut t = Table::new("jensen_check", &["phi", "samples", "raw_slack", "base_holds", "transfer_slack", "status"]);
    let tol = cfg.tolerance.min_slack;
    for name in &cfg.functions {
        let phi = named_function(name)?;
        let r = jensen_transfer_check(&op, &lambda, &phi, &ens)?;
        let ok = r.raw_slack >= tol && r.transfer_slack.map_or(true, |s| s >= tol);
        if !ok {
            out.fail("jensen_check.csv", format!("{name}: raw slack {:e}, transfer slack {:?}", r.raw_slack, r.transfer_slack));
        }
        t.push(vec![
            name.clone(),
            r.samples.to_string(),
            num(r.raw_slack),
            r.base_holds.to_string(),
            opt(r.transfer_slack),
            flag(ok),
        ]);
    }
    out.tables.push(t);
    Ok(out)
}

fn logsob(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.generator.as_ref().context("no generator configured")?;
    let n = spec.size();
    let op = eigendecompose(&spec.laplacian()?, &MeasureSpace::uniform_probability(n))?;
    let ens = standard_ensemble(cfg, &op);
    let mut out = Outcome::default();
    let mut summary = Table::new("logsob_summary", &["alpha", "samples", "calibrated_c", "min_entropy", "status"]);
    let mut rows = Table::new("logsob_reports", &["alpha", "sample", "entropy", "energy", "l2sq", "constant", "slack"]);
    for &alpha in &cfg.alpha {
        let c = calibrate_logsob_constant(&op, alpha, &ens)?;
        let reports = logsob_reports(&op, alpha, c, &ens)?;
        let min_entropy = reports.iter().map(|r| r.entropy).fold(f64::INFINITY, f64::min);
        let ok = min_entropy >= -1e-12;
        out.check(ok, &summary.name, || format!("negative entropy {min_entropy:e} at alpha {alpha}"));
        summary.push(vec![num(alpha), reports.len().to_string(), num(c), num(min_entropy), flag(ok)]);
        for (i, r) in reports.iter().enumerate() {
            rows.push(vec![num(alpha), i.to_string(), num(r.entropy), num(r.energy), num(r.l2sq), num(r.constant_used), num(r.slack)]);
        }
    }
    out.tables.push(summary);
    out.tables.push(rows);

    if spec.is_graph() {
        let nonneg = Ensemble::non_negative(n, cfg.ensemble.count, cfg.seed());
        let mut t = Table::new("truncation_sweep", &["sample", "energy", "slice_energy", "slack", "k_min", "k_max"]);
        let mut worst = f64::INFINITY;
        for (i, f) in nonneg.vectors().enumerate() {
            let r = truncation_energy_check(spec, f, None)?;
            // normalized entropy must be non-negative on the probability space too
            if op.space().norm2(f) > 0.0 && entropy(f, op.space())? < -1e-12 {
                out.fail("truncation_sweep.csv", format!("negative entropy for sample {i}"));
            }
            worst = worst.min(r.slack);
            t.push(vec![i.to_string(), num(r.energy), num(r.slice_energy), num(r.slack), r.k_min.to_string(), r.k_max.to_string()]);
        }
        out.check(worst >= -1e-12, &t.name, || format!("slice energy slack {worst:e} below -1e-12"));
        out.tables.push(t);
    }
    Ok(out)
}

fn torus_sweep(cfg: &ExperimentConfig, strict: bool) -> Result<Outcome> {
    let tc = &cfg.torus;
    let gamma = tc.gamma;
    let clf = TorusClassifier::new(TorusSpectrum::new(gamma, tc.k)?)?;
    let values = TorusClassifier::new(TorusSpectrum::new(gamma, tc.k_values)?)?;
    let mut out = Outcome::default();
    let header = ["gamma", "alpha", "t", "K", "status", "value", "beta_hat"];
    let mut sweep = Table::new("torus_sweep", &header);
    let mut regimes = Table::new("torus_regimes", &["gamma", "alpha", "K", "status", "threshold_t"]);
    let mut inconclusive = 0usize;
    for &alpha in &cfg.alpha {
        if !(alpha < 1.0) {
            bail!("torus-sweep needs alpha < 1, got {alpha}");
        }
        let r = alpha / (1.0 - alpha);
        let gap = (gamma - r) / gamma.max(r);
        let (regime, th) = if gap > 1e-9 {
            ("divergent", None)
        } else if gap < -1e-9 {
            ("finite", None)
        } else {
            ("threshold", Some(clf.threshold(alpha)?))
        };
        regimes.push(vec![num(gamma), num(alpha), tc.k.to_string(), regime.into(), opt(th)]);

        let beta = if regime == "finite" && tc.fit_t.len() >= 2 {
            match decay_exponent_fit(&values.spec, alpha, &tc.fit_t) {
                Ok(f) => Some(f.exponent),
                Err(Error::TruncationTooSmall { .. }) => None,
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        let cells = cfg
            .t
            .par_iter()
            .map(|&time| -> Result<(Status, Option<f64>)> {
                let status = clf.classify(alpha, time)?.status;
                let value = if status == Status::Finite {
                    match values.evaluate(alpha, time) {
                        Ok(v) => v.value,
                        Err(Error::TruncationTooSmall { .. }) => None,
                        Err(e) => return Err(e.into()),
                    }
                } else {
                    None
                };
                Ok((status, value))
            })
            .collect::<Vec<_>>();
        for (&time, c) in cfg.t.iter().zip(cells) {
            let (status, value) = c?;
            if status == Status::Inconclusive {
                inconclusive += 1;
            }
            sweep.push(vec![
                num(gamma),
                num(alpha),
                num(time),
                tc.k.to_string(),
                status.to_string(),
                opt(value),
                opt(beta),
            ]);
        }
    }
    if strict && inconclusive > 0 {
        out.fail("torus_sweep.csv", format!("{inconclusive} inconclusive classifications under --strict"));
    }
    out.tables.push(sweep);
    out.tables.push(regimes);
    Ok(out)
}

fn ou_suite(cfg: &ExperimentConfig) -> Result<Outcome> {
    let oc = &cfg.ou;
    let model = HermiteModel::new(oc.n)?;
    let ens = coefficient_ensemble(oc.n, oc.samples, cfg.seed());
    let parseval = ens
        .vectors()
        .map(|c| model.parseval_defect(c))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let lsi = ou_lsi_check(&model, &ens)?;
    let nash = ou_log_nash_check(&model, 1.0, &ens)?;
    let mut out = Outcome::default();
    let mut t = Table::new("ou_checks", &["check", "value", "threshold", "status"]);
    for (name, v, thr, pass) in [
        ("parseval_defect", parseval, 1e-9, parseval <= 1e-9),
        ("lsi_min_slack", lsi.min_slack, -1e-9, lsi.min_slack >= -1e-9),
        ("log_nash_infimum_alpha1", nash.ratio_infimum, 0.5, nash.ratio_infimum >= 0.5),
    ] {
        out.check(pass, "ou_checks", || format!("{name} = {v:e} (threshold {thr:e})"));
        t.push(vec![name.into(), num(v), num(thr), flag(pass)]);
    }
    out.tables.push(t);
    out.texts.push(("ou_log_nash_certificate.txt".into(), nash.to_text()));

    // reported, not asserted: growth in n is evidence, not proof
    let rows = hypercontractivity_probe(&oc.n_list, oc.probe_alpha, oc.probe_t, 50, cfg.seed())?;
    let mut g = Table::new("ou_growth", &["n", "alpha", "t", "sup_ratio", "argmax", "projection_error"]);
    for r in rows {
        g.push(vec![r.n.to_string(), num(oc.probe_alpha), num(oc.probe_t), num(r.ratio), r.argmax, num(r.projection_error)]);
    }
    out.tables.push(g);
    Ok(out)
}

fn explore_bernstein(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = operator(cfg)?;
    let b = rate(cfg, Some(&op))?;
    let ens = standard_ensemble(cfg, &op);
    let mut t = Table::new("explore_bernstein", &["function", "rate", "samples", "degenerate", "infimum", "mean", "median"]);
    for name in &cfg.functions {
        let s = bernstein_explore(&op, &named_function(name)?, &b, &ens)?;
        t.push(vec![
            s.function,
            s.rate,
            s.samples.to_string(),
            s.degenerate.to_string(),
            num(s.infimum),
            num(s.mean),
            num(s.median),
        ]);
    }
    Ok(Outcome { tables: vec![t], ..Outcome::default() })
}

fn selftest_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let results = selftest::run_selftest(cfg.seed())?;
    let mut out = Outcome::default();
    for r in &results {
        println!("criterion {:>2} {:<30} {}  {}", r.id, r.title, flag(r.passed), r.detail);
        if !r.passed {
            out.fail(format!("{}.csv", r.table.name), format!("criterion {} ({}) failed: {}", r.id, r.title, r.detail));
        }
    }
    out.tables.push(selftest::summary_table(&results));
    out.tables.extend(results.into_iter().map(|r| r.table));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_functions_resolve() {
        for n in ["square", "cube", "exp", "sqrt", "log1p", "one_minus_exp"] {
            let f = named_function(n).unwrap();
            assert!(f.eval(0.0).abs() < 1e-15 || n == "exp");
        }
        assert!(named_function("sin").is_err());
        assert!((named_function("one_minus_exp").unwrap().eval(1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn identity_certificate() {
        let mut cfg = ExperimentConfig::new(Command::CertifyNash);
        cfg.seed = Some(2);
        let out = execute(&cfg.resolve().unwrap(), false).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.tables[0].rows[0][4], "1e0");
    }

    #[test]
    fn bernstein_never_fails() {
        let mut cfg = ExperimentConfig::new(Command::ExploreBernstein);
        cfg.seed = Some(2);
        let out = execute(&cfg.resolve().unwrap(), true).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.tables[0].rows.len(), 3);
    }
}
