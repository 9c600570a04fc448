//! The acceptance suite: thirteen numbered checks, each producing a table.

use std::f64::consts::E;

use anyhow::Result;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracnash_core::ensemble::{Ensemble, EnsembleConfig};
use fracnash_core::gallery::{build, GeneratorSpec};
use fracnash_core::log_sobolev::{markov_step_slack, truncate, truncation_sweep};
use fracnash_core::nash::{
    check_condition_d, fit_slope, halfpower_integral_check, jensen_transfer_check, l1_sphere_samples, log_u,
    rate_from_profile, sphere_search_infimum, square_transfer_slack, DecayProfile, RateFunction,
};
use fracnash_core::ou::{
    coefficient_ensemble, hypercontractivity_probe, ou_log_nash_check, ou_lsi_check, HermiteModel,
};
use fracnash_core::quad::{linspace, logspace};
use fracnash_core::spectral::{MeasureSpace, ScalarFunction, SpectralOperator};
use fracnash_core::subordination::{laplace_check, poisson_semigroup, subordinate_semigroup_detailed, StableSubordinator};
use fracnash_core::torus::{decay_exponent_fit, profile_exponent_fit, Status, TorusClassifier, TorusSpectrum};
use fracnash_core::Error;

use crate::output::{flag, num, Table};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub table: Table,
}

pub const TITLES: [&str; 13] = [
    "route equivalence",
    "stable density oracle",
    "rate-function closed forms",
    "square transfer",
    "integral inequality",
    "Jensen exactness",
    "ultracontractivity integration",
    "condition (D) constants",
    "torus trichotomy",
    "torus small-t law",
    "OU suite",
    "truncation machinery",
    "determinism",
];

type Check = fn(u64) -> Result<(bool, String, Table)>;

const CHECKS: [Check; 12] = [
    route_equivalence,
    stable_density,
    rate_closed_forms,
    square_transfer,
    integral_inequality,
    jensen_exactness,
    ultracontractivity,
    condition_d,
    torus_trichotomy,
    torus_small_t,
    ou_suite,
    truncation_machinery,
];

/// Run criterion `id` (1 to 12). Errors become failures with the message as detail.
pub fn run_criterion(id: usize, seed: u64) -> CriterionResult {
    let title = TITLES[id - 1];
    let (passed, detail, table) = match CHECKS[id - 1](seed) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}"), Table::new(table_name(id), &["error"])),
    };
    CriterionResult { id, title, passed, detail, table }
}

fn table_name(id: usize) -> String {
    format!("criterion_{id:02}")
}

/// Criteria 1 to 12 once.
pub fn run_suite(seed: u64) -> Vec<CriterionResult> {
    (1..=12).map(|id| run_criterion(id, seed)).collect()
}

/// The full suite: criteria 1 to 12, then a second run whose CSV bytes must
/// equal the first.
pub fn run_selftest(seed: u64) -> Result<Vec<CriterionResult>> {
    let mut first = run_suite(seed);
    let second = run_suite(seed);
    let mut t = Table::new(table_name(13), &["table", "bytes", "identical"]);
    let mut all = true;
    for (a, b) in first.iter().zip(&second) {
        let (x, y) = (a.table.to_csv_bytes()?, b.table.to_csv_bytes()?);
        let same = x == y;
        all &= same;
        t.push(vec![a.table.name.clone(), x.len().to_string(), same.to_string()]);
    }
    first.push(CriterionResult {
        id: 13,
        title: TITLES[12],
        passed: all,
        detail: format!("{} tables compared across two runs with seed {seed}", second.len()),
        table: t,
    });
    Ok(first)
}

pub fn summary_table(results: &[CriterionResult]) -> Table {
    let mut t = Table::new("selftest_summary", &["criterion", "title", "status", "detail"]);
    for r in results {
        t.push(vec![r.id.to_string(), r.title.to_string(), flag(r.passed), r.detail.clone()]);
    }
    t
}

fn max_abs_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn route_equivalence(_seed: u64) -> Result<(bool, String, Table)> {
    let op = build(&GeneratorSpec::cycle(64))?;
    let mut t = Table::new(table_name(1), &["alpha", "t", "route_deviation", "poisson_deviation", "nodes"]);
    let (mut worst, mut worst_poisson) = (0.0f64, 0.0f64);
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        for time in [0.1, 1.0, 10.0] {
            let q = subordinate_semigroup_detailed(&op, alpha, time)?;
            let spectral = op.apply(|l| (-time * l.powf(alpha)).exp())?;
            let dev = max_abs_diff(&q.matrix, &spectral);
            worst = worst.max(dev);
            let pd = if alpha == 0.5 {
                let p = max_abs_diff(&q.matrix, &poisson_semigroup(&op, time)?);
                worst_poisson = worst_poisson.max(p);
                num(p)
            } else {
                String::new()
            };
            t.push(vec![num(alpha), num(time), num(dev), pd, q.nodes.to_string()]);
        }
    }
    let ok = worst <= 1e-6 && worst_poisson <= 1e-8;
    Ok((ok, format!("max deviation {worst:.2e} (≤ 1e-6), Poisson {worst_poisson:.2e} (≤ 1e-8)"), t))
}

fn stable_density(_seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(2), &["alpha", "t", "lambda", "error", "tolerance"]);
    let mut ok = true;
    let mut worst = 0.0f64;
    for (alpha, tol) in [(0.5, 1e-8), (0.3, 1e-6), (0.7, 1e-6)] {
        for time in [0.5, 2.0] {
            let sub = StableSubordinator::new(alpha, time)?;
            for lambda in [0.1, 1.0, 10.0] {
                let e = laplace_check(&sub, lambda)?;
                ok &= e <= tol;
                worst = worst.max(e / tol);
                t.push(vec![num(alpha), num(time), num(lambda), num(e), num(tol)]);
            }
        }
    }
    Ok((ok, format!("worst error/tolerance {worst:.2e}"), t))
}

type RateCase = (String, DecayProfile, Box<dyn Fn(f64) -> f64>);

fn closed_rate_cases() -> Vec<RateCase> {
    let mut v: Vec<RateCase> = Vec::new();
    for n in [2.0, 4.0] {
        v.push((format!("power(n={n})"), DecayProfile::power(n), Box::new(move |x: f64| n / (2.0 * E) * x.powf(2.0 / n))));
    }
    for g in [1.0, 2.0] {
        v.push((
            format!("stretched(gamma={g})"),
            DecayProfile::stretched_exp(g),
            Box::new(move |x: f64| g * (1.0 + g).powf(-(1.0 + 1.0 / g)) * x.ln().powf(1.0 + 1.0 / g)),
        ));
    }
    v
}

fn rate_closed_forms(_seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(3), &["profile", "x", "computed", "closed_form", "relative_error"]);
    let mut worst = 0.0f64;
    for (name, p, closed) in closed_rate_cases() {
        for y in [2.0f64, 5.0, 10.0] {
            let x = y.exp();
            let b = rate_from_profile(&p, x)?;
            let c = closed(x);
            let rel = (b / c - 1.0).abs();
            worst = worst.max(rel);
            t.push(vec![name.clone(), num(x), num(b), num(c), num(rel)]);
        }
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e} (≤ 1e-5)"), t))
}

fn random_diagonal(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Result<SpectralOperator> {
    let mut ev: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    ev.sort_by(f64::total_cmp);
    Ok(SpectralOperator::diagonal(MeasureSpace::counting(n), &ev)?)
}

fn square_transfer(seed: u64) -> Result<(bool, String, Table)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157);
    let mut t = Table::new(
        table_name(4),
        &["n", "base_rate", "sphere_infimum", "fresh_base_infimum", "epsilon", "min_slack"],
    );
    let mut worst = f64::INFINITY;
    for n in [2usize, 4, 6, 8] {
        let op = random_diagonal(&mut rng, n, 0.1, 5.0)?;
        let b0 = RateFunction::power(1.0, 2.0 / n as f64);
        let kappa = sphere_search_infimum(&op, &b0, 100_000, seed.wrapping_add(n as u64))?;
        let base = b0.rescaled(kappa, 1.0);
        let fresh_seed = seed.wrapping_add(1_000 + n as u64);
        let fresh = Ensemble::from_vectors("fresh l1 sphere", l1_sphere_samples(&op, 10_000, fresh_seed));
        let fresh_inf = sphere_search_infimum(&op, &base, 10_000, fresh_seed)?;
        for eps in [0.25, 0.5, 0.75] {
            let s = square_transfer_slack(&op, &base, eps, &fresh)?;
            worst = worst.min(s);
            t.push(vec![n.to_string(), b0.name().to_string(), num(kappa), num(fresh_inf), num(eps), num(s)]);
        }
    }
    Ok((worst >= -1e-8, format!("min slack {worst:.3e} (≥ -1e-8)"), t))
}

fn integral_inequality(seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(5), &["case", "sample", "lhs", "rhs", "slack"]);
    let lam = 2.7;
    let one = SpectralOperator::diagonal(MeasureSpace::counting(1), &[lam])?;
    let r = halfpower_integral_check(
        &one,
        &RateFunction::constant(lam),
        &DVector::from_element(1, 1.0),
        100.0,
        &linspace(0.0, 100.0, 50),
    )?;
    let eq_err = (r.lhs - lam).abs().max((r.rhs - lam).abs());
    t.push(vec!["one_point".into(), "0".into(), num(r.lhs), num(r.rhs), num(r.slack())]);
    let op = build(&GeneratorSpec::cycle(32))?;
    let b = RateFunction::spectral_gap(&op)?;
    let ens = Ensemble::standard(&op, &EnsembleConfig::sized(13, seed));
    let grid = linspace(0.0, 50.0, 200);
    let mut worst = f64::INFINITY;
    for (i, f) in ens.vectors().take(50).enumerate() {
        let g = f / op.space().norm1(f);
        let r = halfpower_integral_check(&op, &b, &g, 50.0, &grid)?;
        worst = worst.min(r.slack());
        t.push(vec!["cycle32".into(), i.to_string(), num(r.lhs), num(r.rhs), num(r.slack())]);
    }
    let ok = eq_err <= 1e-12 && worst >= -1e-8;
    Ok((ok, format!("one-point error {eq_err:.2e} (≤ 1e-12), cycle min slack {worst:.3e} (≥ -1e-8)"), t))
}

fn jensen_exactness(seed: u64) -> Result<(bool, String, Table)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1e45);
    let ops = [
        ("diagonal6".to_string(), random_diagonal(&mut rng, 6, 0.0, 3.0)?),
        ("diagonal8".to_string(), random_diagonal(&mut rng, 8, 0.0, 3.0)?),
        ("cycle16".to_string(), build(&GeneratorSpec::cycle(16))?),
    ];
    let phis = [
        ScalarFunction::power(2.0).with_flags(true, true),
        ScalarFunction::power(3.0).with_flags(true, true),
        ScalarFunction::exp().with_flags(true, true),
    ];
    let lambda = ScalarFunction::identity().with_flags(true, true);
    let mut t = Table::new(table_name(6), &["operator", "phi", "samples", "min_slack"]);
    let mut worst = f64::INFINITY;
    for (k, (name, op)) in ops.iter().enumerate() {
        let ens = Ensemble::gaussian_directions(op.dim(), 1000, seed.wrapping_add(k as u64));
        for phi in &phis {
            let r = jensen_transfer_check(op, &lambda, phi, &ens)?;
            worst = worst.min(r.raw_slack);
            t.push(vec![name.clone(), phi.name().to_string(), r.samples.to_string(), num(r.raw_slack)]);
        }
    }
    Ok((worst >= -1e-12, format!("min slack {worst:.3e} (≥ -1e-12)"), t))
}

fn ultracontractivity(_seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(7), &["profile", "fitted", "expected", "relative_error", "tolerance"]);
    let mut ok = true;
    let ts = logspace(0.01, 1.0, 6);
    let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    for (name, p, _) in closed_rate_cases() {
        let b = RateFunction::from_profile(&p);
        let lu: Vec<f64> = ts.iter().map(|&s| log_u(&b, s)).collect::<std::result::Result<_, _>>()?;
        let (fitted, expected, tol) = if name.starts_with("power") {
            let n: f64 = if name.contains("n=2") { 2.0 } else { 4.0 };
            (-fit_slope(&lt, &lu), n / 2.0, 0.01)
        } else {
            let g: f64 = if name.contains("gamma=1") { 1.0 } else { 2.0 };
            let ll: Vec<f64> = lu.iter().map(|v| v.ln()).collect();
            (-fit_slope(&lt, &ll), g, 0.03)
        };
        let rel = (fitted / expected - 1.0).abs();
        ok &= rel <= tol;
        t.push(vec![name, num(fitted), num(expected), num(rel), num(tol)]);
    }
    let log_rate = fracnash_core::nash::ultracontractivity_from_nash(&RateFunction::log(), 1.0);
    let rejected = matches!(log_rate, Err(Error::NonIntegrableRate(_)));
    ok &= rejected;
    t.push(vec!["log".into(), String::new(), String::new(), String::new(), format!("non-integrable error raised: {rejected}")]);
    Ok((ok, format!("exponent fits within tolerance and log rate rejected: {ok}"), t))
}

fn condition_d(_seed: u64) -> Result<(bool, String, Table)> {
    let grid = logspace(1e-3, 1e3, 1000);
    let mut t = Table::new(table_name(8), &["profile", "c", "expected", "abs_error"]);
    let mut worst = 0.0f64;
    let cases = [
        ("power(n=2)".to_string(), DecayProfile::power(2.0), 0.5),
        ("power(n=4)".to_string(), DecayProfile::power(4.0), 0.5),
        ("stretched(gamma=1)".to_string(), DecayProfile::stretched_exp(1.0), 0.25),
        ("stretched(gamma=2)".to_string(), DecayProfile::stretched_exp(2.0), 0.125),
    ];
    for (name, p, expected) in cases {
        let c = check_condition_d(&p, &grid)?;
        let err = (c - expected).abs();
        worst = worst.max(err);
        t.push(vec![name, num(c), num(expected), num(err)]);
    }
    Ok((worst <= 1e-3, format!("max error {worst:.2e} (≤ 1e-3)"), t))
}

/// Coordinates used for classification and for values at the smallest fitted `t`.
const TORUS_K: usize = 20_000;
const TORUS_K_VALUES: usize = 400_000;

fn torus_trichotomy(_seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(9), &["gamma", "alpha", "t", "K", "status", "value", "beta_hat"]);
    let clf = TorusClassifier::new(TorusSpectrum::new(1.0, TORUS_K)?)?;
    let grid = logspace(1e-3, 10.0, 9);
    let mut ok = true;
    for alpha in [0.3, 0.75] {
        let want = if alpha < 0.5 { Status::Divergent } else { Status::Finite };
        for &time in &grid {
            let r = clf.classify(alpha, time)?;
            ok &= r.status == want;
            t.push(vec!["1".into(), num(alpha), num(time), TORUS_K.to_string(), r.status.to_string(), String::new(), String::new()]);
        }
    }
    let values = TorusSpectrum::new(1.0, TORUS_K_VALUES)?;
    let fit = decay_exponent_fit(&values, 0.75, &logspace(0.05, 0.2, 5))?;
    let beta_ok = (fit.exponent / 2.0 - 1.0).abs() <= 0.15;
    ok &= beta_ok;
    for (time, v) in &fit.points {
        t.push(vec![
            "1".into(),
            num(0.75),
            num(*time),
            TORUS_K_VALUES.to_string(),
            Status::Finite.to_string(),
            num(*v),
            num(fit.exponent),
        ]);
    }
    let th = clf.threshold(0.5)?;
    let th2 = TorusClassifier::new(TorusSpectrum::new(1.0, 2 * TORUS_K)?)?.threshold(0.5)?;
    let above = clf.classify(0.5, 1.05 * th)?.status;
    let below = clf.classify(0.5, 0.95 * th)?.status;
    let stable = (th2 / th - 1.0).abs() <= 0.1;
    ok &= above == Status::Finite && below == Status::Divergent && stable;
    for (k, v) in [(TORUS_K, th), (2 * TORUS_K, th2)] {
        t.push(vec!["1".into(), num(0.5), num(v), k.to_string(), "threshold".into(), String::new(), String::new()]);
    }
    t.push(vec!["1".into(), num(0.5), num(1.05 * th), TORUS_K.to_string(), above.to_string(), String::new(), String::new()]);
    t.push(vec!["1".into(), num(0.5), num(0.95 * th), TORUS_K.to_string(), below.to_string(), String::new(), String::new()]);
    Ok((
        ok,
        format!("beta_hat {:.4} (target 2 ± 15%), threshold {th:.4} vs {th2:.4} at 2K", fit.exponent),
        t,
    ))
}

fn torus_small_t(_seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(10), &["gamma", "t_min", "t_max", "K", "slope", "relative_error"]);
    let mut ok = true;
    for (gamma, lo, hi) in [(1.0, 0.01, 0.1), (2.0, 0.07, 0.3)] {
        let spec = TorusSpectrum::new(gamma, 500_000)?;
        let fit = profile_exponent_fit(&spec, &logspace(lo, hi, 6))?;
        let rel = (fit.exponent / gamma - 1.0).abs();
        ok &= rel <= 0.1;
        t.push(vec![num(gamma), num(lo), num(hi), spec.k.to_string(), num(fit.exponent), num(rel)]);
    }
    Ok((ok, "slopes within 10% of gamma".to_string(), t))
}

fn ou_suite(seed: u64) -> Result<(bool, String, Table)> {
    let mut t = Table::new(table_name(11), &["check", "value", "threshold", "status"]);
    let model = HermiteModel::new(16)?;
    let ens = coefficient_ensemble(16, 500, seed);
    let parseval = ens
        .vectors()
        .map(|c| model.parseval_defect(c))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let lsi = ou_lsi_check(&model, &ens)?;
    let nash = ou_log_nash_check(&model, 1.0, &ens)?;
    let half = hypercontractivity_probe(&[16, 64], 0.5, 0.1, 50, seed)?;
    let growth = half[1].ratio / half[0].ratio;
    let classical = hypercontractivity_probe(&[16, 32], 1.0, 3f64.sqrt().ln() * 1.01, 50, seed)?;
    let classical_max = classical.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let checks = [
        ("parseval_defect", parseval, 1e-9, parseval <= 1e-9),
        ("lsi_min_slack", lsi.min_slack, -1e-9, lsi.min_slack >= -1e-9),
        ("log_nash_infimum_alpha1", nash.ratio_infimum, 0.5, nash.ratio_infimum >= 0.5),
        ("growth_ratio_alpha_half", growth, 1.5, growth > 1.5),
        ("classical_max_ratio", classical_max, 1.0 + 1e-6, classical_max <= 1.0 + 1e-6),
    ];
    let mut ok = true;
    for (name, v, thr, pass) in checks {
        ok &= pass;
        t.push(vec![name.into(), num(v), num(thr), flag(pass)]);
    }
    for r in half.iter().chain(&classical) {
        t.push(vec![format!("sup_ratio(n={})", r.n), num(r.ratio), r.argmax.clone(), num(r.projection_error)]);
    }
    Ok((
        ok,
        format!("LSI slack {:.2e}, log-Nash inf {:.3}, growth {growth:.3}, classical {classical_max:.9}", lsi.min_slack, nash.ratio_infimum),
        t,
    ))
}

fn truncation_machinery(seed: u64) -> Result<(bool, String, Table)> {
    let spec = GeneratorSpec::cycle(32);
    let op = build(&spec)?;
    let ens = Ensemble::non_negative(32, 1000, seed);
    let mut recon = 0.0f64;
    let mut markov = f64::INFINITY;
    for f in ens.vectors() {
        let mut sum = DVector::zeros(f.len());
        for k in -20..=20 {
            sum += truncate(f, k)?;
        }
        recon = recon.max((f - sum).amax());
        if op.space().norm2(f) > 0.0 {
            markov = markov.min(markov_step_slack(f, op.space(), -20..=20)?);
        }
    }
    let superadd = truncation_sweep(&spec, &ens)?;
    let bound = 2f64.powi(-20);
    let checks = [
        ("slice_reconstruction_error", recon, bound, recon <= bound),
        ("energy_superadditivity_slack", superadd, -1e-12, superadd >= -1e-12),
        ("markov_step_slack", markov, -1e-12, markov >= -1e-12),
    ];
    let mut t = Table::new(table_name(12), &["check", "value", "threshold", "status"]);
    let mut ok = true;
    for (name, v, thr, pass) in checks {
        ok &= pass;
        t.push(vec![name.into(), num(v), num(thr), flag(pass)]);
    }
    Ok((ok, format!("reconstruction {recon:.2e}, superadditivity {superadd:.2e}, Markov {markov:.2e}"), t))
}
