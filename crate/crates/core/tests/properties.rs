use nalgebra::DVector;
use proptest::prelude::*;

use fracnash_core::gallery::{build, GeneratorSpec};
use fracnash_core::log_sobolev::{entropy, markov_step_slack, truncation_energy_check};
use fracnash_core::nash::{rate_from_profile, DecayProfile};
use fracnash_core::ou::{mixed_norm, HermiteModel};
use fracnash_core::spectral::{MeasureSpace, ScalarFunction, SpectralOperator};
use fracnash_core::subordination::{subordinate_semigroup, StableSubordinator};
use fracnash_core::Error;
use fracnash_core::torus::{log_density_at_e, log_theta, theta, Status, TorusClassifier, TorusSpectrum};

fn vector(len: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-3.0..3.0f64, len).prop_map(DVector::from_vec)
}

fn non_negative(len: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(0.0..50.0f64, len).prop_map(DVector::from_vec)
}

fn generator() -> impl Strategy<Value = GeneratorSpec> {
    prop_oneof![
        (3usize..12).prop_map(GeneratorSpec::cycle),
        (2usize..12).prop_map(GeneratorSpec::path),
        (2usize..4, 2usize..4).prop_map(|(nx, ny)| GeneratorSpec::Grid2d { nx, ny, h: 1.0 }),
    ]
}

fn weighted_diagonal() -> impl Strategy<Value = SpectralOperator> {
    (prop::collection::vec(0.0..4.0f64, 6), prop::collection::vec(0.2..3.0f64, 6)).prop_map(|(ev, w)| {
        SpectralOperator::diagonal(MeasureSpace::new(w).unwrap(), &ev).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn functional_calculus_is_multiplicative(spec in generator(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let op = build(&spec).unwrap();
        let phi = ScalarFunction::new("phi", move |x| 1.0 + a * x + x * x);
        let psi = ScalarFunction::new("psi", move |x| b - x * x * x);
        let prod = ScalarFunction::new("prod", move |x| (1.0 + a * x + x * x) * (b - x * x * x));
        let lhs = op.apply_function(&prod).unwrap();
        let rhs = op.apply_function(&phi).unwrap() * op.apply_function(&psi).unwrap();
        let scale = 1.0 + lhs.amax();
        prop_assert!((lhs - rhs).amax() <= 1e-9 * scale);
    }

    #[test]
    fn heat_semigroup_law_and_contraction(op in weighted_diagonal(), t in 0.0..3.0f64, s in 0.0..3.0f64, f in vector(6)) {
        let lhs = op.heat(t) * op.heat(s);
        prop_assert!((lhs - op.heat(t + s)).amax() <= 1e-9);
        let sp = op.space();
        prop_assert!(sp.norm2(&(op.heat(t) * &f)) <= sp.norm2(&f) * (1.0 + 1e-12));
        let mass: f64 = op.spectral_measure(&f).unwrap().iter().map(|&(_, c)| c).sum();
        prop_assert!((mass - sp.norm2_sq(&f)).abs() <= 1e-10 * (1.0 + mass));
    }

    #[test]
    fn graph_generators_are_markov(spec in generator(), t in 0.01..5.0f64) {
        let op = build(&spec).unwrap();
        prop_assert!(op.eigenvalues()[0].abs() < 1e-10);
        let ones = DVector::from_element(op.dim(), 1.0);
        prop_assert!((op.matrix() * &ones).amax() < 1e-10);
        let k = op.heat(t);
        prop_assert!(k.iter().all(|&v| v >= -1e-12));
        prop_assert!((k * ones).add_scalar(-1.0).amax() < 1e-9);
    }

    #[test]
    fn monotone_in_alpha_on_normalized_data(op in weighted_diagonal(), f in vector(6), a in 0.05..1.0f64, da in 0.0..1.0f64) {
        let scaled = op.scaled(1.0 / op.max_eigenvalue().max(1e-300));
        let sp = scaled.space();
        prop_assume!(sp.norm2(&f) > 1e-6);
        let g = &f / sp.norm2(&f) * 1.5;
        let lo = scaled.quadratic_form(a, &g).unwrap();
        let hi = scaled.quadratic_form(a + da, &g).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn slicing_invariants(f in non_negative(10)) {
        let spec = GeneratorSpec::cycle(10);
        let r = truncation_energy_check(&spec, &f, None).unwrap();
        prop_assert!(r.slack >= -1e-12);
        let sp = MeasureSpace::uniform_probability(10);
        prop_assume!(sp.norm2(&f) > 0.0);
        prop_assert!(markov_step_slack(&f, &sp, -20..=20).unwrap() >= -1e-12);
        prop_assert!(entropy(&f, &sp).unwrap() >= -1e-12);
    }

    #[test]
    fn ou_norms_are_ordered(c in vector(8)) {
        let model = HermiteModel::new(8).unwrap();
        prop_assume!(c.norm() > 1e-6);
        prop_assert!(model.parseval_defect(&c).unwrap() <= 1e-9 * (1.0 + c.norm_squared()));
        let n1 = mixed_norm(&model, &c, 1.0).unwrap();
        let n2 = mixed_norm(&model, &c, 2.0).unwrap();
        let n4 = mixed_norm(&model, &c, 4.0).unwrap();
        prop_assert!(n1 <= n2 * (1.0 + 1e-9) && n2 <= n4 * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn subordinated_semigroup_contracts_l1(n in 3usize..10, alpha in 0.2..0.95f64, t in 0.05..5.0f64, f in vector(10)) {
        let op = build(&GeneratorSpec::cycle(n)).unwrap();
        let f = f.rows(0, n).into_owned();
        let q = subordinate_semigroup(&op, alpha, t).unwrap();
        let sp = op.space();
        prop_assert!(sp.norm1(&(q * &f)) <= sp.norm1(&f) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn stable_density_scales(alpha in 0.2..0.9f64, t in 0.2..5.0f64, s in 0.05..5.0f64) {
        let c = t.powf(-1.0 / alpha);
        let lhs = StableSubordinator::new(alpha, t).unwrap().density(s).unwrap();
        let rhs = c * StableSubordinator::new(alpha, 1.0).unwrap().density(s * c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn rate_dominates_every_probe(n in 0.5..6.0f64, y in 0.1..20.0f64, y2 in 0.0..5.0f64, lt0 in -8.0..8.0f64) {
        let p = DecayProfile::power(n);
        let x = y.exp();
        let b = rate_from_profile(&p, x).unwrap();
        let t0 = lt0.exp();
        prop_assert!(b >= t0 * y + t0 * p.big_m(1.0 / t0) - 1e-9 * b.abs().max(1.0));
        let b2 = rate_from_profile(&p, (y + y2).exp()).unwrap();
        prop_assert!(b2 >= b * (1.0 - 1e-10));
    }

    #[test]
    fn theta_exceeds_one_and_decreases(t in 1e-3..300.0f64, dt in 1e-3..5.0f64) {
        // log θ keeps relative precision where θ itself rounds to 1
        let (a, b) = (log_theta(t), log_theta(t + dt));
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
        if t < 30.0 {
            prop_assert!(theta(t, 1e-15).unwrap() > 1.0);
        }
    }

    #[test]
    fn torus_density_monotone(gamma in 0.5..2.0f64, t in 0.05..3.0f64, dt in 0.01..1.0f64, k in 1000usize..8000) {
        let spec = TorusSpectrum::new(gamma, k).unwrap();
        let more = TorusSpectrum::new(gamma, 2 * k).unwrap();
        let v = log_density_at_e(&spec, t);
        prop_assume!(!matches!(v, Err(Error::TruncationTooSmall { .. })));
        let v = v.unwrap().value;
        prop_assert!(log_density_at_e(&spec, t + dt).unwrap().value <= v);
        prop_assert!(log_density_at_e(&more, t).unwrap().value >= v);
    }
}

#[test]
fn classification_is_monotone_in_alpha() {
    let clf = TorusClassifier::new(TorusSpectrum::new(1.0, 5000).unwrap()).unwrap();
    for t in [0.01, 1.0, 100.0] {
        let statuses: Vec<Status> =
            (1..20).map(|i| clf.classify(i as f64 / 20.0, t).unwrap().status).collect();
        let first_finite = statuses.iter().position(|s| *s == Status::Finite).unwrap();
        assert!(statuses[..first_finite].iter().all(|s| *s != Status::Finite), "t = {t}: {statuses:?}");
        assert!(statuses[first_finite..].iter().all(|s| *s == Status::Finite), "t = {t}: {statuses:?}");
    }
}
