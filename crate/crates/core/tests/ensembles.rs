use std::sync::Arc;

use gibbs_spde::analytics::gaussian::{gaussian_phi_expectation, theta_variance_factor};
use gibbs_spde::harness::{
    analytic_reference, analytic_scheme_expectation, coupled_bias_comparison, dt_sweep, holder_exponent,
    reference_value, run_ensemble, EnsembleConfig, Reference, ReferenceMode, ReferenceSamples,
};
use gibbs_spde::integrators::{run_with_observer, Integrator, SchemeKind, SchemeSpec};
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::noise::NoiseStream;
use gibbs_spde::observable::TestFunction;
use gibbs_spde::space::{FieldState, SpectralSpace};
use gibbs_spde::stats::Accumulator;

fn cosine(dx: f64) -> Model {
    Model::new(SpectralSpace::finite_difference(dx).unwrap(), Nonlinearity::CosineWell)
}

fn gaussian(dx: f64) -> Model {
    Model::new(SpectralSpace::finite_difference(dx).unwrap(), Nonlinearity::Zero)
}

fn within(a: f64, b: f64, se: f64, k: f64) -> bool {
    (a - b).abs() <= k * se
}

#[test]
fn explicit_euler_mode_one_second_moment() {
    let m = gaussian(0.1);
    let spec = SchemeSpec::new(SchemeKind::ExplicitEuler, 0.1).unwrap();
    let integ = Integrator::new(&m, spec).unwrap();
    let mut acc = Accumulator::default();
    for traj in 0..100_000 {
        let mut s = NoiseStream::new(8, traj);
        let out = gibbs_spde::integrators::run_trajectory(&integ, &m.space().zeros(), &mut s, 200).unwrap();
        acc.push(out.output.next.as_slice()[0].powi(2));
    }
    let expected = theta_variance_factor(0.0, 0.1).unwrap() * m.space().covariance()[0] / 2.0;
    assert!(within(acc.mean(), expected, acc.stderr(), 4.0), "{} vs {expected} ± {}", acc.mean(), acc.stderr());
}

#[test]
fn crank_nicolson_is_exact_and_euler_is_biased() {
    let m = gaussian(0.02);
    let cfg = EnsembleConfig::new(20_000, 10.0, 1);
    let cn = run_ensemble(&m, SchemeSpec::new(SchemeKind::CrankNicolson, 0.25).unwrap(), &TestFunction::ExpNorm, &cfg).unwrap();
    let exact = gaussian_phi_expectation(m.space(), 1.0);
    assert!(within(cn.mean, exact, cn.stderr, 4.0));
    let ee_spec = SchemeSpec::new(SchemeKind::ExplicitEuler, 0.5).unwrap();
    let ee = run_ensemble(&m, ee_spec, &TestFunction::ExpNorm, &cfg.with_offset(20_000)).unwrap();
    let biased = gaussian_phi_expectation(m.space(), 4.0 / 3.0);
    assert_eq!(analytic_scheme_expectation(&m, ee_spec).unwrap(), biased);
    assert!(within(ee.mean, biased, ee.stderr, 4.0));
    assert!(!within(ee.mean, exact, ee.stderr, 4.0));
}

#[test]
fn analytic_and_fine_lm_references_agree() {
    let m = gaussian(0.1);
    let cfg = EnsembleConfig::new(20_000, 10.0, 2);
    let a = analytic_reference(&m, &TestFunction::ExpNorm).unwrap();
    let mode = ReferenceMode::FineLm { dt: 2f64.powi(-7), samples: 20_000 };
    let f = reference_value(&m, &TestFunction::ExpNorm, mode, &cfg).unwrap();
    assert!(f.stderr > 0.0);
    assert!(within(a.value, f.value, f.stderr, 4.0), "{} vs {} ± {}", a.value, f.value, f.stderr);
}

#[test]
fn stderr_halves_when_samples_quadruple() {
    let m = cosine(0.1);
    let spec = SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, 0.25).unwrap();
    let small = run_ensemble(&m, spec, &TestFunction::ExpNorm, &EnsembleConfig::new(5_000, 5.0, 3)).unwrap();
    let large = run_ensemble(&m, spec, &TestFunction::ExpNorm, &EnsembleConfig::new(20_000, 5.0, 3)).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
}

#[test]
fn final_time_ten_is_past_burn_in() {
    let m = cosine(0.1);
    let spec = SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, 0.125).unwrap();
    let t10 = run_ensemble(&m, spec, &TestFunction::ExpNorm, &EnsembleConfig::new(40_000, 10.0, 4)).unwrap();
    let t15 = run_ensemble(&m, spec, &TestFunction::ExpNorm, &EnsembleConfig::new(40_000, 15.0, 4).with_offset(40_000)).unwrap();
    assert!(within(t10.mean, t15.mean, t10.stderr.hypot(t15.stderr), 4.0));
}

#[test]
fn coupled_euler_minus_crank_nicolson_is_the_euler_bias() {
    let m = gaussian(0.02);
    let cfg = EnsembleConfig::new(20_000, 10.0, 5);
    let exact = analytic_reference(&m, &TestFunction::ExpNorm).unwrap();
    let c = coupled_bias_comparison(
        &m,
        SchemeKind::ExplicitEuler,
        SchemeKind::CrankNicolson,
        &TestFunction::ExpNorm,
        0.5,
        &cfg,
        &Reference::Value(exact.clone()),
    )
    .unwrap();
    let predicted = gaussian_phi_expectation(m.space(), 4.0 / 3.0) - exact.value;
    assert!(within(c.difference, predicted, c.stderr_difference, 4.0), "{} vs {predicted}", c.difference);
    assert!(c.stderr_difference < 0.5 * c.stderr_a.min(c.stderr_b));
}

#[test]
fn exact_scheme_rows_are_all_flagged() {
    let m = gaussian(0.1);
    let cfg = EnsembleConfig::new(10_000, 10.0, 6);
    let reference = Reference::Value(analytic_reference(&m, &TestFunction::ExpNorm).unwrap());
    let dts: Vec<f64> = (2..=6).map(|j| 2f64.powi(-j)).collect();
    let report = dt_sweep(&m, SchemeKind::LeimkuhlerMatthews, &TestFunction::ExpNorm, &dts, &cfg, &reference).unwrap();
    assert_eq!(report.n_flagged(), dts.len(), "{}", report.to_csv(true));
    assert!(report.fitted_order.is_none());
    assert!(report.to_csv(true).ends_with("# fitted_order=unavailable\n"));
}

#[test]
fn paired_sweep_rows_share_reference_paths() {
    let m = cosine(0.25);
    let cfg = EnsembleConfig::new(2_000, 4.0, 7);
    let samples = ReferenceSamples::fine_lm(&m, 2f64.powi(-6), &TestFunction::ExpNorm, &cfg).unwrap();
    let value = samples.value().unwrap();
    let reference = Reference::Paired(Arc::new(samples));
    let dts = [0.5, 0.25, 0.125];
    let report = dt_sweep(&m, SchemeKind::ExplicitEuler, &TestFunction::ExpNorm, &dts, &cfg, &reference).unwrap();
    for row in &report.rows {
        assert_eq!(row.reference, value.value);
        assert!(row.bias_stderr < row.stderr);
    }
}

#[test]
fn leimkuhler_matthews_trajectories_are_half_holder() {
    let m = cosine(0.1);
    let dt = 2f64.powi(-8);
    let spec = SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, dt).unwrap();
    let lags = [1, 2, 4, 8, 16, 32];
    let (points, slope) = holder_exponent(&m, spec, &EnsembleConfig::new(2_000, 0.0, 9), 1_024, &lags).unwrap();
    let slope = slope.unwrap();
    assert!((0.4..=0.6).contains(&slope), "{slope} from {points:?}");
}

#[test]
fn moment_suprema_agree_across_steps() {
    let m = cosine(0.1);
    let mut sups = Vec::new();
    for dt in [0.5, 0.25, 0.1] {
        let spec = SchemeSpec::new(SchemeKind::ExplicitEuler, dt).unwrap();
        let profile = gibbs_spde::harness::moment_profile(&m, spec, &EnsembleConfig::new(2_000, 10.0, 10)).unwrap();
        sups.push(profile.iter().copied().fold(0.0, f64::max));
    }
    let hi = sups.iter().copied().fold(0.0, f64::max);
    let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(hi <= 2.0 * lo, "{sups:?}");
}

#[test]
fn pli_contraction_matches_continuous_rate() {
    let space = SpectralSpace::finite_difference(0.1).unwrap();
    let m = Model::new(space.clone(), Nonlinearity::CosineWell);
    let lip = m.nonlinearity().lip_bound();
    for dt in [0.05, 0.02] {
        let spec = SchemeSpec::new(SchemeKind::PreconditionedLinearImplicit { alpha: 1.0 }, dt).unwrap();
        let bound = 1.05 * (-(1.0 - lip / space.eigenvalues()[0]) * dt).exp();
        let a = FieldState::from_vec((0..9).map(|i| (i as f64).sin()).collect());
        let b = m.space().zeros();
        let ratios = gibbs_spde::harness::coupled_contraction_ratios(&m, spec, &a, &b, 3, 200).unwrap();
        assert!(ratios.iter().all(|&r| r <= bound), "dt={dt}");
    }
}

#[test]
fn observer_sees_every_iterate() {
    let m = cosine(0.25);
    let integ = Integrator::new(&m, SchemeSpec::new(SchemeKind::Rk2, 0.5).unwrap()).unwrap();
    let mut seen = Vec::new();
    let mut s = NoiseStream::new(0, 0);
    run_with_observer(&integ, &m.space().zeros(), &mut s, 6, |n, _| seen.push(n)).unwrap();
    assert_eq!(seen, (0..=6).collect::<Vec<_>>());
}
