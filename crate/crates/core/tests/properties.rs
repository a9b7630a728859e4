use gibbs_spde::analytics::gaussian::{gaussian_phi_expectation, theta_variance_factor};
use gibbs_spde::cli::{parse_config, RunArgs};
use gibbs_spde::harness::{ConvergenceReport, ConvergenceRow};
use gibbs_spde::integrators::{step_explicit_euler, step_theta, Integrator, SchemeKind, SchemeSpec};
use gibbs_spde::model::{gradient_consistency, Model, Nonlinearity};
use gibbs_spde::noise::{NoiseLayout, NoiseStream};
use gibbs_spde::space::{FieldState, Flavor, Preconditioner, Resolution, SpectralSpace, TransformKind};
use proptest::prelude::*;

fn flavor() -> impl Strategy<Value = Flavor> {
    prop_oneof![Just(Flavor::SpectralGalerkin), Just(Flavor::FiniteDifference)]
}

fn coeffs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(k in 1usize..40, fl in flavor(), seed in any::<u64>()) {
        let space = SpectralSpace::new(fl, Resolution::Modes(k)).unwrap();
        let c: Vec<f64> = (0..k).map(|i| ((seed.wrapping_add(i as u64) % 1000) as f64 / 500.0) - 1.0).collect();
        let u = space.to_physical(&FieldState::from_vec(c.clone())).unwrap();
        let back = space.from_physical(&u).unwrap();
        for (a, b) in c.iter().zip(back.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_and_sine_transforms_agree(k in 60usize..140, c in coeffs(140)) {
        let dense = SpectralSpace::with_transform(Flavor::FiniteDifference, Resolution::Modes(k), TransformKind::Dense).unwrap();
        let sine = SpectralSpace::with_transform(Flavor::FiniteDifference, Resolution::Modes(k), TransformKind::Sine).unwrap();
        let state = FieldState::from_vec(c[..k].to_vec());
        let a = dense.to_physical(&state).unwrap();
        let b = sine.to_physical(&state).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval(k in 1usize..30, c in coeffs(30)) {
        let space = SpectralSpace::spectral(k).unwrap();
        let state = FieldState::from_vec(c[..k].to_vec());
        let u = space.to_physical(&state).unwrap();
        prop_assert!((space.grid_inner(&u, &u) - state.norm_squared()).abs() < 1e-10 * (1.0 + state.norm_squared()));
    }

    #[test]
    fn theta_zero_is_explicit_euler(y in coeffs(9), w in coeffs(9), dt in 0.01..1.0f64) {
        let m = Model::new(SpectralSpace::finite_difference(0.1).unwrap(), Nonlinearity::CosineWell);
        let (y, w) = (FieldState::from_vec(y), FieldState::from_vec(w));
        let a = step_explicit_euler(&m, &y, &w, dt).unwrap();
        let b = step_theta(&m, &y, &w, dt, 0.0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn theta_factor_matches_recursion(theta in 0.0..=1.0f64, u in 0.01..0.99f64) {
        // Keep dt inside the stability window 2/(1 − 2θ) for θ < ½.
        let dt = if theta < 0.5 { u * (2.0 / (1.0 - 2.0 * theta)).min(1.0) } else { 3.0 * u };
        let space = SpectralSpace::spectral(4).unwrap();
        let m = Model::new(space.clone(), Nonlinearity::Zero);
        let integ = Integrator::new(&m, SchemeSpec::new(SchemeKind::Theta(theta), dt).unwrap()).unwrap();
        let sigma2 = theta_variance_factor(theta, dt).unwrap();
        for k in 0..4 {
            let v = integ.linear_response(k).unwrap().iterate_stationary_variance();
            let closed = sigma2 * space.covariance()[k] / 2.0;
            prop_assert!((v - closed).abs() <= 1e-12 * (1.0 + closed.abs()));
        }
    }

    #[test]
    fn phi_expectation_monotone(k in 1usize..20, s in 0.0..3.0f64, ds in 0.01..1.0f64) {
        let space = SpectralSpace::spectral(k).unwrap();
        let a = gaussian_phi_expectation(&space, s);
        let b = gaussian_phi_expectation(&space, s + ds);
        prop_assert!(b < a && a <= 1.0 && b > 0.0);
    }

    #[test]
    fn preconditioner_admissible_on_unit_interval(alpha in 0.0..=1.0f64, k in 1usize..50, fl in flavor()) {
        let space = SpectralSpace::new(fl, Resolution::Modes(k)).unwrap();
        let p = Preconditioner::new(&space, alpha).unwrap();
        prop_assert!(p.is_admissible(&space));
        prop_assert!(p.multipliers().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn gradient_structure(k in 1usize..=8, fl in flavor(), c in coeffs(8)) {
        let m = Model::new(SpectralSpace::new(fl, Resolution::Modes(k)).unwrap(), Nonlinearity::CosineWell);
        let err = gradient_consistency(&m, &[FieldState::from_vec(c[..k].to_vec())]).unwrap();
        prop_assert!(err <= 1e-5);
    }

    #[test]
    fn noise_is_random_access(seed in any::<u64>(), traj in 0u64..1000, n in 0u64..50, bridge in any::<bool>()) {
        let layout = if bridge { NoiseLayout::Bridge } else { NoiseLayout::PerStep };
        let dt = 0.125;
        let mut seq = NoiseStream::with_layout(seed, traj, layout);
        let mut out = vec![0.0; 3];
        for _ in 0..=n {
            seq.next_increment_into(dt, &mut out);
        }
        let mut jump = NoiseStream::with_layout(seed, traj, layout);
        jump.seek(n);
        let mut direct = vec![0.0; 3];
        jump.next_increment_into(dt, &mut direct);
        prop_assert_eq!(out, direct);
    }

    #[test]
    fn bridge_levels_share_paths(seed in any::<u64>(), coarse in 0u32..4, extra in 1u32..4, block in 0u64..3) {
        let fine = coarse + extra;
        let (dc, df) = (2f64.powi(-(coarse as i32)), 2f64.powi(-(fine as i32)));
        let ratio = 1u64 << extra;
        let mut c = NoiseStream::with_layout(seed, 0, NoiseLayout::Bridge);
        let mut f = NoiseStream::with_layout(seed, 0, NoiseLayout::Bridge);
        let step = block << coarse;
        c.seek(step);
        f.seek(step * ratio);
        let mut big = vec![0.0; 2];
        c.next_increment_into(dc, &mut big);
        let mut sum = [0.0; 2];
        let mut small = vec![0.0; 2];
        for _ in 0..ratio {
            f.next_increment_into(df, &mut small);
            sum[0] += small[0];
            sum[1] += small[1];
        }
        prop_assert!((sum[0] - big[0]).abs() < 1e-12 && (sum[1] - big[1]).abs() < 1e-12);
    }

    #[test]
    fn flagged_rows_never_fitted(biases in prop::collection::vec(-1e-2..1e-2f64, 3..8), se in 1e-5..1e-2f64) {
        let rows: Vec<ConvergenceRow> = biases.iter().enumerate().map(|(i, &b)| ConvergenceRow {
            dt: 2f64.powi(-(i as i32) - 1),
            estimate: b,
            stderr: se,
            reference: 0.0,
            bias: b,
            bias_stderr: se,
            flagged: false,
            n_diverged: 0,
        }).collect();
        let report = ConvergenceReport::from_rows("ee", rows, 3.0);
        for (i, row) in report.rows.iter().enumerate() {
            prop_assert_eq!(row.flagged, !report.fit_window.contains(&i));
            prop_assert_eq!(row.flagged, row.bias.abs() < 3.0 * se);
        }
        prop_assert_eq!(report.fitted_order.is_some(), report.fit_window.len() >= 3);
        let csv = report.to_csv(true);
        prop_assert!(!csv.contains('"') && !csv.contains('\r'));
    }

    #[test]
    fn exact_power_law_is_recovered(p in 0.3..3.0f64, c in 1e-3..10.0f64) {
        let rows: Vec<ConvergenceRow> = (2..7).map(|j| {
            let dt = 2f64.powi(-j);
            ConvergenceRow { dt, estimate: 0.0, stderr: 0.0, reference: 0.0, bias: c * dt.powf(p), bias_stderr: 0.0, flagged: false, n_diverged: 0 }
        }).collect();
        let report = ConvergenceReport::from_rows("x", rows, 3.0);
        prop_assert!((report.fitted_order.unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn command_line_overrides_config(cli_dx in 0.01..0.5f64, file_dx in 0.01..0.5f64, seed in any::<u64>()) {
        let map = parse_config(&format!("dx={file_dx}\nseed={seed}\n")).unwrap();
        let mut args = RunArgs { dx: Some(cli_dx), ..Default::default() };
        args.merge_config(&map).unwrap();
        prop_assert_eq!(args.dx, Some(cli_dx));
        prop_assert_eq!(args.seed, Some(seed));
    }
}
