//! The catalog of deterministic checks behind the `verify` subcommand.
//!
//! Each check produces a value, a tolerance and a verdict. Checks are grouped
//! into categories; a filter selects checks whose category or name contains
//! the filter string.

use std::fmt::{self, Write as _};

use crate::analytics::gaussian::{
    gaussian_phi_expectation, lm_variance_factors, observed_variance_factors, theta_variance_factor,
};
use crate::analytics::verifier::{residual_slope, DerivativeBundle, Verifier};
use crate::error::Result;
use crate::harness::{coupled_contraction_ratios, dt_sweep, EnsembleConfig, Reference, ReferenceValue};
use crate::integrators::{Integrator, SchemeKind, SchemeSpec};
use crate::model::{gradient_consistency, Model, Nonlinearity};
use crate::noise::CounterRng;
use crate::observable::TestFunction;
use crate::space::{FieldState, Flavor, Preconditioner, Resolution, SpectralSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    Gaussian,
    Derivatives,
    Taylor,
    Order2,
    IntegrationByParts,
    Stationarity,
    Contraction,
    Gradient,
    Determinism,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Gaussian,
        Category::Derivatives,
        Category::Taylor,
        Category::Order2,
        Category::IntegrationByParts,
        Category::Stationarity,
        Category::Contraction,
        Category::Gradient,
        Category::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Gaussian => "gaussian",
            Category::Derivatives => "derivatives",
            Category::Taylor => "taylor",
            Category::Order2 => "order2",
            Category::IntegrationByParts => "parts",
            Category::Stationarity => "stationarity",
            Category::Contraction => "contraction",
            Category::Gradient => "gradient",
            Category::Determinism => "determinism",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// Passes when `value ≤ tolerance`.
    AtMost,
    /// Passes when `value ≥ tolerance`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub category: Category,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl CheckResult {
    fn new(category: Category, name: impl Into<String>, value: f64, comparison: Comparison, tolerance: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => value <= tolerance,
            Comparison::AtLeast => value >= tolerance,
        };
        CheckResult {
            category,
            name: name.into(),
            value,
            tolerance,
            comparison,
            passed,
            error: None,
        }
    }

    fn failed(category: Category, name: impl Into<String>, error: String) -> Self {
        CheckResult {
            category,
            name: name.into(),
            value: f64::NAN,
            tolerance: f64::NAN,
            comparison: Comparison::AtMost,
            passed: false,
            error: Some(error),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub filter: Option<String>,
    /// Weight of the trace term in the generator; anything but `0.5` is a
    /// deliberate mutation.
    pub trace_weight: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { filter: None, trace_weight: 0.5 }
    }
}

struct Runner<'o> {
    opts: &'o VerifyOptions,
    results: Vec<CheckResult>,
}

impl Runner<'_> {
    fn selected(&self, category: Category, name: &str) -> bool {
        match &self.opts.filter {
            None => true,
            Some(f) => category.name().contains(f.as_str()) || name.contains(f.as_str()),
        }
    }

    fn check(&mut self, category: Category, name: String, cmp: Comparison, tol: f64, eval: impl FnOnce() -> Result<f64>) {
        if !self.selected(category, &name) {
            return;
        }
        let result = match eval() {
            Ok(v) => CheckResult::new(category, name, v, cmp, tol),
            Err(e) => CheckResult::failed(category, name, e.to_string()),
        };
        self.results.push(result);
    }
}

fn galerkin(k: usize, nl: Nonlinearity) -> Result<Model> {
    Ok(Model::new(SpectralSpace::new(Flavor::SpectralGalerkin, Resolution::Modes(k))?, nl))
}

fn catalog() -> [(Nonlinearity, TestFunction); 4] {
    [
        (Nonlinearity::Zero, TestFunction::Quadratic),
        (Nonlinearity::Zero, TestFunction::ExpNorm),
        (Nonlinearity::CosineWell, TestFunction::Quadratic),
        (Nonlinearity::CosineWell, TestFunction::ExpNorm),
    ]
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 2f64.powi(-j)).collect()
}

fn gaussian_checks(r: &mut Runner<'_>) {
    let space = SpectralSpace::finite_difference(0.1).expect("valid spacing");
    let model = Model::new(space.clone(), Nonlinearity::Zero);
    for theta in [0.0, 0.5, 1.0] {
        r.check(Category::Gaussian, format!("theta_factor_vs_recursion(theta={theta})"), Comparison::AtMost, 1e-12, || {
            let mut worst = 0.0f64;
            for dt in [0.5, 0.25, 0.1, 0.01] {
                let spec = SchemeSpec::new(SchemeKind::Theta(theta), dt)?;
                let integ = Integrator::new(&model, spec)?;
                let sigma2 = theta_variance_factor(theta, dt)?;
                for k in 0..space.modes() {
                    let v = integ.linear_response(k)?.iterate_stationary_variance();
                    worst = worst.max((v - sigma2 * space.covariance()[k] / 2.0).abs());
                }
            }
            Ok(worst)
        });
    }
    r.check(Category::Gaussian, "lm_factors_vs_recursion".into(), Comparison::AtMost, 1e-12, || {
        let mut worst = 0.0f64;
        for dt in [0.5, 0.25, 0.1, 0.01] {
            let integ = Integrator::new(&model, SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, dt)?)?;
            let (chain, post) = lm_variance_factors(dt)?;
            worst = worst.max((chain - (1.0 - dt / 2.0)).abs()).max((post - 1.0).abs());
            for k in 0..space.modes() {
                let resp = integ.linear_response(k)?;
                let q = space.covariance()[k];
                worst = worst
                    .max((resp.iterate_stationary_variance() - chain * q / 2.0).abs())
                    .max((resp.iterate_observed_variance() - q / 2.0).abs());
            }
        }
        Ok(worst)
    });
    for kind in [SchemeKind::PostprocessedImplicitEuler, SchemeKind::Rk2] {
        r.check(Category::Gaussian, format!("{}_factor_vs_recursion", kind.label()), Comparison::AtMost, 1e-12, || {
            let mut worst = 0.0f64;
            for dt in [0.5, 0.25, 0.1, 0.01] {
                let spec = SchemeSpec::new(kind, dt)?;
                let integ = Integrator::new(&model, spec)?;
                let factors = observed_variance_factors(&space, spec)?;
                for k in 0..space.modes() {
                    let v = integ.linear_response(k)?.iterate_observed_variance();
                    worst = worst.max((v - factors[k] * space.covariance()[k] / 2.0).abs());
                }
            }
            Ok(worst)
        });
    }
    r.check(Category::Gaussian, "phi_expectation_k1".into(), Comparison::AtMost, 1e-15, || {
        let pi2 = std::f64::consts::PI.powi(2);
        Ok((gaussian_phi_expectation(&SpectralSpace::spectral(1)?, 1.0) - (1.0 + 1.0 / pi2).powf(-0.5)).abs())
    });
}

fn derivative_checks(r: &mut Runner<'_>) {
    for k in 1..=3 {
        for (nl, phi) in catalog() {
            let name = format!("fd_consistency(K={k}, f={}, phi={})", nl.name(), phi.name());
            r.check(Category::Derivatives, name, Comparison::AtMost, 1e-5, || {
                let model = galerkin(k, nl)?;
                DerivativeBundle::new(&model, phi)?.finite_difference_consistency(20, 7)
            });
        }
    }
}

fn taylor_checks(r: &mut Runner<'_>) {
    let dts = dyadic(3, 7);
    let weight = r.opts.trace_weight;
    for phi in [TestFunction::ExpNorm, TestFunction::Quadratic] {
        let name = format!("integrator_slope(K=1, f=cos, phi={})", phi.name());
        let p = phi.clone();
        let d = dts.clone();
        r.check(Category::Taylor, name, Comparison::AtLeast, 2.7, move || {
            let model = galerkin(1, Nonlinearity::CosineWell)?;
            let v = Verifier::new(DerivativeBundle::new(&model, p)?).with_trace_weight(weight);
            let res = v.integrator_taylor_residuals(&[0.3], &d)?;
            Ok(residual_slope(&d, &res).unwrap_or(f64::INFINITY))
        });
        let name = format!("postprocessor_slope(K=1, f=cos, phi={})", phi.name());
        let d = dts.clone();
        r.check(Category::Taylor, name, Comparison::AtLeast, 1.7, move || {
            let model = galerkin(1, Nonlinearity::CosineWell)?;
            let v = Verifier::new(DerivativeBundle::new(&model, phi)?).with_trace_weight(weight);
            let res = v.postprocessor_taylor_residuals(&[0.3], &d)?;
            Ok(residual_slope(&d, &res).unwrap_or(f64::INFINITY))
        });
    }
}

fn quadrature_checks(r: &mut Runner<'_>) {
    let weight = r.opts.trace_weight;
    for k in 1..=2 {
        for (nl, phi) in catalog() {
            let tag = format!("K={k}, f={}, phi={}", nl.name(), phi.name());
            let verifier = |nl: Nonlinearity, phi: TestFunction| -> Result<(Model, TestFunction)> { Ok((galerkin(k, nl)?, phi)) };
            let (n1, p1) = (nl.clone(), phi.clone());
            r.check(Category::Order2, format!("order2_residual({tag})"), Comparison::AtMost, 1e-5, || {
                let (model, phi) = verifier(n1, p1)?;
                Verifier::new(DerivativeBundle::new(&model, phi)?).with_trace_weight(weight).order2_condition_residual()
            });
            let (n1, p1) = (nl.clone(), phi.clone());
            r.check(Category::Stationarity, format!("generator_mean({tag})"), Comparison::AtMost, 1e-6, || {
                let (model, phi) = verifier(n1, p1)?;
                Verifier::new(DerivativeBundle::new(&model, phi)?).with_trace_weight(weight).stationarity_residual()
            });
            if k == 1 {
                for which in [0, 1] {
                    let (n1, p1) = (nl.clone(), phi.clone());
                    r.check(
                        Category::IntegrationByParts,
                        format!("parts_identity_{}({tag})", which + 1),
                        Comparison::AtMost,
                        1e-6,
                        || {
                            let (model, phi) = verifier(n1, p1)?;
                            let (a, b) = Verifier::new(DerivativeBundle::new(&model, phi)?).integration_by_parts_residuals()?;
                            Ok(if which == 0 { a } else { b })
                        },
                    );
                }
            }
        }
    }
}

fn contraction_checks(r: &mut Runner<'_>) {
    for flavor in [Flavor::SpectralGalerkin, Flavor::FiniteDifference] {
        for dt in [0.5, 0.25, 0.1] {
            let name = format!("ee_coupled_ratio_excess({}, dt={dt})", flavor.name());
            r.check(Category::Contraction, name, Comparison::AtMost, 1e-12, || {
                let space = SpectralSpace::new(flavor, Resolution::Modes(9))?;
                let model = Model::new(space.clone(), Nonlinearity::CosineWell);
                let rate = Preconditioner::covariance(&space).contraction_rate(&space, model.nonlinearity().lip_bound());
                let gamma = 1.0 - dt * rate;
                let mut rng = CounterRng::from_parts(&[31]);
                let mut worst = f64::NEG_INFINITY;
                for _ in 0..5 {
                    let a = random_state(&mut rng, 9, 2.0);
                    let b = random_state(&mut rng, 9, 2.0);
                    let spec = SchemeSpec::new(SchemeKind::ExplicitEuler, dt)?;
                    for ratio in coupled_contraction_ratios(&model, spec, &a, &b, 17, 50)? {
                        worst = worst.max(ratio - gamma);
                    }
                }
                Ok(worst)
            });
        }
    }
}

fn random_state(rng: &mut CounterRng, k: usize, scale: f64) -> FieldState {
    use rand::Rng;
    FieldState::from_vec((0..k).map(|_| rng.random_range(-scale..scale)).collect())
}

fn gradient_checks(r: &mut Runner<'_>) {
    for flavor in [Flavor::SpectralGalerkin, Flavor::FiniteDifference] {
        for nl in [Nonlinearity::CosineWell, Nonlinearity::Linear] {
            let name = format!("minus_dv_vs_f({}, f={}, K<=8)", flavor.name(), nl.name());
            r.check(Category::Gradient, name, Comparison::AtMost, 1e-5, || {
                let mut rng = CounterRng::from_parts(&[5]);
                let mut worst = 0.0f64;
                for k in 1..=8 {
                    let model = Model::new(SpectralSpace::new(flavor, Resolution::Modes(k))?, nl.clone());
                    let states: Vec<FieldState> = (0..5).map(|_| random_state(&mut rng, k, 1.5)).collect();
                    worst = worst.max(gradient_consistency(&model, &states)?);
                }
                Ok(worst)
            });
        }
    }
}

fn determinism_checks(r: &mut Runner<'_>) {
    r.check(Category::Determinism, "sweep_csv_repeat_and_threads".into(), Comparison::AtMost, 0.0, || {
        let model = Model::new(SpectralSpace::finite_difference(0.1)?, Nonlinearity::CosineWell);
        let cfg = EnsembleConfig::new(200, 2.0, 42);
        let reference = Reference::Value(ReferenceValue { value: 0.92, stderr: 0.0, description: "fixed".into() });
        let csv = || -> Result<String> {
            let rep = dt_sweep(&model, SchemeKind::LeimkuhlerMatthews, &TestFunction::ExpNorm, &dyadic(2, 4), &cfg, &reference)?;
            Ok(rep.to_csv(true))
        };
        let first = csv()?;
        let second = csv()?;
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| crate::Error::InvalidParameter(e.to_string()))?
            .install(csv)?;
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .map_err(|e| crate::Error::InvalidParameter(e.to_string()))?
            .install(csv)?;
        let mismatches = [second, single, many].iter().filter(|s| **s != first).count();
        Ok(mismatches as f64)
    });
}

/// Runs every selected check. Checks are skipped, not evaluated, when the
/// filter excludes them.
pub fn run_checks(opts: &VerifyOptions) -> Vec<CheckResult> {
    let mut r = Runner { opts, results: Vec::new() };
    gaussian_checks(&mut r);
    derivative_checks(&mut r);
    taylor_checks(&mut r);
    quadrature_checks(&mut r);
    contraction_checks(&mut r);
    gradient_checks(&mut r);
    determinism_checks(&mut r);
    r.results
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|c| c.passed)
}

/// Fixed-width pass/fail table.
pub fn format_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:<13} {:<width$} {:>12} {:>14}", "status", "category", "check", "value", "tolerance");
    for c in results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let tol = match c.comparison {
            Comparison::AtMost => format!("<= {:.1e}", c.tolerance),
            Comparison::AtLeast => format!(">= {:.2}", c.tolerance),
        };
        let _ = write!(out, "{:<6} {:<13} {:<width$} {:>12.3e} {:>14}", status, c.category.name(), c.name, c.value, tol);
        if let Some(e) = &c.error {
            let _ = write!(out, "  error: {e}");
        }
        out.push('\n');
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    let _ = writeln!(out, "{} checks, {} failed", results.len(), failed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_filter_is_closed_form_only() {
        let opts = VerifyOptions { filter: Some("gaussian".into()), ..Default::default() };
        let start = std::time::Instant::now();
        let results = run_checks(&opts);
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert!(!results.is_empty());
        assert!(results.iter().all(|c| c.category == Category::Gaussian));
        assert!(all_passed(&results), "{}", format_table(&results));
    }

    #[test]
    fn wrong_trace_weight_breaks_taylor_slopes() {
        let opts = VerifyOptions { filter: Some("integrator_slope".into()), trace_weight: 1.0 };
        let results = run_checks(&opts);
        assert_eq!(results.len(), 2);
        let expnorm = results.iter().find(|c| c.name.contains("expnorm")).unwrap();
        assert!(!expnorm.passed, "{}", format_table(&results));
    }

    #[test]
    fn table_lists_every_check() {
        let opts = VerifyOptions { filter: Some("contraction".into()), ..Default::default() };
        let results = run_checks(&opts);
        let table = format_table(&results);
        assert_eq!(table.lines().count(), results.len() + 2);
        assert!(table.ends_with("6 checks, 0 failed\n"), "{table}");
    }
}
