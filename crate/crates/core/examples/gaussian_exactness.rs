//! Closed-form stationary laws of the linear schemes, checked against a
//! Monte Carlo ensemble.
//!
//! ```text
//! cargo run --release --example gaussian_exactness [samples]
//! ```

use gibbs_spde::analytics::{gaussian_phi_expectation, GaussianLaw};
use gibbs_spde::harness::{analytic_scheme_expectation, run_ensemble, EnsembleConfig};
use gibbs_spde::integrators::{SchemeKind, SchemeSpec};
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::observable::TestFunction;
use gibbs_spde::space::SpectralSpace;

fn main() -> gibbs_spde::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let model = Model::new(SpectralSpace::finite_difference(0.02)?, Nonlinearity::Zero);
    let exact = gaussian_phi_expectation(model.space(), 1.0);
    println!("E exp(-|Y|^2) under the target: {exact:.6}");
    println!("{:<6} {:>5} {:>10} {:>10} {:>10} {:>8}", "scheme", "dt", "sigma^2", "predicted", "estimate", "z");
    let kinds = [
        SchemeKind::ExplicitEuler,
        SchemeKind::CrankNicolson,
        SchemeKind::ImplicitEuler,
        SchemeKind::LeimkuhlerMatthews,
        SchemeKind::PostprocessedImplicitEuler,
        SchemeKind::Rk2,
    ];
    for (i, kind) in kinds.into_iter().enumerate() {
        let spec = SchemeSpec::new(kind, 0.5)?;
        let law = GaussianLaw::of(spec)?;
        let predicted = analytic_scheme_expectation(&model, spec)?;
        let cfg = EnsembleConfig::new(samples, 10.0, 1).with_offset(i as u64 * samples);
        let est = run_ensemble(&model, spec, &TestFunction::ExpNorm, &cfg)?;
        println!(
            "{:<6} {:>5} {:>10.5} {:>10.6} {:>10.6} {:>8.2}",
            kind.label(),
            spec.dt(),
            law.variance_factor,
            predicted,
            est.mean,
            (est.mean - predicted) / est.stderr
        );
    }
    Ok(())
}
