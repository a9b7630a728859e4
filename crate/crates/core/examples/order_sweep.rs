//! Equilibrium bias against a fine reference for the order-one schemes and
//! the postprocessed Leimkuhler-Matthews scheme, on shared Brownian paths.
//!
//! ```text
//! cargo run --release --example order_sweep [samples]
//! ```
//! With a million samples this is the order-one band of the acceptance
//! suite; the default runs in about a minute.

use std::sync::Arc;

use gibbs_spde::harness::{dt_sweep, EnsembleConfig, Reference, ReferenceSamples};
use gibbs_spde::integrators::SchemeKind;
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::observable::TestFunction;
use gibbs_spde::space::SpectralSpace;

fn main() -> gibbs_spde::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let model = Model::new(SpectralSpace::finite_difference(0.1)?, Nonlinearity::CosineWell);
    let phi = TestFunction::ExpNorm;
    let cfg = EnsembleConfig::new(samples, 10.0, 0);
    let reference = ReferenceSamples::fine_lm(&model, 2f64.powi(-8), &phi, &cfg)?;
    let r = reference.value()?;
    eprintln!("reference {:.6} +- {:.1e}", r.value, r.stderr);
    let reference = Reference::Paired(Arc::new(reference));

    let dts: Vec<f64> = (2..=6).map(|j| 2f64.powi(-j)).collect();
    for (i, kind) in [SchemeKind::ExplicitEuler, SchemeKind::ImplicitEuler, SchemeKind::LeimkuhlerMatthews]
        .into_iter()
        .enumerate()
    {
        let report = dt_sweep(&model, kind, &phi, &dts, &cfg, &reference)?;
        print!("{}", report.to_csv(i == 0));
    }
    Ok(())
}
