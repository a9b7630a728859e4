//! Bias of the linear-implicit scheme with `P = (-A)^-alpha`. The fitted
//! order climbs from about one half to one as alpha goes from 0 to 1.
//!
//! ```text
//! cargo run --release --example preconditioner_sweep [samples]
//! ```

use std::sync::Arc;

use gibbs_spde::harness::{alpha_sweep, EnsembleConfig, Reference, ReferenceSamples};
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::observable::TestFunction;
use gibbs_spde::space::SpectralSpace;

fn main() -> gibbs_spde::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let model = Model::new(SpectralSpace::finite_difference(0.1)?, Nonlinearity::CosineWell);
    let phi = TestFunction::ExpNorm;
    let cfg = EnsembleConfig::new(samples, 10.0, 0);
    let reference = Reference::Paired(Arc::new(ReferenceSamples::fine_lm(&model, 2f64.powi(-8), &phi, &cfg)?));
    let alphas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let dts: Vec<f64> = (2..=6).map(|j| 2f64.powi(-j)).collect();
    let reports = alpha_sweep(&model, &alphas, &phi, &dts, &cfg, &reference)?;
    for (alpha, report) in alphas.iter().zip(&reports) {
        let order = report.fitted_order.map_or("unavailable".to_string(), |p| format!("{p:.3}"));
        println!("alpha = {alpha:<4} order {order}");
        for row in &report.rows {
            println!("    dt = {:<9} bias {:+.3e} +- {:.1e}", row.dt, row.bias, row.bias_stderr);
        }
    }
    Ok(())
}
