//! Two schemes on the same noise. The difference of their means is far
//! more precise than either mean.
//!
//! ```text
//! cargo run --release --example coupled_comparison [samples]
//! ```

use gibbs_spde::harness::{coupled_bias_comparison, reference_value, EnsembleConfig, Reference, ReferenceMode};
use gibbs_spde::integrators::SchemeKind;
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::observable::TestFunction;
use gibbs_spde::space::SpectralSpace;

fn main() -> gibbs_spde::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let model = Model::new(SpectralSpace::finite_difference(0.1)?, Nonlinearity::CosineWell);
    let phi = TestFunction::ExpNorm;
    let cfg = EnsembleConfig::new(samples, 10.0, 3);
    // An independent fine reference, on trajectories the comparison never uses.
    let mode = ReferenceMode::FineLm { dt: 2f64.powi(-7), samples };
    let reference = reference_value(&model, &phi, mode, &cfg.with_offset(samples))?;
    println!("reference {:.6} +- {:.1e}", reference.value, reference.stderr);
    let reference = Reference::Value(reference);
    for dt in [0.25, 0.125, 0.0625] {
        let c = coupled_bias_comparison(
            &model,
            SchemeKind::ExplicitEuler,
            SchemeKind::LeimkuhlerMatthews,
            &phi,
            dt,
            &cfg,
            &reference,
        )?;
        println!(
            "dt = {dt:<7} ee - lm = {:+.3e} +- {:.1e}   (ee bias {:+.2e} +- {:.1e}, lm bias {:+.2e} +- {:.1e})",
            c.difference, c.stderr_difference, c.bias_a, c.stderr_a, c.bias_b, c.stderr_b
        );
    }
    Ok(())
}
