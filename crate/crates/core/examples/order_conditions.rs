//! The weak expansion operators on a one- and two-mode Galerkin space.
//!
//! ```text
//! cargo run --release --example order_conditions
//! ```

use gibbs_spde::analytics::verifier::{residual_slope, DerivativeBundle, Verifier};
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::observable::TestFunction;
use gibbs_spde::space::SpectralSpace;

fn main() -> gibbs_spde::Result<()> {
    let one = Model::new(SpectralSpace::spectral(1)?, Nonlinearity::CosineWell);
    let v = Verifier::new(DerivativeBundle::new(&one, TestFunction::ExpNorm)?);
    let y = [0.3];
    println!("at y = 0.3: L phi = {:.6}, A1 phi = {:.6}, A1bar phi = {:.6}", v.generator(&y), v.a1(&y)?, v.a1bar(&y));
    println!(
        "commutator: closed form {:.8}, composed {:.8}",
        v.commutator(&y)?,
        v.commutator_brute_force(&y)
    );

    let dts: Vec<f64> = (3..=7).map(|j| 2f64.powi(-j)).collect();
    let step = v.integrator_taylor_residuals(&y, &dts)?;
    let post = v.postprocessor_taylor_residuals(&y, &dts)?;
    for ((dt, s), p) in dts.iter().zip(&step).zip(&post) {
        println!("dt = {dt:<9} one-step residual {s:.3e}   postprocessor residual {p:.3e}");
    }
    println!("slopes: {:.3} and {:.3}", residual_slope(&dts, &step).unwrap(), residual_slope(&dts, &post).unwrap());

    // Doubling the trace weight of L breaks the expansion at first order.
    let wrong = Verifier::new(DerivativeBundle::new(&one, TestFunction::ExpNorm)?).with_trace_weight(1.0);
    let bad = wrong.integrator_taylor_residuals(&y, &dts)?;
    println!("with trace weight 1: slope {:.3}", residual_slope(&dts, &bad).unwrap());

    for k in [1, 2] {
        let m = Model::new(SpectralSpace::spectral(k)?, Nonlinearity::CosineWell);
        let v = Verifier::new(DerivativeBundle::new(&m, TestFunction::ExpNorm)?);
        let (p1, p2) = v.integration_by_parts_residuals()?;
        println!(
            "K = {k}: |<A1 + [L, A1bar]>| = {:.2e}, |<L phi>| = {:.2e}, parts {p1:.1e} / {p2:.1e}",
            v.order2_condition_residual()?,
            v.stationarity_residual()?
        );
    }
    Ok(())
}
