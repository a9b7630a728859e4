//! One trajectory of the preconditioned dynamics, with a user-supplied
//! nonlinearity, and the time regularity of stationary paths.
//!
//! ```text
//! cargo run --release --example trajectory
//! ```

use gibbs_spde::harness::{holder_exponent, EnsembleConfig};
use gibbs_spde::integrators::{run_with_observer, Integrator, SchemeKind, SchemeSpec};
use gibbs_spde::model::{Model, Nonlinearity};
use gibbs_spde::noise::NoiseStream;
use gibbs_spde::space::SpectralSpace;

fn main() -> gibbs_spde::Result<()> {
    // f(x) = -x + sin(x)/2 has potential u(x) = x^2/2 + cos(x)/2.
    let nl = Nonlinearity::custom(
        "soft-sine",
        |x: f64| -x + 0.5 * x.sin(),
        |x: f64| -1.0 + 0.5 * x.cos(),
        |x: f64| 0.5 * x * x + 0.5 * x.cos(),
        1.5,
    )?
    .with_second_derivative(|x: f64| -0.5 * x.sin());
    let model = Model::new(SpectralSpace::finite_difference(0.05)?, nl);
    let space = model.space();
    let integ = Integrator::new(&model, SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, 0.05)?)?;
    let mut stream = NoiseStream::new(12, 0);
    let mut grid = vec![0.0; space.modes()];
    let mut scratch = space.scratch();
    let mid = space.modes() / 2;
    println!("t, Y(t, 1/2), |Y(t)|");
    run_with_observer(&integ, &space.zeros(), &mut stream, 100, |n, y| {
        if n % 10 == 0 {
            space.to_physical_into(y, &mut grid, &mut scratch);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            println!("{:.2}, {:+.4}, {:.4}", n as f64 * 0.05, grid[mid], norm);
        }
    })?;

    let fine = SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, 2f64.powi(-8))?;
    let (points, slope) = holder_exponent(&model, fine, &EnsembleConfig::new(1_000, 0.0, 5), 1_024, &[1, 2, 4, 8, 16, 32])?;
    for (h, m) in &points {
        println!("gap {h:.5}: E|Y(t+h) - Y(t)| = {m:.4}");
    }
    println!("time regularity exponent {:.3}", slope.unwrap_or(f64::NAN));
    Ok(())
}
