//! Eigenvalues of the two discretizations and the sine transform.
//!
//! ```text
//! cargo run --release --example spectral_basis
//! ```

use gibbs_spde::space::{FieldState, Preconditioner, SpectralSpace};

fn main() -> gibbs_spde::Result<()> {
    let fd = SpectralSpace::finite_difference(0.02)?;
    let sg = SpectralSpace::spectral(fd.modes())?;
    println!("K = {} interior points, dx = {}", fd.modes(), fd.grid_spacing());
    println!("{:>3} {:>14} {:>14} {:>10}", "k", "lambda_fd", "pi^2 k^2", "rel gap");
    for k in [1, 2, 5, 10, 25, 49] {
        let (a, b) = (fd.eigenvalues()[k - 1], sg.eigenvalues()[k - 1]);
        println!("{k:>3} {a:>14.6} {b:>14.6} {:>10.2e}", (b - a) / b);
    }
    println!("Tr Q: fd {:.6}, spectral {:.6} (limit 1/6)", fd.trace_q(), sg.trace_q());

    // A single mode on the grid is the sampled eigenfunction sqrt(2) sin(k pi z).
    let e3 = fd.to_physical(&FieldState::basis(fd.modes(), 2))?;
    let z = fd.grid();
    let err = e3
        .iter()
        .zip(&z)
        .map(|(u, z)| (u - 2f64.sqrt() * (3.0 * std::f64::consts::PI * z).sin()).abs())
        .fold(0.0, f64::max);
    println!("e_3 on the grid, max error {err:.1e}");

    let big = SpectralSpace::finite_difference(1.0 / 1024.0)?;
    let c = FieldState::from_vec((0..big.modes()).map(|k| 1.0 / (k as f64 + 1.0)).collect());
    let back = big.from_physical(&big.to_physical(&c)?)?;
    let drift = c.as_slice().iter().zip(back.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("K = {} round trip through the fast sine transform: {drift:.1e}", big.modes());

    for alpha in [0.0, 0.5, 1.0] {
        let p = Preconditioner::new(&fd, alpha)?;
        println!("alpha = {alpha}: sup p_k = {:.3e}, contraction rate {:.4}", p.sup(), p.contraction_rate(&fd, 2.0));
    }
    Ok(())
}
