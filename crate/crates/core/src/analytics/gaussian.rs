//! Stationary laws of the linear (`F = 0`) schemes.
//!
//! Every scheme leaves the modes decoupled; mode `k` settles to
//! `N(0, σ²·q_k/2)`, and `σ² = 1` means the scheme samples `N(0, Q/2)` exactly.

use crate::error::{Error, Result};
use crate::integrators::{SchemeKind, SchemeSpec};
use crate::space::{Preconditioner, SpectralSpace};

fn positive(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")))
    }
}

/// `σ_θ² = 2/(2 + (2θ − 1)Δt)`.
pub fn theta_variance_factor(theta: f64, dt: f64) -> Result<f64> {
    SchemeSpec::new(SchemeKind::Theta(theta), dt)?;
    Ok(2.0 / (2.0 + (2.0 * theta - 1.0) * dt))
}

/// `(1 − Δt/2, 1)` for the chain and the postprocessed observable.
pub fn lm_variance_factors(dt: f64) -> Result<(f64, f64)> {
    positive(dt)?;
    if dt >= 1.0 {
        return Err(Error::InvalidTimestep {
            scheme: "lm".into(),
            dt,
            window: "dt < 1".into(),
        });
    }
    let chain = 1.0 - dt / 2.0;
    Ok((chain, chain + dt / 2.0))
}

/// `(2/(2 + Δt), 1)` for the chain and the postprocessed observable.
pub fn pie_variance_factors(dt: f64) -> Result<(f64, f64)> {
    positive(dt)?;
    let chain = 2.0 / (2.0 + dt);
    // Ȳ adds an independent increment of variance Δt q_k / (4(1 + Δt/2)).
    let post = chain + dt / (2.0 * (1.0 + dt / 2.0));
    Ok((chain, post))
}

/// Heun's method: `Y' = (1 − Δt + Δt²/2)Y + (1 − Δt/2)ΔW`.
pub fn rk2_variance_factor(dt: f64) -> Result<f64> {
    positive(dt)?;
    let a = 1.0 - dt + dt * dt / 2.0;
    if a.abs() >= 1.0 {
        return Err(Error::InvalidTimestep {
            scheme: "rk2".into(),
            dt,
            window: "dt < 2".into(),
        });
    }
    let b = 1.0 - dt / 2.0;
    Ok(2.0 * dt * b * b / (1.0 - a * a))
}

/// Per-mode factors `2/(2 + Δt p_k λ_k)` of the linear-implicit scheme.
pub fn pli_variance_factors(space: &SpectralSpace, alpha: f64, dt: f64) -> Result<Vec<f64>> {
    positive(dt)?;
    let p = Preconditioner::new(space, alpha)?;
    Ok(p.multipliers()
        .iter()
        .zip(space.eigenvalues())
        .map(|(pk, l)| 2.0 / (2.0 + dt * pk * l))
        .collect())
}

/// Per-mode stationary variance factors of the observable a scheme reports
/// (`Ȳ` for postprocessed schemes).
pub fn observed_variance_factors(space: &SpectralSpace, spec: SchemeSpec) -> Result<Vec<f64>> {
    let dt = spec.dt();
    let k = space.modes();
    let uniform = match spec.kind() {
        SchemeKind::LeimkuhlerMatthews => {
            // The window allows Δt = 1, where the chain factor is still 1/2.
            let chain = 1.0 - dt / 2.0;
            chain + dt / 2.0
        }
        SchemeKind::PostprocessedImplicitEuler => pie_variance_factors(dt)?.1,
        SchemeKind::Rk2 => rk2_variance_factor(dt)?,
        SchemeKind::PreconditionedLinearImplicit { alpha } => {
            return pli_variance_factors(space, alpha, dt)
        }
        kind => theta_variance_factor(kind.theta().expect("θ-family"), dt)?,
    };
    Ok(vec![uniform; k])
}

/// Stationary law `N(0, σ² Q/2)` of a linear scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianLaw {
    pub variance_factor: f64,
    pub scheme: SchemeSpec,
}

impl GaussianLaw {
    /// Defined for schemes whose factor does not depend on the mode.
    pub fn of(spec: SchemeSpec) -> Result<Self> {
        if let SchemeKind::PreconditionedLinearImplicit { alpha } = spec.kind() {
            if alpha != 1.0 {
                return Err(Error::InvalidParameter(
                    "the linear-implicit scheme with alpha < 1 has mode-dependent factors".into(),
                ));
            }
        }
        // Uniform factors can be read off any single-mode space.
        let unit = SpectralSpace::spectral(1)?;
        let variance_factor = observed_variance_factors(&unit, spec)?[0];
        Ok(GaussianLaw { variance_factor, scheme: spec })
    }

    pub fn is_exact(&self) -> bool {
        (self.variance_factor - 1.0).abs() <= 1e-14
    }

    pub fn phi_expectation(&self, space: &SpectralSpace) -> f64 {
        gaussian_phi_expectation(space, self.variance_factor)
    }
}

/// `E exp(−‖Y‖²) = ∏_k (1 + σ² q_k)^{−1/2}` for `Y ~ N(0, σ² Q/2)`.
pub fn gaussian_phi_expectation(space: &SpectralSpace, variance_factor: f64) -> f64 {
    let log: f64 = space
        .covariance()
        .iter()
        .map(|q| (variance_factor * q).ln_1p())
        .sum();
    (-0.5 * log).exp()
}

pub fn gaussian_phi_expectation_per_mode(space: &SpectralSpace, factors: &[f64]) -> f64 {
    let log: f64 = space
        .covariance()
        .iter()
        .zip(factors)
        .map(|(q, s)| (s * q).ln_1p())
        .sum();
    (-0.5 * log).exp()
}
