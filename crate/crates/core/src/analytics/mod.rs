//! Closed-form Gaussian laws and the low-dimensional order-condition verifier.

pub mod gaussian;
pub mod quadrature;
pub mod verifier;

pub use gaussian::{
    gaussian_phi_expectation, gaussian_phi_expectation_per_mode, lm_variance_factors,
    observed_variance_factors, pie_variance_factors, rk2_variance_factor, theta_variance_factor,
    GaussianLaw,
};
pub use verifier::{DerivativeBundle, Verifier};
