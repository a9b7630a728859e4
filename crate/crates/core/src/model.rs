//! Gradient nonlinearities and the drifts built from them.
//!
//! Conventions: `F(y)(z) = f(y(z))`, `V(y) = ∫ u(y(z)) dz` with `u' = −f`, so
//! that `F = −DV` and the target measure has density `∝ exp(−2V)` against
//! `N(0, Q/2)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{FieldState, Preconditioner, SpectralSpace, TransformScratch};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied `(f, f', u, Lip f)` with an optional `f''`.
#[derive(Clone)]
pub struct CustomNonlinearity {
    name: String,
    f: ScalarFn,
    f_prime: ScalarFn,
    f_second: Option<ScalarFn>,
    u: ScalarFn,
    lip_bound: f64,
}

#[derive(Clone)]
pub enum Nonlinearity {
    /// `f = 0`: the Gaussian case.
    Zero,
    /// `f(x) = −x`.
    Linear,
    /// `f(x) = −x + cos x`.
    CosineWell,
    Custom(CustomNonlinearity),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Nonlinearity").field(&self.name()).finish()
    }
}

impl Nonlinearity {
    /// Builds a custom nonlinearity after checking `u' = −f` by central
    /// differences on a fixed probe set in `[−4, 4]`.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lip_bound: f64,
    ) -> Result<Self> {
        let name = name.into();
        if !(lip_bound >= 0.0 && lip_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz bound of `{name}` must be finite and non-negative"
            )));
        }
        let h = 1e-5;
        for i in 0..=80 {
            let x = -4.0 + 0.1 * i as f64;
            let du = (u(x + h) - u(x - h)) / (2.0 * h);
            let residual = du + f(x);
            if residual.abs() > 1e-6 * (1.0 + f(x).abs()) {
                return Err(Error::NotGradient { name, at: x, residual });
            }
        }
        Ok(Nonlinearity::Custom(CustomNonlinearity {
            name,
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            f_second: None,
            u: Arc::new(u),
            lip_bound,
        }))
    }

    /// Attaches `f''`, which the order-two verifier needs. No-op for built-ins.
    pub fn with_second_derivative(self, f_second: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        match self {
            Nonlinearity::Custom(mut c) => {
                c.f_second = Some(Arc::new(f_second));
                Nonlinearity::Custom(c)
            }
            other => other,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Nonlinearity::Zero),
            "linear" => Ok(Nonlinearity::Linear),
            "cos" => Ok(Nonlinearity::CosineWell),
            other => Err(Error::InvalidParameter(format!(
                "unknown nonlinearity `{other}` (expected zero, cos or linear)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Nonlinearity::Zero => "zero",
            Nonlinearity::Linear => "linear",
            Nonlinearity::CosineWell => "cos",
            Nonlinearity::Custom(c) => &c.name,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    /// True when `F` is linear, so every scheme is a linear recursion.
    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::Zero | Nonlinearity::Linear)
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => -x,
            Nonlinearity::CosineWell => -x + x.cos(),
            Nonlinearity::Custom(c) => (c.f)(x),
        }
    }

    #[inline]
    pub fn f_prime(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => -1.0,
            Nonlinearity::CosineWell => -1.0 - x.sin(),
            Nonlinearity::Custom(c) => (c.f_prime)(x),
        }
    }

    pub fn f_second(&self, x: f64) -> Result<f64> {
        match self {
            Nonlinearity::Zero | Nonlinearity::Linear => Ok(0.0),
            Nonlinearity::CosineWell => Ok(-x.cos()),
            Nonlinearity::Custom(c) => c
                .f_second
                .as_ref()
                .map(|g| g(x))
                .ok_or_else(|| Error::MissingSecondDerivative(c.name.clone())),
        }
    }

    #[inline]
    pub fn u(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => 0.5 * x * x,
            Nonlinearity::CosineWell => 0.5 * x * x - x.sin(),
            Nonlinearity::Custom(c) => (c.u)(x),
        }
    }

    pub fn lip_bound(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => 1.0,
            Nonlinearity::CosineWell => 2.0,
            Nonlinearity::Custom(c) => c.lip_bound,
        }
    }
}

/// Buffers for evaluating `F` without allocating.
#[derive(Debug, Default, Clone)]
pub struct ModelScratch {
    physical: Vec<f64>,
    transform: TransformScratch,
}

/// A space together with a nonlinearity.
#[derive(Clone, Debug)]
pub struct Model {
    space: SpectralSpace,
    nonlinearity: Nonlinearity,
}

impl Model {
    pub fn new(space: SpectralSpace, nonlinearity: Nonlinearity) -> Self {
        Model { space, nonlinearity }
    }

    pub fn space(&self) -> &SpectralSpace {
        &self.space
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn modes(&self) -> usize {
        self.space.modes()
    }

    /// `Lip(f) < λ_1`: the drift `G` is then strictly dissipative.
    pub fn is_admissible(&self) -> bool {
        self.nonlinearity.lip_bound() < self.space.eigenvalues()[0]
    }

    pub fn scratch(&self) -> ModelScratch {
        ModelScratch {
            physical: vec![0.0; self.space.modes()],
            transform: self.space.scratch(),
        }
    }

    fn check(&self, state: &FieldState) -> Result<()> {
        if state.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: state.len(),
            });
        }
        Ok(())
    }

    /// `F(y)` in coefficients. Slices have length `K`.
    pub fn apply_f_into(&self, y: &[f64], out: &mut [f64], scratch: &mut ModelScratch) {
        if self.nonlinearity.is_zero() {
            out.fill(0.0);
            return;
        }
        scratch.physical.resize(y.len(), 0.0);
        self.space
            .to_physical_into(y, &mut scratch.physical, &mut scratch.transform);
        for v in scratch.physical.iter_mut() {
            *v = self.nonlinearity.f(*v);
        }
        self.space
            .from_physical_into(&scratch.physical, out, &mut scratch.transform);
    }

    /// `QF(y)`, the nonlinear part of `G`.
    pub fn apply_qf_into(&self, y: &[f64], out: &mut [f64], scratch: &mut ModelScratch) {
        self.apply_f_into(y, out, scratch);
        if self.nonlinearity.is_zero() {
            return;
        }
        for (o, q) in out.iter_mut().zip(self.space.covariance()) {
            *o *= q;
        }
    }

    pub fn apply_f(&self, state: &FieldState) -> Result<FieldState> {
        self.check(state)?;
        let mut out = vec![0.0; self.modes()];
        self.apply_f_into(state.as_slice(), &mut out, &mut self.scratch());
        Ok(FieldState::from_vec(out))
    }

    /// Trapezoid rule for `∫ u(y(z)) dz`; the Dirichlet endpoints contribute `u(0)`.
    pub fn potential(&self, state: &FieldState) -> Result<f64> {
        self.check(state)?;
        let values = self.space.to_physical(state)?;
        let interior: f64 = values.iter().map(|&v| self.nonlinearity.u(v)).sum();
        Ok(self.space.grid_spacing() * (interior + self.nonlinearity.u(0.0)))
    }

    /// `G(y) = −y + QF(y)`.
    pub fn drift(&self, state: &FieldState) -> Result<FieldState> {
        self.check(state)?;
        let mut out = vec![0.0; self.modes()];
        self.apply_qf_into(state.as_slice(), &mut out, &mut self.scratch());
        for (o, y) in out.iter_mut().zip(state.as_slice()) {
            *o -= y;
        }
        Ok(FieldState::from_vec(out))
    }

    /// `P(Ay + F(y))`.
    pub fn preconditioned_drift(&self, precond: &Preconditioner, state: &FieldState) -> Result<FieldState> {
        self.check(state)?;
        let f = self.apply_f(state)?;
        let out = state
            .as_slice()
            .iter()
            .zip(f.as_slice())
            .zip(precond.multipliers().iter().zip(self.space.eigenvalues()))
            .map(|((y, fk), (p, l))| -p * l * y + p * fk)
            .collect();
        Ok(FieldState::from_vec(out))
    }

    /// `DF(y)·h`.
    pub fn derivative_f(&self, state: &FieldState, h: &FieldState) -> Result<FieldState> {
        self.check(state)?;
        self.check(h)?;
        let y = self.space.to_physical(state)?;
        let hv = self.space.to_physical(h)?;
        let prod: Vec<f64> = y
            .iter()
            .zip(&hv)
            .map(|(a, b)| self.nonlinearity.f_prime(*a) * b)
            .collect();
        self.space.from_physical(&prod)
    }

    /// `D²F(y)·(h1, h2)`.
    pub fn second_derivative_f(&self, state: &FieldState, h1: &FieldState, h2: &FieldState) -> Result<FieldState> {
        self.check(state)?;
        let y = self.space.to_physical(state)?;
        let a = self.space.to_physical(h1)?;
        let b = self.space.to_physical(h2)?;
        let mut prod = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            prod.push(self.nonlinearity.f_second(y[i])? * a[i] * b[i]);
        }
        self.space.from_physical(&prod)
    }

    /// `−DV(y)` by central differences in each coefficient.
    pub fn potential_gradient_fd(&self, state: &FieldState, step: f64) -> Result<FieldState> {
        self.check(state)?;
        let mut out = Vec::with_capacity(self.modes());
        let mut probe = state.clone();
        for k in 0..self.modes() {
            let base = probe.as_slice()[k];
            probe.as_mut_slice()[k] = base + step;
            let plus = self.potential(&probe)?;
            probe.as_mut_slice()[k] = base - step;
            let minus = self.potential(&probe)?;
            probe.as_mut_slice()[k] = base;
            out.push(-(plus - minus) / (2.0 * step));
        }
        Ok(FieldState::from_vec(out))
    }
}

/// Largest relative discrepancy between `F(y)` and the finite-difference
/// `−DV(y)` over the given states.
pub fn gradient_consistency(model: &Model, states: &[FieldState]) -> Result<f64> {
    let mut worst = 0.0f64;
    for y in states {
        let f = model.apply_f(y)?;
        let g = model.potential_gradient_fd(y, 1e-5)?;
        let diff: f64 = f
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = f.norm().max(1e-12);
        worst = worst.max(diff / scale);
    }
    Ok(worst)
}
