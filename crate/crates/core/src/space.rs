//! Eigen-decomposed discretizations of the Dirichlet Laplacian on `[0, 1]`.
//!
//! Both flavors share the sine basis `e_k(z) = √2 sin(kπz)` sampled on the
//! interior grid `z_i = i/(K+1)`; they differ only in the eigenvalues attached
//! to each mode. Every operator that commutes with the Laplacian is diagonal
//! in this basis, so fractional powers and preconditioners cost `O(K)`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Mode count above which [`TransformKind::Auto`] switches to the FFT path.
const SINE_TRANSFORM_THRESHOLD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Continuum eigenvalues `λ_k = π²k²`.
    SpectralGalerkin,
    /// Eigenvalues of the three-point finite-difference Laplacian.
    FiniteDifference,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::SpectralGalerkin => "spectral",
            Flavor::FiniteDifference => "fd",
        }
    }
}

/// How a space is sized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Resolution {
    Modes(usize),
    Spacing(f64),
}

/// Implementation used for the physical ⇄ coefficient transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TransformKind {
    #[default]
    Auto,
    Dense,
    Sine,
}

#[derive(Clone)]
enum Transform {
    /// Symmetric matrix `S[i][k] = √2 sin(ikπ/(K+1))`, row-major.
    Dense(Arc<[f64]>),
    /// DST-I through a complex FFT of length `2(K+1)`.
    Sine(Arc<dyn Fft<f64>>),
}

/// Reusable buffers for the transforms; one per worker.
#[derive(Debug, Default, Clone)]
pub struct TransformScratch {
    buffer: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
}

/// A field `y ∈ H^K` stored by its coordinates `⟨y, e_k⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState(Vec<f64>);

impl FieldState {
    pub fn zeros(modes: usize) -> Self {
        FieldState(vec![0.0; modes])
    }

    pub fn from_vec(coeffs: Vec<f64>) -> Self {
        FieldState(coeffs)
    }

    /// The `index`-th basis vector (0-based) of an `modes`-dimensional space.
    pub fn basis(modes: usize, index: usize) -> Self {
        let mut coeffs = vec![0.0; modes];
        coeffs[index] = 1.0;
        FieldState(coeffs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Galerkin projection onto the first `modes` coefficients.
    pub fn project(&self, modes: usize) -> Result<FieldState> {
        if modes > self.0.len() {
            return Err(Error::ProjectionTooLarge {
                requested: modes,
                available: self.0.len(),
            });
        }
        Ok(FieldState(self.0[..modes].to_vec()))
    }

    pub fn dot(&self, other: &FieldState) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl From<Vec<f64>> for FieldState {
    fn from(coeffs: Vec<f64>) -> Self {
        FieldState(coeffs)
    }
}

/// The discretized operator `−A` in its eigenbasis.
#[derive(Clone)]
pub struct SpectralSpace {
    flavor: Flavor,
    modes: usize,
    grid_spacing: f64,
    eigenvalues: Vec<f64>,
    covariance: Vec<f64>,
    transform: Transform,
}

impl fmt::Debug for SpectralSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralSpace")
            .field("flavor", &self.flavor)
            .field("modes", &self.modes)
            .field("grid_spacing", &self.grid_spacing)
            .field("transform", &self.transform_kind())
            .finish()
    }
}

impl SpectralSpace {
    pub fn new(flavor: Flavor, resolution: Resolution) -> Result<Self> {
        Self::with_transform(flavor, resolution, TransformKind::Auto)
    }

    pub fn with_transform(
        flavor: Flavor,
        resolution: Resolution,
        kind: TransformKind,
    ) -> Result<Self> {
        let modes = match resolution {
            Resolution::Modes(0) => return Err(Error::InvalidModeCount(0)),
            Resolution::Modes(k) => k,
            Resolution::Spacing(dx) => modes_for_spacing(dx)?,
        };
        let grid_spacing = 1.0 / (modes as f64 + 1.0);
        let eigenvalues: Vec<f64> = (1..=modes)
            .map(|k| {
                let k = k as f64;
                match flavor {
                    Flavor::SpectralGalerkin => PI * PI * k * k,
                    Flavor::FiniteDifference => {
                        let s = (k * PI * grid_spacing / 2.0).sin();
                        4.0 / (grid_spacing * grid_spacing) * s * s
                    }
                }
            })
            .collect();
        let covariance = eigenvalues.iter().map(|l| 1.0 / l).collect();
        let use_sine = match kind {
            TransformKind::Auto => modes >= SINE_TRANSFORM_THRESHOLD,
            TransformKind::Dense => false,
            TransformKind::Sine => true,
        };
        let transform = if use_sine {
            let fft = FftPlanner::new().plan_fft_forward(2 * (modes + 1));
            Transform::Sine(fft)
        } else {
            let n = modes as f64 + 1.0;
            let mut basis = vec![0.0; modes * modes];
            for i in 0..modes {
                for k in 0..modes {
                    basis[i * modes + k] =
                        SQRT_2 * (((i + 1) * (k + 1)) as f64 * PI / n).sin();
                }
            }
            Transform::Dense(basis.into())
        };
        Ok(SpectralSpace {
            flavor,
            modes,
            grid_spacing,
            eigenvalues,
            covariance,
            transform,
        })
    }

    pub fn spectral(modes: usize) -> Result<Self> {
        Self::new(Flavor::SpectralGalerkin, Resolution::Modes(modes))
    }

    pub fn finite_difference(dx: f64) -> Result<Self> {
        Self::new(Flavor::FiniteDifference, Resolution::Spacing(dx))
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Spacing `1/(K+1)` of the interior grid. The finite-difference flavor
    /// discretizes on it; the spectral flavor uses it for collocation.
    pub fn grid_spacing(&self) -> f64 {
        self.grid_spacing
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `q_k = λ_k^{-1}`, the eigenvalues of `Q = (−A)^{-1}`.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn transform_kind(&self) -> TransformKind {
        match self.transform {
            Transform::Dense(_) => TransformKind::Dense,
            Transform::Sine(_) => TransformKind::Sine,
        }
    }

    /// Interior grid points `z_i = i Δx`.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.modes).map(|i| i as f64 * self.grid_spacing).collect()
    }

    /// `e_k` (1-based `k`) sampled on the interior grid.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let n = self.modes as f64 + 1.0;
        (1..=self.modes)
            .map(|i| SQRT_2 * ((i * k) as f64 * PI / n).sin())
            .collect()
    }

    /// Δx-weighted discrete `L²` inner product of grid functions.
    pub fn grid_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.grid_spacing * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn zeros(&self) -> FieldState {
        FieldState::zeros(self.modes)
    }

    pub fn scratch(&self) -> TransformScratch {
        TransformScratch::default()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: len,
            });
        }
        Ok(())
    }

    pub fn to_physical(&self, state: &FieldState) -> Result<Vec<f64>> {
        self.check_len(state.len())?;
        let mut out = vec![0.0; self.modes];
        self.to_physical_into(state.as_slice(), &mut out, &mut self.scratch());
        Ok(out)
    }

    pub fn from_physical(&self, values: &[f64]) -> Result<FieldState> {
        self.check_len(values.len())?;
        let mut out = vec![0.0; self.modes];
        self.from_physical_into(values, &mut out, &mut self.scratch());
        Ok(FieldState(out))
    }

    /// Grid values `u_i = Σ_k c_k e_k(z_i)`. Slices must have length `K`.
    pub fn to_physical_into(&self, coeffs: &[f64], out: &mut [f64], scratch: &mut TransformScratch) {
        self.synthesize(coeffs, out, SQRT_2, scratch);
    }

    /// Coefficients `c_k = Δx Σ_i u_i e_k(z_i)`. Slices must have length `K`.
    pub fn from_physical_into(&self, values: &[f64], out: &mut [f64], scratch: &mut TransformScratch) {
        self.synthesize(values, out, SQRT_2 * self.grid_spacing, scratch);
    }

    /// `out_i = scale · Σ_j x_j sin(ijπ/(K+1))`.
    fn synthesize(&self, x: &[f64], out: &mut [f64], scale: f64, scratch: &mut TransformScratch) {
        let k = self.modes;
        debug_assert_eq!(x.len(), k);
        debug_assert_eq!(out.len(), k);
        match &self.transform {
            Transform::Dense(basis) => {
                // `basis` already carries the √2.
                let factor = scale / SQRT_2;
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &basis[i * k..(i + 1) * k];
                    let acc: f64 = row.iter().zip(x).map(|(b, c)| b * c).sum();
                    *o = factor * acc;
                }
            }
            Transform::Sine(fft) => {
                let n = 2 * (k + 1);
                let buf = &mut scratch.buffer;
                buf.clear();
                buf.resize(n, Complex::new(0.0, 0.0));
                for (j, &v) in x.iter().enumerate() {
                    buf[j + 1] = Complex::new(v, 0.0);
                    buf[n - j - 1] = Complex::new(-v, 0.0);
                }
                let need = fft.get_inplace_scratch_len();
                if scratch.fft_scratch.len() < need {
                    scratch.fft_scratch.resize(need, Complex::new(0.0, 0.0));
                }
                fft.process_with_scratch(buf, &mut scratch.fft_scratch[..need]);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = -0.5 * scale * buf[i + 1].im;
                }
            }
        }
    }

    /// `(−A)^γ y`: coefficient `k` multiplied by `λ_k^γ`.
    pub fn apply_power(&self, exponent: f64, state: &FieldState) -> Result<FieldState> {
        self.check_len(state.len())?;
        Ok(FieldState(
            state
                .as_slice()
                .iter()
                .zip(&self.eigenvalues)
                .map(|(c, l)| c * l.powf(exponent))
                .collect(),
        ))
    }

    /// `|y|_β = (Σ λ_k^β ⟨y, e_k⟩²)^{1/2}`.
    pub fn sobolev_norm(&self, state: &FieldState, beta: f64) -> Result<f64> {
        self.check_len(state.len())?;
        Ok(state
            .as_slice()
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| l.powf(beta) * c * c)
            .sum::<f64>()
            .sqrt())
    }

    /// Truncated trace `Tr((−A)^{2α} Q) = Σ_{k ≤ K} λ_k^{2α−1}`.
    pub fn weighted_trace(&self, alpha: f64) -> f64 {
        self.eigenvalues.iter().map(|l| l.powf(2.0 * alpha - 1.0)).sum()
    }

    /// `Tr(Q^K)`.
    pub fn trace_q(&self) -> f64 {
        self.covariance.iter().sum()
    }

    /// Applies the assembled tridiagonal finite-difference operator `−Δ_h`
    /// to grid values with homogeneous Dirichlet boundary values.
    pub fn fd_laplacian_apply(&self, values: &[f64]) -> Vec<f64> {
        let h2 = self.grid_spacing * self.grid_spacing;
        let n = values.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { values[i - 1] } else { 0.0 };
                let right = if i + 1 < n { values[i + 1] } else { 0.0 };
                (2.0 * values[i] - left - right) / h2
            })
            .collect()
    }
}

fn modes_for_spacing(dx: f64) -> Result<usize> {
    if !(dx > 0.0 && dx < 1.0) || !dx.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must lie in (0, 1), got {dx}"
        )));
    }
    let k = ((1.0 / dx).round() as i64 - 1).max(1) as usize;
    let nearest = 1.0 / (k as f64 + 1.0);
    if (nearest - dx).abs() > 1e-12 {
        return Err(Error::InvalidSpacing {
            dx,
            nearest,
            modes: k,
        });
    }
    Ok(k)
}

/// Diagonal preconditioner `P = (−A)^{−α}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Preconditioner {
    alpha: f64,
    multipliers: Vec<f64>,
    sqrt_multipliers: Vec<f64>,
}

impl Preconditioner {
    pub fn new(space: &SpectralSpace, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "preconditioner exponent must lie in [0, 1], got {alpha}"
            )));
        }
        let multipliers: Vec<f64> = if alpha == 1.0 {
            space.covariance().to_vec()
        } else {
            space.eigenvalues().iter().map(|l| l.powf(-alpha)).collect()
        };
        let sqrt_multipliers = multipliers.iter().map(|p| p.sqrt()).collect();
        Ok(Preconditioner {
            alpha,
            multipliers,
            sqrt_multipliers,
        })
    }

    /// `P = Q`, the choice behind the order-one and order-two schemes.
    pub fn covariance(space: &SpectralSpace) -> Self {
        Self::new(space, 1.0).expect("alpha = 1 is admissible")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn sqrt_multipliers(&self) -> &[f64] {
        &self.sqrt_multipliers
    }

    pub fn sup(&self) -> f64 {
        self.multipliers.iter().copied().fold(0.0, f64::max)
    }

    /// `inf_k λ_k p_k`.
    pub fn damping(&self, space: &SpectralSpace) -> f64 {
        space
            .eigenvalues()
            .iter()
            .zip(&self.multipliers)
            .map(|(l, p)| l * p)
            .fold(f64::INFINITY, f64::min)
    }

    /// `λ_1 sup p_k ≤ inf λ_k p_k`, up to rounding.
    pub fn is_admissible(&self, space: &SpectralSpace) -> bool {
        let lhs = space.eigenvalues()[0] * self.sup();
        lhs <= self.damping(space) * (1.0 + 1e-12)
    }

    /// Continuous-time contraction rate `inf(λ_k p_k) − Lip(F)·sup p_k` of
    /// synchronously coupled solutions.
    pub fn contraction_rate(&self, space: &SpectralSpace, lipschitz: f64) -> f64 {
        self.damping(space) - lipschitz * self.sup()
    }
}
