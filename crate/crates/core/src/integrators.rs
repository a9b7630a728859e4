//! One-step maps `ψ^Δt` and postprocessors `ψ̄^Δt`.
//!
//! All schemes except the preconditioned linear-implicit one target
//! `dY = G(Y)dt + dW^Q` with `G(y) = −y + QF(y)`. Increments handed to
//! [`Integrator::step_into`] are already scaled by the scheme's noise
//! covariance (see [`Integrator::noise_scale`]).

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Model, ModelScratch};
use crate::noise::NoiseStream;
use crate::space::{FieldState, Preconditioner};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchemeKind {
    ExplicitEuler,
    Theta(f64),
    CrankNicolson,
    ImplicitEuler,
    LeimkuhlerMatthews,
    PostprocessedImplicitEuler,
    Rk2,
    PreconditionedLinearImplicit { alpha: f64 },
}

impl SchemeKind {
    /// Short identifier used in reports and on the command line.
    pub fn label(&self) -> String {
        match self {
            SchemeKind::ExplicitEuler => "ee".into(),
            SchemeKind::Theta(t) => format!("theta({t})"),
            SchemeKind::CrankNicolson => "cn".into(),
            SchemeKind::ImplicitEuler => "ie".into(),
            SchemeKind::LeimkuhlerMatthews => "lm".into(),
            SchemeKind::PostprocessedImplicitEuler => "pie".into(),
            SchemeKind::Rk2 => "rk2".into(),
            SchemeKind::PreconditionedLinearImplicit { alpha } => format!("pli({alpha})"),
        }
    }

    pub fn has_postprocessor(&self) -> bool {
        matches!(
            self,
            SchemeKind::LeimkuhlerMatthews | SchemeKind::PostprocessedImplicitEuler
        )
    }

    /// `θ` for members of the θ-family, with the named aliases resolved.
    pub fn theta(&self) -> Option<f64> {
        match *self {
            SchemeKind::ExplicitEuler => Some(0.0),
            SchemeKind::Theta(t) => Some(t),
            SchemeKind::CrankNicolson => Some(0.5),
            SchemeKind::ImplicitEuler => Some(1.0),
            _ => None,
        }
    }

    /// Preconditioner exponent `α` of the noise (`1` means `Q`).
    pub fn noise_alpha(&self) -> f64 {
        match *self {
            SchemeKind::PreconditionedLinearImplicit { alpha } => alpha,
            _ => 1.0,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A scheme with a validated time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeSpec {
    kind: SchemeKind,
    dt: f64,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, dt: f64) -> Result<Self> {
        let fail = |window: &str| Error::InvalidTimestep {
            scheme: kind.label(),
            dt,
            window: window.to_string(),
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(fail("dt > 0"));
        }
        match kind {
            SchemeKind::ExplicitEuler | SchemeKind::LeimkuhlerMatthews | SchemeKind::Rk2 => {
                if dt > 1.0 {
                    return Err(fail("dt <= 1"));
                }
            }
            SchemeKind::Theta(theta) => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(Error::InvalidParameter(format!(
                        "theta must lie in [0, 1], got {theta}"
                    )));
                }
                if theta < 0.5 {
                    let bound = 2.0 / (1.0 - 2.0 * theta);
                    if dt >= bound {
                        return Err(fail(&format!("dt < 2/(1-2θ) = {bound}")));
                    }
                }
            }
            SchemeKind::PreconditionedLinearImplicit { alpha } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must lie in [0, 1], got {alpha}"
                    )));
                }
            }
            SchemeKind::CrankNicolson
            | SchemeKind::ImplicitEuler
            | SchemeKind::PostprocessedImplicitEuler => {}
        }
        Ok(SchemeSpec { kind, dt })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn has_postprocessor(&self) -> bool {
        self.kind.has_postprocessor()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub next: FieldState,
    /// `Ȳ_n`, built from the current state and this step's increment.
    pub postprocessed: Option<FieldState>,
}

#[derive(Clone, Copy, Debug)]
enum Coefficients {
    ExplicitEuler { decay: f64 },
    Theta { a: f64, b: f64, c: f64 },
    Lm,
    Pie { s: f64, pre: f64, post: f64 },
    Rk2,
    Pli,
}

/// Work buffers for one trajectory.
#[derive(Clone, Debug)]
pub struct StepScratch {
    model: ModelScratch,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// A scheme bound to a model, with precomputed coefficients.
#[derive(Clone, Debug)]
pub struct Integrator<'m> {
    model: &'m Model,
    spec: SchemeSpec,
    coefficients: Coefficients,
    noise_scale: Vec<f64>,
    /// `Δt p_k` and `(1 + Δt p_k λ_k)^{-1}` for the linear-implicit scheme.
    pli_drift: Vec<f64>,
    pli_resolvent: Vec<f64>,
}

impl<'m> Integrator<'m> {
    pub fn new(model: &'m Model, spec: SchemeSpec) -> Result<Self> {
        let dt = spec.dt();
        let space = model.space();
        let precond = Preconditioner::new(space, spec.kind().noise_alpha())?;
        let coefficients = match spec.kind() {
            SchemeKind::ExplicitEuler => Coefficients::ExplicitEuler { decay: 1.0 - dt },
            SchemeKind::LeimkuhlerMatthews => Coefficients::Lm,
            SchemeKind::PostprocessedImplicitEuler => Coefficients::Pie {
                s: 1.0 / (1.0 + dt),
                pre: 1.0 / (2.0 * (1.0 + dt)),
                post: 1.0 / (2.0 * (1.0 + dt / 2.0).sqrt()),
            },
            SchemeKind::Rk2 => Coefficients::Rk2,
            SchemeKind::PreconditionedLinearImplicit { .. } => Coefficients::Pli,
            kind => {
                let theta = kind.theta().expect("θ-family");
                let denom = 1.0 + theta * dt;
                Coefficients::Theta {
                    a: (1.0 - (1.0 - theta) * dt) / denom,
                    b: dt / denom,
                    c: 1.0 / denom,
                }
            }
        };
        let (pli_drift, pli_resolvent) = if matches!(coefficients, Coefficients::Pli) {
            let p = precond.multipliers();
            (
                p.iter().map(|pk| dt * pk).collect(),
                p.iter()
                    .zip(space.eigenvalues())
                    .map(|(pk, l)| 1.0 / (1.0 + dt * pk * l))
                    .collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Integrator {
            model,
            spec,
            coefficients,
            noise_scale: precond.sqrt_multipliers().to_vec(),
            pli_drift,
            pli_resolvent,
        })
    }

    pub fn spec(&self) -> SchemeSpec {
        self.spec
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    /// `√p_k`: maps a cylindrical increment to the one this scheme consumes.
    pub fn noise_scale(&self) -> &[f64] {
        &self.noise_scale
    }

    pub fn scratch(&self) -> StepScratch {
        let k = self.model.modes();
        StepScratch {
            model: self.model.scratch(),
            a: vec![0.0; k],
            b: vec![0.0; k],
            c: vec![0.0; k],
        }
    }

    /// Draws this scheme's increment for the stream's current step.
    pub fn draw_increment_into(&self, stream: &mut NoiseStream, out: &mut [f64]) {
        stream.next_increment_into(self.spec.dt(), out);
        for (o, s) in out.iter_mut().zip(&self.noise_scale) {
            *o *= s;
        }
    }

    /// One step from `y` with increment `dw`. `post` is written only for
    /// postprocessed schemes.
    pub fn step_into(
        &self,
        y: &[f64],
        dw: &[f64],
        next: &mut [f64],
        post: Option<&mut [f64]>,
        ws: &mut StepScratch,
    ) {
        let dt = self.spec.dt();
        let model = self.model;
        match self.coefficients {
            Coefficients::ExplicitEuler { decay } => {
                model.apply_qf_into(y, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    next[k] = decay * y[k] + dt * ws.a[k] + dw[k];
                }
            }
            Coefficients::Theta { a, b, c } => {
                model.apply_qf_into(y, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    next[k] = a * y[k] + b * ws.a[k] + c * dw[k];
                }
            }
            Coefficients::Lm => {
                for k in 0..y.len() {
                    ws.b[k] = y[k] + 0.5 * dw[k];
                }
                model.apply_qf_into(&ws.b, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    next[k] = y[k] + dt * (ws.a[k] - ws.b[k]) + dw[k];
                }
            }
            Coefficients::Pie { s, pre, .. } => {
                for k in 0..y.len() {
                    ws.b[k] = y[k] + pre * dw[k];
                }
                model.apply_qf_into(&ws.b, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    next[k] = s * y[k] + dt * s * ws.a[k] + s * dw[k];
                }
            }
            Coefficients::Rk2 => {
                // ws.c = G(y), ws.b = Ŷ, ws.a = QF(Ŷ)
                model.apply_qf_into(y, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    ws.c[k] = ws.a[k] - y[k];
                    ws.b[k] = y[k] + dt * ws.c[k] + dw[k];
                }
                model.apply_qf_into(&ws.b, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    let g_hat = ws.a[k] - ws.b[k];
                    next[k] = y[k] + 0.5 * dt * (ws.c[k] + g_hat) + dw[k];
                }
            }
            Coefficients::Pli => {
                model.apply_f_into(y, &mut ws.a, &mut ws.model);
                for k in 0..y.len() {
                    next[k] = self.pli_resolvent[k] * (y[k] + self.pli_drift[k] * ws.a[k] + dw[k]);
                }
            }
        }
        if let Some(post) = post {
            self.postprocess_into(y, dw, post);
        }
    }

    /// `Ȳ = ψ̄(y)` with increment `dw`; copies `y` for schemes without a
    /// postprocessor.
    pub fn postprocess_into(&self, y: &[f64], dw: &[f64], out: &mut [f64]) {
        let c = match self.coefficients {
            Coefficients::Lm => 0.5,
            Coefficients::Pie { post, .. } => post,
            _ => {
                out.copy_from_slice(y);
                return;
            }
        };
        for k in 0..y.len() {
            out[k] = y[k] + c * dw[k];
        }
    }

    pub fn step(&self, state: &FieldState, increment: &FieldState) -> Result<StepOutput> {
        let k = self.model.modes();
        for len in [state.len(), increment.len()] {
            if len != k {
                return Err(Error::DimensionMismatch { expected: k, found: len });
            }
        }
        let mut next = vec![0.0; k];
        let mut ws = self.scratch();
        let postprocessed = if self.spec.has_postprocessor() {
            let mut post = vec![0.0; k];
            self.step_into(state.as_slice(), increment.as_slice(), &mut next, Some(&mut post), &mut ws);
            Some(FieldState::from_vec(post))
        } else {
            self.step_into(state.as_slice(), increment.as_slice(), &mut next, None, &mut ws);
            None
        };
        Ok(StepOutput {
            next: FieldState::from_vec(next),
            postprocessed,
        })
    }

    /// Per-mode coefficients `(a, b, c)` of the linear recursion
    /// `Y' = aY + bΔW`, `Ȳ = Y + cΔW'` obtained by probing the step map.
    /// Valid only when `F` is linear.
    pub fn linear_response(&self, mode: usize) -> Result<LinearResponse> {
        if !self.model.nonlinearity().is_linear() {
            return Err(Error::InvalidParameter(format!(
                "linear response needs a linear nonlinearity, got `{}`",
                self.model.nonlinearity().name()
            )));
        }
        let k = self.model.modes();
        let mut ws = self.scratch();
        let unit = FieldState::basis(k, mode);
        let zero = vec![0.0; k];
        let mut next = vec![0.0; k];
        let mut post = vec![0.0; k];
        self.step_into(unit.as_slice(), &zero, &mut next, Some(&mut post), &mut ws);
        let a = next[mode];
        self.step_into(&zero, unit.as_slice(), &mut next, Some(&mut post), &mut ws);
        let b = next[mode];
        let c = self.spec.has_postprocessor().then_some(post[mode]);
        Ok(LinearResponse {
            chain: a,
            noise: b,
            postprocessor: c,
            noise_variance: self.spec.dt() * self.noise_scale[mode].powi(2),
        })
    }
}

/// Scalar recursion of one mode under a linear scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearResponse {
    pub chain: f64,
    pub noise: f64,
    pub postprocessor: Option<f64>,
    /// Variance `Δt p_k` of the increment fed to this mode.
    pub noise_variance: f64,
}

impl LinearResponse {
    /// Iterates `v ← a²v + b²Δt p_k` from `v = 0` until it stops moving.
    pub fn iterate_stationary_variance(&self) -> f64 {
        let a2 = self.chain * self.chain;
        let inject = self.noise * self.noise * self.noise_variance;
        let mut v = 0.0f64;
        for _ in 0..10_000_000 {
            let nv = a2 * v + inject;
            if nv == v {
                break;
            }
            v = nv;
        }
        v
    }

    /// Stationary variance of the observable (postprocessed when present).
    pub fn iterate_observed_variance(&self) -> f64 {
        let v = self.iterate_stationary_variance();
        match self.postprocessor {
            Some(c) => v + c * c * self.noise_variance,
            None => v,
        }
    }
}

/// Final state of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOutcome {
    pub output: StepOutput,
    pub diverged: bool,
}

impl TrajectoryOutcome {
    /// The observable `Ȳ_N` if available, `Y_N` otherwise.
    pub fn observable(&self) -> &FieldState {
        self.output.postprocessed.as_ref().unwrap_or(&self.output.next)
    }
}

/// Runs `n_steps` steps, calling `observe(n, Y_n)` for `n = 0..=N`. Stops at
/// the first non-finite iterate. A run of zero steps is not postprocessed.
pub fn run_with_observer(
    integrator: &Integrator<'_>,
    initial: &FieldState,
    stream: &mut NoiseStream,
    n_steps: u64,
    mut observe: impl FnMut(u64, &[f64]),
) -> Result<TrajectoryOutcome> {
    let k = integrator.model().modes();
    if initial.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: initial.len() });
    }
    stream.layout().validate(integrator.spec().dt())?;
    let mut ws = integrator.scratch();
    let mut y = initial.as_slice().to_vec();
    let mut next = vec![0.0; k];
    let mut dw = vec![0.0; k];
    observe(0, &y);
    let mut diverged = !initial.is_finite();
    if !diverged {
        for n in 0..n_steps {
            integrator.draw_increment_into(stream, &mut dw);
            integrator.step_into(&y, &dw, &mut next, None, &mut ws);
            std::mem::swap(&mut y, &mut next);
            if !y.iter().all(|v| v.is_finite()) {
                diverged = true;
                break;
            }
            observe(n + 1, &y);
        }
    }
    let postprocessed = if integrator.spec().has_postprocessor() && !diverged && n_steps > 0 {
        integrator.draw_increment_into(stream, &mut dw);
        let mut post = vec![0.0; k];
        integrator.postprocess_into(&y, &dw, &mut post);
        Some(FieldState::from_vec(post))
    } else {
        None
    };
    Ok(TrajectoryOutcome {
        output: StepOutput {
            next: FieldState::from_vec(y),
            postprocessed,
        },
        diverged,
    })
}

pub fn run_trajectory(
    integrator: &Integrator<'_>,
    initial: &FieldState,
    stream: &mut NoiseStream,
    n_steps: u64,
) -> Result<TrajectoryOutcome> {
    run_with_observer(integrator, initial, stream, n_steps, |_, _| {})
}

fn one_step(model: &Model, kind: SchemeKind, dt: f64, state: &FieldState, increment: &FieldState) -> Result<StepOutput> {
    let spec = SchemeSpec::new(kind, dt)?;
    Integrator::new(model, spec)?.step(state, increment)
}

/// `Y + Δt G(Y) + ΔW^Q`.
pub fn step_explicit_euler(model: &Model, state: &FieldState, increment: &FieldState, dt: f64) -> Result<FieldState> {
    Ok(one_step(model, SchemeKind::ExplicitEuler, dt, state, increment)?.next)
}

pub fn step_theta(model: &Model, state: &FieldState, increment: &FieldState, dt: f64, theta: f64) -> Result<FieldState> {
    Ok(one_step(model, SchemeKind::Theta(theta), dt, state, increment)?.next)
}

pub fn step_lm(model: &Model, state: &FieldState, increment: &FieldState, dt: f64) -> Result<StepOutput> {
    one_step(model, SchemeKind::LeimkuhlerMatthews, dt, state, increment)
}

pub fn step_pie(model: &Model, state: &FieldState, increment: &FieldState, dt: f64) -> Result<StepOutput> {
    one_step(model, SchemeKind::PostprocessedImplicitEuler, dt, state, increment)
}

pub fn step_rk2(model: &Model, state: &FieldState, increment: &FieldState, dt: f64) -> Result<FieldState> {
    Ok(one_step(model, SchemeKind::Rk2, dt, state, increment)?.next)
}

/// The increment must be scaled by `√p_k` with `p_k = λ_k^{-α}`.
pub fn step_pli(model: &Model, alpha: f64, state: &FieldState, increment: &FieldState, dt: f64) -> Result<FieldState> {
    Ok(one_step(model, SchemeKind::PreconditionedLinearImplicit { alpha }, dt, state, increment)?.next)
}
