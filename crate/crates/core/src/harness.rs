//! Monte Carlo ensembles, references and convergence sweeps.
//!
//! Trajectory `m` of a run uses the stream `(seed, trajectory_offset + m)` and
//! starts from `Y₀ = 0`. Per-trajectory values are computed in parallel and
//! reduced sequentially in trajectory order, so every estimate is bit-stable
//! across thread counts.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::analytics::gaussian::{gaussian_phi_expectation, observed_variance_factors};
use crate::error::{Error, Result};
use crate::integrators::{run_with_observer, Integrator, SchemeKind, SchemeSpec, StepScratch};
use crate::model::Model;
use crate::noise::{NoiseLayout, NoiseStream};
use crate::observable::TestFunction;
use crate::space::FieldState;
use crate::stats::{log_log_slope, Accumulator};

/// Rows whose bias is below this many standard errors are excluded from fits.
pub const DEFAULT_FLAG_THRESHOLD: f64 = 3.0;

/// Number of steps `T/Δt`, which must be a whole number.
pub fn steps_for(final_time: f64, dt: f64) -> Result<u64> {
    if !(final_time >= 0.0 && final_time.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "final time must be finite and non-negative, got {final_time}"
        )));
    }
    if final_time == 0.0 {
        return Ok(0);
    }
    let n = (final_time / dt).round().max(1.0);
    if (n * dt - final_time).abs() > 1e-9 * final_time.max(1.0) {
        return Err(Error::NonIntegralSteps {
            dt,
            final_time,
            nearest: final_time / n,
        });
    }
    Ok(n as u64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub samples: u64,
    pub final_time: f64,
    pub seed: u64,
    pub trajectory_offset: u64,
    pub layout: NoiseLayout,
}

impl EnsembleConfig {
    pub fn new(samples: u64, final_time: f64, seed: u64) -> Self {
        EnsembleConfig {
            samples,
            final_time,
            seed,
            trajectory_offset: 0,
            layout: NoiseLayout::PerStep,
        }
    }

    pub fn with_offset(mut self, offset: u64) -> Self {
        self.trajectory_offset = offset;
        self
    }

    pub fn with_layout(mut self, layout: NoiseLayout) -> Self {
        self.layout = layout;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("at least one sample is required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub n_diverged: u64,
    pub scheme: SchemeSpec,
    pub seed: u64,
    pub final_time: f64,
}

struct Workspace {
    stream: NoiseStream,
    step: StepScratch,
    y: Vec<f64>,
    next: Vec<f64>,
    dw: Vec<f64>,
}

impl Workspace {
    fn new(integ: &Integrator<'_>, cfg: &EnsembleConfig) -> Self {
        let k = integ.model().modes();
        Workspace {
            stream: NoiseStream::with_layout(cfg.seed, 0, cfg.layout),
            step: integ.scratch(),
            y: vec![0.0; k],
            next: vec![0.0; k],
            dw: vec![0.0; k],
        }
    }
}

/// Runs one trajectory from zero and returns `φ` of the observable, or
/// `None` if an iterate became non-finite. With zero steps the observable is
/// `Y₀` itself.
fn simulate(integ: &Integrator<'_>, phi: &TestFunction, n_steps: u64, trajectory: u64, ws: &mut Workspace) -> Option<f64> {
    ws.stream.restart(trajectory);
    ws.y.fill(0.0);
    for _ in 0..n_steps {
        integ.draw_increment_into(&mut ws.stream, &mut ws.dw);
        integ.step_into(&ws.y, &ws.dw, &mut ws.next, None, &mut ws.step);
        std::mem::swap(&mut ws.y, &mut ws.next);
        if !ws.y.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    if integ.spec().has_postprocessor() && n_steps > 0 {
        integ.draw_increment_into(&mut ws.stream, &mut ws.dw);
        integ.postprocess_into(&ws.y, &ws.dw, &mut ws.next);
        Some(phi.value(&ws.next))
    } else {
        Some(phi.value(&ws.y))
    }
}

/// `φ(Ȳ_N)` (or `φ(Y_N)`) for every trajectory, `NaN` where it diverged.
pub fn trajectory_values(model: &Model, spec: SchemeSpec, phi: &TestFunction, cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.layout.validate(spec.dt())?;
    let n_steps = steps_for(cfg.final_time, spec.dt())?;
    let integ = Integrator::new(model, spec)?;
    let mut values = Vec::with_capacity(cfg.samples as usize);
    (0..cfg.samples as usize)
        .into_par_iter()
        .map_init(
            || Workspace::new(&integ, cfg),
            |ws, m| simulate(&integ, phi, n_steps, cfg.trajectory_offset + m as u64, ws).unwrap_or(f64::NAN),
        )
        .collect_into_vec(&mut values);
    Ok(values)
}

fn summarize(values: &[f64], spec: SchemeSpec, cfg: &EnsembleConfig) -> Result<EnsembleEstimate> {
    let mut acc = Accumulator::default();
    let mut diverged = 0u64;
    for &v in values {
        if v.is_finite() {
            acc.push(v);
        } else {
            diverged += 1;
        }
    }
    if acc.count() == 0 {
        return Err(Error::AllDiverged(values.len()));
    }
    Ok(EnsembleEstimate {
        mean: acc.mean(),
        stderr: acc.stderr(),
        n_samples: values.len() as u64,
        n_diverged: diverged,
        scheme: spec,
        seed: cfg.seed,
        final_time: cfg.final_time,
    })
}

pub fn run_ensemble(model: &Model, spec: SchemeSpec, phi: &TestFunction, cfg: &EnsembleConfig) -> Result<EnsembleEstimate> {
    let values = trajectory_values(model, spec, phi, cfg)?;
    summarize(&values, spec, cfg)
}

/// A reference value for `∫φ dμ⋆`, treated as exact up to its stderr.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceValue {
    pub value: f64,
    pub stderr: f64,
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceMode {
    /// Closed form; only for `F = 0`.
    Analytic,
    /// Postprocessed Leimkuhler–Matthews ensemble at a small step.
    FineLm { dt: f64, samples: u64 },
}

/// Closed-form `∫φ dν` for the Gaussian target.
pub fn analytic_reference(model: &Model, phi: &TestFunction) -> Result<ReferenceValue> {
    if !model.nonlinearity().is_zero() {
        return Err(Error::AnalyticReferenceUnavailable(model.nonlinearity().name().to_string()));
    }
    let space = model.space();
    let value = match phi {
        TestFunction::ExpNorm => gaussian_phi_expectation(space, 1.0),
        TestFunction::Quadratic => space.trace_q() / 2.0,
        TestFunction::Constant(c) => *c,
        TestFunction::Linear(_) => 0.0,
    };
    Ok(ReferenceValue {
        value,
        stderr: 0.0,
        description: "analytic".into(),
    })
}

/// Stationary `E φ` of a linear scheme at step `Δt`; `F = 0`, `φ = exp(−‖·‖²)`.
pub fn analytic_scheme_expectation(model: &Model, spec: SchemeSpec) -> Result<f64> {
    if !model.nonlinearity().is_zero() {
        return Err(Error::AnalyticReferenceUnavailable(model.nonlinearity().name().to_string()));
    }
    let factors = observed_variance_factors(model.space(), spec)?;
    Ok(crate::analytics::gaussian::gaussian_phi_expectation_per_mode(model.space(), &factors))
}

pub fn reference_value(
    model: &Model,
    phi: &TestFunction,
    mode: ReferenceMode,
    cfg: &EnsembleConfig,
) -> Result<ReferenceValue> {
    match mode {
        ReferenceMode::Analytic => analytic_reference(model, phi),
        ReferenceMode::FineLm { dt, samples } => {
            let spec = SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, dt)?;
            let est = run_ensemble(model, spec, phi, &EnsembleConfig { samples, ..*cfg })?;
            Ok(ReferenceValue {
                value: est.mean,
                stderr: est.stderr,
                description: format!("fine-lm(dt={dt}, samples={samples})"),
            })
        }
    }
}

/// Per-trajectory values of a fine reference run, for paired comparisons on
/// shared Brownian paths.
#[derive(Clone, Debug)]
pub struct ReferenceSamples {
    pub values: Vec<f64>,
    pub config: EnsembleConfig,
    pub scheme: SchemeSpec,
}

impl ReferenceSamples {
    /// Runs the reference scheme with the bridge layout so that any coarser
    /// dyadic step sees the same paths.
    pub fn compute(model: &Model, scheme: SchemeSpec, phi: &TestFunction, cfg: &EnsembleConfig) -> Result<Self> {
        let config = cfg.with_layout(NoiseLayout::Bridge);
        let values = trajectory_values(model, scheme, phi, &config)?;
        Ok(ReferenceSamples { values, config, scheme })
    }

    pub fn fine_lm(model: &Model, dt: f64, phi: &TestFunction, cfg: &EnsembleConfig) -> Result<Self> {
        Self::compute(model, SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, dt)?, phi, cfg)
    }

    pub fn value(&self) -> Result<ReferenceValue> {
        let est = summarize(&self.values, self.scheme, &self.config)?;
        Ok(ReferenceValue {
            value: est.mean,
            stderr: est.stderr,
            description: format!("paired {}(dt={})", self.scheme.kind(), self.scheme.dt()),
        })
    }
}

#[derive(Clone, Debug)]
pub enum Reference {
    Value(ReferenceValue),
    Paired(Arc<ReferenceSamples>),
}

/// Bias of one configuration against a reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasEstimate {
    pub estimate: EnsembleEstimate,
    pub reference: f64,
    pub bias: f64,
    pub bias_stderr: f64,
}

/// Runs `spec` and measures its bias. With a paired reference the run reuses
/// the reference's paths and the bias is the mean per-trajectory difference.
pub fn measure_bias(
    model: &Model,
    spec: SchemeSpec,
    phi: &TestFunction,
    cfg: &EnsembleConfig,
    reference: &Reference,
) -> Result<BiasEstimate> {
    match reference {
        Reference::Value(r) => {
            let estimate = run_ensemble(model, spec, phi, cfg)?;
            Ok(BiasEstimate {
                estimate,
                reference: r.value,
                bias: estimate.mean - r.value,
                bias_stderr: estimate.stderr.hypot(r.stderr),
            })
        }
        Reference::Paired(r) => {
            let c = r.config;
            if c.seed != cfg.seed || c.samples != cfg.samples || c.final_time != cfg.final_time || c.trajectory_offset != cfg.trajectory_offset {
                return Err(Error::ReferenceMismatch(format!(
                    "reference ran (seed={}, samples={}, T={}, offset={}), run asks for (seed={}, samples={}, T={}, offset={})",
                    c.seed, c.samples, c.final_time, c.trajectory_offset, cfg.seed, cfg.samples, cfg.final_time, cfg.trajectory_offset
                )));
            }
            let values = trajectory_values(model, spec, phi, &c)?;
            let estimate = summarize(&values, spec, &c)?;
            let mut diff = Accumulator::default();
            let mut reference = Accumulator::default();
            for (v, w) in values.iter().zip(&r.values) {
                if v.is_finite() && w.is_finite() {
                    diff.push(v - w);
                    reference.push(*w);
                }
            }
            if diff.count() == 0 {
                return Err(Error::AllDiverged(values.len()));
            }
            Ok(BiasEstimate {
                estimate,
                reference: reference.mean(),
                bias: diff.mean(),
                bias_stderr: diff.stderr(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: f64,
    pub bias: f64,
    /// Standard error of `bias`: combined, or paired when paths are shared.
    pub bias_stderr: f64,
    pub flagged: bool,
    pub n_diverged: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: String,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_order: Option<f64>,
    /// Indices of the rows used in the fit.
    pub fit_window: Vec<usize>,
    pub flag_threshold: f64,
}

impl ConvergenceReport {
    pub fn from_rows(scheme: impl Into<String>, rows: Vec<ConvergenceRow>, flag_threshold: f64) -> Self {
        let mut report = ConvergenceReport {
            scheme: scheme.into(),
            rows,
            fitted_order: None,
            fit_window: Vec::new(),
            flag_threshold,
        };
        report.refit(flag_threshold);
        report
    }

    /// Re-flags rows with `|bias| < threshold·bias_stderr` and refits the
    /// order on the rest. At least three rows are needed.
    pub fn refit(&mut self, threshold: f64) {
        self.flag_threshold = threshold;
        self.fit_window.clear();
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.flagged = !(row.bias.abs() >= threshold * row.bias_stderr) || row.bias == 0.0;
            if !row.flagged {
                self.fit_window.push(i);
            }
        }
        self.fitted_order = if self.fit_window.len() >= 3 {
            let pts: Vec<(f64, f64)> = self
                .fit_window
                .iter()
                .map(|&i| (self.rows[i].dt, self.rows[i].bias.abs()))
                .collect();
            log_log_slope(&pts)
        } else {
            None
        };
    }

    pub fn n_flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    /// `scheme,dt,estimate,stderr,reference,bias,flagged` rows and a
    /// `# fitted_order=` trailer.
    pub fn to_csv(&self, with_header: bool) -> String {
        let mut out = String::new();
        if with_header {
            out.push_str("scheme,dt,estimate,stderr,reference,bias,flagged\n");
        }
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.scheme, r.dt, r.estimate, r.stderr, r.reference, r.bias, r.flagged
            );
        }
        match self.fitted_order {
            Some(p) => {
                let _ = writeln!(out, "# fitted_order={p}");
            }
            None => out.push_str("# fitted_order=unavailable\n"),
        }
        out
    }
}

fn check_dts(dts: &[f64]) -> Result<()> {
    if dts.is_empty() {
        return Err(Error::InvalidParameter("no time steps given".into()));
    }
    if dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("time steps must be sorted in descending order".into()));
    }
    Ok(())
}

/// One biased estimate per `Δt`. With a plain reference value, run `i` uses
/// trajectories `offset + i·samples ..`, so rows are independent; with a
/// paired reference every row reuses the reference's paths.
pub fn dt_sweep(
    model: &Model,
    kind: SchemeKind,
    phi: &TestFunction,
    dts: &[f64],
    cfg: &EnsembleConfig,
    reference: &Reference,
) -> Result<ConvergenceReport> {
    check_dts(dts)?;
    let specs = dts
        .iter()
        .map(|&dt| {
            let spec = SchemeSpec::new(kind, dt)?;
            steps_for(cfg.final_time, dt)?;
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(dts.len());
    for (i, spec) in specs.into_iter().enumerate() {
        let run_cfg = match reference {
            Reference::Value(_) => cfg.with_offset(cfg.trajectory_offset + i as u64 * cfg.samples),
            Reference::Paired(_) => *cfg,
        };
        let b = measure_bias(model, spec, phi, &run_cfg, reference)?;
        rows.push(ConvergenceRow {
            dt: spec.dt(),
            estimate: b.estimate.mean,
            stderr: b.estimate.stderr,
            reference: b.reference,
            bias: b.bias,
            bias_stderr: b.bias_stderr,
            flagged: false,
            n_diverged: b.estimate.n_diverged,
        });
    }
    Ok(ConvergenceReport::from_rows(kind.label(), rows, DEFAULT_FLAG_THRESHOLD))
}

/// One sweep of the preconditioned linear-implicit scheme per `α`.
pub fn alpha_sweep(
    model: &Model,
    alphas: &[f64],
    phi: &TestFunction,
    dts: &[f64],
    cfg: &EnsembleConfig,
    reference: &Reference,
) -> Result<Vec<ConvergenceReport>> {
    alphas
        .iter()
        .map(|&alpha| {
            dt_sweep(
                model,
                SchemeKind::PreconditionedLinearImplicit { alpha },
                phi,
                dts,
                cfg,
                reference,
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledComparison {
    pub bias_a: f64,
    pub bias_b: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    /// `mean_a − mean_b` over common trajectories.
    pub difference: f64,
    pub stderr_difference: f64,
}

/// Runs two schemes on identical streams. The difference of their means has
/// a much smaller standard error than either mean.
pub fn coupled_bias_comparison(
    model: &Model,
    a: SchemeKind,
    b: SchemeKind,
    phi: &TestFunction,
    dt: f64,
    cfg: &EnsembleConfig,
    reference: &Reference,
) -> Result<CoupledComparison> {
    let spec_a = SchemeSpec::new(a, dt)?;
    let spec_b = SchemeSpec::new(b, dt)?;
    let run_cfg = match reference {
        Reference::Paired(r) => r.config,
        Reference::Value(_) => *cfg,
    };
    let va = trajectory_values(model, spec_a, phi, &run_cfg)?;
    let vb = trajectory_values(model, spec_b, phi, &run_cfg)?;
    let mut diff = Accumulator::default();
    for (x, y) in va.iter().zip(&vb) {
        if x.is_finite() && y.is_finite() {
            diff.push(x - y);
        }
    }
    if diff.count() == 0 {
        return Err(Error::AllDiverged(va.len()));
    }
    let bias_of = |values: &[f64], spec: SchemeSpec| -> Result<(f64, f64)> {
        match reference {
            Reference::Value(r) => {
                let est = summarize(values, spec, &run_cfg)?;
                Ok((est.mean - r.value, est.stderr.hypot(r.stderr)))
            }
            Reference::Paired(r) => {
                let mut acc = Accumulator::default();
                for (v, w) in values.iter().zip(&r.values) {
                    if v.is_finite() && w.is_finite() {
                        acc.push(v - w);
                    }
                }
                if acc.count() == 0 {
                    return Err(Error::AllDiverged(values.len()));
                }
                Ok((acc.mean(), acc.stderr()))
            }
        }
    };
    let (bias_a, stderr_a) = bias_of(&va, spec_a)?;
    let (bias_b, stderr_b) = bias_of(&vb, spec_b)?;
    Ok(CoupledComparison {
        bias_a,
        bias_b,
        stderr_a,
        stderr_b,
        difference: diff.mean(),
        stderr_difference: diff.stderr(),
    })
}

/// Ensemble mean of `‖Y_n‖²` for `n = 0..=N`.
pub fn moment_profile(model: &Model, spec: SchemeSpec, cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n_steps = steps_for(cfg.final_time, spec.dt())?;
    let integ = Integrator::new(model, spec)?;
    let per_trajectory: Vec<Vec<f64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|m| {
            let mut stream = NoiseStream::with_layout(cfg.seed, cfg.trajectory_offset + m, cfg.layout);
            let mut norms = vec![f64::NAN; n_steps as usize + 1];
            run_with_observer(&integ, &model.space().zeros(), &mut stream, n_steps, |n, y| {
                norms[n as usize] = y.iter().map(|v| v * v).sum();
            })
            .map(|_| norms)
        })
        .collect::<Result<_>>()?;
    let mut profile = vec![0.0; n_steps as usize + 1];
    let mut counts = vec![0u64; n_steps as usize + 1];
    for norms in &per_trajectory {
        for (n, v) in norms.iter().enumerate() {
            if v.is_finite() {
                profile[n] += v;
                counts[n] += 1;
            }
        }
    }
    for (p, c) in profile.iter_mut().zip(&counts) {
        *p /= (*c).max(1) as f64;
    }
    Ok(profile)
}

/// Separations below this fraction of the state norm are dominated by
/// rounding, so their ratios say nothing about contraction.
const RESOLVABLE_SEPARATION: f64 = 1e-8;

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Ratios `‖δY_{n+1}‖/‖δY_n‖` for two copies driven by the same noise. Stops
/// early once the copies agree to rounding level.
pub fn coupled_contraction_ratios(
    model: &Model,
    spec: SchemeSpec,
    a: &FieldState,
    b: &FieldState,
    seed: u64,
    n_steps: u64,
) -> Result<Vec<f64>> {
    let integ = Integrator::new(model, spec)?;
    let k = model.modes();
    let mut stream = NoiseStream::new(seed, 0);
    let mut ws = integ.scratch();
    let (mut ya, mut yb) = (a.as_slice().to_vec(), b.as_slice().to_vec());
    let (mut na, mut nb) = (vec![0.0; k], vec![0.0; k]);
    let mut dw = vec![0.0; k];
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let mut ratios = Vec::with_capacity(n_steps as usize);
    for _ in 0..n_steps {
        integ.draw_increment_into(&mut stream, &mut dw);
        integ.step_into(&ya, &dw, &mut na, None, &mut ws);
        integ.step_into(&yb, &dw, &mut nb, None, &mut ws);
        let before = dist(&ya, &yb);
        let after = dist(&na, &nb);
        let scale = 1.0 + norm(&ya).max(norm(&yb));
        if before <= RESOLVABLE_SEPARATION * scale {
            break;
        }
        ratios.push(after / before);
        std::mem::swap(&mut ya, &mut na);
        std::mem::swap(&mut yb, &mut nb);
    }
    Ok(ratios)
}

/// Mean increment `E‖Y(t + h) − Y(t)‖` at the given lags (in steps), from
/// trajectories started after a burn-in, and the fitted Hölder exponent.
pub fn holder_exponent(
    model: &Model,
    spec: SchemeSpec,
    cfg: &EnsembleConfig,
    burn_in_steps: u64,
    lags: &[u64],
) -> Result<(Vec<(f64, f64)>, Option<f64>)> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let integ = Integrator::new(model, spec)?;
    let per_trajectory: Vec<Vec<f64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|m| {
            let mut stream = NoiseStream::with_layout(cfg.seed, cfg.trajectory_offset + m, cfg.layout);
            let mut path: Vec<Vec<f64>> = Vec::with_capacity(max_lag as usize + 1);
            run_with_observer(&integ, &model.space().zeros(), &mut stream, burn_in_steps + max_lag, |n, y| {
                if n >= burn_in_steps {
                    path.push(y.to_vec());
                }
            })?;
            Ok(lags
                .iter()
                .map(|&lag| {
                    path[lag as usize]
                        .iter()
                        .zip(&path[0])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut means = vec![0.0; lags.len()];
    for row in &per_trajectory {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    let pts: Vec<(f64, f64)> = lags
        .iter()
        .zip(&means)
        .map(|(&lag, &s)| (lag as f64 * spec.dt(), s / cfg.samples as f64))
        .collect();
    let slope = log_log_slope(&pts);
    Ok((pts, slope))
}
