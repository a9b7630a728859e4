//! Low-dimensional checks of the weak expansion operators.
//!
//! With `G(y) = −y + QF(y)` and the covariance eigenvalues `q_i`:
//!
//! * `Lφ = Dφ·G + ½ Σ q_i D²φ(e_i, e_i)`
//! * `A₁φ = ½D²φ(G,G) + ½Σ q_i D³φ(e_i,e_i,G) + ⅛ΣΣ q_i q_j D⁴φ(e_i,e_i,e_j,e_j)
//!   + ⅛ Dφ·Σ q_i D²G(e_i,e_i) + ½Σ q_i D²φ(DG e_i, e_i)`
//! * `Ā₁φ = ⅛ Σ q_i D²φ(e_i, e_i)`
//!
//! Averages against the target measure use tensor Gauss–Hermite rules for
//! `N(0, Q/2)` reweighted by `exp(−2V)`.

use crate::error::{Error, Result};
use crate::integrators::{Integrator, SchemeKind, SchemeSpec};
use crate::model::Model;
use crate::noise::CounterRng;
use crate::observable::TestFunction;
use crate::space::FieldState;
use crate::stats::log_log_slope;

use super::quadrature::NormalRule;

/// Largest mode count the verifier accepts.
pub const MAX_VERIFIER_MODES: usize = 3;

/// Residuals at or below this level count as exact cancellation.
pub const EXACT_RESIDUAL: f64 = 1e-13;

fn basis(k: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; k];
    e[i] = 1.0;
    e
}

fn state(v: &[f64]) -> FieldState {
    FieldState::from_vec(v.to_vec())
}

/// `φ` with `Dφ…D⁴φ` together with `G`, `DG`, `D²G`.
#[derive(Clone, Debug)]
pub struct DerivativeBundle<'a> {
    model: &'a Model,
    phi: TestFunction,
}

impl<'a> DerivativeBundle<'a> {
    pub fn new(model: &'a Model, phi: TestFunction) -> Result<Self> {
        let k = model.modes();
        if k > MAX_VERIFIER_MODES {
            return Err(Error::InvalidParameter(format!(
                "the verifier works with at most {MAX_VERIFIER_MODES} modes, got {k}"
            )));
        }
        if let TestFunction::Linear(d) = &phi {
            if d.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: d.len() });
            }
        }
        Ok(DerivativeBundle { model, phi })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn phi(&self) -> &TestFunction {
        &self.phi
    }

    pub fn modes(&self) -> usize {
        self.model.modes()
    }

    pub fn q(&self) -> &[f64] {
        self.model.space().covariance()
    }

    pub fn drift(&self, y: &[f64]) -> Vec<f64> {
        self.model.drift(&state(y)).expect("dimension checked").into_vec()
    }

    /// `DG(y)·h = −h + Q DF(y) h`.
    pub fn drift_derivative(&self, y: &[f64], h: &[f64]) -> Vec<f64> {
        let df = self.model.derivative_f(&state(y), &state(h)).expect("dimension checked");
        h.iter()
            .zip(df.as_slice())
            .zip(self.q())
            .map(|((hk, dk), q)| -hk + q * dk)
            .collect()
    }

    /// `D²G(y)·(h1, h2) = Q D²F(y)(h1, h2)`.
    pub fn drift_second_derivative(&self, y: &[f64], h1: &[f64], h2: &[f64]) -> Result<Vec<f64>> {
        let d2 = self.model.second_derivative_f(&state(y), &state(h1), &state(h2))?;
        Ok(d2.as_slice().iter().zip(self.q()).map(|(d, q)| q * d).collect())
    }

    /// Worst relative mismatch between the closed-form derivatives of `φ`
    /// and `G` and central differences (step `1e−4`) at random points.
    pub fn finite_difference_consistency(&self, points: usize, seed: u64) -> Result<f64> {
        let k = self.modes();
        let eps = 1e-4;
        let mut rng = CounterRng::from_parts(&[0xD1FF, seed]);
        let mut uniform = move || (rand::RngCore::next_u64(&mut rng) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        let shift = |y: &[f64], h: &[f64], s: f64| -> Vec<f64> { y.iter().zip(h).map(|(a, b)| a + s * b).collect() };
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
        let phi = &self.phi;
        let mut worst = 0.0f64;
        for _ in 0..points {
            let mut v = || (0..k).map(|_| uniform()).collect::<Vec<f64>>();
            let (y, h1, h2, h3, h4) = (v(), v(), v(), v(), v());
            let (yp, ym) = (shift(&y, &h4, eps), shift(&y, &h4, -eps));
            let checks = [
                (phi.d1(&y, &h4), (phi.value(&yp) - phi.value(&ym)) / (2.0 * eps)),
                (phi.d2(&y, &h1, &h4), (phi.d1(&yp, &h1) - phi.d1(&ym, &h1)) / (2.0 * eps)),
                (phi.d3(&y, &h1, &h2, &h4), (phi.d2(&yp, &h1, &h2) - phi.d2(&ym, &h1, &h2)) / (2.0 * eps)),
                (
                    phi.d4(&y, &h1, &h2, &h3, &h4),
                    (phi.d3(&yp, &h1, &h2, &h3) - phi.d3(&ym, &h1, &h2, &h3)) / (2.0 * eps),
                ),
            ];
            for (closed, fd) in checks {
                worst = worst.max(rel(closed, fd));
            }
            let dg = self.drift_derivative(&y, &h4);
            let (gp, gm) = (self.drift(&yp), self.drift(&ym));
            let d2g = self.drift_second_derivative(&y, &h1, &h4)?;
            let (dgp, dgm) = (self.drift_derivative(&yp, &h1), self.drift_derivative(&ym, &h1));
            for i in 0..k {
                worst = worst.max(rel(dg[i], (gp[i] - gm[i]) / (2.0 * eps)));
                worst = worst.max(rel(d2g[i], (dgp[i] - dgm[i]) / (2.0 * eps)));
            }
        }
        Ok(worst)
    }
}

/// Evaluates the expansion operators for one `(model, φ)` pair.
#[derive(Clone, Debug)]
pub struct Verifier<'a> {
    bundle: DerivativeBundle<'a>,
    trace_weight: f64,
}

impl<'a> Verifier<'a> {
    pub fn new(bundle: DerivativeBundle<'a>) -> Self {
        Verifier { bundle, trace_weight: 0.5 }
    }

    /// Replaces the `½` in front of the trace term of `L`. Only useful for
    /// demonstrating that the Taylor checks detect a wrong generator.
    pub fn with_trace_weight(mut self, weight: f64) -> Self {
        self.trace_weight = weight;
        self
    }

    pub fn bundle(&self) -> &DerivativeBundle<'a> {
        &self.bundle
    }

    fn k(&self) -> usize {
        self.bundle.modes()
    }

    pub fn generator(&self, y: &[f64]) -> f64 {
        let phi = &self.bundle.phi;
        let g = self.bundle.drift(y);
        let mut trace = 0.0;
        for (i, q) in self.bundle.q().iter().enumerate() {
            let e = basis(self.k(), i);
            trace += q * phi.d2(y, &e, &e);
        }
        phi.d1(y, &g) + self.trace_weight * trace
    }

    pub fn a1(&self, y: &[f64]) -> Result<f64> {
        let phi = &self.bundle.phi;
        let k = self.k();
        let q = self.bundle.q();
        let g = self.bundle.drift(y);
        let mut t2 = 0.0;
        let mut t3 = 0.0;
        let mut d2g_sum = vec![0.0; k];
        let mut t5 = 0.0;
        for i in 0..k {
            let ei = basis(k, i);
            t2 += q[i] * phi.d3(y, &ei, &ei, &g);
            for j in 0..k {
                let ej = basis(k, j);
                t3 += q[i] * q[j] * phi.d4(y, &ei, &ei, &ej, &ej);
            }
            let d2g = self.bundle.drift_second_derivative(y, &ei, &ei)?;
            for (s, v) in d2g_sum.iter_mut().zip(&d2g) {
                *s += q[i] * v;
            }
            let dg = self.bundle.drift_derivative(y, &ei);
            t5 += q[i] * phi.d2(y, &dg, &ei);
        }
        Ok(0.5 * phi.d2(y, &g, &g) + 0.5 * t2 + 0.125 * t3 + 0.125 * phi.d1(y, &d2g_sum) + 0.5 * t5)
    }

    pub fn a1bar(&self, y: &[f64]) -> f64 {
        let phi = &self.bundle.phi;
        let mut s = 0.0;
        for (i, q) in self.bundle.q().iter().enumerate() {
            let e = basis(self.k(), i);
            s += q * phi.d2(y, &e, &e);
        }
        0.125 * s
    }

    /// `[L, Ā₁]φ = −⅛ Σ q_i Dφ·D²G(e_i,e_i) − ¼ Σ q_i D²φ(DG e_i, e_i)`.
    pub fn commutator(&self, y: &[f64]) -> Result<f64> {
        let phi = &self.bundle.phi;
        let k = self.k();
        let q = self.bundle.q();
        let mut first = 0.0;
        let mut second = 0.0;
        for i in 0..k {
            let e = basis(k, i);
            first += q[i] * phi.d1(y, &self.bundle.drift_second_derivative(y, &e, &e)?);
            second += q[i] * phi.d2(y, &self.bundle.drift_derivative(y, &e), &e);
        }
        Ok(-0.125 * first - 0.25 * second)
    }

    /// `L(Ā₁φ) − Ā₁(Lφ)` with the outer operator applied through finite
    /// differences of the inner closed form.
    pub fn commutator_brute_force(&self, y: &[f64]) -> f64 {
        let k = self.k();
        let q = self.bundle.q();
        let h1 = 1e-5;
        let h2 = 1e-3;
        let at = |psi: &dyn Fn(&[f64]) -> f64, i: usize, s: f64| {
            let mut z = y.to_vec();
            z[i] += s;
            psi(&z)
        };
        let second = |psi: &dyn Fn(&[f64]) -> f64, i: usize| {
            (at(psi, i, h2) - 2.0 * psi(y) + at(psi, i, -h2)) / (h2 * h2)
        };
        let inner_bar = |z: &[f64]| self.a1bar(z);
        let inner_gen = |z: &[f64]| self.generator(z);
        let g = self.bundle.drift(y);
        let mut l_of_bar = 0.0;
        let mut bar_of_l = 0.0;
        for i in 0..k {
            let grad = (at(&inner_bar, i, h1) - at(&inner_bar, i, -h1)) / (2.0 * h1);
            l_of_bar += g[i] * grad + self.trace_weight * q[i] * second(&inner_bar, i);
            bar_of_l += 0.125 * q[i] * second(&inner_gen, i);
        }
        l_of_bar - bar_of_l
    }

    /// `⟨f⟩` under the target measure on a tensor rule with `points` nodes
    /// per mode.
    pub fn target_average(&self, points: usize, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<f64> {
        let rule = NormalRule::new(points)?;
        let scale: Vec<f64> = self.bundle.q().iter().map(|q| (q / 2.0).sqrt()).collect();
        let model = self.bundle.model;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut err = None;
        let mut y = vec![0.0; self.k()];
        rule.for_each_node(self.k(), |z, weight| {
            for i in 0..z.len() {
                y[i] = scale[i] * z[i];
            }
            let w = weight * (-2.0 * model.potential(&state(&y)).expect("dimension checked")).exp();
            match f(&y) {
                Ok(v) => num += w * v,
                Err(e) => err = Some(e),
            }
            den += w;
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(num / den)
    }

    /// Target average at 40 and 60 nodes per mode; errors if they disagree by
    /// more than `1e−6`.
    pub fn converged_average(&self, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
        let coarse = self.target_average(40, &f)?;
        let fine = self.target_average(60, &f)?;
        let change = (fine - coarse).abs();
        if change > 1e-6 {
            return Err(Error::QuadratureNotConverged { coarse: 40, fine: 60, change });
        }
        Ok(fine)
    }

    /// `|⟨A₁φ + [L, Ā₁]φ⟩|`.
    pub fn order2_condition_residual(&self) -> Result<f64> {
        Ok(self
            .converged_average(|y| Ok(self.a1(y)? + self.commutator(y)?))?
            .abs())
    }

    /// `|⟨Lφ⟩|`.
    pub fn stationarity_residual(&self) -> Result<f64> {
        Ok(self.converged_average(|y| Ok(self.generator(y)))?.abs())
    }

    /// Residuals of the two integration-by-parts identities
    /// `⟨Σ q_i q_j D⁴φ(e_i,e_i,e_j,e_j)⟩ = −2⟨Σ q_i D³φ(e_i,e_i,G)⟩` and
    /// `⟨Σ q_i D³φ(e_i,e_i,G)⟩ = −⟨Σ q_i D²φ(DG e_i, e_i)⟩ − 2⟨D²φ(G,G)⟩`.
    pub fn integration_by_parts_residuals(&self) -> Result<(f64, f64)> {
        let k = self.k();
        let q = self.bundle.q().to_vec();
        let phi = self.bundle.phi.clone();
        let bundle = &self.bundle;
        let first = self.converged_average(|y| {
            let g = bundle.drift(y);
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for i in 0..k {
                let ei = basis(k, i);
                rhs += -2.0 * q[i] * phi.d3(y, &ei, &ei, &g);
                for j in 0..k {
                    let ej = basis(k, j);
                    lhs += q[i] * q[j] * phi.d4(y, &ei, &ei, &ej, &ej);
                }
            }
            Ok(lhs - rhs)
        })?;
        let second = self.converged_average(|y| {
            let g = bundle.drift(y);
            let mut lhs = 0.0;
            let mut rhs = -2.0 * phi.d2(y, &g, &g);
            for i in 0..k {
                let ei = basis(k, i);
                lhs += q[i] * phi.d3(y, &ei, &ei, &g);
                rhs -= q[i] * phi.d2(y, &bundle.drift_derivative(y, &ei), &ei);
            }
            Ok(lhs - rhs)
        })?;
        Ok((first.abs(), second.abs()))
    }

    /// One-step residuals `|E φ(Y₁) − φ − ΔtLφ − Δt²A₁φ|` of the
    /// Leimkuhler–Matthews step from `x`, by Gauss–Hermite over the increment.
    pub fn integrator_taylor_residuals(&self, x: &[f64], dts: &[f64]) -> Result<Vec<f64>> {
        let phi0 = self.bundle.phi.value(x);
        let l = self.generator(x);
        let a1 = self.a1(x)?;
        let rule = NormalRule::new(40)?;
        let mut out = Vec::with_capacity(dts.len());
        for &dt in dts {
            let spec = SchemeSpec::new(SchemeKind::LeimkuhlerMatthews, dt)?;
            let integ = Integrator::new(self.bundle.model, spec)?;
            let sd: Vec<f64> = integ.noise_scale().iter().map(|s| s * dt.sqrt()).collect();
            let mut ws = integ.scratch();
            let mut dw = vec![0.0; self.k()];
            let mut next = vec![0.0; self.k()];
            let expectation = rule.expect_tensor(self.k(), |z| {
                for i in 0..z.len() {
                    dw[i] = sd[i] * z[i];
                }
                integ.step_into(x, &dw, &mut next, None, &mut ws);
                self.bundle.phi.value(&next)
            });
            out.push((expectation - phi0 - dt * l - dt * dt * a1).abs());
        }
        Ok(out)
    }

    /// `|E φ(x + ½ΔW) − φ − Δt Ā₁φ|`.
    pub fn postprocessor_taylor_residuals(&self, x: &[f64], dts: &[f64]) -> Result<Vec<f64>> {
        let phi0 = self.bundle.phi.value(x);
        let a1bar = self.a1bar(x);
        let rule = NormalRule::new(40)?;
        let q = self.bundle.q();
        let mut out = Vec::with_capacity(dts.len());
        for &dt in dts {
            let mut y = vec![0.0; self.k()];
            let expectation = rule.expect_tensor(self.k(), |z| {
                for i in 0..z.len() {
                    y[i] = x[i] + 0.5 * (dt * q[i]).sqrt() * z[i];
                }
                self.bundle.phi.value(&y)
            });
            out.push((expectation - phi0 - dt * a1bar).abs());
        }
        Ok(out)
    }
}

/// Slope of residuals against `Δt`; `None` when every residual is at the
/// exact-cancellation floor.
pub fn residual_slope(dts: &[f64], residuals: &[f64]) -> Option<f64> {
    if residuals.iter().all(|&r| r <= EXACT_RESIDUAL) {
        return None;
    }
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .zip(residuals)
        .map(|(&d, &r)| (d, r.max(f64::MIN_POSITIVE)))
        .collect();
    log_log_slope(&pts)
}
