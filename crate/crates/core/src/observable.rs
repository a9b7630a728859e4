//! Test functions `φ` with closed-form directional derivatives up to order 4.

use crate::error::{Error, Result};
use crate::space::FieldState;

#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `φ(y) = ⟨d, y⟩`.
    Linear(FieldState),
    /// `φ(y) = ‖y‖²`.
    Quadratic,
    /// `φ(y) = exp(−‖y‖²)`.
    ExpNorm,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TestFunction {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "expnorm" => Ok(TestFunction::ExpNorm),
            "quadratic" => Ok(TestFunction::Quadratic),
            other => Err(Error::InvalidParameter(format!(
                "unknown test function `{other}` (expected expnorm or quadratic)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Constant(_) => "constant",
            TestFunction::Linear(_) => "linear",
            TestFunction::Quadratic => "quadratic",
            TestFunction::ExpNorm => "expnorm",
        }
    }

    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Linear(d) => dot(d.as_slice(), y),
            TestFunction::Quadratic => dot(y, y),
            TestFunction::ExpNorm => (-dot(y, y)).exp(),
        }
    }

    /// `Dφ(y)·h`.
    pub fn d1(&self, y: &[f64], h: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(_) => 0.0,
            TestFunction::Linear(d) => dot(d.as_slice(), h),
            TestFunction::Quadratic => 2.0 * dot(y, h),
            TestFunction::ExpNorm => -2.0 * dot(y, h) * self.value(y),
        }
    }

    /// `D²φ(y)·(h1, h2)`.
    pub fn d2(&self, y: &[f64], h1: &[f64], h2: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(_) | TestFunction::Linear(_) => 0.0,
            TestFunction::Quadratic => 2.0 * dot(h1, h2),
            TestFunction::ExpNorm => {
                let (a1, a2) = (dot(y, h1), dot(y, h2));
                self.value(y) * (4.0 * a1 * a2 - 2.0 * dot(h1, h2))
            }
        }
    }

    pub fn d3(&self, y: &[f64], h1: &[f64], h2: &[f64], h3: &[f64]) -> f64 {
        match self {
            TestFunction::ExpNorm => {
                let (a1, a2, a3) = (dot(y, h1), dot(y, h2), dot(y, h3));
                let (b12, b13, b23) = (dot(h1, h2), dot(h1, h3), dot(h2, h3));
                self.value(y) * (-8.0 * a1 * a2 * a3 + 4.0 * (b12 * a3 + b13 * a2 + b23 * a1))
            }
            _ => 0.0,
        }
    }

    pub fn d4(&self, y: &[f64], h1: &[f64], h2: &[f64], h3: &[f64], h4: &[f64]) -> f64 {
        match self {
            TestFunction::ExpNorm => {
                let (a1, a2, a3, a4) = (dot(y, h1), dot(y, h2), dot(y, h3), dot(y, h4));
                let (b12, b13, b14) = (dot(h1, h2), dot(h1, h3), dot(h1, h4));
                let (b23, b24, b34) = (dot(h2, h3), dot(h2, h4), dot(h3, h4));
                let quartic = 16.0 * a1 * a2 * a3 * a4;
                let mixed = b12 * a3 * a4 + b13 * a2 * a4 + b14 * a2 * a3 + b23 * a1 * a4 + b24 * a1 * a3 + b34 * a1 * a2;
                let pairs = b12 * b34 + b13 * b24 + b14 * b23;
                self.value(y) * (quartic - 8.0 * mixed + 4.0 * pairs)
            }
            _ => 0.0,
        }
    }

    pub fn value_of(&self, state: &FieldState) -> f64 {
        self.value(state.as_slice())
    }
}
