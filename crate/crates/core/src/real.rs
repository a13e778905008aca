//! Scalar abstraction shared by the plain and the differentiated pipelines.
//!
//! Rates, the objective gradient, projection and the PGD step are written
//! once over [`Real`]. Instantiated with `f64` they are the optimizer;
//! instantiated with [`Dual`] they carry derivatives with respect to the
//! step schedule through the unrolled iterations.
//!
//! Branching (interference sets, the arg-min message, positive part) is
//! always decided on [`Real::value`], so the dual pipeline differentiates the
//! branch the plain pipeline takes.

use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Clone
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    /// `ln(1 + x)`.
    fn ln_1p(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn square(self) -> Self {
        self.clone() * self
    }
}

impl Real for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn ln_1p(self) -> Self {
        libm::log1p(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
}

/// A value with a vector of directional derivatives (`ε_i ε_j = 0`).
///
/// An empty tangent vector stands for "all zero", so constants never
/// allocate. Operations between duals with tangents of different lengths
/// treat the missing tail as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub tangent: Vec<f64>,
}

impl Dual {
    /// The `index`-th of `dims` independent variables.
    pub fn variable(value: f64, index: usize, dims: usize) -> Self {
        let mut tangent = alloc::vec![0.0; dims];
        tangent[index] = 1.0;
        Dual { value, tangent }
    }

    /// Derivative along direction `i` (zero past the stored tail).
    pub fn d(&self, i: usize) -> f64 {
        self.tangent.get(i).copied().unwrap_or(0.0)
    }

    fn scale_tangent(mut self, k: f64) -> Vec<f64> {
        for t in &mut self.tangent {
            *t *= k;
        }
        self.tangent
    }

    /// Chain rule for a unary map with derivative `slope`.
    fn map(self, value: f64, slope: f64) -> Self {
        Dual { value, tangent: self.scale_tangent(slope) }
    }
}

// a·x + b·y on tangent vectors, reusing the longer allocation
fn axpby(a: f64, x: Vec<f64>, b: f64, y: Vec<f64>) -> Vec<f64> {
    if y.is_empty() {
        return scale(x, a);
    }
    if x.is_empty() {
        return scale(y, b);
    }
    let (mut long, short, kl, ks) = if x.len() >= y.len() { (x, y, a, b) } else { (y, x, b, a) };
    for (i, t) in long.iter_mut().enumerate() {
        *t = kl * *t + ks * short.get(i).copied().unwrap_or(0.0);
    }
    long
}

fn scale(mut v: Vec<f64>, k: f64) -> Vec<f64> {
    if k != 1.0 {
        for t in &mut v {
            *t *= k;
        }
    }
    v
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual { value: self.value + rhs.value, tangent: axpby(1.0, self.tangent, 1.0, rhs.tangent) }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual { value: self.value - rhs.value, tangent: axpby(1.0, self.tangent, -1.0, rhs.tangent) }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let (a, b) = (self.value, rhs.value);
        Dual { value: a * b, tangent: axpby(b, self.tangent, a, rhs.tangent) }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let (a, b) = (self.value, rhs.value);
        let q = a / b;
        Dual { value: q, tangent: axpby(1.0 / b, self.tangent, -q / b, rhs.tangent) }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        let v = -self.value;
        self.map(v, -1.0)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(mut self, rhs: f64) -> Dual {
        self.value += rhs;
        self
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, rhs: f64) -> Dual {
        let v = self.value * rhs;
        self.map(v, rhs)
    }
}

impl Real for Dual {
    fn constant(v: f64) -> Self {
        Dual { value: v, tangent: Vec::new() }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn ln_1p(self) -> Self {
        let x = self.value;
        self.map(libm::log1p(x), 1.0 / (1.0 + x))
    }
    fn sqrt(self) -> Self {
        let r = libm::sqrt(self.value);
        // d sqrt at 0 is unbounded; only reachable from an all-zero row,
        // which projection replaces by a constant anyway.
        let slope = if r > 0.0 { 0.5 / r } else { 0.0 };
        self.map(r, slope)
    }
}
