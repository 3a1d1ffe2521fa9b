//! Second-order truncated Taylor arithmetic.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to the phase coordinates. Every arithmetic operation propagates
//! first and second derivatives exactly (up to floating point), so a field
//! written once in terms of `Jet2` yields `f`, `∂f` and `∂∂f` in one pass.
//!
//! Jets of dimension zero carry no derivative information and reduce to plain
//! `f64` arithmetic; this is how fields are evaluated when only values are
//! needed.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Value, gradient and Hessian of a scalar with respect to `dim` coordinates.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    /// Row-major `dim × dim`, kept symmetric.
    hess: Vec<f64>,
}

impl Jet2 {
    /// A constant: zero gradient and Hessian.
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// The coordinate function `x^index`, evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        assert!(index < dim, "coordinate index {index} out of range for dim {dim}");
        let mut jet = Self::constant(value, dim);
        jet.grad[index] = 1.0;
        jet
    }

    /// Seeds the coordinate jets of a point. With `dim = 0` the returned jets
    /// carry values only.
    pub fn seed(coords: &[f64], with_derivatives: bool) -> Vec<Self> {
        if with_derivatives {
            let n = coords.len();
            coords
                .iter()
                .enumerate()
                .map(|(i, &v)| Self::variable(v, i, n))
                .collect()
        } else {
            coords.iter().map(|&v| Self::constant(v, 0)).collect()
        }
    }

    /// Builds a jet from raw parts. The Hessian is symmetrized.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Self {
        let n = grad.len();
        assert_eq!(hess.len(), n * n, "Hessian must be {n}x{n}");
        let mut jet = Self { value, grad, hess };
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (jet.hess[i * n + j] + jet.hess[j * n + i]);
                jet.hess[i * n + j] = m;
                jet.hess[j * n + i] = m;
            }
        }
        jet
    }

    /// A constant with the same dimension as `self`.
    pub fn constant_like(&self, value: f64) -> Self {
        Self::constant(value, self.dim())
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Row-major Hessian.
    pub fn hess(&self) -> &[f64] {
        &self.hess
    }

    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn dd(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f: f64, df: f64, ddf: f64) -> Self {
        let n = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| df * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = df * self.hess[i * n + j] + ddf * (self.grad[i] * self.grad[j]);
            }
        }
        Self { value: f, grad, hess }
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        let r = 1.0 / v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn powf(&self, p: f64) -> Self {
        let v = self.value;
        if p == 0.0 {
            return self.constant_like(1.0);
        }
        self.chain(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }

    pub fn powi(&self, p: i32) -> Self {
        let v = self.value;
        match p {
            0 => self.constant_like(1.0),
            1 => self.clone(),
            _ => {
                let pf = f64::from(p);
                self.chain(v.powi(p), pf * v.powi(p - 1), pf * (pf - 1.0) * v.powi(p - 2))
            }
        }
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    fn check_dims(&self, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
    }

    /// Sum of `terms`; returns a constant zero of dimension `dim` when empty.
    pub fn sum<'a, I: IntoIterator<Item = &'a Jet2>>(terms: I, dim: usize) -> Self {
        let mut acc = Self::constant(0.0, dim);
        for t in terms {
            acc += t;
        }
        acc
    }
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .finish_non_exhaustive()
    }
}

impl From<f64> for Jet2 {
    fn from(value: f64) -> Self {
        Self::constant(value, 0)
    }
}

// --- jet ⊕ jet -----------------------------------------------------------

impl AddAssign<&Jet2> for Jet2 {
    fn add_assign(&mut self, rhs: &Jet2) {
        self.check_dims(rhs);
        self.value += rhs.value;
        self.grad.iter_mut().zip(&rhs.grad).for_each(|(a, b)| *a += b);
        self.hess.iter_mut().zip(&rhs.hess).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&Jet2> for Jet2 {
    fn sub_assign(&mut self, rhs: &Jet2) {
        self.check_dims(rhs);
        self.value -= rhs.value;
        self.grad.iter_mut().zip(&rhs.grad).for_each(|(a, b)| *a -= b);
        self.hess.iter_mut().zip(&rhs.hess).for_each(|(a, b)| *a -= b);
    }
}

impl MulAssign<f64> for Jet2 {
    fn mul_assign(&mut self, rhs: f64) {
        self.value *= rhs;
        self.grad.iter_mut().for_each(|a| *a *= rhs);
        self.hess.iter_mut().for_each(|a| *a *= rhs);
    }
}

impl Add<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.check_dims(rhs);
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        let grad: Vec<f64> = self
            .grad
            .iter()
            .zip(&rhs.grad)
            .map(|(ga, gb)| a * gb + b * ga)
            .collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess[k] = a * rhs.hess[k]
                    + b * self.hess[k]
                    + (self.grad[i] * rhs.grad[j] + rhs.grad[i] * self.grad[j]);
            }
        }
        Jet2 { value: a * b, grad, hess }
    }
}

impl Div<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn div(self, rhs: &Jet2) -> Jet2 {
        self * &rhs.recip()
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        let mut out = self.clone();
        out *= -1.0;
        out
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(mut self) -> Jet2 {
        self *= -1.0;
        self
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: &Jet2) -> Jet2 {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
forward_owned_binop!(Div, div);

// --- jet ⊕ scalar ----------------------------------------------------------

impl Add<f64> for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: f64) -> Jet2 {
        let mut out = self.clone();
        out.value += rhs;
        out
    }
}

impl Sub<f64> for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: f64) -> Jet2 {
        self + (-rhs)
    }
}

impl Mul<f64> for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        let mut out = self.clone();
        out *= rhs;
        out
    }
}

impl Div<f64> for &Jet2 {
    type Output = Jet2;
    fn div(self, rhs: f64) -> Jet2 {
        self * (1.0 / rhs)
    }
}

impl Add<&Jet2> for f64 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        rhs + self
    }
}

impl Sub<&Jet2> for f64 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        &(-rhs) + self
    }
}

impl Mul<&Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        rhs * self
    }
}

impl Div<&Jet2> for f64 {
    type Output = Jet2;
    fn div(self, rhs: &Jet2) -> Jet2 {
        &rhs.recip() * self
    }
}

macro_rules! forward_owned_scalar_op {
    ($tr:ident, $m:ident) => {
        impl $tr<f64> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: f64) -> Jet2 {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet2> for f64 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned_scalar_op!(Add, add);
forward_owned_scalar_op!(Sub, sub);
forward_owned_scalar_op!(Mul, mul);
forward_owned_scalar_op!(Div, div);
