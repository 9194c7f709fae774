//! Forward-mode differentiation with dual numbers and second-order jets.
//!
//! Expressions are evaluated generically over [`Scalar`]. Plain `f64` gives
//! values, [`Dual`] adds a gradient, and [`Dual2`] carries value, gradient
//! and a packed symmetric Hessian. Nesting `Dual2<Dual<f64>>` yields third
//! derivatives without a dedicated third-order type.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::expr::{EvalError, Expr};

/// Largest number of independent directions tracked by [`Dual`] and [`Dual2`].
pub const MAX_DIM: usize = 8;

const PACKED: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Scalar types the expression evaluator can run on.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    /// Real part (the plain value with all perturbations dropped).
    fn re(&self) -> f64;
    /// True when every stored component is finite.
    fn is_finite(&self) -> bool;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// Sign with `sgn(0) = 0`; its derivative is taken to be zero.
    fn sgn(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn recip(self) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sgn(self) -> Self {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            // keeps NaN as NaN
            self * 0.0
        }
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        if p == 2.0 {
            self * self
        } else {
            f64::powf(self, p)
        }
    }
}

/// First-order multivariate dual number: `re + Σ eps[k]·ε_k`.
#[derive(Clone, Copy, Debug)]
pub struct Dual<T: Scalar = f64> {
    pub re: T,
    pub eps: [T; MAX_DIM],
    n: usize,
}

impl<T: Scalar> Dual<T> {
    pub fn constant(c: T) -> Self {
        Dual { re: c, eps: [T::from_f64(0.0); MAX_DIM], n: 0 }
    }

    /// Independent variable `k` out of `n`, seeded with unit perturbation.
    pub fn variable(value: T, k: usize, n: usize) -> Self {
        assert!(n <= MAX_DIM && k < n);
        let mut d = Self::constant(value);
        d.n = n;
        d.eps[k] = T::from_f64(1.0);
        d
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn chain(self, f0: T, f1: T) -> Self {
        let mut out = Self::constant(f0);
        out.n = self.n;
        for k in 0..self.n {
            out.eps[k] = f1 * self.eps[k];
        }
        out
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let n = self.n.max(rhs.n);
        let mut out = Self::constant(self.re + rhs.re);
        out.n = n;
        for k in 0..n {
            out.eps[k] = self.eps[k] + rhs.eps[k];
        }
        out
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let n = self.n.max(rhs.n);
        let mut out = Self::constant(self.re - rhs.re);
        out.n = n;
        for k in 0..n {
            out.eps[k] = self.eps[k] - rhs.eps[k];
        }
        out
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let n = self.n.max(rhs.n);
        let mut out = Self::constant(self.re * rhs.re);
        out.n = n;
        for k in 0..n {
            out.eps[k] = self.eps[k] * rhs.re + self.re * rhs.eps[k];
        }
        out
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.re, T::from_f64(-1.0))
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(c: f64) -> Self {
        Self::constant(T::from_f64(c))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps[..self.n].iter().all(|e| e.is_finite())
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::from_f64(0.5) / s)
    }
    fn abs(self) -> Self {
        self.chain(self.re.abs(), self.re.sgn())
    }
    fn sgn(self) -> Self {
        self.chain(self.re.sgn(), T::from_f64(0.0))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn recip(self) -> Self {
        let r = self.re.recip();
        self.chain(r, -(r * r))
    }
    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::from_f64(1.0);
        }
        if p == 1.0 {
            return self;
        }
        self.chain(self.re.powf(p), T::from_f64(p) * self.re.powf(p - 1.0))
    }
}

/// Second-order jet: value, gradient and symmetric Hessian with respect to
/// up to [`MAX_DIM`] variables. Only one triangle of the Hessian is stored.
#[derive(Clone, Copy, Debug)]
pub struct Dual2<T: Scalar = f64> {
    pub value: T,
    grad: [T; MAX_DIM],
    hess: [T; PACKED],
    n: usize,
}

impl<T: Scalar> Dual2<T> {
    pub fn constant(c: T) -> Self {
        let z = T::from_f64(0.0);
        Dual2 { value: c, grad: [z; MAX_DIM], hess: [z; PACKED], n: 0 }
    }

    pub fn variable(value: T, k: usize, n: usize) -> Self {
        assert!(n <= MAX_DIM && k < n);
        let mut d = Self::constant(value);
        d.n = n;
        d.grad[k] = T::from_f64(1.0);
        d
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grad(&self, i: usize) -> T {
        self.grad[i]
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hess[packed(i, j)]
    }

    #[inline]
    fn chain(self, f0: T, f1: T, f2: T) -> Self {
        let mut out = Self::constant(f0);
        let n = self.n;
        out.n = n;
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    #[inline]
    fn zip(self, rhs: Self, value: T, sign: f64) -> Self {
        let n = self.n.max(rhs.n);
        let s = T::from_f64(sign);
        let mut out = Self::constant(value);
        out.n = n;
        for i in 0..n {
            out.grad[i] = self.grad[i] + s * rhs.grad[i];
        }
        for k in 0..n * (n + 1) / 2 {
            out.hess[k] = self.hess[k] + s * rhs.hess[k];
        }
        out
    }
}

impl<T: Scalar> Add for Dual2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let v = self.value + rhs.value;
        self.zip(rhs, v, 1.0)
    }
}

impl<T: Scalar> Sub for Dual2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let v = self.value - rhs.value;
        self.zip(rhs, v, -1.0)
    }
}

impl<T: Scalar> Mul for Dual2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let n = self.n.max(rhs.n);
        let (a, b) = (self.value, rhs.value);
        let mut out = Self::constant(a * b);
        out.n = n;
        for i in 0..n {
            out.grad[i] = self.grad[i] * b + a * rhs.grad[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = self.hess[k] * b
                    + a * rhs.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

impl<T: Scalar> Div for Dual2<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar> Neg for Dual2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.value, T::from_f64(-1.0), T::from_f64(0.0))
    }
}

impl<T: Scalar> Scalar for Dual2<T> {
    fn from_f64(c: f64) -> Self {
        Self::constant(T::from_f64(c))
    }
    fn re(&self) -> f64 {
        self.value.re()
    }
    fn is_finite(&self) -> bool {
        let n = self.n;
        self.value.is_finite()
            && self.grad[..n].iter().all(|g| g.is_finite())
            && self.hess[..n * (n + 1) / 2].iter().all(|h| h.is_finite())
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let d1 = T::from_f64(0.5) / s;
        let d2 = -(d1 / (T::from_f64(2.0) * self.value));
        self.chain(s, d1, d2)
    }
    fn abs(self) -> Self {
        self.chain(self.value.abs(), self.value.sgn(), T::from_f64(0.0))
    }
    fn sgn(self) -> Self {
        let z = T::from_f64(0.0);
        self.chain(self.value.sgn(), z, z)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = self.value.recip();
        self.chain(self.value.ln(), r, -(r * r))
    }
    fn sin(self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(c, -s, -c)
    }
    fn recip(self) -> Self {
        let r = self.value.recip();
        let r2 = r * r;
        self.chain(r, -r2, T::from_f64(2.0) * r2 * r)
    }
    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::from_f64(1.0);
        }
        if p == 1.0 {
            return self;
        }
        let a = self.value;
        let d2 = if p == 2.0 {
            T::from_f64(2.0)
        } else {
            T::from_f64(p * (p - 1.0)) * a.powf(p - 2.0)
        };
        self.chain(a.powf(p), T::from_f64(p) * a.powf(p - 1.0), d2)
    }
}

/// Value, gradient and Hessian of an expression with respect to `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hessian {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

fn check_dim(n: usize) -> Result<(), EvalError> {
    if n == 0 || n > MAX_DIM {
        Err(EvalError::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

/// Value, y-gradient and y-Hessian of `e` at `(x, y)`.
pub fn hessian_y(e: &Expr, x: &[f64], y: &[f64]) -> Result<Hessian, EvalError> {
    let n = y.len();
    check_dim(n)?;
    let xs: Vec<Dual2> = x.iter().map(|&v| Dual2::constant(v)).collect();
    let ys: Vec<Dual2> = y.iter().enumerate().map(|(k, &v)| Dual2::variable(v, k, n)).collect();
    let out = e.eval(&xs, &ys)?;
    if !Scalar::is_finite(&out) {
        return Err(EvalError::NonFiniteResult);
    }
    let grad = (0..n).map(|i| out.grad(i)).collect();
    let hess = (0..n).map(|i| (0..n).map(|j| out.hess(i, j)).collect()).collect();
    Ok(Hessian { value: out.value, grad, hess })
}

/// Value and y-gradient of `e` at `(x, y)`.
pub fn gradient_y(e: &Expr, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
    let n = y.len();
    check_dim(n)?;
    let xs: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
    let ys: Vec<Dual> = y.iter().enumerate().map(|(k, &v)| Dual::variable(v, k, n)).collect();
    let out = e.eval(&xs, &ys)?;
    if !Scalar::is_finite(&out) {
        return Err(EvalError::NonFiniteResult);
    }
    Ok((out.re, out.eps[..n].to_vec()))
}

/// Derivatives of the metric tensor, `out[i][j][k] = ∂g_ij/∂y^k`, where
/// `g_ij = ½ ∂²L/∂y^i∂y^j`. Symmetric in all three indices.
pub fn third_directional(e: &Expr, x: &[f64], y: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, EvalError> {
    metric_and_derivative(e, x, y).map(|(_, _, dg)| dg)
}

/// Metric tensor `g_ij = ½ ∂²L/∂y^i∂y^j` and its derivatives
/// `∂g_ij/∂y^k`, from a single nested evaluation.
pub fn metric_and_derivative(
    e: &Expr,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>), EvalError> {
    let n = y.len();
    check_dim(n)?;
    type Nested = Dual2<Dual<f64>>;
    let xs: Vec<Nested> = x.iter().map(|&v| Nested::constant(Dual::constant(v))).collect();
    let ys: Vec<Nested> = y
        .iter()
        .enumerate()
        .map(|(k, &v)| Nested::variable(Dual::variable(v, k, n), k, n))
        .collect();
    let out = e.eval(&xs, &ys)?;
    if !Scalar::is_finite(&out) {
        return Err(EvalError::NonFiniteResult);
    }
    let mut g = vec![vec![0.0; n]; n];
    let mut dg = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let h = out.hess(i, j);
            g[i][j] = 0.5 * h.re;
            for k in 0..n {
                dg[i][j][k] = 0.5 * h.eps[k];
            }
        }
    }
    Ok((out.value.re, g, dg))
}
