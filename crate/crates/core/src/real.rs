//! Scalar abstraction shared by `f64` and truncated Taylor series.
//!
//! Model code written against [`Real`] evaluates either plainly or in
//! Taylor mode, which yields exact derivatives along a curve or a direction.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    /// Value part.
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, k: i32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..k.unsigned_abs() {
            acc = acc * self;
        }
        if k < 0 {
            Self::cst(1.0) / acc
        } else {
            acc
        }
    }
    fn powf(self, e: f64) -> Self {
        (self.ln() * e).exp()
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

/// Truncated Taylor series `c[0] + c[1] t + ... + c[N-1] t^(N-1)`.
///
/// `Taylor<2>` is a dual number; `c[k] * k!` is the k-th derivative in `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<const N: usize>(pub [f64; N]);

impl<const N: usize> Taylor<N> {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        Self(c)
    }

    /// The curve `x + t`.
    pub fn variable(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        if N > 1 {
            c[1] = 1.0;
        }
        Self(c)
    }

    /// The `k`-th derivative at `t = 0`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.0[k] * (1..=k).map(|i| i as f64).product::<f64>()
    }

    /// Series of `d/dt` of this series, with the top coefficient lost.
    pub fn shift_derivative(&self) -> Self {
        let mut c = [0.0; N];
        for k in 1..N {
            c[k - 1] = self.0[k] * k as f64;
        }
        Self(c)
    }
}

impl<const N: usize> Add for Taylor<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..N {
            self.0[k] += rhs.0[k];
        }
        self
    }
}

impl<const N: usize> AddAssign for Taylor<N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> Sub for Taylor<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..N {
            self.0[k] -= rhs.0[k];
        }
        self
    }
}

impl<const N: usize> Mul for Taylor<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            for j in 0..N - i {
                c[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Self(c)
    }
}

impl<const N: usize> Div for Taylor<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let mut q = [0.0; N];
        for k in 0..N {
            let mut acc = self.0[k];
            for j in 1..=k {
                acc -= rhs.0[j] * q[k - j];
            }
            q[k] = acc / rhs.0[0];
        }
        Self(q)
    }
}

impl<const N: usize> Neg for Taylor<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for c in &mut self.0 {
            *c = -*c;
        }
        self
    }
}

impl<const N: usize> Add<f64> for Taylor<N> {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.0[0] += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Taylor<N> {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.0[0] -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Taylor<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for c in &mut self.0 {
            *c *= rhs;
        }
        self
    }
}

impl<const N: usize> Div<f64> for Taylor<N> {
    type Output = Self;
    fn div(mut self, rhs: f64) -> Self {
        for c in &mut self.0 {
            *c /= rhs;
        }
        self
    }
}

impl<const N: usize> Real for Taylor<N> {
    fn cst(x: f64) -> Self {
        Self::constant(x)
    }

    fn re(&self) -> f64 {
        self.0[0]
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    // k s_k = sum_j j u_j c_{k-j},  k c_k = -sum_j j u_j s_{k-j}
    fn sin_cos(self) -> (Self, Self) {
        let u = self.0;
        let mut s = [0.0; N];
        let mut c = [0.0; N];
        (s[0], c[0]) = u[0].sin_cos();
        for k in 1..N {
            let (mut ss, mut cc) = (0.0, 0.0);
            for j in 1..=k {
                ss += j as f64 * u[j] * c[k - j];
                cc -= j as f64 * u[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Self(s), Self(c))
    }

    // k e_k = sum_j j u_j e_{k-j}
    fn exp(self) -> Self {
        let u = self.0;
        let mut e = [0.0; N];
        e[0] = u[0].exp();
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * u[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Self(e)
    }

    // u = exp(l):  k u_k = sum_j j l_j u_{k-j}
    fn ln(self) -> Self {
        let u = self.0;
        let mut l = [0.0; N];
        l[0] = u[0].ln();
        for k in 1..N {
            let mut acc = k as f64 * u[k];
            for j in 1..k {
                acc -= j as f64 * l[j] * u[k - j];
            }
            l[k] = acc / (k as f64 * u[0]);
        }
        Self(l)
    }

    // r^2 = u:  2 r_0 r_k = u_k - sum_{j=1}^{k-1} r_j r_{k-j}
    fn sqrt(self) -> Self {
        let u = self.0;
        let mut r = [0.0; N];
        r[0] = u[0].sqrt();
        for k in 1..N {
            let mut acc = u[k];
            for j in 1..k {
                acc -= r[j] * r[k - j];
            }
            r[k] = acc / (2.0 * r[0]);
        }
        Self(r)
    }
}
