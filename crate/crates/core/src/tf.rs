//! Rational transfer functions in the Laplace variable.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Mul, Neg};

use num_complex::Complex64;

use crate::{Error, Result};

/// `N(s)/D(s)` with polynomial coefficients in ascending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalTf {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let num = trim(num);
        let den = trim(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(Error::config("transfer function denominator is zero"));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(Error::config(
                "transfer function has non-finite coefficients",
            ));
        }
        Ok(Self { num, den })
    }

    pub fn constant(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    /// `k/s`.
    pub fn integrator(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![0.0, 1.0],
        }
    }

    /// `gain · Π(1 + s/z) / Π(1 + s/p)`. Infinite corners contribute unity.
    pub fn from_corners(gain: f64, zeros: &[f64], poles: &[f64]) -> Result<Self> {
        let factor = |w: f64| -> Result<Vec<f64>> {
            if w.is_infinite() {
                Ok(vec![1.0])
            } else if w == 0.0 || !w.is_finite() {
                Err(Error::config(format!(
                    "corner frequency {w} must be nonzero and finite"
                )))
            } else {
                Ok(vec![1.0, 1.0 / w])
            }
        };
        let mut num = vec![gain];
        for &z in zeros {
            num = poly_mul(&num, &factor(z)?);
        }
        let mut den = vec![1.0];
        for &p in poles {
            den = poly_mul(&den, &factor(p)?);
        }
        Self::new(num, den)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn is_proper(&self) -> bool {
        self.num.len() <= self.den.len()
    }

    /// `N(0)/D(0)`; infinite for a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        let n0 = self.num[0];
        let d0 = self.den[0];
        if d0 == 0.0 {
            if n0 == 0.0 {
                f64::NAN
            } else {
                f64::INFINITY.copysign(n0)
            }
        } else {
            n0 / d0
        }
    }

    /// Evaluates at a complex `s`. A pole evaluates to complex infinity.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let n = poly_eval(&self.num, s);
        let d = poly_eval(&self.den, s);
        if d == Complex64::new(0.0, 0.0) {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        n / d
    }

    /// Evaluates at `s = j·2πf`.
    pub fn at_hz(&self, f: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, TAU * f))
    }

    /// Closed loop `L/(1+L)` for unity negative feedback.
    pub fn feedback(&self) -> Self {
        let den = poly_add(&self.den, &self.num);
        Self {
            num: self.num.clone(),
            den: trim(den),
        }
    }

    /// Sensitivity `1/(1+L)`.
    pub fn sensitivity(&self) -> Self {
        let den = poly_add(&self.den, &self.num);
        Self {
            num: self.den.clone(),
            den: trim(den),
        }
    }

    /// Scales so the lowest nonzero denominator coefficient is one.
    pub fn normalized(mut self) -> Self {
        let k = self.den.iter().copied().find(|c| *c != 0.0).unwrap_or(1.0);
        self.num.iter_mut().for_each(|c| *c /= k);
        self.den.iter_mut().for_each(|c| *c /= k);
        self
    }
}

impl Mul for &RationalTf {
    type Output = RationalTf;
    fn mul(self, rhs: &RationalTf) -> RationalTf {
        RationalTf {
            num: trim(poly_mul(&self.num, &rhs.num)),
            den: trim(poly_mul(&self.den, &rhs.den)),
        }
        .normalized()
    }
}

impl Mul for RationalTf {
    type Output = RationalTf;
    fn mul(self, rhs: RationalTf) -> RationalTf {
        &self * &rhs
    }
}

impl Neg for RationalTf {
    type Output = RationalTf;
    fn neg(mut self) -> RationalTf {
        self.num.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl fmt::Display for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let poly = |c: &[f64]| {
            c.iter()
                .enumerate()
                .map(|(i, v)| match i {
                    0 => format!("{v:.6e}"),
                    1 => format!("{v:.6e}·s"),
                    _ => format!("{v:.6e}·s^{i}"),
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        write!(f, "({}) / ({})", poly(&self.num), poly(&self.den))
    }
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn poly_eval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * s + k)
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    if c.is_empty() {
        c.push(0.0);
    }
    c
}
