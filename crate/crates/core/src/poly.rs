//! Dense univariate polynomials over a [`Scalar`] field.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::scalar::Scalar;

/// Coefficients indexed by the power of `z`; trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Poly::new(vec![c])
    }

    pub fn one() -> Self {
        Poly::constant(T::one())
    }

    /// `c * z^power`
    pub fn monomial(c: T, power: usize) -> Self {
        let mut coeffs = vec![T::zero(); power + 1];
        coeffs[power] = c;
        Poly::new(coeffs)
    }

    /// `1 - z`
    pub fn one_minus_z() -> Self {
        Poly::new(vec![T::one(), -T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, power: usize) -> T {
        self.coeffs.get(power).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * z.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.clone() * T::from_u128(i as u128))
            .collect();
        Poly::new(coeffs)
    }

    pub fn scale(&self, c: &T) -> Self {
        Poly::new(self.coeffs.iter().map(|x| x.clone() * c.clone()).collect())
    }

    /// Multiplies by `z^power`.
    pub fn shift(&self, power: usize) -> Self {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![T::zero(); power];
        coeffs.extend(self.coeffs.iter().cloned());
        Poly::new(coeffs)
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Poly::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> Poly<f64> {
        self.map(|c| c.to_f64())
    }

    /// Taylor coefficients around `at`: `p(at + t) = sum_j out[j] t^j`.
    pub fn taylor_at(&self, at: &T) -> Vec<T> {
        let mut work = self.coeffs.clone();
        let n = work.len();
        // repeated synthetic division
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let carry = work[j + 1].clone() * at.clone();
                work[j] = work[j].clone() + carry;
            }
        }
        work
    }
}

impl Poly<f64> {
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Largest absolute coefficient, used as a residual scale.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;

    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;

    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_trimming() {
        let a = Poly::new(vec![1.0, -1.0]);
        let b = Poly::new(vec![1.0, 1.0]);
        assert_eq!((&a * &b).coeffs(), &[1.0, 0.0, -1.0]);
        assert_eq!((&a + &b).coeffs(), &[2.0]);
        assert!((&a - &a).is_zero());
        assert_eq!(a.shift(2).coeffs(), &[0.0, 0.0, 1.0, -1.0]);
    }

    #[test]
    fn taylor_matches_derivatives() {
        let p = Poly::new(vec![2.0, -3.0, 0.5, 1.0]);
        let at = 1.3;
        let t = p.taylor_at(&at);
        assert!((t[0] - p.eval(&at)).abs() < 1e-12);
        assert!((t[1] - p.derivative().eval(&at)).abs() < 1e-12);
        assert!((t[2] - p.derivative().derivative().eval(&at) / 2.0).abs() < 1e-12);
        assert!((t[3] - 1.0).abs() < 1e-12);
    }
}
