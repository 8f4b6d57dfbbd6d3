//! Dense real polynomials in ascending-power storage, just enough for the
//! pole-cleared characteristic equations.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    /// `coeffs[i]` multiplies `x^i`.
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Multiply in place by `(x + a)`.
    pub fn mul_linear(&mut self, a: f64) {
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += a * c;
            out[i + 1] += c;
        }
        self.coeffs = out;
    }

    pub fn add_scaled(&mut self, other: &Poly, scale: f64) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            self.coeffs[i] += scale * c;
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Synthetic division by `(x - root)`; the remainder is discarded.
    pub fn deflate(&self, root: f64) -> Poly {
        let n = self.degree();
        if n == 0 {
            return Poly::constant(0.0);
        }
        let mut out = vec![0.0; n];
        let mut carry = self.coeffs[n];
        for i in (0..n).rev() {
            out[i] = carry;
            carry = self.coeffs[i] + carry * root;
        }
        Poly { coeffs: out }
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket stops shrinking in floating point or after
/// `max_iter` halvings; the latter is reported as [`Error::BracketFailure`].
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure { lo, hi });
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(Error::BracketFailure { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_deflate() {
        // (x+1)(x+2) = x^2 + 3x + 2
        let mut p = Poly::constant(1.0);
        p.mul_linear(1.0);
        p.mul_linear(2.0);
        assert_eq!(p.coeffs, vec![2.0, 3.0, 1.0]);
        let q = p.deflate(-2.0);
        assert_eq!(q.coeffs, vec![1.0, 1.0]);
        assert_eq!(p.eval(3.0), 20.0);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_rejects_no_sign_change() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 200),
            Err(Error::BracketFailure { .. })
        ));
    }
}
