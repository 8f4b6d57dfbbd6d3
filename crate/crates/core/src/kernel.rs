//! Exponential (Prony) memory kernels
//! `K(t) = sum_j (c_j / gamma_j) exp(-gamma_j t)` and their Laplace-domain
//! companions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{bisect, Poly};

/// Relative distance below which a point counts as sitting on a pole of `K̂`.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// A finite exponential-sum memory kernel.
///
/// Terms are stored sorted by decay rate; construction rejects repeated
/// rates, non-positive entries and non-finite values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct ExponentialKernel {
    c: Vec<f64>,
    gamma: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    c: Vec<f64>,
    gamma: Vec<f64>,
}

impl TryFrom<RawKernel> for ExponentialKernel {
    type Error = Error;
    fn try_from(raw: RawKernel) -> Result<Self> {
        ExponentialKernel::new(raw.c, raw.gamma)
    }
}

impl From<ExponentialKernel> for RawKernel {
    fn from(k: ExponentialKernel) -> Self {
        RawKernel {
            c: k.c,
            gamma: k.gamma,
        }
    }
}

impl ExponentialKernel {
    pub fn new(c: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidKernel("at least one term required".into()));
        }
        if c.len() != gamma.len() {
            return Err(Error::InvalidKernel(format!(
                "{} amplitudes but {} decay rates",
                c.len(),
                gamma.len()
            )));
        }
        if let Some(v) = c.iter().chain(&gamma).find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidKernel(format!(
                "entries must be finite and positive, got {v}"
            )));
        }
        let mut terms: Vec<(f64, f64)> = c.into_iter().zip(gamma).collect();
        terms.sort_by(|a, b| a.1.total_cmp(&b.1));
        if terms.windows(2).any(|w| w[0].1 == w[1].1) {
            return Err(Error::InvalidKernel("duplicate".into()));
        }
        let (c, gamma) = terms.into_iter().unzip();
        Ok(ExponentialKernel { c, gamma })
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Number of exponential terms `N`.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.c.iter().copied().zip(self.gamma.iter().copied())
    }

    /// `K(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> f64 {
        self.terms().map(|(c, g)| c / g * (-g * t).exp()).sum()
    }

    /// `K'(t) = -sum_j c_j exp(-gamma_j t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        -self.terms().map(|(c, g)| c * (-g * t).exp()).sum::<f64>()
    }

    /// `K(0) = sum_j c_j / gamma_j`.
    pub fn k0(&self) -> f64 {
        self.value(0.0)
    }

    /// `K'(0) = -sum_j c_j`.
    pub fn dk0(&self) -> f64 {
        -self.c.iter().sum::<f64>()
    }

    fn check_pole(&self, lambda: Complex64) -> Result<()> {
        let tol = POLE_TOLERANCE * lambda.norm().max(1.0);
        for &g in &self.gamma {
            let distance = (lambda + g).norm();
            if distance <= tol {
                return Err(Error::PoleProximity {
                    lambda,
                    pole: g,
                    distance,
                });
            }
        }
        Ok(())
    }

    /// Laplace transform `K̂(λ) = sum_k c_k / (gamma_k (λ + gamma_k))`.
    pub fn khat(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_pole(lambda)?;
        Ok(self.terms().map(|(c, g)| c / g / (lambda + g)).sum())
    }

    /// `K̂'(λ) = -sum_k c_k / (gamma_k (λ + gamma_k)^2)`.
    pub fn khat_derivative(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_pole(lambda)?;
        Ok(-self
            .terms()
            .map(|(c, g)| {
                let d = lambda + g;
                c / g / (d * d)
            })
            .sum::<Complex64>())
    }

    /// `K̂(0) = sum_k c_k / gamma_k^2`.
    pub fn khat0(&self) -> f64 {
        self.terms().map(|(c, g)| c / (g * g)).sum()
    }

    /// Pole-cleared numerator of `K̂`: `sum_k (c_k/gamma_k) prod_{j != k} (λ + gamma_j)`.
    pub fn khat_numerator(&self) -> Poly {
        let mut acc = Poly::new(vec![0.0]);
        for (k, (c, g)) in self.terms().enumerate() {
            let mut term = Poly::constant(1.0);
            for (j, &gj) in self.gamma.iter().enumerate() {
                if j != k {
                    term.mul_linear(gj);
                }
            }
            acc.add_scaled(&term, c / g);
        }
        acc
    }

    /// The `N - 1` positive numbers `q` with `K̂(-q) = 0`, ascending.
    ///
    /// Exactly one lies strictly between each pair of consecutive decay
    /// rates, since the numerator changes sign between adjacent poles.
    pub fn khat_zeros(&self) -> Result<Vec<f64>> {
        let g = self.khat_numerator();
        let mut zeros: Vec<f64> = self
            .gamma
            .windows(2)
            .map(|w| bisect(|x| g.eval(x), -w[1], -w[0], 200).map(|z| -z))
            .collect::<Result<_>>()?;
        zeros.sort_by(f64::total_cmp);
        Ok(zeros)
    }
}
