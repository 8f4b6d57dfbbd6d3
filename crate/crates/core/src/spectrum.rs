//! Spatial eigenstructure and smoothness bookkeeping.
//!
//! Coefficients are taken against an orthonormal eigenbasis, so a field
//! `f(x) = sum_n f_n psi_n(x)` has `f_n = <f, psi_n>`. On the interval
//! `(0, π)` this means `psi_n(x) = sqrt(2/π) sin(n x)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Interval,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeBasis {
    alphas: Vec<f64>,
    psi_sup: Vec<f64>,
    dimension: u32,
    kind: BasisKind,
}

/// `sqrt(2/π)`, the sup norm of every normalized Dirichlet sine on `(0, π)`.
pub fn interval_psi_sup() -> f64 {
    (2.0 / PI).sqrt()
}

impl ModeBasis {
    /// Dirichlet Laplacian on `(0, π)`: `alpha_n = n`.
    pub fn interval(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidBasis("at least one mode required".into()));
        }
        Ok(ModeBasis {
            alphas: (1..=n_max).map(|n| n as f64).collect(),
            psi_sup: vec![interval_psi_sup(); n_max],
            dimension: 1,
            kind: BasisKind::Interval,
        })
    }

    /// Tabulated spectrum for a domain without a built-in evaluator.
    pub fn user_supplied(alphas: Vec<f64>, psi_sup: Vec<f64>, dimension: u32) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidBasis("at least one mode required".into()));
        }
        if alphas.len() != psi_sup.len() {
            return Err(Error::InvalidBasis(format!(
                "{} eigenvalues but {} sup norms",
                alphas.len(),
                psi_sup.len()
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidBasis("dimension must be positive".into()));
        }
        if alphas
            .iter()
            .chain(&psi_sup)
            .any(|v| !v.is_finite() || *v <= 0.0)
        {
            return Err(Error::InvalidBasis("entries must be finite and positive".into()));
        }
        if alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBasis("alphas must be strictly increasing".into()));
        }
        Ok(ModeBasis {
            alphas,
            psi_sup,
            dimension,
            kind: BasisKind::UserSupplied,
        })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `alpha_n` for the 1-based mode index `n`.
    pub fn alpha(&self, n: usize) -> f64 {
        self.alphas[n - 1]
    }

    pub fn psi_sup(&self) -> &[f64] {
        &self.psi_sup
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// `psi_n(x)`, available only for the built-in interval basis.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        match self.kind {
            BasisKind::Interval => Ok(interval_psi_sup() * (n as f64 * x).sin()),
            BasisKind::UserSupplied => Err(Error::UnsupportedBasis),
        }
    }

    /// `sum_n coeffs_n^2 alpha_n^(2 beta)` over the supplied coefficients.
    pub fn sobolev_norm_sq(&self, coeffs: &[f64], beta: f64) -> f64 {
        assert!(coeffs.len() <= self.len(), "more coefficients than modes");
        coeffs
            .iter()
            .zip(&self.alphas)
            .map(|(f, a)| f * f * a.powf(2.0 * beta))
            .sum()
    }

    /// Integral majorant of `sum_{n > n_max} n^(-2 beta)` for the interval
    /// spectrum: `n_max^(1 - 2 beta) / (2 beta - 1)`. `None` when the series
    /// diverges or the spectrum is tabulated.
    pub fn tail_majorant(&self, beta: f64) -> Option<f64> {
        if self.kind != BasisKind::Interval || beta <= 0.5 {
            return None;
        }
        let n = self.len() as f64;
        Some(n.powf(1.0 - 2.0 * beta) / (2.0 * beta - 1.0))
    }
}

/// Modal coefficients of `θ(0, ·)` and `θ_t(0, ·)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
}

impl InitialData {
    pub fn new(basis: &ModeBasis, phi0: Vec<f64>, phi1: Vec<f64>) -> Result<Self> {
        if phi0.len() != basis.len() || phi1.len() != basis.len() {
            return Err(Error::InvalidBasis(format!(
                "initial data lengths ({}, {}) must equal mode count {}",
                phi0.len(),
                phi1.len(),
                basis.len()
            )));
        }
        Ok(InitialData { phi0, phi1 })
    }

    pub fn zeros(basis: &ModeBasis) -> Self {
        InitialData {
            phi0: vec![0.0; basis.len()],
            phi1: vec![0.0; basis.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.phi0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi0.is_empty()
    }

    /// `|phi0_n| + |phi1_n| + 1e-12`, the per-mode tolerance scale.
    pub fn scale(&self, n: usize) -> f64 {
        self.phi0[n - 1].abs() + self.phi1[n - 1].abs() + 1e-12
    }
}

/// Seeded random data with `phi0 ∈ D(A^(β+1))` and `phi1 ∈ D(A^β)`.
///
/// Draws `sigma_n` then `tau_n` uniformly from `[-1, 1]` for each mode in
/// order, from a Xoshiro256++ stream seeded with `seed_from_u64(seed)`, and
/// sets `phi0_n = amplitude sigma_n alpha_n^(-β-2)`,
/// `phi1_n = amplitude tau_n alpha_n^(-β-1)`.
pub fn generate_initial_data(
    basis: &ModeBasis,
    beta: f64,
    amplitude: f64,
    seed: u64,
) -> Result<InitialData> {
    let half_dim = basis.dimension() as f64 / 2.0;
    if !(beta > half_dim) {
        return Err(Error::SmoothnessViolation { beta, half_dim });
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut phi0 = Vec::with_capacity(basis.len());
    let mut phi1 = Vec::with_capacity(basis.len());
    for &a in basis.alphas() {
        let sigma: f64 = rng.gen_range(-1.0..=1.0);
        let tau: f64 = rng.gen_range(-1.0..=1.0);
        phi0.push(amplitude * sigma * a.powf(-beta - 2.0));
        phi1.push(amplitude * tau * a.powf(-beta - 1.0));
    }
    Ok(InitialData { phi0, phi1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basis() {
        let b = ModeBasis::interval(3).unwrap();
        assert_eq!(b.alphas(), &[1.0, 2.0, 3.0]);
        for s in b.psi_sup() {
            assert!((s - 0.7978845608).abs() < 1e-10);
        }
        assert_eq!(b.dimension(), 1);
        assert_eq!(ModeBasis::interval(1).unwrap().alphas(), &[1.0]);
        assert!(ModeBasis::interval(0).is_err());
    }

    #[test]
    fn eigenfunctions_are_orthonormal_dirichlet_sines() {
        let b = ModeBasis::interval(4).unwrap();
        // -d²/dx² sin(2x) = 4 sin(2x), checked by central differences.
        let x = 0.37;
        let h = 1e-4;
        let f = |x: f64| b.eigenfunction(2, x).unwrap();
        let lap = -(f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        assert!((lap - 4.0 * f(x)).abs() < 1e-6);
        assert!(f(0.0).abs() < 1e-15 && f(PI).abs() < 1e-14);
        // midpoint rule on the square over (0, π)
        let m = 20000;
        let norm: f64 = (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) * PI / m as f64;
                f(x).powi(2) * PI / m as f64
            })
            .sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn user_basis_validation() {
        assert!(ModeBasis::user_supplied(vec![1.0, 1.0], vec![1.0, 1.0], 2).is_err());
        assert!(ModeBasis::user_supplied(vec![1.0], vec![1.0, 1.0], 2).is_err());
        let b = ModeBasis::user_supplied(vec![1.0, 1.5], vec![0.5, 0.6], 2).unwrap();
        assert!(matches!(b.eigenfunction(1, 0.1), Err(Error::UnsupportedBasis)));
        assert_eq!(b.tail_majorant(2.0), None);
    }

    #[test]
    fn sobolev_norms() {
        let b = ModeBasis::interval(3).unwrap();
        assert_eq!(b.sobolev_norm_sq(&[1.0, 0.0, 0.0], 1.0), 1.0);
        assert_eq!(b.sobolev_norm_sq(&[1.0, 2.0, 3.0], 0.0), 14.0);
        let b = ModeBasis::interval(100).unwrap();
        let f: Vec<f64> = (1..=100).map(|n| (n as f64).powi(-2)).collect();
        let basel: f64 = (1..=100).map(|n| (n as f64).powi(-2)).sum();
        assert!((b.sobolev_norm_sq(&f, 1.0) - basel).abs() < 1e-13);
        assert!((basel - 1.6349839).abs() < 1e-7);
    }

    #[test]
    fn tail_majorant_closed_form() {
        let b = ModeBasis::interval(32).unwrap();
        let t = b.tail_majorant(1.0).unwrap();
        assert!((t - 1.0 / 32.0).abs() < 1e-16);
        // majorizes a long partial tail
        let partial: f64 = (33..200_000).map(|n| (n as f64).powi(-2)).sum();
        assert!(partial <= t);
        assert_eq!(b.tail_majorant(0.5), None);
    }

    #[test]
    fn random_data() {
        let b = ModeBasis::interval(50).unwrap();
        let d1 = generate_initial_data(&b, 1.0, 1.0, 42).unwrap();
        let d2 = generate_initial_data(&b, 1.0, 1.0, 42).unwrap();
        assert_eq!(d1, d2);
        assert_ne!(d1, generate_initial_data(&b, 1.0, 1.0, 43).unwrap());
        let bound = std::f64::consts::PI.powi(2) / 6.0;
        assert!(b.sobolev_norm_sq(&d1.phi0, 2.0) <= bound);
        assert!(b.sobolev_norm_sq(&d1.phi1, 1.0) <= bound);
        assert!(matches!(
            generate_initial_data(&b, 0.4, 1.0, 1),
            Err(Error::SmoothnessViolation { .. })
        ));
        assert!(generate_initial_data(&b, 0.5, 1.0, 1).is_err());
    }
}
