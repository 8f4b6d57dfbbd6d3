//! Per-mode moment problems over the exponential family of characteristic
//! roots, and the exponential-sum controls that solve them.
//!
//! With exponents `η_i = -λ_i` and targets `t_i = -(φ1 + λ_i φ0)`, the
//! control `u(s) = Σ_j C'_j exp(η_j (s - T))` must satisfy
//! `∫_0^T u(s) exp(η_i s) ds = t_i`. Scaling row `i` by `exp(-η_i T)` gives
//! the bounded system `Σ_j G'_ij C'_j = exp(-η_i T) t_i` with
//! `G'_ij = (1 - exp(-(η_i + η_j) T)) / (η_i + η_j)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charroots::CharacteristicRoots;
use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::quad;

/// Below this `|η_i + η_j|` the Gram entry takes its limit value `T`.
pub const DEGENERATE_SUM: f64 = 1e-13;
/// Relative pivot size that flags a singular moment system.
pub const PIVOT_TOLERANCE: f64 = 1e-14;
/// Uniform samples used for the sup estimate and the realness check.
pub const SUP_SAMPLES: usize = 4096;
/// Required accuracy of each moment, relative to `max(1, |target|)`.
pub const MOMENT_TOLERANCE: f64 = 1e-8;
/// Iterative refinement passes after the `f64` solve.
const REFINEMENT_STEPS: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// One moment per root, including `λ = 0`; clears the whole modal state.
    #[default]
    Strict,
    /// One moment per nonzero root only.
    Paper,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Strict => "strict",
            Scheme::Paper => "paper",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSystem {
    pub n: usize,
    pub exponents: Vec<Complex64>,
    pub targets: Vec<Complex64>,
    pub horizon: f64,
    pub scheme: Scheme,
}

pub fn build_moment_system(
    roots: &CharacteristicRoots,
    phi0: f64,
    phi1: f64,
    horizon: f64,
    scheme: Scheme,
) -> MomentSystem {
    assert!(horizon > 0.0, "horizon must be positive");
    let mut exponents: Vec<Complex64> = roots.nonzero().iter().map(|l| -l).collect();
    let mut targets: Vec<Complex64> = roots.nonzero().iter().map(|l| -(phi1 + l * phi0)).collect();
    if scheme == Scheme::Strict {
        exponents.push(Complex64::new(0.0, 0.0));
        targets.push(Complex64::new(-phi1, 0.0));
    }
    MomentSystem {
        n: roots.n,
        exponents,
        targets,
        horizon,
        scheme,
    }
}

/// `∫_0^T exp((η_i + η_j) s) ds`.
pub fn gram_entry(eta_i: Complex64, eta_j: Complex64, horizon: f64) -> Complex64 {
    let s = eta_i + eta_j;
    if s.norm() < DEGENERATE_SUM {
        return Complex64::new(horizon, 0.0);
    }
    ((s * horizon).exp() - 1.0) / s
}

/// `(1 - exp(-s T)) / s`, continuous through `s = 0`.
pub(crate) fn decayed_integral(s: Complex64, horizon: f64) -> Complex64 {
    let z = s * horizon;
    if z.norm() < 1e-3 {
        // T (1 - z/2 + z²/6 - z³/24 + z⁴/120)
        let series = 1.0 - z / 2.0 * (1.0 - z / 3.0 * (1.0 - z / 4.0 * (1.0 - z / 5.0)));
        return series * horizon;
    }
    (1.0 - (-z).exp()) / s
}

/// Scaled Gram matrix `G'(T)`.
pub fn scaled_gram(exponents: &[Complex64], horizon: f64) -> DMatrix<Complex64> {
    let m = exponents.len();
    DMatrix::from_fn(m, m, |i, j| {
        let s = exponents[i] + exponents[j];
        if s.norm() < DEGENERATE_SUM {
            Complex64::new(horizon, 0.0)
        } else {
            decayed_integral(s, horizon)
        }
    })
}

/// `G'(∞)_ij = 1 / (η_i + η_j)`; `None` if some sum vanishes.
pub fn limit_gram(exponents: &[Complex64]) -> Option<DMatrix<Complex64>> {
    let m = exponents.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let s = exponents[i] + exponents[j];
            if s.norm() < DEGENERATE_SUM {
                return None;
            }
            g[(i, j)] = s.inv();
        }
    }
    Some(g)
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number, `inf` when the matrix cannot be inverted.
pub fn condition_estimate(m: &DMatrix<Complex64>) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Solved per-mode control `u(s) = Re Σ_i C'_i exp(η_i (s - T))` on `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalControl {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub scheme: Scheme,
    pub exponents: Vec<Complex64>,
    pub scaled_coeffs: Vec<Complex64>,
    /// Low-order parts: `C'_i = scaled_coeffs[i] + coeff_corrections[i]` to
    /// double-double accuracy. Only the moment check reads them.
    #[serde(default)]
    pub coeff_corrections: Vec<Complex64>,
    /// `min(Σ|C'_i|, refined sampled max)`.
    pub sup_bound: f64,
    /// `Σ|C'_i|`, a rigorous bound on `|u|` over `[0, T]`.
    pub majorant: f64,
    /// `∫_0^T u`, closed form.
    pub integral: f64,
    /// Worst moment residual, relative to `max(1, |target|)`, by quadrature.
    pub moment_residual: f64,
    /// Worst sampled `|Im u| / max(1, max|u|)`.
    pub imag_ratio: f64,
}

impl ModalControl {
    pub fn zero(n: usize, horizon: f64, scheme: Scheme, exponents: Vec<Complex64>) -> Self {
        let m = exponents.len();
        ModalControl {
            n,
            horizon,
            scheme,
            exponents,
            scaled_coeffs: vec![Complex64::new(0.0, 0.0); m],
            coeff_corrections: vec![Complex64::new(0.0, 0.0); m],
            sup_bound: 0.0,
            majorant: 0.0,
            integral: 0.0,
            moment_residual: 0.0,
            imag_ratio: 0.0,
        }
    }

    /// Complex sum without the horizon check.
    pub fn value_complex(&self, t: f64) -> Complex64 {
        self.exponents
            .iter()
            .zip(&self.scaled_coeffs)
            .map(|(eta, c)| c * (eta * (t - self.horizon)).exp())
            .sum()
    }

    /// `u(t)` for `t ∈ [0, T]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.value_complex(t).re)
    }

    /// `u(t)` on `[0, T]`, zero afterwards.
    pub fn eval_extended(&self, t: f64) -> f64 {
        if t > self.horizon {
            0.0
        } else {
            self.value_complex(t).re
        }
    }

    /// `∫_0^T u = Σ C'_i (1 - exp(-η_i T)) / η_i`.
    pub fn integral_closed_form(&self) -> f64 {
        self.exponents
            .iter()
            .zip(&self.scaled_coeffs)
            .map(|(eta, c)| c * decayed_integral(*eta, self.horizon))
            .sum::<Complex64>()
            .re
    }

    /// `∫_0^t u` for `t ∈ [0, T]` (clamped outside).
    pub fn integral_to(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        self.exponents
            .iter()
            .zip(&self.scaled_coeffs)
            .map(|(eta, c)| c * (eta * (t - self.horizon)).exp() * decayed_integral(*eta, t))
            .sum::<Complex64>()
            .re
    }

    /// `∫_0^τ u(s) exp(λ (τ - s)) ds`, τ = min(t, T), propagated by
    /// `exp(λ (t - τ))` when `t > T`.
    pub fn convolve_exp(&self, lambda: Complex64, t: f64) -> Complex64 {
        let tau = t.min(self.horizon).max(0.0);
        let tail = (lambda * (t - tau).max(0.0)).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for (eta, c) in self.exponents.iter().zip(&self.scaled_coeffs) {
            let z = eta - lambda;
            let term = if z.norm() < 1e-10 {
                // exp(-ηT) exp(λτ) (τ + zτ²/2 + z²τ³/6)
                let series = tau * (1.0 + z * tau / 2.0 * (1.0 + z * tau / 3.0));
                (lambda * tau - eta * self.horizon).exp() * series
            } else {
                ((eta * (tau - self.horizon)).exp() - (lambda * tau - eta * self.horizon).exp()) / z
            };
            acc += c * term;
        }
        acc * tail
    }

    /// Moment residuals `|∫_0^T u exp(η s) ds - target| / max(1, |target|)`
    /// for each exponent. The integral is done by adaptive quadrature in
    /// double-double: for `Re η T` near 30 the integrand is `1e13` times
    /// larger than the moment it integrates to.
    pub fn moment_residuals(&self, targets: &[Complex64]) -> Vec<f64> {
        let horizon = Dd::new(self.horizon);
        let etas: Vec<Cdd> = self.exponents.iter().map(|&e| Cdd::from(e)).collect();
        // C'_j exp(-η_j T), so that u(s) = Re Σ_j d_j exp(η_j s)
        let shifted: Vec<Cdd> = etas
            .iter()
            .zip(&self.scaled_coeffs)
            .zip(self.coeff_corrections.iter().chain(std::iter::repeat(&Complex64::new(0.0, 0.0))))
            .map(|((&eta, &hi), &lo)| (Cdd::from(hi) + Cdd::from(lo)) * (-eta.scale(horizon)).exp())
            .collect();
        let tol: Vec<f64> = targets
            .iter()
            .map(|t| 1e-3 * MOMENT_TOLERANCE * t.norm().max(1.0))
            .collect();
        let values = quad::integrate_dd(
            |s, out| {
                let powers: Vec<Cdd> = etas.iter().map(|eta| eta.scale(s).exp()).collect();
                let u = shifted
                    .iter()
                    .zip(&powers)
                    .fold(Dd::ZERO, |acc, (d, p)| acc + (*d * *p).re);
                for (o, p) in out.iter_mut().zip(&powers) {
                    *o = p.scale(u);
                }
            },
            0.0,
            self.horizon,
            &tol,
        );
        values
            .iter()
            .zip(targets)
            .map(|(&v, &target)| {
                let r = (v - Cdd::from(target)).norm() / target.norm().max(1.0);
                // saturates once exp(Re η T) leaves the f64 range
                if r.is_finite() {
                    r
                } else {
                    f64::MAX
                }
            })
            .collect()
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        if b - a < 1e-14 * b.abs().max(1.0) {
            break;
        }
    }
    f1.max(f2)
}

/// Sampled maximum of `|u|` over `[0, T]` refined by golden-section search
/// around every sampled local maximum within 1% of the largest sample.
/// Also returns the worst realness ratio seen on the samples.
fn sampled_sup(mc: &ModalControl) -> (f64, f64) {
    let h = mc.horizon / (SUP_SAMPLES - 1) as f64;
    let vals: Vec<Complex64> = (0..SUP_SAMPLES)
        .map(|i| mc.value_complex(i as f64 * h))
        .collect();
    let abs: Vec<f64> = vals.iter().map(|v| v.re.abs()).collect();
    let peak = abs.iter().copied().fold(0.0, f64::max);
    let imag = vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let imag_ratio = imag / peak.max(1.0);

    let mut best = peak;
    for i in 0..SUP_SAMPLES {
        let left = if i > 0 { abs[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < SUP_SAMPLES { abs[i + 1] } else { f64::NEG_INFINITY };
        if abs[i] >= left && abs[i] >= right && abs[i] >= 0.99 * peak && peak > 0.0 {
            let a = (i as f64 - 1.0).max(0.0) * h;
            let b = ((i + 1) as f64 * h).min(mc.horizon);
            best = best.max(golden_max(|t| mc.value_complex(t).re.abs(), a, b));
        }
    }
    (best, imag_ratio)
}

pub fn solve_modal_moments(sys: &MomentSystem) -> Result<ModalControl> {
    let m = sys.exponents.len();
    let mut mc = ModalControl::zero(sys.n, sys.horizon, sys.scheme, sys.exponents.clone());
    if sys.targets.iter().all(|t| *t == Complex64::new(0.0, 0.0)) {
        return Ok(mc);
    }

    let g = scaled_gram(&sys.exponents, sys.horizon);
    let rhs = DVector::from_fn(m, |i, _| {
        (-sys.exponents[i] * sys.horizon).exp() * sys.targets[i]
    });
    let gmax = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = g.clone().lu();
    let pivot = lu.u().diagonal().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(pivot > PIVOT_TOLERANCE * gmax) {
        return Err(Error::SingularSystem {
            mode: sys.n,
            pivot,
            condition: condition_estimate(&g),
        });
    }
    let coeffs = lu.solve(&rhs).ok_or(Error::SingularSystem {
        mode: sys.n,
        pivot,
        condition: f64::INFINITY,
    })?;

    let refined = refine(&lu, sys, coeffs);
    mc.scaled_coeffs = refined.iter().map(|c| c.to_c64()).collect();
    mc.coeff_corrections = refined
        .iter()
        .zip(&mc.scaled_coeffs)
        .map(|(c, &hi)| (*c - Cdd::from(hi)).to_c64())
        .collect();
    mc.majorant = mc.scaled_coeffs.iter().map(|c| c.norm()).sum();
    mc.integral = mc.integral_closed_form();
    let (refined, imag_ratio) = sampled_sup(&mc);
    mc.sup_bound = refined.min(mc.majorant);
    mc.imag_ratio = imag_ratio;
    mc.moment_residual = mc
        .moment_residuals(&sys.targets)
        .into_iter()
        .fold(0.0, f64::max);
    Ok(mc)
}

/// `(1 - exp(-s T)) / s` in double-double.
fn decayed_integral_dd(s: Cdd, horizon: f64) -> Cdd {
    let t = Dd::new(horizon);
    let z = s.scale(t);
    if z.norm() < 1e-3 {
        // T Σ_k (-z)^k / (k + 1)!
        let mut term = Cdd::from(t);
        let mut acc = term;
        for k in 1..12 {
            term = -(term * z);
            term = Cdd::new(term.re / (k + 1) as f64, term.im / (k + 1) as f64);
            acc = acc + term;
        }
        return acc;
    }
    (Cdd::from(Dd::ONE) - (-z).exp()) / s
}

/// Mixed-precision iterative refinement: residuals of the scaled system are
/// formed in double-double and corrected through the `f64` factorization.
fn refine(
    lu: &nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    sys: &MomentSystem,
    start: DVector<Complex64>,
) -> Vec<Cdd> {
    let m = sys.exponents.len();
    let horizon = Dd::new(sys.horizon);
    let gram: Vec<Cdd> = (0..m * m)
        .map(|k| {
            let (i, j) = (k / m, k % m);
            if (sys.exponents[i] + sys.exponents[j]).norm() < DEGENERATE_SUM {
                Cdd::from(horizon)
            } else {
                let s = Cdd::from(sys.exponents[i]) + Cdd::from(sys.exponents[j]);
                decayed_integral_dd(s, sys.horizon)
            }
        })
        .collect();
    let rhs: Vec<Cdd> = (0..m)
        .map(|i| (-Cdd::from(sys.exponents[i]).scale(horizon)).exp() * Cdd::from(sys.targets[i]))
        .collect();
    let mut x: Vec<Cdd> = start.iter().map(|&c| Cdd::from(c)).collect();
    for _ in 0..REFINEMENT_STEPS {
        let r = DVector::from_fn(m, |i, _| {
            (0..m)
                .fold(rhs[i], |acc, j| acc - gram[i * m + j] * x[j])
                .to_c64()
        });
        if r.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            break;
        }
        let Some(d) = lu.solve(&r) else { break };
        for (xi, di) in x.iter_mut().zip(d.iter()) {
            *xi = *xi + Cdd::from(*di);
        }
    }
    x
}

/// `Π_{i>j} (q_i - q_j)² / Π_{i,j} (q_i + q_j)`, the determinant of `[1/(q_i + q_j)]`.
pub fn cauchy_determinant(q: &[f64]) -> f64 {
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..q.len() {
        for j in 0..q.len() {
            den *= q[i] + q[j];
            if i > j {
                num *= (q[i] - q[j]).powi(2);
            }
        }
    }
    num / den
}

/// The same closed form over complex nodes.
pub fn cauchy_determinant_complex(x: &[Complex64]) -> Complex64 {
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = Complex64::new(1.0, 0.0);
    for i in 0..x.len() {
        for j in 0..x.len() {
            den *= x[i] + x[j];
            if i > j {
                num *= (x[i] - x[j]).powi(2);
            }
        }
    }
    num / den
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminantDiagnostics {
    pub det_scaled: Complex64,
    pub condition: f64,
    /// `det [1/(η_i + η_j)]`, absent when `η = 0` is in the system.
    pub det_limit: Option<Complex64>,
    /// Cauchy closed form for `det_limit`.
    pub det_limit_closed_form: Option<Complex64>,
    /// Cauchy determinant of the real exponents alone.
    pub cauchy_real_block: f64,
    /// `|det G'(T) - det G'(∞)| / |det G'(∞)|`.
    pub relative_gap: Option<f64>,
}

pub fn determinant_diagnostics(sys: &MomentSystem) -> DeterminantDiagnostics {
    let g = scaled_gram(&sys.exponents, sys.horizon);
    let det_scaled = g.clone().determinant();
    let condition = condition_estimate(&g);
    let det_limit = limit_gram(&sys.exponents).map(|l| l.determinant());
    let det_limit_closed_form = det_limit.map(|_| cauchy_determinant_complex(&sys.exponents));
    let real: Vec<f64> = sys
        .exponents
        .iter()
        .filter(|e| e.im == 0.0 && e.re > 0.0)
        .map(|e| e.re)
        .collect();
    DeterminantDiagnostics {
        det_scaled,
        condition,
        relative_gap: det_limit.map(|d| (det_scaled - d).norm() / d.norm()),
        det_limit,
        det_limit_closed_form,
        cauchy_real_block: cauchy_determinant(&real),
    }
}
