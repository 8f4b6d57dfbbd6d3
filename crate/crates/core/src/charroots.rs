//! Zeros of the modal characteristic function `l(λ) = λ² + α² λ K̂(λ)`.
//!
//! Clearing the kernel poles gives `l(λ) Π(λ + γ_k) = λ p(λ)` with `p` a
//! real monic polynomial of degree `N + 1`. `p` changes sign across every
//! gap `(-γ_{k+1}, -γ_k)`, which pins down `N - 1` real roots by bisection;
//! deflating them leaves a quadratic holding the oscillatory pair.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kernel::ExponentialKernel;
use crate::poly::{bisect, Poly};
use crate::spectrum::ModeBasis;

/// Relative separation below which two roots count as coincident.
pub const ROOT_SEPARATION: f64 = 1e-8;

/// Full root set of one mode's characteristic function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacteristicRoots {
    pub n: usize,
    pub alpha: f64,
    /// `[0, λ⁺, λ⁻, -q_1, …, -q_{N-1}]` for generic modes. When the
    /// quadratic factor has real roots, they take the places of `λ±`.
    pub roots: Vec<Complex64>,
    /// `l'(λ)` at each entry of `roots`.
    pub lprime: Vec<Complex64>,
    /// `-Re λ⁺`, generic modes only.
    pub mu: Option<f64>,
    /// `Im λ⁺`, generic modes only.
    pub nu: Option<f64>,
    /// The bracketed real roots as positive numbers, ascending.
    pub q: Vec<f64>,
    pub is_generic: bool,
}

impl CharacteristicRoots {
    /// Nonzero roots, i.e. everything but the leading zero root.
    pub fn nonzero(&self) -> &[Complex64] {
        &self.roots[1..]
    }

    pub fn nonzero_lprime(&self) -> &[Complex64] {
        &self.lprime[1..]
    }

    /// `l'(0) = α² K̂(0)`.
    pub fn lprime_zero(&self) -> f64 {
        self.lprime[0].re
    }

    /// Slowest decay rate among nonzero roots, `min(-Re λ)`.
    pub fn slowest_decay(&self) -> f64 {
        self.nonzero()
            .iter()
            .map(|r| -r.re)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `p(λ) = λ Π(λ + γ_k) + α² Σ_k (c_k/γ_k) Π_{j≠k}(λ + γ_j)`.
pub fn characteristic_polynomial(kernel: &ExponentialKernel, alpha: f64) -> Poly {
    let mut p = Poly::new(vec![0.0, 1.0]);
    for &g in kernel.gamma() {
        p.mul_linear(g);
    }
    p.add_scaled(&kernel.khat_numerator(), alpha * alpha);
    p
}

/// `l(λ) = λ² + α² λ K̂(λ)`.
pub fn characteristic_value(
    kernel: &ExponentialKernel,
    alpha: f64,
    lambda: Complex64,
) -> Result<Complex64> {
    Ok(lambda * lambda + alpha * alpha * lambda * kernel.khat(lambda)?)
}

/// `l'(λ) = 2λ + α² (K̂(λ) + λ K̂'(λ))`.
pub fn lprime(kernel: &ExponentialKernel, alpha: f64, lambda: Complex64) -> Result<Complex64> {
    Ok(2.0 * lambda
        + alpha * alpha * (kernel.khat(lambda)? + lambda * kernel.khat_derivative(lambda)?))
}

fn newton_polish(kernel: &ExponentialKernel, alpha: f64, start: Complex64) -> Complex64 {
    let residual = |z: Complex64| {
        characteristic_value(kernel, alpha, z)
            .map(|v| v.norm())
            .unwrap_or(f64::INFINITY)
    };
    let mut z = start;
    let mut best = residual(z);
    for _ in 0..8 {
        let (Ok(l), Ok(dl)) = (
            characteristic_value(kernel, alpha, z),
            lprime(kernel, alpha, z),
        ) else {
            break;
        };
        if dl.norm() == 0.0 {
            break;
        }
        let mut next = z - l / dl;
        if start.im == 0.0 {
            next.im = 0.0;
        }
        let r = residual(next);
        if !(r < best) {
            break;
        }
        let step = (next - z).norm();
        z = next;
        best = r;
        if step <= 1e-16 * z.norm() {
            break;
        }
    }
    z
}

/// All `N + 2` roots of the mode with index `n` and eigenvalue root `alpha`.
pub fn find_roots(kernel: &ExponentialKernel, n: usize, alpha: f64) -> Result<CharacteristicRoots> {
    let p = characteristic_polynomial(kernel, alpha);

    let mut bracketed = Vec::with_capacity(kernel.len().saturating_sub(1));
    for w in kernel.gamma().windows(2) {
        bracketed.push(bisect(|x| p.eval(x), -w[1], -w[0], 200)?);
    }

    let mut rest = p.clone();
    for &r in &bracketed {
        rest = rest.deflate(r);
    }
    debug_assert_eq!(rest.degree(), 2);
    let (c0, b) = (rest.coeffs[0] / rest.coeffs[2], rest.coeffs[1] / rest.coeffs[2]);
    let disc = b * b - 4.0 * c0;

    let mut roots = vec![Complex64::new(0.0, 0.0)];
    let is_generic = disc < 0.0;
    if is_generic {
        let upper = newton_polish(
            kernel,
            alpha,
            Complex64::new(-0.5 * b, 0.5 * (-disc).sqrt()),
        );
        roots.push(upper);
        roots.push(upper.conj());
    } else {
        // stable real pair: larger-magnitude root first, the other via Vieta
        let big = -0.5 * (b + b.signum() * disc.sqrt());
        let small = if big != 0.0 { c0 / big } else { 0.0 };
        let mut pair = [small, big];
        pair.sort_by(|a, b| b.total_cmp(a));
        for r in pair {
            roots.push(newton_polish(kernel, alpha, Complex64::new(r, 0.0)));
        }
    }

    let mut q: Vec<f64> = bracketed
        .iter()
        .map(|&r| -newton_polish(kernel, alpha, Complex64::new(r, 0.0)).re)
        .collect();
    q.sort_by(f64::total_cmp);
    roots.extend(q.iter().map(|&qk| Complex64::new(-qk, 0.0)));

    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let mut separation = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            separation = separation.min((roots[i] - roots[j]).norm());
        }
    }
    if separation <= ROOT_SEPARATION * scale {
        return Err(Error::DegenerateRoots { mode: n, separation });
    }

    let mut lp = Vec::with_capacity(roots.len());
    lp.push(Complex64::new(alpha * alpha * kernel.khat0(), 0.0));
    for &r in &roots[1..] {
        lp.push(lprime(kernel, alpha, r)?);
    }

    let (mu, nu) = if is_generic {
        (Some(-roots[1].re), Some(roots[1].im))
    } else {
        (None, None)
    };

    Ok(CharacteristicRoots {
        n,
        alpha,
        roots,
        lprime: lp,
        mu,
        nu,
        q,
        is_generic,
    })
}

/// Roots for every mode of `basis`, ordered by mode index.
pub fn find_all_roots(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    exec: Execution,
) -> Result<Vec<CharacteristicRoots>> {
    let modes: Vec<usize> = (1..=basis.len()).collect();
    exec::try_map(exec, &modes, |&n| find_roots(kernel, n, basis.alpha(n)))
}

/// Sums of reciprocal derivatives over the root set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidueSums {
    /// Over the nonzero roots only.
    pub paper_sum: Complex64,
    /// Over all roots including `λ = 0`; vanishes identically.
    pub corrected_sum: Complex64,
    /// `max |1/l'|` over all roots, the natural scale of both sums.
    pub scale: f64,
}

pub fn residue_identity(roots: &CharacteristicRoots) -> ResidueSums {
    let paper_sum: Complex64 = roots.nonzero_lprime().iter().map(|d| d.inv()).sum();
    let corrected_sum = paper_sum + 1.0 / roots.lprime_zero();
    let scale = roots
        .lprime
        .iter()
        .map(|d| d.inv().norm())
        .fold(0.0, f64::max);
    ResidueSums {
        paper_sum,
        corrected_sum,
        scale,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub alpha: f64,
    pub mu: Option<f64>,
    /// `ν_n / α_n`.
    pub speed: Option<f64>,
    pub q: Vec<f64>,
    /// `α_n² |μ_n - μ_ref|`.
    pub scaled_mu_deviation: Option<f64>,
    /// `α_n² |q_{k,n} - q_ref,k|`.
    pub scaled_q_deviation: Vec<f64>,
}

/// Per-mode root data next to the large-`α` limits
/// `μ_ref = -K'(0) / (2 K(0))`, `speed_ref = sqrt(K(0))` and the zeros of `K̂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub mu_ref: f64,
    pub speed_ref: f64,
    pub q_ref: Vec<f64>,
    pub rows: Vec<AsymptoticRow>,
}

pub fn root_asymptotics(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    exec: Execution,
) -> Result<AsymptoticsReport> {
    let mu_ref = -kernel.dk0() / (2.0 * kernel.k0());
    let speed_ref = kernel.k0().sqrt();
    let q_ref = kernel.khat_zeros()?;
    let all = find_all_roots(kernel, basis, exec)?;
    let rows = all
        .into_iter()
        .map(|r| {
            let a2 = r.alpha * r.alpha;
            AsymptoticRow {
                n: r.n,
                alpha: r.alpha,
                mu: r.mu,
                speed: r.nu.map(|nu| nu / r.alpha),
                scaled_mu_deviation: r.mu.map(|mu| a2 * (mu - mu_ref).abs()),
                scaled_q_deviation: r
                    .q
                    .iter()
                    .zip(&q_ref)
                    .map(|(q, qr)| a2 * (q - qr).abs())
                    .collect(),
                q: r.q,
            }
        })
        .collect();
    Ok(AsymptoticsReport {
        mu_ref,
        speed_ref,
        q_ref,
        rows,
    })
}
