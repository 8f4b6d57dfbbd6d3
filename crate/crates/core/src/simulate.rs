//! Time-domain ground truth for single modes.
//!
//! For an exponential kernel the memory integral is carried exactly by
//! auxiliary states `w_k(t) = ∫_0^t exp(-γ_k (t - s)) θ(s) ds`, giving the
//! linear system
//!
//! ```text
//! θ'' = -α² K(0) θ + α² Σ_k c_k w_k + u(t)
//! w_k' = θ - γ_k w_k
//! ```
//!
//! integrated with classical fixed-step RK4. The residue series in this
//! module invert `l(λ) θ̂ = λ φ0 + φ1 + û` over all `N + 2` roots of `l`,
//! including `λ = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::charroots::CharacteristicRoots;
use crate::error::{Error, Result};
use crate::kernel::ExponentialKernel;
use crate::moments::ModalControl;

/// Modal forcing `u_n(t)`.
pub trait Forcing: Sync {
    fn value(&self, t: f64) -> f64;
    /// `∫_0^t u`.
    fn integral(&self, t: f64) -> f64;
    /// Time after which the forcing vanishes, if any. Integration steps are
    /// aligned to it.
    fn switch_off(&self) -> Option<f64> {
        None
    }
}

/// `u ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unforced;

impl Forcing for Unforced {
    fn value(&self, _t: f64) -> f64 {
        0.0
    }
    fn integral(&self, _t: f64) -> f64 {
        0.0
    }
}

impl Forcing for ModalControl {
    fn value(&self, t: f64) -> f64 {
        self.eval_extended(t)
    }
    fn integral(&self, t: f64) -> f64 {
        self.integral_to(t)
    }
    fn switch_off(&self) -> Option<f64> {
        Some(self.horizon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModalState {
    pub theta: f64,
    pub dtheta: f64,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub n: usize,
    pub alpha: f64,
    pub phi1: f64,
    pub times: Vec<f64>,
    pub states: Vec<ModalState>,
    pub controls: Vec<f64>,
}

impl SimulationTrace {
    pub fn last(&self) -> &ModalState {
        self.states.last().expect("trace is never empty")
    }

    /// State recorded at exactly time `t`, if any.
    pub fn state_at(&self, t: f64) -> Option<&ModalState> {
        self.times.iter().position(|&s| s == t).map(|i| &self.states[i])
    }

    /// `θ' + α² Σ_k (c_k/γ_k) w_k` at each sample.
    pub fn invariant(&self, kernel: &ExponentialKernel) -> Vec<f64> {
        let a2 = self.alpha * self.alpha;
        self.states
            .iter()
            .map(|s| {
                s.dtheta
                    + a2 * kernel
                        .c()
                        .iter()
                        .zip(kernel.gamma())
                        .zip(&s.w)
                        .map(|((c, g), w)| c / g * w)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Integration and recording options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    /// Record every `stride`-th step (segment end points are always kept).
    pub stride: usize,
}

impl SimOptions {
    pub fn new(dt: f64) -> Self {
        SimOptions { dt, stride: 1 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

struct ModalOde<'a, F: Forcing + ?Sized> {
    alpha2: f64,
    k0: f64,
    c: &'a [f64],
    gamma: &'a [f64],
    forcing: &'a F,
    /// Cleared on segments after the forcing switched off, so the steps
    /// starting at the switch-off time see the right limit `u = 0`.
    forced: bool,
}

impl<F: Forcing + ?Sized> ModalOde<'_, F> {
    /// state layout: [θ, θ', w_1, …, w_N]
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let theta = y[0];
        let memory: f64 = self.c.iter().zip(&y[2..]).map(|(c, w)| c * w).sum();
        dy[0] = y[1];
        dy[1] = -self.alpha2 * self.k0 * theta + self.alpha2 * memory + if self.forced { self.forcing.value(t) } else { 0.0 };
        for (k, g) in self.gamma.iter().enumerate() {
            dy[2 + k] = theta - g * y[2 + k];
        }
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step<F: Forcing + ?Sized>(&mut self, ode: &ModalOde<'_, F>, t: f64, h: f64, y: &mut [f64]) {
        let half = 0.5 * h;
        ode.rhs(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        ode.rhs(t + half, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        ode.rhs(t + half, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        ode.rhs(t + h, &self.tmp, &mut self.k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates one mode from `(φ0, φ1, w = 0)` over `[0, t_end]`.
///
/// The step is the largest `h <= dt` that divides each segment evenly, the
/// segments being `[0, T]` and `[T, t_end]` when the forcing switches off at
/// `T < t_end`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_mode<F: Forcing + ?Sized>(
    kernel: &ExponentialKernel,
    n: usize,
    alpha: f64,
    phi0: f64,
    phi1: f64,
    forcing: &F,
    t_end: f64,
    opts: SimOptions,
) -> Result<SimulationTrace> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::StepSizeInvalid(format!("dt = {}", opts.dt)));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::StepSizeInvalid(format!("t_end = {t_end}")));
    }
    let mut ode = ModalOde {
        alpha2: alpha * alpha,
        k0: kernel.k0(),
        c: kernel.c(),
        gamma: kernel.gamma(),
        forcing,
        forced: true,
    };
    let dim = kernel.len() + 2;
    let mut y = vec![0.0; dim];
    y[0] = phi0;
    y[1] = phi1;

    let mut breaks = vec![0.0];
    if let Some(off) = forcing.switch_off() {
        if off > 0.0 && off < t_end {
            breaks.push(off);
        }
    }
    breaks.push(t_end);

    let capacity = (t_end / opts.dt / opts.stride as f64) as usize + breaks.len() + 1;
    let mut trace = SimulationTrace {
        n,
        alpha,
        phi1,
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        controls: Vec::with_capacity(capacity),
    };
    let record = |trace: &mut SimulationTrace, t: f64, y: &[f64]| {
        trace.times.push(t);
        trace.states.push(ModalState {
            theta: y[0],
            dtheta: y[1],
            w: y[2..].to_vec(),
        });
        trace.controls.push(forcing.value(t));
    };
    record(&mut trace, 0.0, &y);

    let mut rk = Rk4::new(dim);
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        ode.forced = forcing.switch_off().is_none_or(|off| a < off);
        let steps = ((b - a) / opts.dt - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        for i in 0..steps {
            let t = a + i as f64 * h;
            rk.step(&ode, t, h, &mut y);
            if i + 1 == steps {
                record(&mut trace, b, &y);
            } else if (i + 1) % opts.stride == 0 {
                record(&mut trace, a + (i + 1) as f64 * h, &y);
            }
        }
    }
    Ok(trace)
}

/// Largest deviation of `θ' + α² Σ (c_k/γ_k) w_k - φ1 - ∫_0^t u` over the
/// trace. The combination is conserved exactly by the modal dynamics.
pub fn invariant_drift<F: Forcing + ?Sized>(
    trace: &SimulationTrace,
    kernel: &ExponentialKernel,
    alpha: f64,
    forcing: &F,
) -> Result<f64> {
    if trace.alpha != alpha {
        return Err(Error::ParameterMismatch(format!(
            "trace alpha {} differs from {alpha}",
            trace.alpha
        )));
    }
    if trace.states.iter().any(|s| s.w.len() != kernel.len()) {
        return Err(Error::ParameterMismatch(format!(
            "trace carries a different number of memory states than the {}-term kernel",
            kernel.len()
        )));
    }
    Ok(drift_samples(trace, kernel, forcing)
        .into_iter()
        .fold(0.0, f64::max))
}

pub fn drift_samples<F: Forcing + ?Sized>(
    trace: &SimulationTrace,
    kernel: &ExponentialKernel,
    forcing: &F,
) -> Vec<f64> {
    trace
        .invariant(kernel)
        .into_iter()
        .zip(&trace.times)
        .map(|(inv, &t)| (inv - trace.phi1 - forcing.integral(t)).abs())
        .collect()
}

/// `θ(t) = Re Σ_λ (λ φ0 + φ1) exp(λ t) / l'(λ)` over all roots.
pub fn free_response_series(roots: &CharacteristicRoots, phi0: f64, phi1: f64, t: f64) -> f64 {
    roots
        .roots
        .iter()
        .zip(&roots.lprime)
        .map(|(&l, &d)| (l * phi0 + phi1) * (l * t).exp() / d)
        .sum::<Complex64>()
        .re
}

/// Time derivative of [`free_response_series`].
pub fn free_response_derivative(roots: &CharacteristicRoots, phi0: f64, phi1: f64, t: f64) -> f64 {
    roots
        .roots
        .iter()
        .zip(&roots.lprime)
        .map(|(&l, &d)| l * (l * phi0 + phi1) * (l * t).exp() / d)
        .sum::<Complex64>()
        .re
}

/// `θ(t) = Re Σ_λ ∫_0^t u(s) exp(λ (t - s)) ds / l'(λ)` for zero initial data.
pub fn forced_response_series(roots: &CharacteristicRoots, control: &ModalControl, t: f64) -> f64 {
    roots
        .roots
        .iter()
        .zip(&roots.lprime)
        .map(|(&l, &d)| control.convolve_exp(l, t) / d)
        .sum::<Complex64>()
        .re
}

/// Time derivative of [`forced_response_series`]; the `u(t)` term drops out
/// because `Σ 1/l'(λ) = 0` over all roots.
pub fn forced_response_derivative(
    roots: &CharacteristicRoots,
    control: &ModalControl,
    t: f64,
) -> f64 {
    roots
        .roots
        .iter()
        .zip(&roots.lprime)
        .map(|(&l, &d)| l * control.convolve_exp(l, t) / d)
        .sum::<Complex64>()
        .re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charroots::find_roots;
    use crate::moments::{build_moment_system, solve_modal_moments, Scheme};

    fn k1() -> ExponentialKernel {
        ExponentialKernel::new(vec![1.0], vec![1.0]).unwrap()
    }
    fn k3() -> ExponentialKernel {
        ExponentialKernel::new(vec![0.5, 1.0, 2.0], vec![1.0, 2.0, 5.0]).unwrap()
    }

    #[test]
    fn free_single_term_limits() {
        let opts = SimOptions::new(1e-3).with_stride(1000);
        let tr = simulate_mode(&k1(), 1, 1.0, 0.0, 1.0, &Unforced, 40.0, opts).unwrap();
        assert!((tr.last().theta - 1.0).abs() < 1e-5);
        let tr = simulate_mode(&k1(), 1, 1.0, 1.0, 0.0, &Unforced, 40.0, opts).unwrap();
        assert!(tr.last().theta.abs() < 1e-5);
        assert!(invariant_drift(&tr, &k1(), 1.0, &Unforced).unwrap() < 1e-9);
        let tr = simulate_mode(&k1(), 1, 1.0, 0.0, 0.0, &Unforced, 40.0, opts).unwrap();
        assert!(tr.states.iter().all(|s| s.theta == 0.0 && s.dtheta == 0.0 && s.w == vec![0.0]));
        assert_eq!(invariant_drift(&tr, &k1(), 1.0, &Unforced).unwrap(), 0.0);
        assert_eq!(*tr.times.last().unwrap(), 40.0);
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            simulate_mode(&k1(), 1, 1.0, 0.0, 1.0, &Unforced, 1.0, SimOptions::new(0.0)),
            Err(Error::StepSizeInvalid(_))
        ));
        let tr = simulate_mode(&k1(), 1, 1.0, 0.0, 1.0, &Unforced, 1.0, SimOptions::new(0.1)).unwrap();
        assert!(matches!(
            invariant_drift(&tr, &k1(), 2.0, &Unforced),
            Err(Error::ParameterMismatch(_))
        ));
        assert!(invariant_drift(&tr, &k3(), 1.0, &Unforced).is_err());
    }

    #[test]
    fn series_initial_values() {
        for k in [k1(), k3()] {
            let r = find_roots(&k, 3, 3.0).unwrap();
            assert!((free_response_series(&r, 0.7, -0.2, 0.0) - 0.7).abs() < 1e-10);
            assert!((free_response_derivative(&r, 0.7, -0.2, 0.0) + 0.2).abs() < 1e-10);
        }
        let r = find_roots(&k1(), 1, 1.0).unwrap();
        assert!((free_response_series(&r, 0.0, 1.0, 60.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let k = k3();
        let r = find_roots(&k, 5, 5.0).unwrap();
        let exact = free_response_series(&r, 1.0, 0.5, 2.0);
        let err = |dt: f64| {
            let tr = simulate_mode(&k, 5, 5.0, 1.0, 0.5, &Unforced, 2.0, SimOptions::new(dt).with_stride(1 << 20)).unwrap();
            (tr.last().theta - exact).abs()
        };
        let ratio = err(0.01) / err(0.005);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn forced_series_matches_simulation() {
        let k = k3();
        let r = find_roots(&k, 2, 2.0).unwrap();
        let mc = solve_modal_moments(&build_moment_system(&r, 1.0, 0.5, 4.0, Scheme::Strict)).unwrap();
        assert_eq!(forced_response_series(&r, &mc, 0.0), 0.0);
        let tr = simulate_mode(&k, 2, 2.0, 0.0, 0.0, &mc, 6.0, SimOptions::new(1e-3)).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states).step_by(250) {
            let v = forced_response_series(&r, &mc, *t);
            assert!((v - s.theta).abs() < 1e-8, "t={t} {v} {}", s.theta);
            let dv = forced_response_derivative(&r, &mc, *t);
            assert!((dv - s.dtheta).abs() < 1e-8);
        }
        assert!(invariant_drift(&tr, &k, 2.0, &mc).unwrap() < 1e-9);
        // the strict control cancels the free response at T
        let total = forced_response_series(&r, &mc, 4.0) + free_response_series(&r, 1.0, 0.5, 4.0);
        assert!(total.abs() < 1e-8);
        assert!(tr.state_at(4.0).is_some());
    }
}
