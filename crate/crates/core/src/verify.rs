//! End-to-end certification of a control plan against simulation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::charroots::{find_roots, CharacteristicRoots};
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::kernel::ExponentialKernel;
use crate::moments::{build_moment_system, ModalControl, Scheme, MOMENT_TOLERANCE};
use crate::simulate::{drift_samples, simulate_mode, SimOptions};
use crate::spectrum::{BasisKind, InitialData, ModeBasis};
use crate::synthesis::{synthesize, ControlPlan};

pub const TERMINAL_TOLERANCE: f64 = 1e-6;
pub const REST_TOLERANCE: f64 = 1e-5;
pub const DEFECT_TOLERANCE: f64 = 1e-6;
pub const DRIFT_TOLERANCE: f64 = 1e-9;
pub const REALNESS_TOLERANCE: f64 = 1e-12;
pub const FIELD_SLACK: f64 = 1e-9;
/// Default number of RK4 steps across `[0, T]`.
pub const DEFAULT_STEPS_PER_HORIZON: f64 = 20000.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Step size; `None` means `T / 20000`.
    pub dt: Option<f64>,
    /// Post-horizon window is `factor / μ_n`.
    pub post_horizon_factor: f64,
    /// Points per axis of the `(t, x)` grid used to sample `|u(t, x)|`.
    pub field_grid: usize,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            dt: None,
            post_horizon_factor: 5.0,
            field_grid: 256,
            exec: Execution::Parallel,
        }
    }
}

impl VerifyOptions {
    fn step(&self, horizon: f64) -> f64 {
        self.dt.unwrap_or(horizon / DEFAULT_STEPS_PER_HORIZON)
    }
}

/// `(φ1 + ∫_0^T u) / l'(0)`: the terminal displacement left by a control that
/// annihilates every nonzero-root residue but not the one at `λ = 0`.
pub fn predicted_defect(roots: &CharacteristicRoots, phi1: f64, control: &ModalControl) -> f64 {
    (phi1 + control.integral_closed_form()) / roots.lprime_zero()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub n: usize,
    pub scale: f64,
    pub terminal_theta: f64,
    pub terminal_dtheta: f64,
    /// `max_k |w_k(T)|`.
    pub terminal_memory: f64,
    /// `max |θ_n|` over `(T, T + factor/μ_n]` with the control switched off.
    pub rest_residual: f64,
    pub predicted_defect: f64,
    pub observed_defect: f64,
    pub moment_residual_max: f64,
    pub sup_u: f64,
    pub imag_ratio: f64,
    pub invariant_drift: f64,
    pub pass: bool,
}

impl ModeReport {
    fn passes(&self, scheme: Scheme) -> bool {
        let s = self.scale;
        let common = self.terminal_dtheta.abs() < TERMINAL_TOLERANCE * s
            && self.moment_residual_max < MOMENT_TOLERANCE
            && self.imag_ratio < REALNESS_TOLERANCE
            && self.invariant_drift < DRIFT_TOLERANCE * s.max(1.0);
        let specific = match scheme {
            Scheme::Strict => {
                self.terminal_theta.abs() < TERMINAL_TOLERANCE * s
                    && self.terminal_memory < TERMINAL_TOLERANCE * s
                    && self.rest_residual < REST_TOLERANCE * s
            }
            Scheme::Paper => {
                (self.observed_defect - self.predicted_defect).abs()
                    < DEFECT_TOLERANCE * self.predicted_defect.abs().max(1.0)
            }
        };
        common && specific
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Criterion {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            tolerance,
            pass: value < tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub scheme: Scheme,
    pub global_bound: f64,
    pub sampled_field_max: Option<f64>,
    pub tail_majorant: Option<f64>,
    pub modes: Vec<ModeReport>,
    pub criteria: Vec<Criterion>,
    pub all_pass: bool,
}

impl VerificationReport {
    /// Recomputes every pass flag from the stored values.
    pub fn flags_consistent(&self) -> bool {
        let modes_ok = self.modes.iter().all(|m| m.passes(self.scheme) == m.pass);
        let crit_ok = self.criteria.iter().all(|c| (c.value < c.tolerance) == c.pass);
        let all = self.modes.iter().all(|m| m.pass) && self.criteria.iter().all(|c| c.pass);
        modes_ok && crit_ok && all == self.all_pass
    }
}

fn verify_mode(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    init: &InitialData,
    control: &ModalControl,
    opts: &VerifyOptions,
) -> Result<ModeReport> {
    let n = control.n;
    let (phi0, phi1) = (init.phi0[n - 1], init.phi1[n - 1]);
    let roots = find_roots(kernel, n, basis.alpha(n))?;
    let sys = build_moment_system(&roots, phi0, phi1, control.horizon, control.scheme);
    let moment_residual_max = control
        .moment_residuals(&sys.targets)
        .into_iter()
        .fold(0.0, f64::max);

    let horizon = control.horizon;
    let decay = roots.mu.unwrap_or_else(|| roots.slowest_decay());
    let t_end = horizon + opts.post_horizon_factor / decay;
    let trace = simulate_mode(
        kernel,
        n,
        basis.alpha(n),
        phi0,
        phi1,
        control,
        t_end,
        SimOptions::new(opts.step(horizon)),
    )?;
    let at_t = trace
        .state_at(horizon)
        .expect("simulation records the switch-off time");
    let rest_residual = trace
        .times
        .iter()
        .zip(&trace.states)
        .filter(|(t, _)| **t > horizon)
        .map(|(_, s)| s.theta.abs())
        .fold(0.0, f64::max);
    let invariant_drift = drift_samples(&trace, kernel, control)
        .into_iter()
        .fold(0.0, f64::max);

    let mut report = ModeReport {
        n,
        scale: init.scale(n),
        terminal_theta: at_t.theta,
        terminal_dtheta: at_t.dtheta,
        terminal_memory: at_t.w.iter().map(|w| w.abs()).fold(0.0, f64::max),
        rest_residual,
        predicted_defect: predicted_defect(&roots, phi1, control),
        observed_defect: at_t.theta,
        moment_residual_max,
        sup_u: control.sup_bound,
        imag_ratio: control.imag_ratio,
        invariant_drift,
        pass: false,
    };
    report.pass = report.passes(control.scheme);
    Ok(report)
}

/// Largest `|u(t, x)|` over a uniform `grid × grid` lattice of `[0, T] × [0, π]`.
pub fn sampled_field_max(plan: &ControlPlan, basis: &ModeBasis, grid: usize, exec: Execution) -> Result<f64> {
    let grid = grid.max(2);
    let rows: Vec<usize> = (0..grid).collect();
    let maxima = exec::try_map(exec, &rows, |&i| -> Result<f64> {
        let t = plan.horizon * i as f64 / (grid - 1) as f64;
        let u: Vec<f64> = plan.modal.iter().map(|m| m.eval(t)).collect::<Result<_>>()?;
        let mut best: f64 = 0.0;
        for j in 0..grid {
            let x = PI * j as f64 / (grid - 1) as f64;
            let mut v = 0.0;
            for (m, un) in plan.modal.iter().zip(&u) {
                v += un * basis.eigenfunction(m.n, x)?;
            }
            best = best.max(v.abs());
        }
        Ok(best)
    })?;
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

/// Simulates every mode of `plan` and certifies the terminal state.
pub fn verify_plan(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    init: &InitialData,
    plan: &ControlPlan,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    plan.check_fingerprints(kernel, basis)?;
    let modes = exec::try_map(opts.exec, &plan.modal, |mc| {
        verify_mode(kernel, basis, init, mc, opts)
    })?;

    let mut criteria = Vec::new();
    let recomputed = plan.recomputed_bound(basis);
    criteria.push(Criterion::below(
        "global_bound_recomputation",
        (recomputed - plan.global_bound).abs(),
        1e-12 * plan.global_bound.max(1e-300),
    ));
    let sampled = if basis.kind() == BasisKind::Interval {
        let max = sampled_field_max(plan, basis, opts.field_grid, opts.exec)?;
        criteria.push(Criterion::below(
            "field_bound_excess",
            max - plan.global_bound,
            FIELD_SLACK,
        ));
        Some(max)
    } else {
        None
    };
    let all_pass = modes.iter().all(|m| m.pass) && criteria.iter().all(|c| c.pass);
    Ok(VerificationReport {
        horizon: plan.horizon,
        scheme: plan.scheme,
        global_bound: plan.global_bound,
        sampled_field_max: sampled,
        tail_majorant: plan.tail_majorant,
        modes,
        criteria,
        all_pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub global_bound: f64,
    /// `max_n max(|θ_n(T)|, |θ_n'(T)|) / scale_n` from simulation.
    pub max_terminal_residual: f64,
}

/// Synthesizes and simulates to `T` for each horizon in turn.
pub fn sweep(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    init: &InitialData,
    horizons: &[f64],
    scheme: Scheme,
    opts: &VerifyOptions,
) -> Result<Vec<SweepRow>> {
    horizons
        .iter()
        .map(|&horizon| {
            let plan = synthesize(kernel, basis, init, horizon, scheme, opts.exec)?;
            let residuals = exec::try_map(opts.exec, &plan.modal, |mc| -> Result<f64> {
                let n = mc.n;
                let trace = simulate_mode(
                    kernel,
                    n,
                    basis.alpha(n),
                    init.phi0[n - 1],
                    init.phi1[n - 1],
                    mc,
                    horizon,
                    SimOptions::new(opts.step(horizon)).with_stride(usize::MAX),
                )?;
                let end = trace.last();
                Ok(end.theta.abs().max(end.dtheta.abs()) / init.scale(n))
            })?;
            Ok(SweepRow {
                horizon,
                global_bound: plan.global_bound,
                max_terminal_residual: residuals.into_iter().fold(0.0, f64::max),
            })
        })
        .collect()
}
