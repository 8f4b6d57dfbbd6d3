//! Assembly of the distributed control from per-mode solutions, its
//! pointwise bound, and the horizon search for a prescribed bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charroots::find_roots;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kernel::ExponentialKernel;
use crate::moments::{build_moment_system, solve_modal_moments, ModalControl, Scheme};
use crate::spectrum::{InitialData, ModeBasis};

/// Relative width at which the horizon bisection stops.
pub const SEARCH_TOLERANCE: f64 = 1e-2;
/// Largest horizon the doubling search will try.
pub const MAX_HORIZON: f64 = (1u64 << 20) as f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub scheme: Scheme,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub modal: Vec<ModalControl>,
    /// `Σ_n sup_bound_n psi_sup_n`.
    pub global_bound: f64,
    /// `Σ_n majorant_n psi_sup_n`, the fully rigorous variant.
    pub majorant_bound: f64,
    /// Closed-form majorant of `Σ_{n > n_max} α_n^(-2β)` when known.
    pub tail_majorant: Option<f64>,
    pub kernel_fingerprint: String,
    pub basis_fingerprint: String,
}

fn fingerprint<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("plain data serializes");
    let digest = Sha256::digest(&bytes);
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn kernel_fingerprint(kernel: &ExponentialKernel) -> String {
    fingerprint(kernel)
}

pub fn basis_fingerprint(basis: &ModeBasis) -> String {
    fingerprint(&(basis.alphas(), basis.psi_sup(), basis.dimension(), basis.kind()))
}

impl ControlPlan {
    /// `Σ_n sup_bound_n psi_sup_n` recomputed from the modal records.
    pub fn recomputed_bound(&self, basis: &ModeBasis) -> f64 {
        self.modal
            .iter()
            .zip(basis.psi_sup())
            .map(|(m, s)| m.sup_bound * s)
            .sum()
    }

    pub fn check_fingerprints(&self, kernel: &ExponentialKernel, basis: &ModeBasis) -> Result<()> {
        if self.kernel_fingerprint != kernel_fingerprint(kernel) {
            return Err(Error::ParameterMismatch(
                "plan was synthesized for a different kernel".into(),
            ));
        }
        if self.basis_fingerprint != basis_fingerprint(basis) {
            return Err(Error::ParameterMismatch(
                "plan was synthesized for a different spectrum".into(),
            ));
        }
        if self.modal.len() != basis.len()
            || self.modal.iter().enumerate().any(|(i, m)| m.n != i + 1)
        {
            return Err(Error::ParameterMismatch(
                "plan does not cover the modes contiguously".into(),
            ));
        }
        Ok(())
    }

    /// `u(t, x) = Σ_n u_n(t) psi_n(x)` on the interval.
    pub fn eval_field(&self, basis: &ModeBasis, t: f64, x: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&x) {
            return Err(Error::OutOfDomain { x });
        }
        let mut acc = 0.0;
        for m in &self.modal {
            acc += m.eval(t)? * basis.eigenfunction(m.n, x)?;
        }
        Ok(acc)
    }
}

/// Free function form of [`ControlPlan::eval_field`].
pub fn eval_control_field(plan: &ControlPlan, basis: &ModeBasis, t: f64, x: f64) -> Result<f64> {
    plan.eval_field(basis, t, x)
}

/// Solves every mode's moment problem on `[0, horizon]`.
pub fn synthesize(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    init: &InitialData,
    horizon: f64,
    scheme: Scheme,
    exec: Execution,
) -> Result<ControlPlan> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::config("horizon", "must be positive and finite"));
    }
    if init.len() != basis.len() {
        return Err(Error::ParameterMismatch(format!(
            "{} initial coefficients for {} modes",
            init.len(),
            basis.len()
        )));
    }
    let modes: Vec<usize> = (1..=basis.len()).collect();
    let modal = exec::try_map(exec, &modes, |&n| {
        let roots = find_roots(kernel, n, basis.alpha(n))?;
        let sys = build_moment_system(&roots, init.phi0[n - 1], init.phi1[n - 1], horizon, scheme);
        solve_modal_moments(&sys)
    })?;
    let weighted = |f: fn(&ModalControl) -> f64| -> f64 {
        modal.iter().zip(basis.psi_sup()).map(|(m, s)| f(m) * s).sum()
    };
    let global_bound = weighted(|m| m.sup_bound);
    let majorant_bound = weighted(|m| m.majorant);
    Ok(ControlPlan {
        scheme,
        horizon,
        global_bound,
        majorant_bound,
        tail_majorant: None,
        kernel_fingerprint: kernel_fingerprint(kernel),
        basis_fingerprint: basis_fingerprint(basis),
        modal,
    })
}

#[derive(Clone, Debug)]
pub struct BoundSearch {
    pub horizon: f64,
    pub plan: ControlPlan,
    /// Every probe as `(T, global_bound)`; singular probes record `inf`.
    pub transcript: Vec<(f64, f64)>,
}

/// Smallest horizon (to [`SEARCH_TOLERANCE`]) whose plan satisfies
/// `global_bound <= bound`: doubling from `T = 1`, then bisection.
pub fn find_time_for_bound(
    kernel: &ExponentialKernel,
    basis: &ModeBasis,
    init: &InitialData,
    bound: f64,
    scheme: Scheme,
    exec: Execution,
) -> Result<BoundSearch> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::config("bound", "must be positive and finite"));
    }
    let mut transcript = Vec::new();
    let probe = |t: f64, transcript: &mut Vec<(f64, f64)>| -> Result<Option<ControlPlan>> {
        match synthesize(kernel, basis, init, t, scheme, exec) {
            Ok(plan) => {
                transcript.push((t, plan.global_bound));
                Ok((plan.global_bound <= bound).then_some(plan))
            }
            Err(Error::SingularSystem { .. }) => {
                transcript.push((t, f64::INFINITY));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    let mut hi = 1.0;
    let mut accepted = loop {
        if let Some(plan) = probe(hi, &mut transcript)? {
            break plan;
        }
        hi *= 2.0;
        if hi > MAX_HORIZON {
            let &(last_t, last_bound) = transcript.last().expect("at least one probe");
            return Err(Error::HorizonOverflow {
                bound,
                last_t,
                last_bound,
                transcript,
            });
        }
    };
    if hi > 1.0 {
        let mut lo = hi / 2.0;
        while (hi - lo) / hi > SEARCH_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            match probe(mid, &mut transcript)? {
                Some(plan) => {
                    hi = mid;
                    accepted = plan;
                }
                None => lo = mid,
            }
        }
    }
    Ok(BoundSearch {
        horizon: hi,
        plan: accepted,
        transcript,
    })
}

/// Least-squares fit `ln(bound) ≈ intercept + slope T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl DecayFit {
    /// `c_1` in `bound ≈ c_2 exp(-c_1 T)`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }

    /// `c_2` in `bound ≈ c_2 exp(-c_1 T)`.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Fits finite, positive `(T, bound)` pairs; `None` with fewer than two.
pub fn fit_exponential_decay(points: &[(f64, f64)]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, b)| b.is_finite() && *b > 0.0)
        .map(|&(t, b)| (t, b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(DecayFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::generate_initial_data;

    fn k1() -> ExponentialKernel {
        ExponentialKernel::new(vec![1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn zero_data_zero_plan() {
        let b = ModeBasis::interval(6).unwrap();
        let plan = synthesize(&k1(), &b, &InitialData::zeros(&b), 5.0, Scheme::Strict, Execution::Parallel).unwrap();
        assert_eq!(plan.global_bound, 0.0);
        assert_eq!(plan.eval_field(&b, 2.0, 1.0).unwrap(), 0.0);
        let s = find_time_for_bound(&k1(), &b, &InitialData::zeros(&b), 0.1, Scheme::Strict, Execution::Parallel).unwrap();
        assert_eq!(s.horizon, 1.0);
        assert_eq!(s.transcript.len(), 1);
    }

    #[test]
    fn field_evaluation() {
        let b = ModeBasis::interval(1).unwrap();
        let init = InitialData::new(&b, vec![1.0], vec![0.0]).unwrap();
        let plan = synthesize(&k1(), &b, &init, 6.0, Scheme::Strict, Execution::Sequential).unwrap();
        assert!((plan.recomputed_bound(&b) - plan.global_bound).abs() == 0.0);
        let u = plan.modal[0].eval(2.5).unwrap();
        let f = plan.eval_field(&b, 2.5, PI / 2.0).unwrap();
        assert!((f - u * 0.7978845608028654).abs() < 1e-15);
        assert!(plan.eval_field(&b, 2.5, 0.0).unwrap().abs() < 1e-300);
        assert!(plan.eval_field(&b, 2.5, PI).unwrap().abs() < 1e-15 * u.abs().max(1.0));
        assert!(matches!(plan.eval_field(&b, 2.5, 4.0), Err(Error::OutOfDomain { .. })));
        assert!(plan.eval_field(&b, 6.5, 1.0).is_err());
        let user = ModeBasis::user_supplied(vec![1.0], vec![0.8], 1).unwrap();
        assert!(matches!(plan.eval_field(&user, 1.0, 1.0), Err(Error::UnsupportedBasis)));
    }

    #[test]
    fn bound_search_brackets() {
        let b = ModeBasis::interval(8).unwrap();
        let init = generate_initial_data(&b, 1.0, 1.0, 42).unwrap();
        let s = find_time_for_bound(&k1(), &b, &init, 0.5, Scheme::Strict, Execution::Parallel).unwrap();
        assert!(s.plan.global_bound <= 0.5);
        let below = synthesize(&k1(), &b, &init, s.horizon * (1.0 - SEARCH_TOLERANCE), Scheme::Strict, Execution::Parallel).unwrap();
        assert!(below.global_bound > 0.5);
        assert!(s.transcript.iter().any(|&(t, _)| t == s.horizon));
        let quick = find_time_for_bound(&k1(), &b, &init, 1e9, Scheme::Strict, Execution::Parallel).unwrap();
        assert_eq!(quick.horizon, 1.0);
    }

    #[test]
    fn unreachable_bound_overflows() {
        let b = ModeBasis::interval(2).unwrap();
        let init = InitialData::new(&b, vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let err = find_time_for_bound(&k1(), &b, &init, 1e-300, Scheme::Strict, Execution::Parallel);
        match err {
            Err(Error::HorizonOverflow { transcript, .. }) => assert!(!transcript.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fit_recovers_exponential() {
        let pts: Vec<(f64, f64)> = [4.0f64, 6.0, 8.0, 10.0].iter().map(|&t| (t, 3.0 * (-0.4 * t).exp())).collect();
        let fit = fit_exponential_decay(&pts).unwrap();
        assert!((fit.rate() - 0.4).abs() < 1e-12);
        assert!((fit.prefactor() - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_exponential_decay(&pts[..1]).is_none());
    }

    #[test]
    fn fingerprints_detect_changes() {
        let b = ModeBasis::interval(3).unwrap();
        let plan = synthesize(&k1(), &b, &InitialData::zeros(&b), 2.0, Scheme::Paper, Execution::Parallel).unwrap();
        assert!(plan.check_fingerprints(&k1(), &b).is_ok());
        let k2 = ExponentialKernel::new(vec![1.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert!(plan.check_fingerprints(&k2, &b).is_err());
        assert!(plan.check_fingerprints(&k1(), &ModeBasis::interval(4).unwrap()).is_err());
    }
}
