//! Bounded distributed controls that drive the wave equation with an
//! exponential memory kernel,
//!
//! ```text
//! θ_tt - K(0) Δθ - ∫_0^t K'(t - s) Δθ(s) ds = u,   K(t) = Σ_j (c_j/γ_j) exp(-γ_j t),
//! ```
//!
//! to rest in finite time, mode by mode, together with an independent
//! time-domain check of every step.
//!
//! Pipeline: [`kernel`] and [`spectrum`] describe the problem,
//! [`charroots`] finds the modal characteristic roots, [`moments`] solves
//! the per-mode moment problem, [`synthesis`] assembles the field and its
//! bound, [`simulate`] and [`verify`] close the loop.

pub mod charroots;
pub mod cli;
pub mod config;
pub mod dd;
pub mod error;
pub mod exec;
pub mod kernel;
pub mod moments;
pub mod poly;
pub mod quad;
pub mod simulate;
pub mod spectrum;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::ExponentialKernel;
pub use moments::{ModalControl, Scheme};
pub use spectrum::{InitialData, ModeBasis};
pub use synthesis::ControlPlan;
