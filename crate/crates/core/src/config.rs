//! Run configuration: a TOML document with the sections `kernel`, `domain`,
//! `initial`, `control` and `sim` plus the top-level `modes` count.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernel::ExponentialKernel;
use crate::moments::Scheme;
use crate::spectrum::{generate_initial_data, InitialData, ModeBasis};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kernel: RawKernel,
    domain: RawDomain,
    modes: i64,
    initial: RawInitial,
    #[serde(default)]
    control: RawControl,
    #[serde(default)]
    sim: RawSim,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    c: Vec<f64>,
    gamma: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(rename = "type")]
    kind: String,
    alpha: Option<Vec<f64>>,
    psi_sup: Option<Vec<f64>>,
    dimension: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    phi0: Option<Vec<f64>>,
    phi1: Option<Vec<f64>>,
    random: Option<RawRandom>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRandom {
    beta: f64,
    amplitude: f64,
    seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    #[serde(default)]
    scheme: Scheme,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    post_horizon_factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Explicit(InitialData),
    Random { beta: f64, amplitude: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: Option<f64>,
    pub post_horizon_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub kernel: ExponentialKernel,
    pub basis: ModeBasis,
    pub initial: InitialSpec,
    pub scheme: Scheme,
    pub sim: SimConfig,
}

impl RunConfig {
    pub fn initial_data(&self) -> Result<InitialData> {
        match &self.initial {
            InitialSpec::Explicit(d) => Ok(d.clone()),
            InitialSpec::Random {
                beta,
                amplitude,
                seed,
            } => generate_initial_data(&self.basis, *beta, *amplitude, *seed),
        }
    }

    /// Tail majorant for the neglected modes, known only for seeded data on
    /// the interval.
    pub fn tail_majorant(&self) -> Option<f64> {
        match self.initial {
            InitialSpec::Random { beta, .. } => self.basis.tail_majorant(beta),
            InitialSpec::Explicit(_) => None,
        }
    }
}

fn finite_list(key: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(key, "entries must be finite"));
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::config(key, format!("must be finite and positive, got {v}")));
    }
    Ok(v)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = e
            .span()
            .map(|s| format!("at byte {}", s.start))
            .unwrap_or_else(|| "config".into());
        Error::config(key, message)
    })?;

    finite_list("kernel.c", &raw.kernel.c)?;
    finite_list("kernel.gamma", &raw.kernel.gamma)?;
    if raw.kernel.c.is_empty() {
        return Err(Error::config("kernel.c", "at least one term required"));
    }
    if raw.kernel.c.len() != raw.kernel.gamma.len() {
        return Err(Error::config("kernel.gamma", "length must match kernel.c"));
    }
    if raw.kernel.c.iter().any(|&v| v <= 0.0) {
        return Err(Error::config("kernel.c", "entries must be positive"));
    }
    if raw.kernel.gamma.iter().any(|&v| v <= 0.0) {
        return Err(Error::config("kernel.gamma", "entries must be positive"));
    }
    let mut sorted = raw.kernel.gamma.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config("kernel.gamma", "duplicate"));
    }
    let kernel = ExponentialKernel::new(raw.kernel.c, raw.kernel.gamma)
        .map_err(|e| Error::config("kernel", e.to_string()))?;

    if raw.modes < 1 {
        return Err(Error::config("modes", "must be at least 1"));
    }
    let modes = raw.modes as usize;
    let domain = raw.domain;
    let basis = match domain.kind.as_str() {
        "interval" => {
            if domain.alpha.is_some() || domain.psi_sup.is_some() || domain.dimension.is_some() {
                return Err(Error::config(
                    "domain",
                    "interval domains take no alpha, psi_sup or dimension",
                ));
            }
            ModeBasis::interval(modes).expect("modes >= 1")
        }
        "modal" => {
            let (Some(alpha), Some(psi_sup), Some(dimension)) =
                (domain.alpha, domain.psi_sup, domain.dimension)
            else {
                return Err(Error::config(
                    "domain",
                    "modal domains need alpha, psi_sup and dimension",
                ));
            };
            finite_list("domain.alpha", &alpha)?;
            finite_list("domain.psi_sup", &psi_sup)?;
            if alpha.len() < modes || psi_sup.len() < modes {
                return Err(Error::config(
                    "domain.alpha",
                    format!("needs at least {modes} entries"),
                ));
            }
            if dimension < 1 || dimension > u32::MAX as i64 {
                return Err(Error::config("domain.dimension", "must be a positive integer"));
            }
            ModeBasis::user_supplied(
                alpha[..modes].to_vec(),
                psi_sup[..modes].to_vec(),
                dimension as u32,
            )
            .map_err(|e| Error::config("domain", e.to_string()))?
        }
        other => {
            return Err(Error::config(
                "domain.type",
                format!("expected \"interval\" or \"modal\", got {other:?}"),
            ))
        }
    };

    let initial = match (raw.initial.phi0, raw.initial.phi1, raw.initial.random) {
        (Some(phi0), Some(phi1), None) => {
            finite_list("initial.phi0", &phi0)?;
            finite_list("initial.phi1", &phi1)?;
            if phi0.len() != modes {
                return Err(Error::config("initial.phi0", format!("needs {modes} entries")));
            }
            if phi1.len() != modes {
                return Err(Error::config("initial.phi1", format!("needs {modes} entries")));
            }
            InitialSpec::Explicit(InitialData::new(&basis, phi0, phi1)?)
        }
        (None, None, Some(r)) => {
            let half_dim = basis.dimension() as f64 / 2.0;
            if !(r.beta.is_finite() && r.beta > half_dim) {
                return Err(Error::config(
                    "initial.random.beta",
                    format!("must exceed dimension/2 = {half_dim}, got {}", r.beta),
                ));
            }
            positive("initial.random.amplitude", r.amplitude)?;
            InitialSpec::Random {
                beta: r.beta,
                amplitude: r.amplitude,
                seed: r.seed,
            }
        }
        _ => {
            return Err(Error::config(
                "initial",
                "give either both phi0 and phi1, or a random table",
            ))
        }
    };

    let dt = raw.sim.dt.map(|v| positive("sim.dt", v)).transpose()?;
    let post_horizon_factor = raw
        .sim
        .post_horizon_factor
        .map(|v| positive("sim.post_horizon_factor", v))
        .transpose()?
        .unwrap_or(5.0);

    Ok(RunConfig {
        kernel,
        basis,
        initial,
        scheme: raw.control.scheme,
        sim: SimConfig {
            dt,
            post_horizon_factor,
        },
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
modes = 4

[kernel]
c = [1.0]
gamma = [1.0]

[domain]
type = "interval"

[initial]
phi0 = [1.0, 0.0, 0.0, 0.0]
phi1 = [0.0, 0.0, 0.0, 0.0]
"#;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, message } => format!("{key}: {message}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.basis.len(), 4);
        assert_eq!(cfg.scheme, Scheme::Strict);
        assert_eq!(cfg.sim.post_horizon_factor, 5.0);
        assert_eq!(cfg.initial_data().unwrap().phi0[0], 1.0);
        assert_eq!(cfg.tail_majorant(), None);
    }

    #[test]
    fn duplicate_gamma() {
        let text = MINIMAL.replace("c = [1.0]\ngamma = [1.0]", "c = [1.0, 2.0]\ngamma = [2.0, 2.0]");
        assert_eq!(key_of(parse_config_str(&text).unwrap_err()), "kernel.gamma: duplicate");
    }

    #[test]
    fn smoothness_hypothesis() {
        let text = MINIMAL.replace(
            "phi0 = [1.0, 0.0, 0.0, 0.0]\nphi1 = [0.0, 0.0, 0.0, 0.0]",
            "random = { beta = 0.4, amplitude = 1.0, seed = 42 }",
        );
        let e = parse_config_str(&text).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(key_of(e).starts_with("initial.random.beta"));
        let ok = text.replace("beta = 0.4", "beta = 1.0");
        let cfg = parse_config_str(&ok).unwrap();
        assert_eq!(cfg.tail_majorant(), Some(0.25));
        let zero_amp = ok.replace("amplitude = 1.0", "amplitude = 0.0");
        assert!(key_of(parse_config_str(&zero_amp).unwrap_err()).starts_with("initial.random.amplitude"));
    }

    #[test]
    fn rejects_unknown_and_nonfinite() {
        let text = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(parse_config_str(&text).is_err());
        let text = MINIMAL.replace("c = [1.0]", "c = [nan]");
        assert_eq!(key_of(parse_config_str(&text).unwrap_err()), "kernel.c: entries must be finite");
        let text = MINIMAL.replace("type = \"interval\"", "type = \"interval\"\nfoo = 1");
        assert!(parse_config_str(&text).is_err());
        let text = MINIMAL.replace("phi1 = [0.0, 0.0, 0.0, 0.0]", "phi1 = [0.0]");
        assert!(key_of(parse_config_str(&text).unwrap_err()).starts_with("initial.phi1"));
    }

    #[test]
    fn modal_domain() {
        let text = MINIMAL.replace(
            "type = \"interval\"",
            "type = \"modal\"\nalpha = [1.0, 1.5, 2.0, 2.2, 3.0]\npsi_sup = [1.0, 1.0, 1.0, 1.0, 1.0]\ndimension = 2",
        );
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.basis.len(), 4);
        assert_eq!(cfg.basis.dimension(), 2);
    }
}
