//! `memwave` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical
//! failure, 4 verification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::charroots::{find_all_roots, residue_identity};
use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::simulate::{drift_samples, simulate_mode, SimOptions};
use crate::synthesis::{find_time_for_bound, synthesize, ControlPlan};
use crate::verify::{sweep, verify_plan, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "memwave", version, about = "Null-control synthesis for the wave equation with exponential memory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-mode characteristic roots and residue sums as CSV.
    Roots {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the moment problems and write a plan file.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Fixed control horizon T.
        #[arg(long, conflicts_with = "bound", required_unless_present = "bound")]
        horizon: Option<f64>,
        /// Search the smallest T whose control bound is at most M.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Simulate every mode under a plan; long-format CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
        /// Keep every k-th integration step.
        #[arg(long, default_value_t = 100)]
        stride: usize,
    },
    /// Certify a plan by simulation; writes a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Bound and terminal residual over a list of horizons.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<f64>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn write_plan(path: &Path, plan: &ControlPlan) -> Result<()> {
    let mut text = serde_json::to_string_pretty(plan)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_plan(path: &Path) -> Result<ControlPlan> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn verify_options(cfg: &RunConfig) -> VerifyOptions {
    VerifyOptions {
        dt: cfg.sim.dt,
        post_horizon_factor: cfg.sim.post_horizon_factor,
        ..VerifyOptions::default()
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-5, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn roots_csv(cfg: &RunConfig) -> Result<String> {
    let all = find_all_roots(&cfg.kernel, &cfg.basis, Execution::Parallel)?;
    let nq = cfg.kernel.len() - 1;
    let mut s = String::from("n,alpha,mu,nu");
    for k in 1..=nq {
        write!(s, ",q_{k}").unwrap();
    }
    s.push_str(",paper_residue_sum,corrected_residue_sum\n");
    for r in &all {
        let sums = residue_identity(r);
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        write!(s, "{},{},{},{}", r.n, num(r.alpha), opt(r.mu), opt(r.nu)).unwrap();
        for &q in &r.q {
            write!(s, ",{}", num(q)).unwrap();
        }
        writeln!(s, ",{},{}", num(sums.paper_sum.re), num(sums.corrected_sum.re)).unwrap();
    }
    Ok(s)
}

pub fn simulate_csv(cfg: &RunConfig, plan: &ControlPlan, stride: usize) -> Result<String> {
    plan.check_fingerprints(&cfg.kernel, &cfg.basis)?;
    let init = cfg.initial_data()?;
    let opts = verify_options(cfg);
    let dt = opts.dt.unwrap_or(plan.horizon / crate::verify::DEFAULT_STEPS_PER_HORIZON);
    let blocks = exec::try_map(Execution::Parallel, &plan.modal, |mc| -> Result<String> {
        let n = mc.n;
        let roots = crate::charroots::find_roots(&cfg.kernel, n, cfg.basis.alpha(n))?;
        let decay = roots.mu.unwrap_or_else(|| roots.slowest_decay());
        let t_end = plan.horizon + opts.post_horizon_factor / decay;
        let trace = simulate_mode(
            &cfg.kernel,
            n,
            cfg.basis.alpha(n),
            init.phi0[n - 1],
            init.phi1[n - 1],
            mc,
            t_end,
            SimOptions::new(dt).with_stride(stride),
        )?;
        let drift = drift_samples(&trace, &cfg.kernel, mc);
        let mut s = String::new();
        for ((t, st), (u, d)) in trace
            .times
            .iter()
            .zip(&trace.states)
            .zip(trace.controls.iter().zip(&drift))
        {
            write!(
                s,
                "{},{n},{},{},{},{}",
                num(*t),
                num(st.theta),
                num(st.dtheta),
                num(*u),
                num(*d)
            )
            .unwrap();
            for &w in &st.w {
                write!(s, ",{}", num(w)).unwrap();
            }
            s.push('\n');
        }
        Ok(s)
    })?;
    let mut s = String::from("t,n,theta,dtheta,u,invariant_drift");
    for k in 1..=cfg.kernel.len() {
        write!(s, ",w_{k}").unwrap();
    }
    s.push('\n');
    for b in blocks {
        s.push_str(&b);
    }
    Ok(s)
}

fn run_command(command: Command) -> Result<i32> {
    match command {
        Command::Roots { common } => {
            let cfg = parse_config(&common.config)?;
            emit(common.out.as_deref(), &roots_csv(&cfg)?)?;
            Ok(EXIT_OK)
        }
        Command::Synthesize {
            common,
            horizon,
            bound,
        } => {
            let cfg = parse_config(&common.config)?;
            let init = cfg.initial_data()?;
            let mut plan = match (horizon, bound) {
                (Some(t), None) => synthesize(&cfg.kernel, &cfg.basis, &init, t, cfg.scheme, Execution::Parallel)?,
                (None, Some(m)) => {
                    let search = find_time_for_bound(&cfg.kernel, &cfg.basis, &init, m, cfg.scheme, Execution::Parallel)?;
                    for (t, b) in &search.transcript {
                        eprintln!("probe T = {t}: bound = {b:e}");
                    }
                    search.plan
                }
                _ => return Err(Error::config("synthesize", "exactly one of --horizon, --bound")),
            };
            plan.tail_majorant = cfg.tail_majorant();
            match &common.out {
                Some(p) => write_plan(p, &plan)?,
                None => emit(None, &(serde_json::to_string_pretty(&plan)? + "\n"))?,
            }
            Ok(EXIT_OK)
        }
        Command::Simulate {
            common,
            plan,
            stride,
        } => {
            let cfg = parse_config(&common.config)?;
            let plan = read_plan(&plan)?;
            emit(common.out.as_deref(), &simulate_csv(&cfg, &plan, stride)?)?;
            Ok(EXIT_OK)
        }
        Command::Verify { common, plan } => {
            let cfg = parse_config(&common.config)?;
            let plan = read_plan(&plan)?;
            let init = cfg.initial_data()?;
            let report = verify_plan(&cfg.kernel, &cfg.basis, &init, &plan, &verify_options(&cfg))?;
            emit(common.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(if report.all_pass { EXIT_OK } else { EXIT_VERIFICATION })
        }
        Command::Sweep { common, horizons } => {
            let cfg = parse_config(&common.config)?;
            if horizons.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(Error::config("--horizons", "entries must be positive"));
            }
            let init = cfg.initial_data()?;
            let rows = sweep(&cfg.kernel, &cfg.basis, &init, &horizons, cfg.scheme, &verify_options(&cfg))?;
            let mut s = String::from("T,global_bound,max_terminal_residual\n");
            for r in rows {
                writeln!(
                    s,
                    "{},{},{}",
                    num(r.horizon),
                    num(r.global_bound),
                    num(r.max_terminal_residual)
                )
                .unwrap();
            }
            emit(common.out.as_deref(), &s)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Honors `MEMWAVE_THREADS`.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match exec::with_threads(exec::threads_from_env(), || run_command(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("memwave: {e}");
            e.exit_code()
        }
    }
}
