//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::config::{OutputFormat, SimulationConfig};
use super::ensemble::run_ensemble;
use super::output::render;
use super::verify::{linspace, verify_hjb, verify_theorem1};
use super::{exit_code, EXIT_OK, EXIT_VERIFICATION};
use crate::analysis::{decay_bound, lop_steady_state, n4_paper_rate, universal_steady_state_bound, BoundReport, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::lop::{averaged_fixed_point, ReducedProtocol};

#[derive(Debug, Parser)]
#[command(name = "lopsim", version, about = "Locally optimal feedback for continuously measured quantum systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a trajectory ensemble and write the averaged series.
    Simulate,
    /// Run a trajectory ensemble and write only the bound reports.
    Bounds,
    /// Print the closed-form rates and steady states for the configuration.
    Rates,
    /// Sample random states and unitaries against the optimal-observable bound.
    VerifyTheorem1 {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Maximize the HJB bracket over a (zeta, eta) grid.
    VerifyHjb {
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 1.0)]
        zeta_min: f64,
        #[arg(long, default_value_t = 3.0)]
        zeta_max: f64,
        #[arg(long, default_value_t = 21)]
        zeta_points: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        eta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 21)]
        eta_points: usize,
    },
}

fn load_config(c: &Common) -> Result<SimulationConfig> {
    let mut cfg = match &c.config {
        Some(p) => SimulationConfig::parse(&std::fs::read_to_string(p)?)?,
        None => SimulationConfig::default(),
    };
    for s in &c.set {
        cfg.apply(s)?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(f) = &c.format {
        cfg.set("output_format", f)?;
    }
    Ok(cfg)
}

fn format_of(c: &Common, default: OutputFormat) -> OutputFormat {
    match c.format.as_deref() {
        Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        _ => default,
    }
}

fn emit(c: &Common, text: &str) -> Result<()> {
    match &c.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Io(e.to_string()))
}

fn reports_text(reports: &[BoundReport], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => json(&reports),
        OutputFormat::Csv => {
            let mut out = String::from("name,predicted,measured,tolerance,satisfied,informational\n");
            for r in reports {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.name, r.predicted, r.measured, r.tolerance, r.satisfied, r.informational
                );
            }
            Ok(out)
        }
    }
}

fn verdict(reports: &[BoundReport]) -> i32 {
    let failed: Vec<&BoundReport> = reports
        .iter()
        .filter(|r| !r.informational && !r.satisfied)
        .collect();
    for r in &failed {
        eprintln!(
            "unsatisfied: {} (predicted {}, measured {}, tolerance {})",
            r.name, r.predicted, r.measured, r.tolerance
        );
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

#[derive(Serialize)]
struct Rates {
    decay_rate: f64,
    decay_bound_at_horizon: f64,
    lop_steady_state: Option<f64>,
    universal_steady_state_bound: Option<f64>,
    qutrit_gamma: Option<f64>,
    n4_printed: Option<(f64, Option<f64>)>,
    n4_averaged: Option<(f64, f64)>,
}

fn rates(cfg: &SimulationConfig) -> Result<Rates> {
    cfg.validate()?;
    let dx = cfg.delta_x()?;
    let beta = cfg.effective_beta();
    let delta0: f64 = cfg.small_eigenvalues()?.iter().sum();
    let reduced = ReducedProtocol::from_spectrum(&cfg.observable_spectrum()?, &cfg.v_policy.policy()).ok();
    let (mut qutrit_gamma, mut n4_printed, mut n4_averaged) = (None, None, None);
    match reduced {
        Some(ReducedProtocol::Qutrit { q }) => qutrit_gamma = Some(8.0 * cfg.k * q * q),
        Some(ReducedProtocol::FourLevel { x1, c }) => {
            n4_printed = n4_paper_rate(cfg.k, x1, c).ok();
            n4_averaged = averaged_fixed_point(cfg.k, x1, c, cfg.convention);
        }
        None => {}
    }
    Ok(Rates {
        decay_rate: 2.0 * cfg.k * dx * dx / (cfg.n as f64 - 1.0),
        decay_bound_at_horizon: decay_bound(delta0, cfg.k, dx, cfg.n, cfg.horizon)?,
        lop_steady_state: (beta > 0.0)
            .then(|| lop_steady_state(beta, cfg.k, dx, cfg.n))
            .transpose()?,
        universal_steady_state_bound: (beta > 0.0)
            .then(|| universal_steady_state_bound(beta, cfg.k, dx))
            .transpose()?,
        qutrit_gamma,
        n4_printed,
        n4_averaged,
    })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let c = &cli.common;
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(c)?;
            let summary = run_ensemble(&cfg)?;
            for w in &summary.manifest.warnings {
                eprintln!("warning: {w}");
            }
            emit(c, &render(&summary, cfg.output_format)?)?;
            Ok(EXIT_OK)
        }
        Command::Bounds => {
            let cfg = load_config(c)?;
            let summary = run_ensemble(&cfg)?;
            emit(c, &reports_text(&summary.bound_reports, cfg.output_format)?)?;
            Ok(verdict(&summary.bound_reports))
        }
        Command::Rates => {
            let cfg = load_config(c)?;
            emit(c, &json(&rates(&cfg)?)?)?;
            Ok(EXIT_OK)
        }
        Command::VerifyTheorem1 { n, trials } => {
            let reports = verify_theorem1(*n, *trials, c.seed.unwrap_or(0))?;
            emit(c, &reports_text(&reports, format_of(c, OutputFormat::Json))?)?;
            Ok(verdict(&reports))
        }
        Command::VerifyHjb {
            q,
            restarts,
            zeta_min,
            zeta_max,
            zeta_points,
            eta_min,
            eta_max,
            eta_points,
        } => {
            let scan = verify_hjb(
                &linspace(*zeta_min, *zeta_max, *zeta_points),
                &linspace(*eta_min, *eta_max, *eta_points),
                *q,
                *restarts,
            )?;
            let text = match format_of(c, OutputFormat::Json) {
                OutputFormat::Json => json(&scan)?,
                OutputFormat::Csv => {
                    let mut out = String::from("zeta,eta,max_value,search_max,x10,x20,x21\n");
                    for p in &scan.points {
                        let a = &p.argmax_description;
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{},{}",
                            p.zeta, p.eta, p.max_value, p.search_max, a.x10, a.x20, a.x21
                        );
                    }
                    out
                }
            };
            emit(c, &text)?;
            eprintln!(
                "LOP optimal at {}/{} nodes with zeta >= 1 >= eta",
                scan.lop_optimal_nodes, scan.region_nodes
            );
            Ok(verdict(&scan.reports))
        }
    }
}

/// Parses `args` and runs the selected command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
