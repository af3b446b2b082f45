//! The `qdot` command line.
//!
//! Exit codes: 0 when every verdict passes, 1 when any verdict fails, 2 on a
//! usage, config or runtime error. Reports go to stdout, diagnostics to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_grid_spec, validate_config, ValidatedConfig};
use crate::error::{Error, Result};
use crate::scenarios::{
    self, consolidated_json, load_manifest, run_manifest, write_report, RunReport, RunSettings, StudyMode,
};
use crate::spinmodel::DEFAULT_MAX_QUBITS;

pub const MAX_QUBITS_ENV: &str = "QDOT_MAX_QUBITS";

#[derive(Debug, Parser)]
#[command(name = "qdot", version, about = "Quantum-dot qubit array design calculations")]
pub struct Cli {
    /// Directory for report.json and CSV artifacts. Without it, CSV artifacts
    /// are written to the current directory and no JSON is written.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Largest register simulated; QDOT_MAX_QUBITS, when set, caps it further.
    #[arg(long, global = true, value_name = "N")]
    pub max_qubits: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ideal,
    Physical,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Device config (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Device config (JSON); its readout block sets the sweep parameters.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Drain-bias grid in volts, `start:stop:step` or `a,b,c`.
    #[arg(long, value_name = "GRID")]
    pub sweep_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacitances, charging energies and couplings. Without --config,
    /// reproduces the estimates for both reference devices.
    Derive(ConfigArg),
    /// Brute-force charging oracle against the closed forms.
    Oracle {
        /// Device config; only its seed is used.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Seed for the random networks.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random networks.
        #[arg(long, default_value_t = 50)]
        n_random: usize,
    },
    /// CNOT, coupling-gate and Carr-Purcell fidelities.
    Gates {
        #[arg(long, value_enum, default_value_t = ModeArg::Ideal)]
        mode: ModeArg,
    },
    /// Rotating-wave approximation against lab-frame propagation.
    Rwa,
    /// Readout-current ratio versus drain bias for qubits 1, N/2 and N.
    Readout(SweepArgs),
    /// Both readout sweeps: fig2a.csv and fig2b.csv.
    Figures(SweepArgs),
    /// Operating criterion T << J << Delta0 < t << hbar/(C R).
    Criterion {
        /// Device config (JSON).
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Smallest ratio accepted for a "much less than" link.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Run every scenario listed in a manifest.
    RunManifest {
        /// Manifest (JSON).
        manifest: PathBuf,
    },
}

/// Resolves the qubit cap from the flag and the environment value.
pub fn resolve_max_qubits(flag: Option<usize>, env: Option<&str>) -> Result<usize> {
    let env = match env {
        None => None,
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => return Err(Error::Config(format!("{MAX_QUBITS_ENV} = '{s}' is not a positive integer"))),
        },
    };
    if flag == Some(0) {
        return Err(Error::Config("--max-qubits must be >= 1".into()));
    }
    Ok(match (flag, env) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => DEFAULT_MAX_QUBITS,
    })
}

/// Entry point for the binary: reads the process environment and streams.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let env = std::env::var(MAX_QUBITS_ENV).ok();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    dispatch(cli, env.as_deref(), &mut out, &mut err)
}

pub fn dispatch(cli: Cli, env_max_qubits: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(&cli, env_max_qubits, out, err) {
        Ok(reports) => {
            for r in &reports {
                let _ = writeln!(err, "{}: {:.3} s", r.scenario, r.wall_time.as_secs_f64());
            }
            if reports.iter().all(RunReport::passed) { 0 } else { 1 }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Result<ValidatedConfig> {
    match validate_config(path) {
        Ok(v) => {
            for d in &v.defaults {
                let _ = writeln!(err, "default: {d}");
            }
            for n in &v.notices {
                let _ = writeln!(err, "notice: {n}");
            }
            Ok(v)
        }
        Err(issues) => {
            let _ = writeln!(err, "{}: {} problem(s)", path.display(), issues.len());
            for i in &issues {
                let _ = writeln!(err, "  {i}");
            }
            Err(Error::Config(format!("invalid config {}", path.display())))
        }
    }
}

fn execute(cli: &Cli, env_max_qubits: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> Result<Vec<RunReport>> {
    let max_qubits = resolve_max_qubits(cli.max_qubits, env_max_qubits)?;
    let settings = RunSettings { max_qubits, ..Default::default() };
    let tol = &settings.tolerances;

    if let Command::RunManifest { manifest } = &cli.command {
        if !manifest.is_file() {
            return Err(Error::Config(format!("manifest {} does not exist", manifest.display())));
        }
        let m = load_manifest(manifest)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("qdot-out"));
        let mut reports = Vec::new();
        for (s, r) in m.scenarios.iter().zip(run_manifest(&m, base, &settings)) {
            let r = r.map_err(|e| Error::Config(format!("scenario '{}': {e}", s.name)))?;
            write_report(&r, &out_dir.join(s.output.as_deref().unwrap_or(&s.name)))?;
            reports.push(r);
        }
        std::fs::write(out_dir.join("report.json"), consolidated_json(&reports)?)?;
        let text: String = reports.iter().map(RunReport::to_text).collect();
        std::fs::write(out_dir.join("report.txt"), &text)?;
        out.write_all(text.as_bytes())?;
        return Ok(reports);
    }

    let report = match &cli.command {
        Command::Derive(a) => match &a.config {
            Some(p) => {
                let v = load(p, err)?;
                scenarios::run_derive_report(&v.config.name, &v.config)?
            }
            None => scenarios::run_reference_estimates(tol)?,
        },
        Command::Oracle { config, seed, n_random } => {
            let cfg_seed = match config {
                Some(p) => Some(load(p, err)?.config.seed),
                None => None,
            };
            scenarios::run_oracle_check(*n_random, seed.or(cfg_seed).unwrap_or(1), tol)?
        }
        Command::Gates { mode } => {
            let mode = match mode {
                ModeArg::Ideal => StudyMode::Ideal,
                ModeArg::Physical => StudyMode::Physical,
            };
            scenarios::run_gate_study(mode, max_qubits, tol)?
        }
        Command::Rwa => scenarios::run_rwa_study(tol)?,
        Command::Readout(a) | Command::Figures(a) => {
            let mut ro = match &a.config {
                Some(p) => load(p, err)?.config.readout,
                None => Default::default(),
            };
            if let Some(g) = &a.sweep_grid {
                ro.sweep_grid = parse_grid_spec(g).map_err(Error::Config)?;
            }
            if matches!(cli.command, Command::Readout(_)) {
                scenarios::run_fig2a(&ro, tol)?
            } else {
                scenarios::run_figures(&ro, tol)?
            }
        }
        Command::Criterion { config, margin } => {
            let v = load(config, err)?;
            if let Some(m) = margin {
                if !(*m > 0.0) {
                    return Err(Error::Config(format!("--margin must be > 0 (got {m})")));
                }
            }
            scenarios::run_criterion("criterion", &v.config, margin.unwrap_or(v.config.margin))?
        }
        Command::RunManifest { .. } => unreachable!("handled above"),
    };

    match &cli.out {
        Some(dir) => {
            write_report(&report, dir)?;
        }
        None => {
            for a in &report.artifacts {
                std::fs::write(&a.file, &a.content)?;
            }
        }
    }
    out.write_all(report.to_text().as_bytes())?;
    Ok(vec![report])
}
