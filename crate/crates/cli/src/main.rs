//! Command-line sweeps, policy surfaces, queue simulations and self-checks.

mod config;
mod sweep;
mod validate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{log_theta_grid, ConfigError, Defaults, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "secure-qos", version, about = "Effective secure throughput under QoS constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Throughput against the QoS exponent.
    SweepTheta(Common),
    /// Throughput against the average SNR for each QoS exponent.
    SweepSnr(Common),
    /// Optimal power over a (z_e, z_m) grid.
    PolicySurface(Common),
    /// Buffer simulation and tail-decay fits.
    Queue {
        #[command(flatten)]
        common: Common,
        /// Arrival rate as a multiple of the effective secure throughput.
        #[arg(long, default_value_t = 1.0)]
        load: f64,
    },
    /// Solver self-checks; exits 1 if any check fails.
    Validate(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// QoS exponents in 1/bit, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Average SNR values in dB, comma-separated (`-inf` for zero power).
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Eavesdropper noise ratio.
    #[arg(long)]
    gamma: Option<String>,
    /// Mean main-channel gain.
    #[arg(long = "mean-zm")]
    mean_zm: Option<String>,
    /// Mean eavesdropper-channel gain.
    #[arg(long = "mean-ze")]
    mean_ze: Option<String>,
    /// Frame duration in seconds.
    #[arg(long = "frame-t")]
    frame_t: Option<String>,
    /// Bandwidth in Hz.
    #[arg(long)]
    bandwidth: Option<String>,
    /// full, main or both.
    #[arg(long)]
    csi: Option<String>,
    /// zE_max,zM_max,steps
    #[arg(long)]
    grid: Option<String>,
    /// name=value pairs, e.g. root_tol=1e-12,quad_rel_tol=1e-9
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Simulated frames per seed.
    #[arg(long)]
    frames: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides, ConfigError> {
        let mut o = match &self.config {
            Some(path) => Overrides::load(path)?,
            None => Overrides::default(),
        };
        let mut flags = Overrides::default();
        let pairs = [
            ("theta", &self.theta),
            ("snr_db", &self.snr_db),
            ("gamma", &self.gamma),
            ("mean_zm", &self.mean_zm),
            ("mean_ze", &self.mean_ze),
            ("frame_t", &self.frame_t),
            ("bandwidth", &self.bandwidth),
            ("csi", &self.csi),
            ("grid", &self.grid),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("frames", &self.frames),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v)?;
            }
        }
        flags.out = self.out.clone();
        o = o.merge(flags);
        Ok(o)
    }
}

fn defaults(command: &Command) -> Defaults {
    let d = |theta: Vec<f64>, snr_db: Vec<f64>| Defaults {
        theta,
        snr_db,
        frames: 1_000_000,
    };
    match command {
        Command::SweepTheta(_) => d(log_theta_grid(), vec![0.0]),
        Command::SweepSnr(_) => d(vec![0.0, 1e-3, 1e-2, 1e-1], (-2..=4).map(|k| 5.0 * f64::from(k)).collect()),
        Command::PolicySurface(_) => d(vec![0.0, 0.01], vec![0.0]),
        Command::Queue { .. } | Command::Validate(_) => d(vec![0.01], vec![0.0]),
    }
}

fn output(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<u8, Box<dyn std::error::Error>> {
    let common = match &cli.command {
        Command::SweepTheta(c) | Command::SweepSnr(c) | Command::PolicySurface(c) | Command::Validate(c) => c,
        Command::Queue { common, .. } => common,
    };
    let cfg = RunConfig::resolve(common.overrides()?, defaults(&cli.command))?;
    let out = output(&cfg)?;
    let outcome = match cli.command {
        Command::SweepTheta(_) => sweep::sweep_theta(&cfg, out)?,
        Command::SweepSnr(_) => sweep::sweep_snr(&cfg, out)?,
        Command::PolicySurface(_) => sweep::policy_surface(&cfg, out)?,
        Command::Queue { load, .. } => {
            if !(load.is_finite() && load >= 0.0) {
                return Err(format!("--load must be finite and >= 0, got {load}").into());
            }
            sweep::queue(&cfg, load, out)?
        }
        Command::Validate(_) => return Ok(validate::validate(&cfg, out)? as u8),
    };
    if outcome.failed > 0 {
        eprintln!("{} of {} rows failed", outcome.failed, outcome.rows);
        return Ok(2);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
