use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use diffsplines::commands::{self, LandmarkArgs, PqArgs, RiccatiMode};
use diffsplines::config::{self, DefectSpec};
use diffsplines::io::read_trajectory;
use diffsplines_core::experiment::ExperimentConfig;
use diffsplines_core::kernel::KernelModel;

#[derive(Parser)]
#[command(name = "diffsplines", version, about = "Geodesics and acceleration diagnostics on Diff([0,1])")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Clamped,
    Paper,
}

impl From<Variant> for KernelModel {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Clamped => KernelModel::Clamped,
            Variant::Paper => KernelModel::Unclamped,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Necessary,
    Sufficient,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel value and its first two derivatives in s.
    Kernel {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "clamped")]
        variant: Variant,
    },
    /// Landmark geodesic with flow and Jacobian probe.
    GeodesicLandmark {
        #[arg(long, default_value = "0.25,0.75")]
        positions: String,
        #[arg(long, default_value = "15,-15")]
        momenta: String,
        #[arg(long, default_value_t = 16.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 513)]
        nx: usize,
        #[arg(long, value_enum, default_value = "clamped")]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
    },
    /// Constrained geodesic in (p, q) coordinates started from a landmark momentum.
    GeodesicPq {
        /// positions:momenta, e.g. 0.25,0.75:15,-15
        #[arg(long)]
        init_from_landmarks: String,
        #[arg(long, default_value_t = 2.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 513)]
        nx: usize,
        #[arg(long, value_enum, default_value = "clamped")]
        variant: Variant,
        /// Force re-projection on or off (default: on for horizons above 1).
        #[arg(long)]
        reproject: Option<bool>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Acceleration and relaxed functional of a stored (p, q) path.
    Acceleration {
        #[arg(long)]
        traj: PathBuf,
        /// none | atomic:x0=<v>,profile=<sin2|sin|zero> | density:<csv>
        #[arg(long, default_value = "none")]
        defect: String,
        #[arg(long, default_value_t = 0.0)]
        penalty: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fisher-Rao functional of a gridded measure pair.
    FisherRao {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// CSV path or const:<value>
        #[arg(long, default_value = "const:1")]
        weight: String,
    },
    /// Oscillating field p_n with p_n -> 0 and p_n^2 -> mu weakly.
    Oscillate {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value_t = 64)]
        n: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimality tests on a stored (p, q) path.
    Riccati {
        #[arg(long)]
        from_traj: PathBuf,
        #[arg(long, default_value = "none")]
        defect: String,
        #[arg(long, value_enum, default_value = "both")]
        mode: Mode,
        /// Atomic test measures for the necessary condition (repeatable).
        #[arg(long, default_value = "atomic:x0=0.5,profile=sin2")]
        candidate: Vec<String>,
    },
    /// Reproducible experiments.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Reparametrized landmark geodesic against an atomic defect.
    Section7 {
        /// key=value file; explicit flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        /// identity | cubic | exp:A=<value>
        #[arg(long)]
        reparam: Option<String>,
        /// clamped | paper | both
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        /// Skip the figure CSVs.
        #[arg(long)]
        no_figures: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Kernel { s, t, variant } => commands::kernel(s, t, variant.into()),
        Command::GeodesicLandmark { positions, momenta, t_final, dt, nx, variant, out } => {
            commands::geodesic_landmark(&LandmarkArgs {
                positions: config::parse_list(&positions)?,
                momenta: config::parse_list(&momenta)?,
                t_final,
                dt,
                nx,
                model: variant.into(),
                out: &out,
            })
        }
        Command::GeodesicPq { init_from_landmarks, t_final, dt, nx, variant, reproject, out } => {
            commands::geodesic_pq(&PqArgs {
                init: commands::parse_landmark_init(&init_from_landmarks)?,
                t_final,
                dt,
                nx,
                model: variant.into(),
                reproject,
                out: &out,
            })
        }
        Command::Acceleration { traj, defect, penalty, out } => {
            commands::acceleration(&traj, &DefectSpec::parse(&defect)?, penalty, out.as_deref())
        }
        Command::FisherRao { mu, nu, weight } => commands::fisher_rao(&mu, &nu, &weight),
        Command::Oscillate { mu, nu, n, out } => commands::oscillate(&mu, &nu, n, &out),
        Command::Riccati { from_traj, defect, mode, candidate } => {
            let traj = read_trajectory(&from_traj)?;
            let candidates = candidate.iter().map(|c| DefectSpec::parse(c)).collect::<Result<Vec<_>>>()?;
            let mode = match mode {
                Mode::Necessary => RiccatiMode::Necessary,
                Mode::Sufficient => RiccatiMode::Sufficient,
                Mode::Both => RiccatiMode::Both,
            };
            commands::riccati(&traj, &DefectSpec::parse(&defect)?, mode, &candidates)
        }
        Command::Experiment { which: Experiment::Section7 { config: file, lambda, reparam, kernel, nx, dt, no_figures, out } } => {
            let mut cfg = ExperimentConfig::default();
            if let Some(path) = file {
                config::load_config_file(&path, &mut cfg)?;
            }
            if let Some(v) = lambda {
                cfg.lambda = v;
            }
            if let Some(v) = reparam {
                cfg.reparam = config::parse_reparam(&v)?;
            }
            if let Some(v) = kernel {
                cfg.kernel = config::parse_kernel_choice(&v)?;
            }
            if let Some(v) = nx {
                cfg.nx = v;
            }
            if let Some(v) = dt {
                cfg.dt_geodesic = v;
                cfg.dt_functional = v;
            }
            commands::experiment_section7(&cfg, &out, !no_figures)
        }
    }
}

fn main() {
    match run(Cli::parse()) {
        Ok(v) => println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default()),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
