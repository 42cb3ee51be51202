use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sarplan_cli::commands::{self, ECHOES_BIN, IMAGE_BIN, TRAJECTORY_CSV};
use sarplan_cli::{init_threads, CliError, CliResult, RunConfig};
use sarplan_core::{ScanMode, Window};

/// Plan, solve and check arm-mounted UWB SAR acquisitions.
#[derive(Parser)]
#[command(name = "sarplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Stripmap,
    Spotlight,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Rect,
    Hann,
}

#[derive(Subcommand)]
enum Command {
    /// Resolution, aperture and sampling limits as JSON.
    Constraints {
        #[command(flatten)]
        common: Common,
    },
    /// Meander trajectory CSV plus a plan summary.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Force the cruise velocity, m/s.
        #[arg(long)]
        velocity: Option<f64>,
    },
    /// Joint trajectory for a planned scan.
    Ik {
        #[command(flatten)]
        common: Common,
        /// Defaults to trajectory.csv in the output directory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Initial joint angles q1,...,q6 in radians.
        #[arg(long, allow_hyphen_values = true)]
        seed_joints: Option<String>,
    },
    /// Point-scatterer echoes along a planned scan.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Back-projected image (PGM, JSON sidecar, binary).
    Image {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        echoes: Option<PathBuf>,
        #[arg(long, value_enum)]
        window: Option<WindowArg>,
    },
    /// Check an image against expected resolution and resolvability.
    Verify {
        /// Defaults to image.bin in the output directory.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        expect: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Every stage in order.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        window: Option<WindowArg>,
        #[arg(long, allow_hyphen_values = true)]
        seed_joints: Option<String>,
        #[arg(long)]
        expect: Option<PathBuf>,
    },
}

fn load(common: &Common) -> CliResult<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn mode(m: ModeArg) -> ScanMode {
    match m {
        ModeArg::Stripmap => ScanMode::Stripmap,
        ModeArg::Spotlight => ScanMode::Spotlight,
    }
}

fn window(w: WindowArg) -> Window {
    match w {
        WindowArg::Rect => Window::Rectangular,
        WindowArg::Hann => Window::Hann,
    }
}

fn or_default(path: Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.unwrap_or_else(|| out.join(name))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Constraints { common } => {
            let (cfg, out) = load(&common)?;
            commands::cmd_constraints(&cfg, &out)?;
            let text = std::fs::read_to_string(out.join(commands::CONSTRAINTS_JSON))
                .map_err(|e| CliError::io(&out, e))?;
            print!("{text}");
        }
        Command::Plan { common, mode: m, velocity } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(m) = m {
                cfg.mode = mode(m);
            }
            if let Some(v) = velocity {
                if !(v > 0.0) {
                    return Err(CliError::Config("--velocity: must be positive".into()));
                }
                cfg.cruise_velocity = Some(v);
            }
            let (_, s) = commands::cmd_plan(&cfg, &out)?;
            println!(
                "{} samples ({} imaging) over {} slice(s), {:.3} s, cruise {:.4} m/s",
                s.n_samples,
                s.n_imaging_samples,
                s.slice_heights.len(),
                s.duration,
                s.cruise_velocity
            );
        }
        Command::Ik { common, trajectory, seed_joints } => {
            let (cfg, out) = load(&common)?;
            let seed = seed_joints.as_deref().map(commands::parse_joints).transpose()?;
            let traj = or_default(trajectory, &out, TRAJECTORY_CSV);
            let jt = commands::cmd_ik(&cfg, &traj, seed.as_ref(), &out)?;
            println!("{} joint samples", jt.samples.len());
        }
        Command::Simulate { common, trajectory } => {
            let (cfg, out) = load(&common)?;
            let traj = or_default(trajectory, &out, TRAJECTORY_CSV);
            let e = commands::cmd_simulate(&cfg, &traj, &out)?;
            println!("{} pulses x {} frequencies", e.n_pulses(), e.n_freqs());
        }
        Command::Image { common, echoes, window: w } => {
            let (cfg, out) = load(&common)?;
            let echoes = or_default(echoes, &out, ECHOES_BIN);
            let w = w.map(window).unwrap_or(cfg.window);
            let img = commands::cmd_image(&cfg, &echoes, w, &out)?;
            let [nx, ny, nz] = img.grid.dims;
            println!("{nx}x{ny}x{nz} image");
        }
        Command::Verify { image, expect, out } => {
            let image = or_default(image, &out, IMAGE_BIN);
            let r = commands::cmd_verify(&image, &expect, &out)?;
            println!("{} check(s) passed", r.checks.len());
        }
        Command::Run { common, mode: m, window: w, seed_joints, expect } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(m) = m {
                cfg.mode = mode(m);
            }
            if let Some(w) = w {
                cfg.window = window(w);
            }
            let seed = seed_joints.as_deref().map(commands::parse_joints).transpose()?;
            commands::cmd_run(&cfg, seed.as_ref(), expect.as_deref(), &out)?;
            println!("artifacts in {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads(std::env::var("SARPLAN_THREADS").ok().as_deref()).and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
