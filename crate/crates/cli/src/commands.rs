//! One function per subcommand. Each reads its inputs from files, writes its
//! artifacts into the output directory and returns what it produced.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sarplan_core::constraints::build_report;
use sarplan_core::kinematics::{check_workspace, solve_trajectory, write_joint_csv, JointTrajectory, JointVector};
use sarplan_core::sim::{
    backproject, measure_resolution, read_echoes, read_image, resolvability_check, synthesize_echoes, write_echoes,
    write_image, ImageGrid, PGM_DB_WINDOW,
};
use sarplan_core::trajectory::{
    default_cruise_velocity, plan_spotlight, plan_stripmap, read_trajectory_csv, validate_trajectory,
    write_trajectory_csv, Violation,
};
use sarplan_core::{ConstraintReport, EchoSet, PoseTrajectory, SarImage, ScanMode, Window};

use crate::config::{Expectations, RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const CONSTRAINTS_JSON: &str = "constraints.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const PLAN_JSON: &str = "plan.json";
pub const JOINTS_CSV: &str = "joints.csv";
pub const ECHOES_BIN: &str = "echoes.uwbe";
pub const IMAGE_PGM: &str = "image.pgm";
pub const IMAGE_JSON: &str = "image.json";
pub const IMAGE_BIN: &str = "image.bin";
pub const VERIFY_JSON: &str = "verify.json";

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline.
fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    writeln!(w).map_err(|e| CliError::io(path, e))?;
    finish(w, path)
}

fn with_path<T>(path: &Path, r: sarplan_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Io(msg) => CliError::Io(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn versioned<T: Serialize>(body: &T) -> Versioned<'_, T> {
    Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    }
}

pub fn cmd_constraints(cfg: &RunConfig, out: &Path) -> CliResult<ConstraintReport> {
    let report = build_report(&cfg.radar(), &cfg.scene)?;
    write_json(&out.join(CONSTRAINTS_JSON), &versioned(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub mode: ScanMode,
    pub cruise_velocity: f64,
    pub accel_duration: f64,
    pub cruise_sample_spacing: f64,
    pub n_samples: usize,
    pub n_imaging_samples: usize,
    pub slice_heights: Vec<f64>,
    pub duration: f64,
    pub constraints: ConstraintReport,
    pub violations: Vec<Violation>,
}

/// Plans the scan, writes the trajectory and its summary, and fails with a
/// plan error if the realized trajectory breaks the sampling limits.
pub fn cmd_plan(cfg: &RunConfig, out: &Path) -> CliResult<(PoseTrajectory, PlanSummary)> {
    let radar = cfg.radar();
    let report = build_report(&radar, &cfg.scene)?;
    let opts = cfg.plan_options();
    let traj = match cfg.mode {
        ScanMode::Stripmap => plan_stripmap(&report, &radar, &cfg.scene, &opts)?,
        ScanMode::Spotlight => plan_spotlight(&report, &radar, &cfg.scene, &opts)?,
    };
    let violations = validate_trajectory(&traj, &report);
    let cruise_velocity = opts
        .cruise_velocity
        .unwrap_or_else(|| default_cruise_velocity(report.max_velocity));
    let summary = PlanSummary {
        mode: traj.mode,
        cruise_velocity,
        accel_duration: opts.accel_duration,
        cruise_sample_spacing: cruise_velocity / radar.prf,
        n_samples: traj.samples.len(),
        n_imaging_samples: traj.imaging_samples().count(),
        slice_heights: traj.slice_heights.clone(),
        duration: traj.duration(),
        constraints: report,
        violations,
    };

    let csv_path = out.join(TRAJECTORY_CSV);
    let mut w = create(&csv_path)?;
    with_path(&csv_path, write_trajectory_csv(&traj, &mut w))?;
    finish(w, &csv_path)?;
    write_json(&out.join(PLAN_JSON), &versioned(&summary))?;

    if let Some(first) = summary.violations.first() {
        let listing: Vec<String> = summary
            .violations
            .iter()
            .take(10)
            .map(|v| format!("sample {}: {:?} {:.6} exceeds {:.6}", v.index, v.kind, v.actual, v.limit))
            .collect();
        return Err(CliError::Plan(format!(
            "{} violation(s), first at sample {}\n  {}",
            summary.violations.len(),
            first.index,
            listing.join("\n  ")
        )));
    }
    Ok((traj, summary))
}

pub fn read_trajectory(path: &Path) -> CliResult<PoseTrajectory> {
    with_path(path, read_trajectory_csv(open(path)?))
}

/// Parses `q1,...,q6` in radians.
pub fn parse_joints(text: &str) -> CliResult<JointVector> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == 6 => Ok(JointVector([v[0], v[1], v[2], v[3], v[4], v[5]])),
        _ => Err(CliError::Config(format!(
            "--seed-joints: expected six comma-separated radians, got {text:?}"
        ))),
    }
}

pub fn cmd_ik(cfg: &RunConfig, trajectory: &Path, seed: Option<&JointVector>, out: &Path) -> CliResult<JointTrajectory> {
    let traj = read_trajectory(trajectory)?;
    let model = cfg.arm();
    if let Some(q) = seed {
        if !model.within_limits(q) {
            return Err(CliError::Config("--seed-joints: outside the joint limits".into()));
        }
    }
    let issues = check_workspace(&model, &traj, &cfg.keepout);
    if let Some(first) = issues.first() {
        let p = traj.samples[first.index].position;
        return Err(CliError::Kinematics(format!(
            "{} workspace violation(s); first at sample {} [{:.6}, {:.6}, {:.6}] m: {:?}",
            issues.len(),
            first.index,
            p.x,
            p.y,
            p.z,
            first.issue
        )));
    }
    let joints = solve_trajectory(&model, &traj, seed)?;
    let path = out.join(JOINTS_CSV);
    let mut w = create(&path)?;
    with_path(&path, write_joint_csv(&joints, &mut w))?;
    finish(w, &path)?;
    Ok(joints)
}

pub fn cmd_simulate(cfg: &RunConfig, trajectory: &Path, out: &Path) -> CliResult<EchoSet> {
    let traj = read_trajectory(trajectory)?;
    let echoes = synthesize_echoes(&cfg.scene, &traj, &cfg.radar(), cfg.n_freqs)?;
    let path = out.join(ECHOES_BIN);
    let mut w = create(&path)?;
    with_path(&path, write_echoes(&echoes, &mut w))?;
    finish(w, &path)?;
    Ok(echoes)
}

#[derive(Serialize)]
struct ImageSidecar<'a> {
    pgm: &'static str,
    binary: &'static str,
    grid: &'a ImageGrid,
    window: Window,
    db_window: f64,
    n_pulses: usize,
    n_freqs: usize,
    peak_magnitude: f64,
    peak_position: [f64; 3],
    radar: Value,
}

pub fn cmd_image(cfg: &RunConfig, echoes: &Path, window: Window, out: &Path) -> CliResult<SarImage> {
    let set = with_path(echoes, read_echoes(open(echoes)?))?;
    let grid = cfg.grid();
    let img = backproject(&set, &grid, window, &cfg.radar())?;

    let pgm_path = out.join(IMAGE_PGM);
    let mut w = create(&pgm_path)?;
    w.write_all(img.to_pgm().as_bytes()).map_err(|e| CliError::io(&pgm_path, e))?;
    finish(w, &pgm_path)?;

    let bin_path = out.join(IMAGE_BIN);
    let mut w = create(&bin_path)?;
    with_path(&bin_path, write_image(&img, &mut w))?;
    finish(w, &bin_path)?;

    let mags = img.magnitudes();
    let (argmax, peak) = mags
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
    let sidecar = ImageSidecar {
        pgm: IMAGE_PGM,
        binary: IMAGE_BIN,
        grid: &img.grid,
        window,
        db_window: PGM_DB_WINDOW,
        n_pulses: set.n_pulses(),
        n_freqs: set.n_freqs(),
        peak_magnitude: peak,
        peak_position: img.grid.point(img.grid.coords(argmax)).into(),
        radar: json!({
            "center_frequency": cfg.radar.center_frequency,
            "bandwidth": cfg.radar.bandwidth,
            "prf": cfg.radar.prf,
            "beamwidth_x_deg": cfg.radar.beamwidth_x_deg,
            "beamwidth_y_deg": cfg.radar.beamwidth_y_deg,
            "tx_rx_offset": cfg.radar.tx_rx_offset,
        }),
    };
    write_json(&out.join(IMAGE_JSON), &versioned(&sidecar))?;
    Ok(img)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    pub expected: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn bounds_check(name: String, value: Option<f64>, bounds: [f64; 2]) -> Check {
    Check {
        passed: value.is_some_and(|v| v >= bounds[0] && v <= bounds[1]),
        name,
        measured: json!(value),
        expected: json!({ "min": bounds[0], "max": bounds[1] }),
    }
}

/// Compares an image against expectations. Writes the report either way and
/// returns a verify error when any check fails.
pub fn cmd_verify(image: &Path, expect: &Path, out: &Path) -> CliResult<VerifyReport> {
    let img = with_path(image, read_image(open(image)?))?;
    let exp = Expectations::load(expect)?;
    let report = verify(&img, &exp)?;
    write_json(&out.join(VERIFY_JSON), &versioned(&report))?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(CliError::Verify(failed.join(", ")));
    }
    Ok(report)
}

pub fn verify(img: &SarImage, exp: &Expectations) -> CliResult<VerifyReport> {
    let mut checks = Vec::new();
    for (i, peak) in exp.peaks.iter().enumerate() {
        let at = peak.position.into();
        let m = match measure_resolution(img, &at) {
            Ok(m) => m,
            Err(e) => {
                checks.push(Check {
                    name: format!("peaks[{i}].found"),
                    passed: false,
                    measured: json!(e.to_string()),
                    expected: json!(peak.position),
                });
                continue;
            }
        };
        if let Some(b) = peak.width_x {
            checks.push(bounds_check(format!("peaks[{i}].width_x"), Some(m.width_x), b));
        }
        if let Some(b) = peak.width_range {
            checks.push(bounds_check(format!("peaks[{i}].width_range"), Some(m.width_range), b));
        }
        if let Some(b) = peak.width_y {
            checks.push(bounds_check(format!("peaks[{i}].width_y"), m.width_y, b));
        }
        if let Some(limit) = peak.max_peak_sidelobe_ratio {
            checks.push(Check {
                name: format!("peaks[{i}].peak_sidelobe_ratio"),
                passed: m.peak_sidelobe_ratio <= limit,
                measured: json!(m.peak_sidelobe_ratio),
                expected: json!({ "max": limit }),
            });
        }
    }
    for (i, pair) in exp.pairs.iter().enumerate() {
        let r = resolvability_check(img, &pair.a.into(), &pair.b.into())
            .map_err(|e| CliError::Config(format!("pairs[{i}]: {e}")))?;
        checks.push(Check {
            name: format!("pairs[{i}].resolved"),
            passed: r.resolved == pair.resolved,
            measured: json!({ "resolved": r.resolved, "dip_depth_db": r.dip_depth_db }),
            expected: json!({ "resolved": pair.resolved }),
        });
    }
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Paths of every artifact a full run leaves in `out`.
pub fn artifact_paths(out: &Path) -> Vec<PathBuf> {
    [
        CONSTRAINTS_JSON,
        TRAJECTORY_CSV,
        PLAN_JSON,
        JOINTS_CSV,
        ECHOES_BIN,
        IMAGE_PGM,
        IMAGE_JSON,
        IMAGE_BIN,
    ]
    .iter()
    .map(|f| out.join(f))
    .collect()
}

/// The whole chain: constraints, plan, joints, echoes, image and, when
/// expectations are given, verification.
pub fn cmd_run(cfg: &RunConfig, seed: Option<&JointVector>, expect: Option<&Path>, out: &Path) -> CliResult<()> {
    cmd_constraints(cfg, out)?;
    cmd_plan(cfg, out)?;
    let traj = out.join(TRAJECTORY_CSV);
    cmd_ik(cfg, &traj, seed, out)?;
    cmd_simulate(cfg, &traj, out)?;
    cmd_image(cfg, &out.join(ECHOES_BIN), cfg.window, out)?;
    if let Some(expect) = expect {
        cmd_verify(&out.join(IMAGE_BIN), expect, out)?;
    }
    Ok(())
}
