//! Time-parameterised end-effector trajectories: trapezoidal velocity profiles,
//! meander (stripmap) and target-tracking (spotlight) scan plans, plan validation,
//! and the trajectory CSV exchange format.
//!
//! World frame: `x` is the scan direction, `y` the antenna boresight at rest and
//! `z` up. Quaternions are scalar-first in the CSV.

use std::io::{Read, Write};

use nalgebra::{Isometry3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintReport, RadarSpec, SceneSpec};
use crate::error::{domain, Error, Result};

/// Default ramp duration of each linear move, seconds.
pub const DEFAULT_ACCEL_DURATION: f64 = 2.0;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub cruise_velocity: f64,
    pub accel_duration: f64,
    pub cruise_distance: f64,
    pub total_distance: f64,
    pub total_duration: f64,
}

impl VelocityProfile {
    pub fn cruise_duration(&self) -> f64 {
        self.cruise_distance / self.cruise_velocity
    }

    fn accel(&self) -> f64 {
        self.cruise_velocity / self.accel_duration
    }

    /// Speed at `time`, clamped to the profile's support.
    pub fn velocity(&self, time: f64) -> f64 {
        let t = time.clamp(0.0, self.total_duration);
        let decel_start = self.accel_duration + self.cruise_duration();
        if t < self.accel_duration {
            self.accel() * t
        } else if t <= decel_start {
            self.cruise_velocity
        } else {
            self.accel() * (self.total_duration - t)
        }
    }

    /// Arc length covered at `time`, clamped to the profile's support.
    fn position_clamped(&self, time: f64) -> f64 {
        let t = time.clamp(0.0, self.total_duration);
        let ramp = 0.5 * self.cruise_velocity * self.accel_duration;
        let decel_start = self.accel_duration + self.cruise_duration();
        if t < self.accel_duration {
            0.5 * self.accel() * t * t
        } else if t <= decel_start {
            ramp + self.cruise_velocity * (t - self.accel_duration)
        } else {
            let rem = self.total_duration - t;
            self.total_distance - 0.5 * self.accel() * rem * rem
        }
    }

    /// True while the profile moves at cruise speed.
    pub fn is_cruise(&self, time: f64) -> bool {
        time >= self.accel_duration - TIME_EPS
            && time <= self.accel_duration + self.cruise_duration() + TIME_EPS
    }
}

/// Ramp-up / constant / ramp-down profile covering `distance`.
///
/// Triangular profiles are not supported: the distance must leave a cruise phase.
pub fn trapezoid_profile(
    distance: f64,
    cruise_velocity: f64,
    accel_duration: f64,
) -> Result<VelocityProfile> {
    for (name, v) in [
        ("distance", distance),
        ("cruise_velocity", cruise_velocity),
        ("accel_duration", accel_duration),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let ramps = cruise_velocity * accel_duration;
    if !(distance > ramps) {
        return Err(Error::NoCruisePhase {
            distance,
            cruise_velocity,
            accel_duration,
        });
    }
    let cruise_distance = distance - ramps;
    Ok(VelocityProfile {
        cruise_velocity,
        accel_duration,
        cruise_distance,
        total_distance: distance,
        total_duration: cruise_distance / cruise_velocity + 2.0 * accel_duration,
    })
}

/// Arc length along the segment at `time`.
pub fn sample_position(profile: &VelocityProfile, time: f64) -> Result<f64> {
    if !(time >= 0.0 && time <= profile.total_duration) {
        return Err(domain(format!(
            "time {time} s outside [0, {}] s",
            profile.total_duration
        )));
    }
    Ok(profile.position_clamped(time))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Stripmap,
    Spotlight,
}

/// One commanded end-effector pose. `imaging` is false on ramps and transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    pub time: f64,
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub imaging: bool,
}

impl PoseSample {
    pub fn pose(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// Unit boresight direction in the world frame.
    pub fn boresight(&self) -> Vector3<f64> {
        self.orientation * Vector3::y()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    pub samples: Vec<PoseSample>,
    pub mode: ScanMode,
    pub slice_heights: Vec<f64>,
}

impl PoseTrajectory {
    pub fn imaging_samples(&self) -> impl Iterator<Item = &PoseSample> {
        self.samples.iter().filter(|s| s.imaging)
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub accel_duration: f64,
    /// Overrides the default cruise velocity.
    pub cruise_velocity: Option<f64>,
    /// Plan only the slice through the scene center.
    pub single_slice: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            accel_duration: DEFAULT_ACCEL_DURATION,
            cruise_velocity: None,
            single_slice: false,
        }
    }
}

/// 0.1 m/s when the sampling cap allows it, otherwise 90 % of the cap.
pub fn default_cruise_velocity(max_velocity: f64) -> f64 {
    if max_velocity >= 0.11 {
        0.1
    } else {
        0.9 * max_velocity
    }
}

/// Heights of the horizontal scan lines: pitch equal to the vertical sampling
/// spacing, centered on `center_z`, spanning at least `aperture_y`.
pub fn slice_heights(center_z: f64, aperture_y: f64, pitch: f64) -> Result<Vec<f64>> {
    if !(aperture_y >= 0.0) || !aperture_y.is_finite() {
        return Err(domain(format!(
            "no slices: aperture_length_y = {aperture_y} m"
        )));
    }
    if aperture_y == 0.0 {
        return Ok(vec![center_z]);
    }
    if !(pitch > 0.0) {
        return Err(domain(format!("slice pitch must be positive, got {pitch}")));
    }
    let n = (aperture_y / pitch - 1e-9).ceil() as usize + 1;
    let z0 = center_z - (n - 1) as f64 * pitch / 2.0;
    Ok((0..n).map(|k| z0 + k as f64 * pitch).collect())
}

/// Rotation whose boresight (+y) points from `from` to `target`, keeping the
/// antenna x axis horizontal. `None` when the direction is zero or vertical.
pub fn look_at(from: &Vector3<f64>, target: &Vector3<f64>) -> Option<UnitQuaternion<f64>> {
    let d = target - from;
    let norm = d.norm();
    if norm < 1e-12 {
        return None;
    }
    let boresight = d / norm;
    let right = boresight.cross(&Vector3::z());
    if right.norm() < 1e-9 {
        return None;
    }
    let right = right.normalize();
    let up = right.cross(&boresight);
    let rot = Rotation3::from_basis_unchecked(&[right, boresight, up]);
    Some(UnitQuaternion::from_rotation_matrix(&rot))
}

/// Emits samples of one linear move at multiples of `dt`, skipping t = 0 when
/// `skip_first` is set. Returns the local end time.
#[allow(clippy::too_many_arguments)]
fn emit_linear(
    out: &mut Vec<(f64, Vector3<f64>, bool)>,
    t0: f64,
    start: Vector3<f64>,
    dir: Vector3<f64>,
    profile: &VelocityProfile,
    dt: f64,
    imaging_segment: bool,
    skip_first: bool,
) {
    let total = profile.total_duration;
    let mut i = if skip_first { 1u64 } else { 0 };
    loop {
        let t = i as f64 * dt;
        if t >= total - TIME_EPS {
            break;
        }
        let s = profile.position_clamped(t);
        out.push((t0 + t, start + dir * s, imaging_segment && profile.is_cruise(t)));
        i += 1;
    }
    out.push((
        t0 + total,
        start + dir * profile.total_distance,
        imaging_segment && profile.is_cruise(total),
    ));
}

fn plan(
    mode: ScanMode,
    report: &ConstraintReport,
    radar: &RadarSpec,
    scene: &SceneSpec,
    opts: &PlanOptions,
) -> Result<PoseTrajectory> {
    radar.validate()?;
    scene.validate()?;
    let velocity = opts
        .cruise_velocity
        .unwrap_or_else(|| default_cruise_velocity(report.max_velocity));
    let dt = 1.0 / radar.prf;
    let center = Vector3::from(scene.center);
    let scan_y = center.y - scene.standoff_range;
    let half = report.aperture_length_x / 2.0;

    let heights = if opts.single_slice {
        vec![center.z]
    } else {
        slice_heights(center.z, report.aperture_length_y, report.sampling_spacing_y)?
    };
    let line = trapezoid_profile(report.aperture_length_x, velocity, opts.accel_duration)?;

    let mut raw: Vec<(f64, Vector3<f64>, bool)> = Vec::new();
    let mut t0 = 0.0;
    for (k, &z) in heights.iter().enumerate() {
        let forward = k % 2 == 0;
        let (x_start, dir) = if forward {
            (center.x - half, Vector3::x())
        } else {
            (center.x + half, -Vector3::x())
        };
        let start = Vector3::new(x_start, scan_y, z);
        if k > 0 {
            let prev = raw.last().expect("previous slice").1;
            let rise = z - prev.z;
            let v_up = velocity.min(rise / (2.0 * opts.accel_duration));
            let step = trapezoid_profile(rise, v_up, opts.accel_duration)?;
            emit_linear(&mut raw, t0, prev, Vector3::z(), &step, dt, false, true);
            t0 += step.total_duration;
        }
        emit_linear(&mut raw, t0, start, dir, &line, dt, true, k > 0);
        t0 += line.total_duration;
    }

    let mut samples = Vec::with_capacity(raw.len());
    let mut prev_q: Option<UnitQuaternion<f64>> = None;
    for (index, (time, position, imaging)) in raw.into_iter().enumerate() {
        let orientation = match mode {
            ScanMode::Stripmap => UnitQuaternion::identity(),
            ScanMode::Spotlight => {
                let mut q = look_at(&position, &center).ok_or(Error::DegenerateLookAt { index })?;
                if let Some(p) = prev_q {
                    if p.coords.dot(&q.coords) < 0.0 {
                        q = UnitQuaternion::new_unchecked(-q.into_inner());
                    }
                }
                prev_q = Some(q);
                q
            }
        };
        samples.push(PoseSample {
            time,
            position,
            orientation,
            imaging,
        });
    }
    Ok(PoseTrajectory {
        samples,
        mode,
        slice_heights: heights,
    })
}

/// Meander of horizontal lines with a fixed antenna orientation.
pub fn plan_stripmap(
    report: &ConstraintReport,
    radar: &RadarSpec,
    scene: &SceneSpec,
    opts: &PlanOptions,
) -> Result<PoseTrajectory> {
    plan(ScanMode::Stripmap, report, radar, scene, opts)
}

/// Same path as [`plan_stripmap`], with the boresight steered at the scene center.
pub fn plan_spotlight(
    report: &ConstraintReport,
    radar: &RadarSpec,
    scene: &SceneSpec,
    opts: &PlanOptions,
) -> Result<PoseTrajectory> {
    plan(ScanMode::Spotlight, report, radar, scene, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Scan-axis distance between consecutive imaging samples.
    Spacing,
    Speed,
    /// Consecutive samples share a timestamp (or go backwards).
    UndefinedSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the first sample of the offending pair.
    pub index: usize,
    pub kind: ViolationKind,
    pub limit: f64,
    pub actual: f64,
}

/// Checks a realized trajectory against the sampling and velocity limits.
pub fn validate_trajectory(traj: &PoseTrajectory, report: &ConstraintReport) -> Vec<Violation> {
    const TOL: f64 = 1e-9;
    let mut out = Vec::new();
    for (index, pair) in traj.samples.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if a.imaging && b.imaging {
            let spacing = (b.position.x - a.position.x).abs();
            if spacing > report.sampling_spacing_x + TOL {
                out.push(Violation {
                    index,
                    kind: ViolationKind::Spacing,
                    limit: report.sampling_spacing_x,
                    actual: spacing,
                });
            }
        }
        let dt = b.time - a.time;
        if !(dt > 0.0) {
            out.push(Violation {
                index,
                kind: ViolationKind::UndefinedSpeed,
                limit: report.max_velocity,
                actual: dt,
            });
            continue;
        }
        let speed = (b.position - a.position).norm() / dt;
        if speed > report.max_velocity + TOL {
            out.push(Violation {
                index,
                kind: ViolationKind::Speed,
                limit: report.max_velocity,
                actual: speed,
            });
        }
    }
    out
}

pub const TRAJECTORY_CSV_HEADER: &str = "time_s,x_m,y_m,z_m,qw,qx,qy,qz,imaging_flag";

/// Writes the trajectory CSV (one header line, nine decimals).
pub fn write_trajectory_csv<W: Write>(traj: &PoseTrajectory, mut w: W) -> Result<()> {
    writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
    for s in &traj.samples {
        let q = s.orientation.quaternion();
        writeln!(
            w,
            "{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{}",
            s.time,
            s.position.x,
            s.position.y,
            s.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
            u8::from(s.imaging)
        )?;
    }
    Ok(())
}

/// Reads a trajectory CSV. The mode is inferred (spotlight when orientations vary)
/// and slice heights are the distinct heights of imaging runs.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<PoseTrajectory> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.join(",") != TRAJECTORY_CSV_HEADER {
        return Err(Error::Format(format!(
            "unexpected trajectory header '{}'",
            header.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 9 {
            return Err(Error::Format(format!("row {row}: expected 9 columns")));
        }
        let mut v = [0.0; 8];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = rec[j]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {row}: bad number '{}'", &rec[j])))?;
        }
        let imaging = match rec[8].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Format(format!("row {row}: bad imaging flag '{other}'")))
            }
        };
        let q: nalgebra::Quaternion<f64> = nalgebra::Quaternion::new(v[4], v[5], v[6], v[7]);
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Format(format!("row {row}: quaternion is not unit")));
        }
        samples.push(PoseSample {
            time: v[0],
            position: Vector3::new(v[1], v[2], v[3]),
            orientation: UnitQuaternion::from_quaternion(q),
            imaging,
        });
    }
    let mode = match samples.first() {
        Some(first) if samples.iter().any(|s| s.orientation.angle_to(&first.orientation) > 1e-6) => {
            ScanMode::Spotlight
        }
        _ => ScanMode::Stripmap,
    };
    let mut slice_heights: Vec<f64> = Vec::new();
    for s in samples.iter().filter(|s| s.imaging) {
        if slice_heights.last().is_none_or(|z| (z - s.position.z).abs() > 1e-7) {
            slice_heights.push(s.position.z);
        }
    }
    Ok(PoseTrajectory {
        samples,
        mode,
        slice_heights,
    })
}
