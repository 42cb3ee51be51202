//! Forward and inverse kinematics of a configurable 6-revolute serial arm
//! described by standard Denavit-Hartenberg rows, plus trajectory-level helpers.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::ops::{Index, IndexMut};

use nalgebra::{Isometry3, Matrix3, Matrix6, Rotation3, Translation3, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::trajectory::PoseTrajectory;

pub const DOF: usize = 6;

/// One standard DH row: `Rz(q + joint_angle_offset) Tz(link_offset) Tx(link_length) Rx(link_twist)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub link_twist: f64,
    pub link_length: f64,
    pub link_offset: f64,
    pub joint_angle_offset: f64,
}

impl DhRow {
    pub const fn new(link_twist: f64, link_length: f64, link_offset: f64, joint_angle_offset: f64) -> Self {
        Self {
            link_twist,
            link_length,
            link_offset,
            joint_angle_offset,
        }
    }

    pub fn transform(&self, q: f64) -> Isometry3<f64> {
        let rz = Isometry3::from_parts(
            Translation3::new(0.0, 0.0, self.link_offset),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q + self.joint_angle_offset),
        );
        let rx = Isometry3::from_parts(
            Translation3::new(self.link_length, 0.0, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.link_twist),
        );
        rz * rx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub [f64; DOF]);

impl JointVector {
    pub fn zeros() -> Self {
        Self([0.0; DOF])
    }

    pub fn max_abs_diff(&self, other: &JointVector) -> (usize, f64) {
        (0..DOF)
            .map(|i| (i, (self.0[i] - other.0[i]).abs()))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

impl Index<usize> for JointVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<[f64; DOF]> for JointVector {
    fn from(a: [f64; DOF]) -> Self {
        Self(a)
    }
}

/// Serial arm description. Deserializes from the JSON arm-model document where the
/// tool transform is a 4x4 row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmModelDoc", into = "ArmModelDoc")]
pub struct ArmModel {
    pub dh_rows: [DhRow; DOF],
    pub joint_limits: [(f64, f64); DOF],
    /// Flange to antenna phase center.
    pub tool_transform: Isometry3<f64>,
    /// rad/s
    pub rate_limits: [f64; DOF],
    pub home: JointVector,
    pub min_reach: f64,
    pub max_reach: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArmModelDoc {
    dh_rows: Vec<DhRow>,
    joint_limits: Vec<[f64; 2]>,
    tool_transform: [[f64; 4]; 4],
    #[serde(default)]
    rate_limits: Option<Vec<f64>>,
    #[serde(default)]
    home: Option<Vec<f64>>,
    #[serde(default)]
    min_reach: Option<f64>,
    #[serde(default)]
    max_reach: Option<f64>,
}

/// Per-joint rate limit used when the model does not give one, rad/s.
pub const DEFAULT_RATE_LIMIT: f64 = 1.5;

fn six<T: Copy>(name: &str, v: &[T]) -> Result<[T; DOF]> {
    v.try_into()
        .map_err(|_| domain(format!("{name} must have {DOF} entries, got {}", v.len())))
}

/// Converts a 4x4 row-major homogeneous matrix into a rigid transform, rejecting
/// anything that is not a proper rotation plus translation.
pub fn rigid_from_rows(m: &[[f64; 4]; 4]) -> Result<Isometry3<f64>> {
    let rot = Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    );
    let ortho = (rot.transpose() * rot - Matrix3::identity()).abs().max();
    if ortho > 1e-9 || (rot.determinant() - 1.0).abs() > 1e-9 {
        return Err(domain("tool_transform rotation must be orthonormal with determinant +1"));
    }
    if m[3] != [0.0, 0.0, 0.0, 1.0] {
        return Err(domain("tool_transform last row must be [0, 0, 0, 1]"));
    }
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rot));
    Ok(Isometry3::from_parts(Translation3::new(m[0][3], m[1][3], m[2][3]), q))
}

pub fn rows_from_rigid(t: &Isometry3<f64>) -> [[f64; 4]; 4] {
    let h = t.to_homogeneous();
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = h[(r, c)];
        }
    }
    out
}

impl TryFrom<ArmModelDoc> for ArmModel {
    type Error = Error;

    fn try_from(doc: ArmModelDoc) -> Result<Self> {
        let dh_rows = six("dh_rows", &doc.dh_rows)?;
        let limits = six("joint_limits", &doc.joint_limits)?;
        let tool_transform = rigid_from_rows(&doc.tool_transform)?;
        let rate_limits = match doc.rate_limits {
            Some(r) => six("rate_limits", &r)?,
            None => [DEFAULT_RATE_LIMIT; DOF],
        };
        let joint_limits = limits.map(|[lo, hi]| (lo, hi));
        let home = match doc.home {
            Some(h) => JointVector(six("home", &h)?),
            None => JointVector(joint_limits.map(|(lo, hi)| 0.5 * (lo + hi))),
        };
        let mut model = ArmModel {
            dh_rows,
            joint_limits,
            tool_transform,
            rate_limits,
            home,
            min_reach: doc.min_reach.unwrap_or(0.0),
            max_reach: 0.0,
        };
        model.max_reach = doc.max_reach.unwrap_or_else(|| model.reach_bound());
        model.validate()?;
        Ok(model)
    }
}

impl From<ArmModel> for ArmModelDoc {
    fn from(m: ArmModel) -> Self {
        ArmModelDoc {
            dh_rows: m.dh_rows.to_vec(),
            joint_limits: m.joint_limits.iter().map(|&(a, b)| [a, b]).collect(),
            tool_transform: rows_from_rigid(&m.tool_transform),
            rate_limits: Some(m.rate_limits.to_vec()),
            home: Some(m.home.0.to_vec()),
            min_reach: Some(m.min_reach),
            max_reach: Some(m.max_reach),
        }
    }
}

impl ArmModel {
    /// Approximate model of a small 6-axis educational arm (~0.8 m reach) with a
    /// side-looking antenna bracket. The link lengths are illustrative, not
    /// manufacturer data.
    ///
    /// The antenna sits 0.1 m out along the flange x axis, which is also its
    /// boresight. Its horizontal axis runs along the flange z axis so that the
    /// wrist stays well away from the q5 = 0 singularity over a vertical scan.
    /// Roll joints get ±270° of travel. The home pose faces +y on the elbow-down
    /// branch.
    pub fn r17_like() -> Self {
        let lim = 170f64.to_radians();
        let wrist = 170f64.to_radians();
        let roll = 270f64.to_radians();
        let tool = rigid_from_rows(&[
            [0.0, 1.0, 0.0, 0.1],
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .expect("static tool transform");
        let mut m = ArmModel {
            dh_rows: [
                DhRow::new(FRAC_PI_2, 0.0, 0.35, 0.0),
                DhRow::new(0.0, 0.4, 0.0, 0.0),
                DhRow::new(FRAC_PI_2, 0.0, 0.0, FRAC_PI_2),
                DhRow::new(-FRAC_PI_2, 0.0, 0.4, 0.0),
                DhRow::new(FRAC_PI_2, 0.0, 0.0, 0.0),
                DhRow::new(0.0, 0.0, 0.06, 0.0),
            ],
            joint_limits: [
                (-lim, lim),
                (-lim, lim),
                (-lim, lim),
                (-roll, roll),
                (-wrist, wrist),
                (-roll, roll),
            ],
            tool_transform: tool,
            rate_limits: [DEFAULT_RATE_LIMIT; DOF],
            home: JointVector::zeros(),
            min_reach: 0.0,
            max_reach: 0.0,
        };
        m.max_reach = m.reach_bound();
        m.home = JointVector([1.8063, -0.6614, 2.3791, -1.8039, -1.5366, -1.7137]);
        m
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &(lo, hi)) in self.joint_limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(domain(format!("joint_limits[{i}]: min must be below max")));
            }
        }
        for (i, r) in self.rate_limits.iter().enumerate() {
            if !(*r > 0.0) {
                return Err(domain(format!("rate_limits[{i}] must be positive")));
            }
        }
        if !(self.min_reach >= 0.0 && self.max_reach > self.min_reach) {
            return Err(domain("reach annulus must satisfy 0 <= min_reach < max_reach"));
        }
        Ok(())
    }

    /// Upper bound on the distance between the base origin and the tool point.
    pub fn reach_bound(&self) -> f64 {
        self.dh_rows
            .iter()
            .map(|r| r.link_length.abs() + r.link_offset.abs())
            .sum::<f64>()
            + self.tool_transform.translation.vector.norm()
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        self.joint_limits
            .iter()
            .zip(q.0.iter())
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    pub fn clamp(&self, q: &mut JointVector) {
        for (v, &(lo, hi)) in q.0.iter_mut().zip(self.joint_limits.iter()) {
            *v = v.clamp(lo, hi);
        }
    }
}

/// Base-frame pose of each joint frame: entry `i` is the frame whose z axis is joint `i + 1`'s
/// rotation axis; the last entry is the tool frame.
fn frames(model: &ArmModel, q: &JointVector) -> [Isometry3<f64>; DOF + 1] {
    let mut out = [Isometry3::identity(); DOF + 1];
    let mut t = Isometry3::identity();
    for i in 0..DOF {
        out[i] = t;
        t *= model.dh_rows[i].transform(q[i]);
    }
    out[DOF] = t * model.tool_transform;
    out
}

/// Tool (antenna phase center) pose in the base frame.
pub fn forward_kinematics(model: &ArmModel, q: &JointVector) -> Isometry3<f64> {
    let mut t = Isometry3::identity();
    for (row, &angle) in model.dh_rows.iter().zip(q.0.iter()) {
        t *= row.transform(angle);
    }
    t * model.tool_transform
}

/// Geometric Jacobian at the tool point: rows 0..3 linear velocity, 3..6 angular, both in the base frame.
pub fn jacobian(model: &ArmModel, q: &JointVector) -> Matrix6<f64> {
    let f = frames(model, q);
    let tip = f[DOF].translation.vector;
    let mut j = Matrix6::zeros();
    for (i, frame) in f.iter().take(DOF).enumerate() {
        let z = frame.rotation * Vector3::z();
        let o = frame.translation.vector;
        let lin = z.cross(&(tip - o));
        j.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    j
}

/// Yoshikawa manipulability `sqrt(det(J Jᵀ))`.
pub fn manipulability(model: &ArmModel, q: &JointVector) -> f64 {
    let j = jacobian(model, q);
    (j * j.transpose()).determinant().max(0.0).sqrt()
}

/// Position error and rotation-vector orientation error, both in the base frame.
pub fn pose_error(current: &Isometry3<f64>, target: &Isometry3<f64>) -> Vector6<f64> {
    let dp = target.translation.vector - current.translation.vector;
    let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkConfig {
    /// Upper bound on the damping factor λ. The factor used at each step is
    /// `min(damping, |e|)`, so it fades out as the residual shrinks.
    pub damping: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the combined 6-vector error norm.
    pub tolerance: f64,
    /// Largest joint change per iteration, rad.
    pub max_step: f64,
    /// Manipulability below which a failure is reported as singular.
    pub singularity_threshold: f64,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            damping: 0.05,
            max_iterations: 200,
            tolerance: 1e-8,
            max_step: 0.3,
            singularity_threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub joints: JointVector,
    pub iterations: usize,
    pub residual: f64,
}

/// Damped least-squares IK: `dq = Jᵀ (J Jᵀ + λ² I)⁻¹ e`, clamped to the joint limits
/// after every step. λ follows the residual down so that targets near a
/// singularity still converge instead of stalling along the weak directions.
pub fn solve_ik(
    model: &ArmModel,
    target: &Isometry3<f64>,
    seed: &JointVector,
    cfg: &IkConfig,
) -> Result<IkSolution> {
    let reach = target.translation.vector.norm();
    if reach > model.max_reach {
        return Err(Error::Unreachable {
            iterations: 0,
            residual: reach - model.max_reach,
            manipulability: 0.0,
            singular: false,
        });
    }
    let mut q = *seed;
    model.clamp(&mut q);
    let mut best = (f64::INFINITY, q);
    for iteration in 0..=cfg.max_iterations {
        let err = pose_error(&forward_kinematics(model, &q), target);
        let norm = err.norm();
        if norm < best.0 {
            best = (norm, q);
        }
        if norm < cfg.tolerance {
            return Ok(IkSolution {
                joints: q,
                iterations: iteration,
                residual: norm,
            });
        }
        if iteration == cfg.max_iterations {
            break;
        }
        let j = jacobian(model, &q);
        let lambda = cfg.damping.min(norm);
        let a = j * j.transpose() + Matrix6::identity() * (lambda * lambda);
        let y = match a.cholesky() {
            Some(c) => c.solve(&err),
            None => break,
        };
        let mut dq = j.transpose() * y;
        let largest = dq.amax();
        if largest > cfg.max_step {
            dq *= cfg.max_step / largest;
        }
        for i in 0..DOF {
            q[i] += dq[i];
        }
        model.clamp(&mut q);
    }
    let manip = manipulability(model, &best.1);
    Err(Error::Unreachable {
        iterations: cfg.max_iterations,
        residual: best.0,
        manipulability: manip,
        singular: manip < cfg.singularity_threshold,
    })
}

/// Joint angles reaching `target`, starting the search at `seed`.
pub fn inverse_kinematics(model: &ArmModel, target: &Isometry3<f64>, seed: &JointVector) -> Result<JointVector> {
    solve_ik(model, target, seed, &IkConfig::default()).map(|s| s.joints)
}

/// Walks from the seed's own pose to `target` in small steps so a distant first
/// pose can still be reached from the home configuration.
fn solve_by_continuation(
    model: &ArmModel,
    target: &Isometry3<f64>,
    seed: &JointVector,
    cfg: &IkConfig,
    steps: usize,
) -> Result<JointVector> {
    let start = forward_kinematics(model, seed);
    let mut q = *seed;
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let pos = start.translation.vector.lerp(&target.translation.vector, s);
        let rot = start.rotation.slerp(&target.rotation, s);
        let waypoint = Isometry3::from_parts(Translation3::from(pos), rot);
        q = solve_ik(model, &waypoint, &q, cfg)?.joints;
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSample {
    pub time: f64,
    pub joints: JointVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointTrajectory {
    pub samples: Vec<JointSample>,
}

/// Sequential IK over a pose trajectory, each sample seeded with its predecessor.
pub fn solve_trajectory(
    model: &ArmModel,
    traj: &PoseTrajectory,
    seed: Option<&JointVector>,
) -> Result<JointTrajectory> {
    let cfg = IkConfig::default();
    let mut out = JointTrajectory {
        samples: Vec::with_capacity(traj.samples.len()),
    };
    let wrap = |index: usize, p: &Vector3<f64>, e: Error| Error::SampleFailed {
        index,
        x: p.x,
        y: p.y,
        z: p.z,
        source: Box::new(e),
    };
    let mut prev: Option<JointSample> = None;
    for (index, s) in traj.samples.iter().enumerate() {
        let target = s.pose();
        let joints = match prev {
            None => {
                let start = seed.copied().unwrap_or(model.home);
                match inverse_kinematics(model, &target, &start) {
                    Ok(q) => q,
                    Err(_) => solve_by_continuation(model, &target, &start, &cfg, 50)
                        .map_err(|e| wrap(index, &s.position, e))?,
                }
            }
            Some(p) => {
                if !(s.time > p.time) {
                    return Err(wrap(
                        index,
                        &s.position,
                        domain("sample times must be strictly increasing"),
                    ));
                }
                let q = inverse_kinematics(model, &target, &p.joints)
                    .map_err(|e| wrap(index, &s.position, e))?;
                let (joint, step) = q.max_abs_diff(&p.joints);
                if step > FRAC_PI_2 {
                    return Err(Error::BranchFlip {
                        index: index - 1,
                        joint: joint + 1,
                        step,
                    });
                }
                let dt = s.time - p.time;
                for i in 0..DOF {
                    let rate = (q[i] - p.joints[i]).abs() / dt;
                    if rate > model.rate_limits[i] {
                        return Err(Error::RateLimit {
                            index: index - 1,
                            joint: i + 1,
                            rate,
                            limit: model.rate_limits[i],
                        });
                    }
                }
                q
            }
        };
        let sample = JointSample { time: s.time, joints };
        out.samples.push(sample);
        prev = Some(sample);
    }
    Ok(out)
}

/// Axis-aligned keep-out region in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkspaceIssue {
    InsideKeepout { keepout: usize },
    OutsideReach { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceViolation {
    pub index: usize,
    #[serde(flatten)]
    pub issue: WorkspaceIssue,
}

/// End-effector point checks against keep-out boxes and the reach annulus.
pub fn check_workspace(model: &ArmModel, traj: &PoseTrajectory, keepout: &[Aabb]) -> Vec<WorkspaceViolation> {
    let mut out = Vec::new();
    for (index, s) in traj.samples.iter().enumerate() {
        let distance = s.position.norm();
        if distance < model.min_reach || distance > model.max_reach {
            out.push(WorkspaceViolation {
                index,
                issue: WorkspaceIssue::OutsideReach { distance },
            });
        }
        for (k, b) in keepout.iter().enumerate() {
            if b.contains(&s.position) {
                out.push(WorkspaceViolation {
                    index,
                    issue: WorkspaceIssue::InsideKeepout { keepout: k },
                });
            }
        }
    }
    out
}

pub const JOINT_CSV_HEADER: &str = "time_s,q1,q2,q3,q4,q5,q6";

pub fn write_joint_csv<W: Write>(traj: &JointTrajectory, mut w: W) -> Result<()> {
    writeln!(w, "{JOINT_CSV_HEADER}")?;
    for s in &traj.samples {
        write!(w, "{:.9}", s.time)?;
        for q in s.joints.0 {
            write!(w, ",{q:.9}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
