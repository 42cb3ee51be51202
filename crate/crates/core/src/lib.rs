//! Planning and verification toolkit for UWB SAR acquisitions with a sensor head
//! carried by a 6-axis arm.
//!
//! * [`constraints`] turns radar and scene parameters into resolution, aperture and
//!   sampling limits.
//! * [`trajectory`] builds trapezoidal-profile meander scans that respect them.
//! * [`kinematics`] maps those scans to joint space.
//! * [`sim`] synthesizes point-target echoes along a scan and focuses them by
//!   back-projection to check the achieved resolution.

pub mod constraints;
pub mod error;
pub mod kinematics;
pub mod sim;
pub mod trajectory;

pub use constraints::{build_report, ConstraintReport, RadarSpec, SceneSpec, Scatterer};
pub use error::{Error, Result};
pub use kinematics::{ArmModel, JointTrajectory, JointVector};
pub use sim::{EchoSet, ImageGrid, SarImage, Window};
pub use trajectory::{PlanOptions, PoseSample, PoseTrajectory, ScanMode};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
