//! Shared fixtures for the pipeline benchmarks: the desk-scale suitcase scene
//! scanned by an 8 GHz / 4 GHz sensor.

use sarplan_core::constraints::{build_report, ConstraintReport, RadarSpec, Scatterer, SceneSpec};
use sarplan_core::trajectory::{plan_stripmap, PlanOptions, PoseTrajectory};

pub const CENTER: [f64; 3] = [0.0, 0.85, 0.5];

pub fn radar() -> RadarSpec {
    RadarSpec {
        center_frequency: 8e9,
        bandwidth: 4e9,
        prf: 12.0,
        beamwidth_x: 20f64.to_radians(),
        beamwidth_y: 20f64.to_radians(),
        tx_rx_offset: 0.05,
    }
}

/// Suitcase-sized box half a metre away with a single scatterer at its center.
pub fn scene() -> SceneSpec {
    SceneSpec {
        target_dx: 0.5,
        target_dy: 0.3,
        standoff_range: 0.5,
        relative_permittivity: 1.0,
        center: CENTER,
        scatterers: vec![Scatterer::unit(CENTER)],
        aperture_x: Some(0.8),
        aperture_y: Some(0.5),
    }
}

pub fn report() -> ConstraintReport {
    build_report(&radar(), &scene()).expect("fixture parameters are valid")
}

pub fn stripmap(single_slice: bool) -> PoseTrajectory {
    let opts = PlanOptions { single_slice, ..Default::default() };
    plan_stripmap(&report(), &radar(), &scene(), &opts).expect("fixture plan is valid")
}
