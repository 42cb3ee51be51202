#![allow(dead_code)]

use sarplan_core::constraints::{build_report, ConstraintReport, RadarSpec, SceneSpec};

/// 8 GHz / 4 GHz sensor with 20° beams, 12 Hz PRF, 5 cm Tx/Rx offset.
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

/// Suitcase scene half a metre in front of the scan plane, 0.8 m x 0.5 m aperture.
pub fn suitcase() -> SceneSpec {
    SceneSpec {
        target_dx: 0.5,
        target_dy: 0.3,
        standoff_range: 0.5,
        relative_permittivity: 1.0,
        center: [0.0, 0.85, 0.5],
        scatterers: vec![],
        aperture_x: Some(0.8),
        aperture_y: Some(0.5),
    }
}

pub fn suitcase_report() -> ConstraintReport {
    build_report(&radar(), &suitcase()).unwrap()
}
