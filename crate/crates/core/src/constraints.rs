//! Closed-form resolution, scan-extent and spatial-sampling constraints for a
//! planar synthetic aperture, and their aggregation into a [`ConstraintReport`].
//!
//! Axis naming follows the aperture plane: `x` is the horizontal scan direction,
//! `y` the second aperture direction (height slices), and range is measured
//! along the antenna boresight.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::SPEED_OF_LIGHT;

/// Aperture lengths are rounded up to a multiple of this step.
pub const APERTURE_ROUNDING_STEP: f64 = 0.1;

/// Emitter/receiver parameters of the sensor head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarSpec {
    /// Hz
    pub center_frequency: f64,
    /// Hz
    pub bandwidth: f64,
    /// Pulse repetition frequency, Hz.
    pub prf: f64,
    /// Full beam angle along the scan direction, radians.
    pub beamwidth_x: f64,
    /// Full beam angle along the slice direction, radians.
    pub beamwidth_y: f64,
    /// Common-offset Tx/Rx baseline, meters.
    pub tx_rx_offset: f64,
}

impl RadarSpec {
    pub fn validate(&self) -> Result<()> {
        positive("radar.bandwidth", self.bandwidth)?;
        positive("radar.prf", self.prf)?;
        if !(self.center_frequency > self.bandwidth / 2.0) {
            return Err(domain(format!(
                "radar.center_frequency ({}) must exceed half the bandwidth ({})",
                self.center_frequency,
                self.bandwidth / 2.0
            )));
        }
        beam("radar.beamwidth_x", self.beamwidth_x)?;
        beam("radar.beamwidth_y", self.beamwidth_y)?;
        if !(self.tx_rx_offset >= 0.0) {
            return Err(domain("radar.tx_rx_offset must be non-negative"));
        }
        Ok(())
    }

    pub fn center_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_frequency
    }

    pub fn min_frequency(&self) -> f64 {
        self.center_frequency - self.bandwidth / 2.0
    }

    pub fn max_frequency(&self) -> f64 {
        self.center_frequency + self.bandwidth / 2.0
    }

    /// Wavelength at the top of the swept band.
    pub fn min_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.max_frequency()
    }
}

/// An ideal point reflector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: [f64; 3],
    pub reflectivity: f64,
}

impl Scatterer {
    pub fn unit(position: [f64; 3]) -> Self {
        Self {
            position,
            reflectivity: 1.0,
        }
    }
}

/// Target box, its placement, and the propagation medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Target extent along the scan direction, meters.
    pub target_dx: f64,
    /// Target extent along the slice direction, meters.
    pub target_dy: f64,
    /// Distance from the aperture plane to the target, meters.
    pub standoff_range: f64,
    pub relative_permittivity: f64,
    /// World position of the target box center. The aperture plane sits
    /// `standoff_range` in front of it along -y.
    pub center: [f64; 3],
    #[serde(default)]
    pub scatterers: Vec<Scatterer>,
    /// Operator-chosen aperture length along x; must cover the required extent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_x: Option<f64>,
    /// Operator-chosen aperture length along y; must cover the required extent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_y: Option<f64>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        positive("scene.target_dx", self.target_dx)?;
        positive("scene.target_dy", self.target_dy)?;
        positive("scene.standoff_range", self.standoff_range)?;
        if !(self.relative_permittivity >= 1.0) {
            return Err(domain("scene.relative_permittivity must be >= 1"));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(domain("scene.center must be finite"));
        }
        for (i, s) in self.scatterers.iter().enumerate() {
            if s.position.iter().any(|c| !c.is_finite()) || !s.reflectivity.is_finite() {
                return Err(domain(format!("scene.scatterers[{i}] must be finite")));
            }
        }
        Ok(())
    }
}

/// Everything the planner needs to know about resolution and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub range_resolution: f64,
    pub cross_range_resolution_x: f64,
    pub cross_range_resolution_y: f64,
    pub scan_margin_x: f64,
    pub scan_margin_y: f64,
    pub aperture_length_x: f64,
    pub aperture_length_y: f64,
    pub sampling_spacing_x: f64,
    pub sampling_spacing_y: f64,
    pub max_velocity: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn beam(name: &str, theta: f64) -> Result<()> {
    if theta > 0.0 && theta < std::f64::consts::PI {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, pi) rad, got {theta}")))
    }
}

/// Range resolution `c / 2B`.
pub fn range_resolution(bandwidth: f64) -> Result<f64> {
    positive("bandwidth", bandwidth)?;
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth))
}

/// Cross-range resolution from a synthetic aperture of length `aperture_length`.
pub fn cross_range_resolution_aperture(
    range: f64,
    wavelength: f64,
    aperture_length: f64,
) -> Result<f64> {
    positive("range", range)?;
    positive("wavelength", wavelength)?;
    positive("aperture_length", aperture_length)?;
    Ok(range * wavelength / (2.0 * aperture_length))
}

/// Cross-range resolution of a target sliding through a beam of full angle `beamwidth`.
pub fn cross_range_resolution_beam(wavelength: f64, beamwidth: f64) -> Result<f64> {
    positive("wavelength", wavelength)?;
    beam("beamwidth", beamwidth)?;
    Ok(wavelength / (2.0 * beamwidth))
}

/// Aperture length at which cross-range resolution equals range resolution: `R·B/fc`.
pub fn matched_aperture_length(range: f64, center_frequency: f64, bandwidth: f64) -> Result<f64> {
    positive("range", range)?;
    positive("center_frequency", center_frequency)?;
    positive("bandwidth", bandwidth)?;
    Ok(range * bandwidth / center_frequency)
}

/// Extra scan length on each side so the beam edge still covers the target edge.
pub fn scan_margin(range: f64, beamwidth: f64) -> Result<f64> {
    positive("range", range)?;
    beam("beamwidth", beamwidth)?;
    Ok(range * (beamwidth / 2.0).tan())
}

/// Largest inter-pulse spacing that keeps the phase history of every scatterer in
/// the target box unaliased. The wavelength is shortened by `sqrt(relative_permittivity)`.
pub fn nyquist_spacing(
    min_wavelength: f64,
    aperture_length: f64,
    target_dim: f64,
    range: f64,
    relative_permittivity: f64,
) -> Result<f64> {
    positive("min_wavelength", min_wavelength)?;
    positive("range", range)?;
    if !(relative_permittivity >= 1.0) || !relative_permittivity.is_finite() {
        return Err(domain(format!(
            "relative_permittivity must be >= 1, got {relative_permittivity}"
        )));
    }
    if !(aperture_length >= 0.0) || !(target_dim >= 0.0) {
        return Err(domain("aperture_length and target_dim must be non-negative"));
    }
    let span = aperture_length + target_dim;
    if !(span > 0.0) || !span.is_finite() {
        return Err(domain("aperture_length + target_dim must be positive and finite"));
    }
    let wavelength = min_wavelength / relative_permittivity.sqrt();
    Ok(wavelength / 2.0 * (span * span / 4.0 + range * range).sqrt() / span)
}

/// Platform speed that advances exactly `sampling_spacing` per pulse.
pub fn max_velocity(sampling_spacing: f64, prf: f64) -> Result<f64> {
    positive("sampling_spacing", sampling_spacing)?;
    positive("prf", prf)?;
    Ok(sampling_spacing * prf)
}

/// Smallest multiple of [`APERTURE_ROUNDING_STEP`] not below `length`.
pub fn round_up_aperture(length: f64) -> f64 {
    let steps = (length / APERTURE_ROUNDING_STEP - 1e-9).ceil();
    steps * APERTURE_ROUNDING_STEP
}

fn choose_aperture(axis: &str, required: f64, chosen: Option<f64>) -> Result<f64> {
    match chosen {
        None => Ok(round_up_aperture(required)),
        Some(l) if l.is_finite() && l >= required - 1e-12 => Ok(l),
        Some(l) => Err(domain(format!(
            "scene.aperture_{axis} = {l} m is shorter than the required {required:.4} m"
        ))),
    }
}

/// Evaluates every constraint for a radar/scene pair.
///
/// Aperture lengths cover the target plus a half-beam margin on each side and are
/// rounded up to 0.1 m unless the scene fixes them explicitly. Sampling spacings use
/// the chosen (rounded) lengths; the velocity cap follows the scan-direction spacing.
pub fn build_report(radar: &RadarSpec, scene: &SceneSpec) -> Result<ConstraintReport> {
    radar.validate()?;
    scene.validate()?;
    let range = scene.standoff_range;
    let center_wavelength = radar.center_wavelength();

    let scan_margin_x = scan_margin(range, radar.beamwidth_x)?;
    let scan_margin_y = scan_margin(range, radar.beamwidth_y)?;
    let aperture_length_x = choose_aperture(
        "x",
        scene.target_dx + 2.0 * scan_margin_x,
        scene.aperture_x,
    )?;
    let aperture_length_y = choose_aperture(
        "y",
        scene.target_dy + 2.0 * scan_margin_y,
        scene.aperture_y,
    )?;

    let min_wavelength = radar.min_wavelength();
    let eps = scene.relative_permittivity;
    let sampling_spacing_x =
        nyquist_spacing(min_wavelength, aperture_length_x, scene.target_dx, range, eps)?;
    let sampling_spacing_y =
        nyquist_spacing(min_wavelength, aperture_length_y, scene.target_dy, range, eps)?;

    Ok(ConstraintReport {
        range_resolution: range_resolution(radar.bandwidth)?,
        cross_range_resolution_x: cross_range_resolution_beam(center_wavelength, radar.beamwidth_x)?,
        cross_range_resolution_y: cross_range_resolution_beam(center_wavelength, radar.beamwidth_y)?,
        scan_margin_x,
        scan_margin_y,
        aperture_length_x,
        aperture_length_y,
        sampling_spacing_x,
        sampling_spacing_y,
        max_velocity: max_velocity(sampling_spacing_x, radar.prf)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const GHZ: f64 = 1e9;

    fn radar_8ghz() -> RadarSpec {
        RadarSpec {
            center_frequency: 8.0 * GHZ,
            bandwidth: 4.0 * GHZ,
            prf: 12.0,
            beamwidth_x: 20f64.to_radians(),
            beamwidth_y: 20f64.to_radians(),
            tx_rx_offset: 0.05,
        }
    }

    fn suitcase_scene() -> SceneSpec {
        SceneSpec {
            target_dx: 0.5,
            target_dy: 0.3,
            standoff_range: 0.5,
            relative_permittivity: 1.0,
            center: [0.0, 0.85, 0.5],
            scatterers: vec![],
            aperture_x: None,
            aperture_y: None,
        }
    }

    #[test]
    fn range_resolution_examples() {
        assert_relative_eq!(range_resolution(4.0 * GHZ).unwrap(), 0.0375, max_relative = 1e-3);
        assert_relative_eq!(range_resolution(SPEED_OF_LIGHT / 2.0).unwrap(), 1.0);
        assert_relative_eq!(range_resolution(1.0 * GHZ).unwrap(), 0.149_896_229, max_relative = 1e-9);
        assert!(range_resolution(0.0).is_err());
        assert!(range_resolution(-1.0).is_err());
    }

    #[test]
    fn aperture_resolution_examples() {
        let lambda8 = SPEED_OF_LIGHT / (8.0 * GHZ);
        assert_relative_eq!(
            cross_range_resolution_aperture(0.5, lambda8, 0.25).unwrap(),
            range_resolution(4.0 * GHZ).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(cross_range_resolution_aperture(3.0, 2.0, 3.0).unwrap(), 1.0);
        let lambda3 = SPEED_OF_LIGHT / (3.0 * GHZ);
        assert_relative_eq!(
            cross_range_resolution_aperture(1.0, lambda3, 4.0 / 3.0).unwrap(),
            0.0375,
            max_relative = 1e-3
        );
        assert!(cross_range_resolution_aperture(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn beam_resolution_examples() {
        let lambda8 = SPEED_OF_LIGHT / (8.0 * GHZ);
        let theta = 20f64.to_radians();
        let r = cross_range_resolution_beam(lambda8, theta).unwrap();
        assert_relative_eq!(r, 0.0537, max_relative = 1e-3);
        assert_relative_eq!(cross_range_resolution_beam(1.0, 0.5).unwrap(), 1.0);
        let lambda3 = SPEED_OF_LIGHT / (3.0 * GHZ);
        assert_relative_eq!(cross_range_resolution_beam(lambda3, theta).unwrap(), 0.1431, max_relative = 1e-3);
        assert!(cross_range_resolution_beam(0.1, std::f64::consts::PI).is_err());
        assert!(cross_range_resolution_beam(0.1, 0.0).is_err());
    }

    #[test]
    fn matched_aperture_examples() {
        assert_relative_eq!(matched_aperture_length(1.0, 8.0 * GHZ, 4.0 * GHZ).unwrap(), 0.5);
        assert_relative_eq!(
            matched_aperture_length(1.0, 3.0 * GHZ, 4.0 * GHZ).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(matched_aperture_length(0.7, 5.0 * GHZ, 5.0 * GHZ).unwrap(), 0.7);
    }

    #[test]
    fn matched_aperture_equalises_resolutions() {
        for fc in [3.0, 5.5, 8.0] {
            let fc = fc * GHZ;
            let l = matched_aperture_length(0.8, fc, 4.0 * GHZ).unwrap();
            let cross = cross_range_resolution_aperture(0.8, SPEED_OF_LIGHT / fc, l).unwrap();
            assert_relative_eq!(cross, range_resolution(4.0 * GHZ).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn scan_margin_examples() {
        let m = scan_margin(0.5, 20f64.to_radians()).unwrap();
        assert_relative_eq!(m, 0.0882, max_relative = 1e-3);
        assert!(scan_margin(0.5, 1e-12).unwrap() < 1e-12);
        assert_relative_eq!(
            scan_margin(2.0, std::f64::consts::FRAC_PI_2).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        assert!(scan_margin(0.5, std::f64::consts::PI).is_err());
    }

    #[test]
    fn nyquist_examples() {
        let lambda10 = SPEED_OF_LIGHT / (10.0 * GHZ);
        let free = nyquist_spacing(lambda10, 0.8, 0.5, 0.5, 1.0).unwrap();
        assert_relative_eq!(free, 0.00946, max_relative = 1e-3);
        let wet = nyquist_spacing(lambda10, 0.8, 0.5, 0.5, 4.0).unwrap();
        assert_relative_eq!(wet, free / 2.0, max_relative = 1e-12);
        let wide = nyquist_spacing(lambda10, 1e7, 1e7, 0.5, 1.0).unwrap();
        assert_relative_eq!(wide, lambda10 / 4.0, max_relative = 1e-9);
        assert!(nyquist_spacing(lambda10, 0.0, 0.0, 0.5, 1.0).is_err());
        assert!(nyquist_spacing(lambda10, 0.8, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn max_velocity_examples() {
        assert_relative_eq!(max_velocity(0.00946, 12.0).unwrap(), 0.11352, max_relative = 1e-9);
        assert_relative_eq!(max_velocity(1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(max_velocity(0.0095, 24.0).unwrap(), 0.228, max_relative = 1e-12);
        assert!(max_velocity(0.01, 0.0).is_err());
    }

    #[test]
    fn aperture_rounding() {
        assert_relative_eq!(round_up_aperture(0.676), 0.7, max_relative = 1e-12);
        assert_relative_eq!(round_up_aperture(0.476), 0.5, max_relative = 1e-12);
        assert_relative_eq!(round_up_aperture(0.5), 0.5, max_relative = 1e-12);
        assert_relative_eq!(round_up_aperture(0.5000001), 0.6, max_relative = 1e-12);
    }

    #[test]
    fn report_for_suitcase_scene() {
        let radar = radar_8ghz();
        let mut scene = suitcase_scene();
        let auto = build_report(&radar, &scene).unwrap();
        // 0.5 + 2 * 0.0882 = 0.676 -> 0.7; 0.3 + 0.176 = 0.476 -> 0.5
        assert_relative_eq!(auto.aperture_length_x, 0.7, max_relative = 1e-12);
        assert_relative_eq!(auto.aperture_length_y, 0.5, max_relative = 1e-12);
        assert!(auto.aperture_length_x >= scene.target_dx + 2.0 * auto.scan_margin_x);

        scene.aperture_x = Some(0.8);
        scene.aperture_y = Some(0.5);
        let r = build_report(&radar, &scene).unwrap();
        assert_relative_eq!(r.range_resolution, 0.0375, max_relative = 1e-3);
        assert_relative_eq!(r.cross_range_resolution_x, 0.0537, max_relative = 1e-3);
        assert_relative_eq!(r.aperture_length_x, 0.8);
        assert_relative_eq!(r.aperture_length_y, 0.5);
        assert!(r.sampling_spacing_x <= 0.00946 + 1e-6);
        assert_relative_eq!(r.max_velocity, 0.1135, max_relative = 1e-3);
        assert_relative_eq!(r.max_velocity / radar.prf, r.sampling_spacing_x, max_relative = 1e-15);
    }

    #[test]
    fn report_rejects_short_override() {
        let mut scene = suitcase_scene();
        scene.aperture_x = Some(0.6);
        assert!(build_report(&radar_8ghz(), &scene).is_err());
    }

    #[test]
    fn report_symmetry() {
        let mut scene = suitcase_scene();
        scene.target_dy = scene.target_dx;
        let r = build_report(&radar_8ghz(), &scene).unwrap();
        assert_eq!(r.aperture_length_x, r.aperture_length_y);
        assert_eq!(r.sampling_spacing_x, r.sampling_spacing_y);
    }

    #[test]
    fn report_permittivity_scaling() {
        let radar = radar_8ghz();
        let free = build_report(&radar, &suitcase_scene()).unwrap();
        let mut wet_scene = suitcase_scene();
        wet_scene.relative_permittivity = 4.0;
        let wet = build_report(&radar, &wet_scene).unwrap();
        assert_relative_eq!(wet.sampling_spacing_x, free.sampling_spacing_x / 2.0, max_relative = 1e-12);
        assert_relative_eq!(wet.sampling_spacing_y, free.sampling_spacing_y / 2.0, max_relative = 1e-12);
        assert_relative_eq!(wet.max_velocity, free.max_velocity / 2.0, max_relative = 1e-12);
        assert_eq!(wet.range_resolution, free.range_resolution);
    }

    #[test]
    fn report_is_strictly_positive() {
        let r = build_report(&radar_8ghz(), &suitcase_scene()).unwrap();
        for v in [
            r.range_resolution,
            r.cross_range_resolution_x,
            r.cross_range_resolution_y,
            r.scan_margin_x,
            r.scan_margin_y,
            r.aperture_length_x,
            r.aperture_length_y,
            r.sampling_spacing_x,
            r.sampling_spacing_y,
            r.max_velocity,
        ] {
            assert!(v > 0.0);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut radar = radar_8ghz();
        radar.center_frequency = 1.0 * GHZ;
        assert!(build_report(&radar, &suitcase_scene()).is_err());
        let mut scene = suitcase_scene();
        scene.relative_permittivity = 0.9;
        assert!(build_report(&radar_8ghz(), &scene).is_err());
    }

    proptest! {
        #[test]
        fn nyquist_decreases_with_span(
            lambda in 0.005f64..0.2, r in 0.05f64..5.0, span in 0.01f64..5.0, extra in 0.001f64..2.0
        ) {
            let a = nyquist_spacing(lambda, span, 0.0, r, 1.0).unwrap();
            let b = nyquist_spacing(lambda, span + extra, 0.0, r, 1.0).unwrap();
            prop_assert!(b < a);
            prop_assert!(b > lambda / 4.0);
        }

        #[test]
        fn nyquist_increases_with_range(
            lambda in 0.005f64..0.2, l in 0.01f64..3.0, d in 0.01f64..3.0,
            r in 0.05f64..5.0, extra in 0.001f64..2.0
        ) {
            let a = nyquist_spacing(lambda, l, d, r, 1.0).unwrap();
            let b = nyquist_spacing(lambda, l, d, r + extra, 1.0).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn nyquist_permittivity_scaling(
            lambda in 0.005f64..0.2, l in 0.01f64..3.0, d in 0.01f64..3.0,
            r in 0.05f64..5.0, eps in 1.0f64..80.0
        ) {
            let free = nyquist_spacing(lambda, l, d, r, 1.0).unwrap();
            let wet = nyquist_spacing(lambda, l, d, r, eps).unwrap();
            prop_assert!(((wet * eps.sqrt()) - free).abs() <= 1e-12 * free);
        }

        #[test]
        fn range_resolution_round_trip(b in 1e6f64..1e11) {
            let dr = range_resolution(b).unwrap();
            prop_assert!((dr * 2.0 * b / SPEED_OF_LIGHT - 1.0).abs() <= 4.0 * f64::EPSILON);
        }

        #[test]
        fn scan_margin_ratio(r in 0.01f64..20.0, theta in 0.001f64..3.1) {
            let m = scan_margin(r, theta).unwrap();
            let expected = (theta / 2.0).tan();
            prop_assert!((m / r - expected).abs() <= 1e-12 * expected);
        }
    }
}
