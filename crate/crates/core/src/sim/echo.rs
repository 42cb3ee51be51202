use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constraints::{RadarSpec, SceneSpec};
use crate::error::{domain, Error, Result};
use crate::trajectory::{PoseSample, PoseTrajectory};
use crate::SPEED_OF_LIGHT;

pub const ECHO_MAGIC: &[u8; 4] = b"UWBE";
pub const ECHO_FORMAT_VERSION: u32 = 1;

/// Stepped-frequency responses, one row of `n_freqs` complex samples per pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoSet {
    pub frequencies: Vec<f64>,
    pub tx_positions: Vec<Vector3<f64>>,
    pub rx_positions: Vec<Vector3<f64>>,
    /// Pulse-major.
    pub samples: Vec<Complex64>,
}

impl EchoSet {
    pub fn n_pulses(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.frequencies.len()
    }

    pub fn pulse(&self, i: usize) -> &[Complex64] {
        let n = self.n_freqs();
        &self.samples[i * n..(i + 1) * n]
    }

    /// Keeps every `step`-th pulse, starting with the first.
    pub fn decimate(&self, step: usize) -> EchoSet {
        let keep: Vec<usize> = (0..self.n_pulses()).step_by(step.max(1)).collect();
        EchoSet {
            frequencies: self.frequencies.clone(),
            tx_positions: keep.iter().map(|&i| self.tx_positions[i]).collect(),
            rx_positions: keep.iter().map(|&i| self.rx_positions[i]).collect(),
            samples: keep.iter().flat_map(|&i| self.pulse(i).iter().copied()).collect(),
        }
    }

    /// Step of the uniform frequency grid.
    pub fn frequency_step(&self) -> f64 {
        match self.frequencies.len() {
            0 | 1 => 0.0,
            n => (self.frequencies[n - 1] - self.frequencies[0]) / (n - 1) as f64,
        }
    }
}

/// `n` uniformly spaced frequencies spanning `[fc - B/2, fc + B/2]` inclusive.
pub fn frequency_grid(radar: &RadarSpec, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(domain(format!("n_freqs must be at least 2, got {n}")));
    }
    let f0 = radar.min_frequency();
    let df = radar.bandwidth / (n - 1) as f64;
    Ok((0..n).map(|k| f0 + k as f64 * df).collect())
}

/// Tx and Rx phase centers: split by the offset along the antenna x axis,
/// perpendicular to the boresight.
pub fn antenna_phase_centers(sample: &PoseSample, tx_rx_offset: f64) -> (Vector3<f64>, Vector3<f64>) {
    let half = sample.orientation * Vector3::x() * (tx_rx_offset / 2.0);
    (sample.position - half, sample.position + half)
}

/// Rectangular beam gate: within half the beamwidth of boresight in both the
/// horizontal and vertical antenna planes.
pub fn in_beam(sample: &PoseSample, radar: &RadarSpec, point: &Vector3<f64>) -> bool {
    let d = sample.orientation.inverse() * (point - sample.position);
    if d.y <= 0.0 {
        return false;
    }
    d.x.atan2(d.y).abs() <= radar.beamwidth_x / 2.0 && d.z.atan2(d.y).abs() <= radar.beamwidth_y / 2.0
}

/// Ideal point-target response at every imaging sample of `traj`.
pub fn synthesize_echoes(
    scene: &SceneSpec,
    traj: &PoseTrajectory,
    radar: &RadarSpec,
    n_freqs: usize,
) -> Result<EchoSet> {
    radar.validate()?;
    scene.validate()?;
    let frequencies = frequency_grid(radar, n_freqs)?;
    let pulses: Vec<&PoseSample> = traj.imaging_samples().collect();
    if pulses.is_empty() {
        return Err(domain("trajectory has no imaging samples"));
    }

    let mut tx_positions = Vec::with_capacity(pulses.len());
    let mut rx_positions = Vec::with_capacity(pulses.len());
    // (pulse, scatterer) -> two-way path, or None outside the beam
    let mut paths: Vec<Vec<Option<f64>>> = Vec::with_capacity(pulses.len());
    let mut max_range: f64 = 0.0;
    for (p, s) in pulses.iter().enumerate() {
        let (tx, rx) = antenna_phase_centers(s, radar.tx_rx_offset);
        let mut row = Vec::with_capacity(scene.scatterers.len());
        for (k, sc) in scene.scatterers.iter().enumerate() {
            let pos = Vector3::from(sc.position);
            let (rt, rr) = ((pos - tx).norm(), (pos - rx).norm());
            if rt < 1e-9 || rr < 1e-9 {
                return Err(Error::SingularRange { pulse: p, scatterer: k });
            }
            if in_beam(s, radar, &pos) {
                max_range = max_range.max(0.5 * (rt + rr));
                row.push(Some(rt + rr));
            } else {
                row.push(None);
            }
        }
        tx_positions.push(tx);
        rx_positions.push(rx);
        paths.push(row);
    }
    let needed = 2.0 * radar.bandwidth * max_range / SPEED_OF_LIGHT;
    if (n_freqs as f64) < needed {
        return Err(domain(format!(
            "n_freqs = {n_freqs} aliases range: at least {} steps are needed for {max_range:.3} m",
            needed.ceil()
        )));
    }

    let mut samples = vec![Complex64::new(0.0, 0.0); pulses.len() * n_freqs];
    for (p, row) in paths.iter().enumerate() {
        let out = &mut samples[p * n_freqs..(p + 1) * n_freqs];
        for (sc, path) in scene.scatterers.iter().zip(row) {
            let Some(path) = path else { continue };
            let tau = path / SPEED_OF_LIGHT;
            for (o, f) in out.iter_mut().zip(&frequencies) {
                *o += Complex64::from_polar(sc.reflectivity, -2.0 * PI * f * tau);
            }
        }
    }
    Ok(EchoSet {
        frequencies,
        tx_positions,
        rx_positions,
        samples,
    })
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Little-endian: magic, version, n_pulses, n_freqs, the frequency grid, then per
/// pulse Tx xyz, Rx xyz and interleaved (re, im) samples.
pub fn write_echoes<W: Write>(echoes: &EchoSet, mut w: W) -> Result<()> {
    let count = |n: usize| u32::try_from(n).map_err(|_| domain("echo set too large"));
    w.write_all(ECHO_MAGIC)?;
    put_u32(&mut w, ECHO_FORMAT_VERSION)?;
    put_u32(&mut w, count(echoes.n_pulses())?)?;
    put_u32(&mut w, count(echoes.n_freqs())?)?;
    for &f in &echoes.frequencies {
        put_f64(&mut w, f)?;
    }
    for p in 0..echoes.n_pulses() {
        for v in echoes.tx_positions[p].iter().chain(echoes.rx_positions[p].iter()) {
            put_f64(&mut w, *v)?;
        }
        for s in echoes.pulse(p) {
            put_f64(&mut w, s.re)?;
            put_f64(&mut w, s.im)?;
        }
    }
    Ok(())
}

pub fn read_echoes<R: Read>(mut r: R) -> Result<EchoSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != ECHO_MAGIC {
        return Err(Error::Format(format!("bad echo magic {magic:?}")));
    }
    let version = get_u32(&mut r)?;
    if version != ECHO_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported echo version {version}")));
    }
    let n_pulses = get_u32(&mut r)? as usize;
    let n_freqs = get_u32(&mut r)? as usize;
    let frequencies = (0..n_freqs).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut tx_positions = Vec::with_capacity(n_pulses);
    let mut rx_positions = Vec::with_capacity(n_pulses);
    let mut samples = Vec::with_capacity(n_pulses * n_freqs);
    for _ in 0..n_pulses {
        let mut v = [0.0; 6];
        for x in v.iter_mut() {
            *x = get_f64(&mut r)?;
        }
        tx_positions.push(Vector3::new(v[0], v[1], v[2]));
        rx_positions.push(Vector3::new(v[3], v[4], v[5]));
        for _ in 0..n_freqs {
            let re = get_f64(&mut r)?;
            let im = get_f64(&mut r)?;
            samples.push(Complex64::new(re, im));
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after echo data".into()));
    }
    Ok(EchoSet {
        frequencies,
        tx_positions,
        rx_positions,
        samples,
    })
}
