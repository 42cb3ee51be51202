use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::echo::{get_f64, get_u32, truncated, EchoSet};
use crate::constraints::{range_resolution, RadarSpec};
use crate::error::{domain, Error, Result};
use crate::SPEED_OF_LIGHT;

pub const IMAGE_MAGIC: &[u8; 4] = b"UWBI";
pub const IMAGE_FORMAT_VERSION: u32 = 1;

/// Dynamic range mapped onto 0..=255 in PGM exports, dB.
pub const PGM_DB_WINDOW: f64 = 40.0;

/// Frequency-domain taper applied before back-projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[serde(alias = "rect")]
    Rectangular,
    Hann,
}

impl Window {
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n < 2 => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }

    fn code(self) -> u32 {
        match self {
            Window::Rectangular => 0,
            Window::Hann => 1,
        }
    }

    fn from_code(c: u32) -> Result<Self> {
        match c {
            0 => Ok(Window::Rectangular),
            1 => Ok(Window::Hann),
            _ => Err(Error::Format(format!("unknown window code {c}"))),
        }
    }
}

/// Regular voxel grid; x varies fastest, then y, then z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
}

impl ImageGrid {
    /// Grid of `dims` cells with uniform `spacing`, centered on `center`.
    pub fn centered(center: [f64; 3], dims: [usize; 3], spacing: f64) -> Self {
        let origin = std::array::from_fn(|a| center[a] - (dims[a].max(1) - 1) as f64 * spacing / 2.0);
        Self {
            origin,
            spacing: [spacing; 3],
            dims,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[2] * self.dims[1] + i[1]) * self.dims[0] + i[0]
    }

    pub fn coords(&self, flat: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [flat % nx, (flat / nx) % ny, flat / (nx * ny)]
    }

    pub fn point(&self, i: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + i[0] as f64 * self.spacing[0],
            self.origin[1] + i[1] as f64 * self.spacing[1],
            self.origin[2] + i[2] as f64 * self.spacing[2],
        )
    }

    /// Axes with more than one sample.
    pub fn active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|&a| self.dims[a] > 1)
    }

    /// Continuous grid coordinates of a world point.
    pub fn fractional_index(&self, p: &Vector3<f64>) -> [f64; 3] {
        std::array::from_fn(|a| {
            if self.dims[a] > 1 {
                (p[a] - self.origin[a]) / self.spacing[a]
            } else {
                0.0
            }
        })
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let f = self.fractional_index(p);
        (0..3).all(|a| {
            if self.dims[a] > 1 {
                f[a] >= -1e-9 && f[a] <= (self.dims[a] - 1) as f64 + 1e-9
            } else {
                (p[a] - self.origin[a]).abs() <= 0.5 * self.spacing[a] + 1e-12
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(domain("image grid has no cells"));
        }
        if self.spacing.iter().any(|s| !(*s > 0.0)) {
            return Err(domain("image grid spacing must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarImage {
    pub grid: ImageGrid,
    pub values: Vec<Complex64>,
    pub radar: RadarSpec,
    pub window: Window,
}

impl SarImage {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Magnitude per (x, y) column, taking the maximum over z.
    pub fn max_projection(&self) -> Vec<f64> {
        let [nx, ny, nz] = self.grid.dims;
        let mut out = vec![0.0f64; nx * ny];
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let v = self.values[self.grid.index([ix, iy, iz])].norm();
                    let o = &mut out[iy * nx + ix];
                    *o = o.max(v);
                }
            }
        }
        out
    }

    /// ASCII PGM of the dB magnitude, 0..=255 over a 40 dB window.
    ///
    /// A grid one cell deep in range is drawn as the x-z plane with the top row
    /// at the largest z. Anything else is drawn as the max over z, with the first
    /// row at the far-range (largest y) edge.
    pub fn to_pgm(&self) -> String {
        let [nx, ny, nz] = self.grid.dims;
        let (rows, mags) = if ny == 1 && nz > 1 { (nz, self.magnitudes()) } else { (ny, self.max_projection()) };
        let peak = mags.iter().copied().fold(0.0, f64::max);
        let mut s = format!("P2\n{nx} {rows}\n255\n");
        for iy in (0..rows).rev() {
            let row: Vec<String> = (0..nx)
                .map(|ix| {
                    let m = mags[iy * nx + ix];
                    let level = if peak > 0.0 && m > 0.0 {
                        let db = 20.0 * (m / peak).log10();
                        ((db + PGM_DB_WINDOW) / PGM_DB_WINDOW * 255.0).round().clamp(0.0, 255.0)
                    } else {
                        0.0
                    };
                    (level as u8).to_string()
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Back-projects every pulse onto every grid cell:
/// `sum_pulses sum_freqs w(f) * echo * exp(+j 2 pi f (R_tx + R_rx) / c)`.
///
/// Cells are evaluated in parallel; each cell's sum runs pulse-major,
/// frequency-minor, so the output does not depend on the thread count.
pub fn backproject(echoes: &EchoSet, grid: &ImageGrid, window: Window, radar: &RadarSpec) -> Result<SarImage> {
    grid.validate()?;
    let dr = range_resolution(radar.bandwidth)?;
    for a in grid.active_axes() {
        if grid.spacing[a] > dr / 2.0 {
            return Err(domain(format!(
                "grid spacing {} m on axis {a} exceeds half the range resolution ({} m)",
                grid.spacing[a],
                dr / 2.0
            )));
        }
    }
    if echoes.n_pulses() == 0 || echoes.n_freqs() == 0 {
        return Err(domain("echo set is empty"));
    }
    let n_freqs = echoes.n_freqs();
    let f0 = echoes.frequencies[0];
    let df = echoes.frequency_step();
    for (k, f) in echoes.frequencies.iter().enumerate() {
        if (f - (f0 + k as f64 * df)).abs() > 1e-6 * df.abs().max(1.0) {
            return Err(domain("echo frequency grid is not uniform"));
        }
    }
    let weights = window.weights(n_freqs);
    let weighted: Vec<Complex64> = (0..echoes.n_pulses())
        .flat_map(|p| echoes.pulse(p).iter().zip(&weights).map(|(e, w)| e * w).collect::<Vec<_>>())
        .collect();

    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let pixel = grid.point(grid.coords(flat));
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..echoes.n_pulses() {
                let path = (pixel - echoes.tx_positions[p]).norm() + (pixel - echoes.rx_positions[p]).norm();
                let tau = path / SPEED_OF_LIGHT;
                let mut phasor = Complex64::from_polar(1.0, 2.0 * PI * f0 * tau);
                let step = Complex64::from_polar(1.0, 2.0 * PI * df * tau);
                for e in &weighted[p * n_freqs..(p + 1) * n_freqs] {
                    acc += e * phasor;
                    phasor *= step;
                }
            }
            acc
        })
        .collect();

    Ok(SarImage {
        grid: *grid,
        values,
        radar: *radar,
        window,
    })
}

/// Self-contained binary image: magic, version, dims (3 x u32), origin and spacing
/// (3 x f64 each), radar (6 x f64), window code (u32), then (re, im) per cell.
pub fn write_image<W: Write>(img: &SarImage, mut w: W) -> Result<()> {
    w.write_all(IMAGE_MAGIC)?;
    w.write_all(&IMAGE_FORMAT_VERSION.to_le_bytes())?;
    for d in img.grid.dims {
        let d = u32::try_from(d).map_err(|_| domain("image too large"))?;
        w.write_all(&d.to_le_bytes())?;
    }
    let r = &img.radar;
    let radar = [r.center_frequency, r.bandwidth, r.prf, r.beamwidth_x, r.beamwidth_y, r.tx_rx_offset];
    for v in img.grid.origin.iter().chain(&img.grid.spacing).chain(&radar) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&img.window.code().to_le_bytes())?;
    for v in &img.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_image<R: Read>(mut r: R) -> Result<SarImage> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != IMAGE_MAGIC {
        return Err(Error::Format(format!("bad image magic {magic:?}")));
    }
    let version = get_u32(&mut r)?;
    if version != IMAGE_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported image version {version}")));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = get_u32(&mut r)? as usize;
    }
    let mut h = [0.0; 12];
    for v in h.iter_mut() {
        *v = get_f64(&mut r)?;
    }
    let window = Window::from_code(get_u32(&mut r)?)?;
    let grid = ImageGrid {
        origin: [h[0], h[1], h[2]],
        spacing: [h[3], h[4], h[5]],
        dims,
    };
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = get_f64(&mut r)?;
        let im = get_f64(&mut r)?;
        values.push(Complex64::new(re, im));
    }
    Ok(SarImage {
        grid,
        values,
        radar: RadarSpec {
            center_frequency: h[6],
            bandwidth: h[7],
            prf: h[8],
            beamwidth_x: h[9],
            beamwidth_y: h[10],
            tx_rx_offset: h[11],
        },
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn radar() -> RadarSpec {
        RadarSpec {
            center_frequency: 8e9,
            bandwidth: 4e9,
            prf: 12.0,
            beamwidth_x: 20f64.to_radians(),
            beamwidth_y: 20f64.to_radians(),
            tx_rx_offset: 0.04,
        }
    }

    fn tiny_echoes() -> EchoSet {
        let frequencies: Vec<f64> = (0..8).map(|k| 6e9 + k as f64 * 0.5e9).collect();
        let tx_positions = vec![Vector3::new(-0.01, 0.0, 0.0), Vector3::new(0.02, 0.0, 0.0)];
        let rx_positions = vec![Vector3::new(0.03, 0.0, 0.0), Vector3::new(0.06, 0.0, 0.0)];
        let samples = (0..16)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        EchoSet {
            frequencies,
            tx_positions,
            rx_positions,
            samples,
        }
    }

    #[test]
    fn recurrence_matches_direct_sum() {
        let e = tiny_echoes();
        let grid = ImageGrid::centered([0.0, 0.5, 0.0], [5, 4, 1], 0.01);
        let img = backproject(&e, &grid, Window::Hann, &radar()).unwrap();
        let w = Window::Hann.weights(8);
        for flat in 0..grid.len() {
            let pix = grid.point(grid.coords(flat));
            let mut direct = Complex64::new(0.0, 0.0);
            for p in 0..2 {
                let path = (pix - e.tx_positions[p]).norm() + (pix - e.rx_positions[p]).norm();
                for (k, f) in e.frequencies.iter().enumerate() {
                    direct += w[k] * e.pulse(p)[k] * Complex64::from_polar(1.0, 2.0 * PI * f * path / SPEED_OF_LIGHT);
                }
            }
            assert_relative_eq!(img.values[flat].re, direct.re, epsilon = 1e-11);
            assert_relative_eq!(img.values[flat].im, direct.im, epsilon = 1e-11);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = ImageGrid::centered([0.0, 0.5, 0.0], [5, 4, 1], 0.02);
        assert!(backproject(&tiny_echoes(), &grid, Window::Rectangular, &radar()).is_err());
        // a singleton axis may be coarse
        let grid = ImageGrid {
            origin: [0.0, 0.0, 0.3],
            spacing: [0.005, 0.005, 1.0],
            dims: [3, 3, 1],
        };
        assert!(backproject(&tiny_echoes(), &grid, Window::Rectangular, &radar()).is_ok());
    }

    #[test]
    fn empty_echo_set_is_rejected() {
        let e = EchoSet {
            frequencies: vec![6e9, 7e9],
            tx_positions: vec![],
            rx_positions: vec![],
            samples: vec![],
        };
        let grid = ImageGrid::centered([0.0; 3], [2, 2, 1], 0.005);
        assert!(backproject(&e, &grid, Window::Rectangular, &radar()).is_err());
    }

    #[test]
    fn hann_weights() {
        let w = Window::Hann.weights(5);
        assert_relative_eq!(w[0], 0.0);
        assert_relative_eq!(w[2], 1.0);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn grid_indexing_round_trips() {
        let g = ImageGrid::centered([0.1, 0.2, 0.3], [4, 3, 2], 0.01);
        for flat in 0..g.len() {
            assert_eq!(g.index(g.coords(flat)), flat);
        }
        let c = g.point([0, 0, 0]) + (g.point([3, 2, 1]) - g.point([0, 0, 0])) / 2.0;
        assert_relative_eq!(c, Vector3::new(0.1, 0.2, 0.3), epsilon = 1e-15);
    }

    #[test]
    fn pgm_scaling() {
        let grid = ImageGrid::centered([0.0; 3], [3, 1, 1], 0.005);
        let img = SarImage {
            grid,
            values: vec![Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0), Complex64::new(0.001, 0.0)],
            radar: radar(),
            window: Window::Rectangular,
        };
        // 0 dB -> 255, -20 dB -> 128 (127.5 rounds away from zero), -60 dB -> 0
        assert_eq!(img.to_pgm(), "P2\n3 1\n255\n255 128 0\n");
    }

    #[test]
    fn pgm_of_a_vertical_plane_puts_the_top_first() {
        let grid = ImageGrid::centered([0.0; 3], [2, 1, 2], 0.005);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        // only (x=1, z=1) is lit
        let img = SarImage { grid, values: vec![zero, zero, zero, one], radar: radar(), window: Window::Rectangular };
        assert_eq!(img.to_pgm(), "P2\n2 2\n255\n0 255\n0 0\n");
    }

    #[test]
    fn image_binary_round_trip() {
        let grid = ImageGrid::centered([0.0, 0.5, 0.0], [3, 2, 1], 0.005);
        let img = backproject(&tiny_echoes(), &grid, Window::Rectangular, &radar()).unwrap();
        let mut buf = Vec::new();
        write_image(&img, &mut buf).unwrap();
        assert_eq!(read_image(&buf[..]).unwrap(), img);
        buf[1] = b'?';
        assert!(matches!(read_image(&buf[..]), Err(Error::Format(_))));
    }
}
