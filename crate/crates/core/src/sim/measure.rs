use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::image::SarImage;
use crate::constraints::range_resolution;
use crate::error::{domain, Error, Result};

/// Peak location, -3 dB mainlobe widths and peak sidelobe ratio of a point response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionMeasurement {
    pub peak_position: [f64; 3],
    pub width_x: f64,
    /// `None` when the image has a single z plane.
    pub width_y: Option<f64>,
    pub width_range: f64,
    /// dB, at most 0.
    pub peak_sidelobe_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolvability {
    pub resolved: bool,
    /// Deepest point between the two responses relative to the weaker one, dB.
    pub dip_depth_db: f64,
}

/// Peaks below this fraction of the image maximum (-60 dB) are treated as absent.
const NOISE_FLOOR: f64 = 1e-3;
/// Sidelobes are floored at -120 dB when the image has none.
const SIDELOBE_FLOOR: f64 = 1e-6;
const HALF_POWER: f64 = std::f64::consts::FRAC_1_SQRT_2;

// image axis -> world axis: x is cross-range, y is range (boresight), z is height
const AXIS_X: usize = 0;
const AXIS_RANGE: usize = 1;
const AXIS_Y: usize = 2;

fn neighbours(dims: [usize; 3], i: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    let offsets: Vec<[isize; 3]> = (-1..=1)
        .flat_map(|a| (-1..=1).flat_map(move |b| (-1..=1).map(move |c| [a, b, c])))
        .filter(|o| *o != [0, 0, 0])
        .collect();
    offsets.into_iter().filter_map(move |o| {
        let mut n = [0usize; 3];
        for a in 0..3 {
            let v = i[a] as isize + o[a];
            if v < 0 || v >= dims[a] as isize {
                return None;
            }
            n[a] = v as usize;
        }
        Some(n)
    })
}

fn is_interior(dims: [usize; 3], i: [usize; 3]) -> bool {
    (0..3).all(|a| dims[a] == 1 || (i[a] > 0 && i[a] + 1 < dims[a]))
}

fn is_local_max(img: &SarImage, mags: &[f64], i: [usize; 3]) -> bool {
    let m = mags[img.grid.index(i)];
    m > 0.0 && neighbours(img.grid.dims, i).all(|n| mags[img.grid.index(n)] <= m)
}

/// Full -3 dB width along `axis` through cell `peak`, with linear interpolation
/// between the last cell above and the first cell below the half-power level.
fn half_power_width(img: &SarImage, mags: &[f64], peak: [usize; 3], axis: usize) -> Result<f64> {
    let level = mags[img.grid.index(peak)] * HALF_POWER;
    let n = img.grid.dims[axis];
    let mut sides = [0.0; 2];
    for (side, dir) in [-1isize, 1].into_iter().enumerate() {
        let mut prev = mags[img.grid.index(peak)];
        let mut k = 1isize;
        loop {
            let pos = peak[axis] as isize + dir * k;
            if pos < 0 || pos >= n as isize {
                return Err(domain(format!("mainlobe along axis {axis} runs past the grid edge")));
            }
            let mut idx = peak;
            idx[axis] = pos as usize;
            let cur = mags[img.grid.index(idx)];
            if cur < level {
                let frac = (prev - level) / (prev - cur);
                sides[side] = (k - 1) as f64 + frac;
                break;
            }
            prev = cur;
            k += 1;
        }
    }
    Ok((sides[0] + sides[1]) * img.grid.spacing[axis])
}

/// Locates the response nearest `expected_peak` and measures its mainlobe and sidelobes.
///
/// The sidelobe search skips the ellipse whose semi-axes equal the -3 dB widths
/// (a zone twice the mainlobe width across) and keeps interior local maxima only.
pub fn measure_resolution(image: &SarImage, expected_peak: &Vector3<f64>) -> Result<ResolutionMeasurement> {
    let grid = &image.grid;
    let mags = image.magnitudes();
    let global = mags.iter().copied().fold(0.0, f64::max);
    let search = range_resolution(image.radar.bandwidth)?;
    let mut best: Option<(usize, f64)> = None;
    for (flat, &m) in mags.iter().enumerate() {
        let p = grid.point(grid.coords(flat));
        if (p - expected_peak).norm() <= search && best.is_none_or(|(_, b)| m > b) {
            best = Some((flat, m));
        }
    }
    let (peak_flat, peak) = best.ok_or(Error::PeakNotFound)?;
    if !(peak > 0.0) || peak < global * NOISE_FLOOR {
        return Err(Error::PeakNotFound);
    }
    let peak_idx = grid.coords(peak_flat);

    let mut widths = [None; 3];
    for a in grid.active_axes() {
        widths[a] = Some(half_power_width(image, &mags, peak_idx, a)?);
    }
    let width_x = widths[AXIS_X].ok_or_else(|| domain("image has no cross-range extent"))?;
    let width_range = widths[AXIS_RANGE].ok_or_else(|| domain("image has no range extent"))?;

    let peak_pos = grid.point(peak_idx);
    let mut sidelobe = peak * SIDELOBE_FLOOR;
    for (flat, &m) in mags.iter().enumerate() {
        if m <= sidelobe || flat == peak_flat {
            continue;
        }
        let i = grid.coords(flat);
        if !is_interior(grid.dims, i) || !is_local_max(image, &mags, i) {
            continue;
        }
        let d = grid.point(i) - peak_pos;
        let r2: f64 = (0..3)
            .filter_map(|a| widths[a].map(|w| (d[a] / w).powi(2)))
            .sum();
        if r2 < 1.0 {
            continue;
        }
        sidelobe = m;
    }
    Ok(ResolutionMeasurement {
        peak_position: [peak_pos.x, peak_pos.y, peak_pos.z],
        width_x,
        width_y: widths[AXIS_Y],
        width_range,
        peak_sidelobe_ratio: (20.0 * (sidelobe / peak).log10()).min(0.0),
    })
}

/// Magnitude at a continuous grid position, multilinear over the active axes.
fn interpolate(image: &SarImage, mags: &[f64], p: &Vector3<f64>) -> f64 {
    let grid = &image.grid;
    let f = grid.fractional_index(p);
    let mut base = [0usize; 3];
    let mut t = [0.0; 3];
    for a in 0..3 {
        if grid.dims[a] > 1 {
            let lo = f[a].floor().clamp(0.0, (grid.dims[a] - 2) as f64);
            base[a] = lo as usize;
            t[a] = (f[a] - lo).clamp(0.0, 1.0);
        }
    }
    let mut acc = 0.0;
    for corner in 0..8usize {
        let mut idx = base;
        let mut w = 1.0;
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            if grid.dims[a] == 1 {
                if bit == 1 {
                    w = 0.0;
                }
                continue;
            }
            idx[a] += bit;
            w *= if bit == 1 { t[a] } else { 1.0 - t[a] };
        }
        if w > 0.0 {
            acc += w * mags[grid.index(idx)];
        }
    }
    acc
}

/// Strongest cell within `radius` of `p`.
fn strongest_near(image: &SarImage, mags: &[f64], p: &Vector3<f64>, radius: f64) -> Option<[usize; 3]> {
    let grid = &image.grid;
    let mut best: Option<([usize; 3], f64)> = None;
    for (flat, &m) in mags.iter().enumerate() {
        let i = grid.coords(flat);
        if (grid.point(i) - p).norm() <= radius && best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

/// Decides whether two responses are separated by a dip of at least 3 dB below the weaker one.
pub fn resolvability_check(image: &SarImage, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<Resolvability> {
    let grid = &image.grid;
    if !grid.contains(a) || !grid.contains(b) {
        return Err(domain("both positions must lie inside the image grid"));
    }
    let cell = grid
        .active_axes()
        .map(|ax| grid.spacing[ax])
        .fold(f64::INFINITY, f64::min);
    let separation = (a - b).norm();
    if separation < cell {
        return Err(Error::DegeneratePair);
    }
    let mags = image.magnitudes();
    let radius = (separation / 3.0).max(cell);
    let pa = strongest_near(image, &mags, a, radius).ok_or(Error::PeakNotFound)?;
    let pb = strongest_near(image, &mags, b, radius).ok_or(Error::PeakNotFound)?;
    let both_peaks = pa != pb && is_local_max(image, &mags, pa) && is_local_max(image, &mags, pb);

    let (ea, eb) = if both_peaks {
        (grid.point(pa), grid.point(pb))
    } else {
        (*a, *b)
    };
    let ma = interpolate(image, &mags, &ea);
    let mb = interpolate(image, &mags, &eb);
    let weaker = ma.min(mb);
    let length = (eb - ea).norm();
    let steps = ((length / (cell / 4.0)).ceil() as usize).max(2);
    let dip = (0..=steps)
        .map(|k| interpolate(image, &mags, &ea.lerp(&eb, k as f64 / steps as f64)))
        .fold(f64::INFINITY, f64::min);
    let dip_depth_db = if weaker > 0.0 && dip > 0.0 {
        20.0 * (dip / weaker).log10()
    } else if weaker > 0.0 {
        -f64::MAX
    } else {
        0.0
    };
    Ok(Resolvability {
        resolved: both_peaks && dip_depth_db <= -3.0,
        dip_depth_db,
    })
}
