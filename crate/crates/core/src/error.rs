use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("distance {distance} m is too short for a trapezoid at {cruise_velocity} m/s with {accel_duration} s ramps; reduce the ramp duration or the velocity")]
    NoCruisePhase {
        distance: f64,
        cruise_velocity: f64,
        accel_duration: f64,
    },

    #[error("look-at is degenerate at sample {index}: antenna position coincides with (or is vertically aligned to) the scene center")]
    DegenerateLookAt { index: usize },

    #[error("pose unreachable after {iterations} iterations (residual {residual:.3e}, manipulability {manipulability:.3e}{})", if *.singular { ", singular configuration" } else { "" })]
    Unreachable {
        iterations: usize,
        residual: f64,
        manipulability: f64,
        singular: bool,
    },

    #[error("trajectory sample {index} at [{x:.6}, {y:.6}, {z:.6}] m: {source}")]
    SampleFailed {
        index: usize,
        x: f64,
        y: f64,
        z: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("joint {joint} jumps {step:.4} rad between samples {index} and {next} (branch flip)", next = .index + 1)]
    BranchFlip { index: usize, joint: usize, step: f64 },

    #[error("joint {joint} needs {rate:.4} rad/s between samples {index} and {next}, above the {limit} rad/s limit", next = .index + 1)]
    RateLimit {
        index: usize,
        joint: usize,
        rate: f64,
        limit: f64,
    },

    #[error("scatterer {scatterer} coincides with an antenna phase center at pulse {pulse}")]
    SingularRange { pulse: usize, scatterer: usize },

    #[error("no peak above the noise floor near the expected position")]
    PeakNotFound,

    #[error("positions are closer than one grid cell")]
    DegeneratePair,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
