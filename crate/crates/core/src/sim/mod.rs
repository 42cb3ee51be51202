//! Point-scatterer echo synthesis and back-projection imaging used to check that a
//! plan delivers the resolution it promises.

mod echo;
mod image;
mod measure;

pub use echo::{
    antenna_phase_centers, frequency_grid, in_beam, read_echoes, synthesize_echoes, write_echoes,
    EchoSet, ECHO_FORMAT_VERSION, ECHO_MAGIC,
};
pub use image::{
    backproject, read_image, write_image, ImageGrid, SarImage, Window, IMAGE_FORMAT_VERSION,
    IMAGE_MAGIC, PGM_DB_WINDOW,
};
pub use measure::{measure_resolution, resolvability_check, Resolvability, ResolutionMeasurement};

/// Default number of frequency steps across the swept band.
pub const DEFAULT_N_FREQS: usize = 128;
