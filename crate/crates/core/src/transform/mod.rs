//! The scattering propagator and the truncated Fourier scattering transform.

mod path;
mod scatter;
mod tree;

use num_complex::Complex64;

pub use path::{is_canonical, mirror_path, Path};
pub(crate) use scatter::scatter_above;
pub use scatter::{resolve_width, scatter};
pub use tree::{
    Coefficient, CoefficientStorage, ScatterConfig, ScatteringNode, ScatteringTree, Width,
};

use crate::error::Result;
use crate::frame::FrequencyFilter;
use crate::grid::{FftEngine, FftScratch};
use crate::signal::Signal;

/// `f * h` for the frame element `h`: DFT, multiply by the mask, inverse DFT.
pub fn filter_convolve(f: &Signal, filter: &FrequencyFilter) -> Result<Signal> {
    f.check_grid(filter.grid())?;
    let engine = FftEngine::new(filter.grid());
    let mut ws = FftScratch::default();
    let mut spectrum = f.data().to_vec();
    engine.forward(&mut spectrum, &mut ws);
    let mut out = vec![Complex64::default(); spectrum.len()];
    filter.apply_into(&spectrum, &mut out);
    engine.inverse_from_columns(&mut out, filter.support_columns(), &mut ws);
    Signal::new(filter.grid(), out)
}

/// One propagator step `|u * f_q|`.
pub fn propagate(u: &Signal, filter: &FrequencyFilter) -> Result<Signal> {
    let z = filter_convolve(u, filter)?;
    let grid = z.grid();
    Signal::from_real(grid, z.data().iter().map(|v| v.norm()).collect())
}
