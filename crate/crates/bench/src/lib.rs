//! Inputs shared by the benchmarks.

use fourier_scattering::{
    build_frame, Grid, LatticeSpec, Signal, UniformCoveringFrame, WindowKind, WindowProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tent_frame(d: usize, n: usize, a: usize) -> UniformCoveringFrame {
    build_frame(
        LatticeSpec::new(d, n, a).expect("valid lattice"),
        WindowProfile::new(WindowKind::Tent),
    )
    .expect("valid frame")
}

/// Uniform noise in `[0, 1)`, seeded.
pub fn noise(grid: Grid, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::from_real(grid, (0..grid.len()).map(|_| rng.gen()).collect()).expect("finite samples")
}
