//! Fourier scattering transform over uniform covering frames on the
//! periodic grid `Z_N^d`, `d` in {1, 2}.
//!
//! [`frame`] builds the Parseval frame of translated window masks,
//! [`transform`] evaluates the scattering tree and [`analysis`] turns trees
//! into energy, decay, stability and sparsity reports.

pub mod analysis;
pub mod error;
pub mod frame;
pub mod grid;
pub mod io;
pub mod signal;
pub mod sum;
pub mod transform;

pub use error::{Error, Result};
pub use frame::{
    build_frame, build_window_profile, truncation_set, verify_partition, FrameSpec,
    FrequencyFilter, LatticePoint, LatticeSpec, TruncationSet, UniformCoveringFrame,
    VerificationReport, WindowKind, WindowProfile,
};
pub use grid::Grid;
pub use signal::Signal;
pub use transform::{
    scatter, Coefficient, CoefficientStorage, Path, ScatterConfig, ScatteringNode, ScatteringTree,
    Width,
};
