//! Energy accounting, decay, concentration, lower-bound, stability and
//! sparsity reports over scattering trees.

mod bounds;
mod census;
mod concentration;
mod decay;
mod ledger;
mod stability;

pub use bounds::{
    band_energy, lower_bound_check, project_band, BandLimitSpec, BoundStatus, LowerBoundReport,
    LOWER_BOUND_TOLERANCE,
};
pub use census::{signal_census, threshold_census, Census, DEFAULT_THRESHOLD};
pub use concentration::{
    brute_force_concentration_constant, concentration_constant, path_concentration,
    BruteForceConstant, ConcentrationReport, ConcentrationRow, CONCENTRATION_TOLERANCE,
};
pub use decay::{estimate_decay, proof_style_bound, DecayEstimate, ProofStyleBound};
pub use ledger::{energy_ledger, EnergyLedger, IdentityCheck};
pub use stability::{
    diffeo_distance, translation_distance, translation_series, warp, DiffeoReport,
    TranslationReport, WarpField, WarpSample, WARP_SCALES,
};
