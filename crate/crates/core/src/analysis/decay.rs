use serde::{Deserialize, Serialize};

use crate::analysis::ledger::EnergyLedger;
use crate::frame::LatticeSpec;
use crate::transform::Width;

/// Layer energies below this fraction of `||f||^2` count as zero in the fit.
const ZERO_FLOOR: f64 = 1e-20;
/// Slack allowed on `E_node[k+1] <= E_node[k]` before flagging.
const RATIO_SLACK: f64 = 1e-9;

/// Geometric decay of the layer energies `E_node[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// `r_k = E_node[k+1] / E_node[k]`, including the frontier; `0` when
    /// `E_node[k] = 0`.
    pub ratios: Vec<f64>,
    /// `exp` of the least-squares slope of `log E_node[k]` over `k >= 1`.
    pub fitted_rate: f64,
    /// First layer used by the fit.
    pub fit_from_layer: usize,
    /// Fewer than two nonzero layers past layer 0; the rate is reported as 0.
    pub degenerate: bool,
    /// Some ratio exceeds 1 at full width.
    pub violation: bool,
}

pub fn estimate_decay(ledger: &EnergyLedger) -> DecayEstimate {
    let series = ledger.node_series();
    let ratios: Vec<f64> = series
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let floor = ZERO_FLOOR * ledger.input_norm_sq;
    let points: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &e)| e > floor)
        .map(|(k, &e)| (k as f64, e.ln()))
        .collect();
    let (fitted_rate, degenerate) = if points.len() < 2 {
        (0.0, true)
    } else {
        (least_squares_slope(&points).exp(), false)
    };
    let violation = ledger.width == Width::Full && ratios.iter().any(|&r| r > 1.0 + RATIO_SLACK);
    DecayEstimate {
        ratios,
        fitted_rate,
        fit_from_layer: 1,
        degenerate,
        violation,
    }
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// The decay constant `1 - C/N` from the covering argument, for the frame's
/// lattice.
///
/// Uses the minorant `phi^(xi) = prod_j max(0, 1 - |xi_j|/a)`, which lies
/// below `|f_0^|` for both window kinds and has a nonnegative inverse
/// transform. A band filter's support (a cube of side `2a`) is covered by
/// `n^d` cubes of half-width `R = a/n`, on which `|phi^|^2 >= (1 - 1/n)^{2d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofStyleBound {
    /// Half-width of the covering cubes, in bins.
    pub radius: f64,
    /// `min_{Q_R} |phi^|^2`.
    pub c: f64,
    /// Number of covering cubes.
    pub cubes: u64,
    /// `1 - c / cubes`.
    pub c0: f64,
}

pub fn proof_style_bound(lattice: &LatticeSpec) -> ProofStyleBound {
    let d = lattice.dim() as i32;
    let a = lattice.spacing() as f64;
    (2..=64u64)
        .map(|n| {
            let c = (1.0 - 1.0 / n as f64).powi(2 * d);
            let cubes = n.pow(d as u32);
            ProofStyleBound {
                radius: a / n as f64,
                c,
                cubes,
                c0: 1.0 - c / cubes as f64,
            }
        })
        .min_by(|x, y| x.c0.total_cmp(&y.c0))
        .expect("nonempty range")
}
