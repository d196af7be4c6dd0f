use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::concentration::concentration_constant;
use crate::analysis::decay::estimate_decay;
use crate::analysis::ledger::energy_ledger;
use crate::error::{Error, Result};
use crate::frame::{truncation_set, UniformCoveringFrame};
use crate::grid::{FftEngine, FftScratch, Grid};
use crate::signal::Signal;
use crate::sum::CompensatedSum;
use crate::transform::{scatter, CoefficientStorage, ScatterConfig, Width};

pub const LOWER_BOUND_TOLERANCE: f64 = 1e-9;

/// `(eps, R)` band limit: at least `(1 - eps)^2 ||f||^2` of the energy sits
/// in the closed cube `|xi|_inf <= R` (bins).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLimitSpec {
    pub eps: f64,
    pub radius: f64,
}

impl BandLimitSpec {
    pub fn new(eps: f64, radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) || !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::config(format!(
                "band limit needs eps in [0, 1) and R >= 0, got eps = {eps}, R = {radius}"
            )));
        }
        Ok(Self { eps, radius })
    }

    /// Smallest `eps` for which `f` is `(eps, radius)` band-limited.
    pub fn measured(f: &Signal, radius: f64) -> Result<Self> {
        let total = f.norm_sq();
        let eps = if total > 0.0 {
            (1.0 - (band_energy(f, radius) / total).min(1.0).sqrt()).max(0.0)
        } else {
            0.0
        };
        Self::new(eps, radius)
    }

    pub fn satisfied_by(&self, f: &Signal) -> bool {
        let total = f.norm_sq();
        band_energy(f, self.radius) >= (1.0 - self.eps).powi(2) * total * (1.0 - 1e-12)
    }
}

fn spectrum(f: &Signal) -> Vec<Complex64> {
    let mut s = f.data().to_vec();
    FftEngine::new(f.grid()).forward(&mut s, &mut FftScratch::default());
    s
}

fn inside(grid: Grid, i: usize, radius: f64) -> bool {
    grid.frequency_sup(i) as f64 <= radius
}

/// Energy of `f` on the closed cube `|xi|_inf <= radius`.
pub fn band_energy(f: &Signal, radius: f64) -> f64 {
    let g = f.grid();
    let s = spectrum(f);
    let mut acc = CompensatedSum::new();
    for (i, v) in s.iter().enumerate() {
        if inside(g, i, radius) {
            acc.add(v.norm_sqr());
        }
    }
    acc.value() / g.len() as f64
}

/// Zeroes the spectrum of `f` outside `|xi|_inf <= radius`.
pub fn project_band(f: &Signal, radius: f64) -> Signal {
    let g = f.grid();
    let engine = FftEngine::new(g);
    let mut ws = FftScratch::default();
    let mut s = f.data().to_vec();
    engine.forward(&mut s, &mut ws);
    for (i, v) in s.iter_mut().enumerate() {
        if !inside(g, i, radius) {
            *v = Complex64::default();
        }
    }
    engine.inverse(&mut s, &mut ws);
    if f.is_real() {
        s.iter_mut().for_each(|v| v.im = 0.0);
    }
    Signal::new(g, s).expect("same grid, finite values")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BoundStatus {
    Checked { passes: bool },
    Skipped { note: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub width: usize,
    pub depth: usize,
    pub band_limit: BandLimitSpec,
    /// `||S_F[M,K](f)||^2 / ||f||^2`.
    pub measured_ratio: f64,
    /// Analytic `C_M`.
    pub concentration_constant: f64,
    /// Fitted decay rate of the full-width transform, standing in for `C_0`.
    pub fitted_rate: f64,
    pub decay_degenerate: bool,
    /// `C_M^K (1 - eps^2) - r^{K-1}`.
    pub floor: f64,
    pub status: BoundStatus,
}

/// Compares the energy kept by `S_F[M,K]` on a band-limited signal with the
/// floor `C_M^K (1 - eps^2) - r^{K-1}`.
pub fn lower_bound_check(
    f: &Signal,
    frame: &UniformCoveringFrame,
    m: usize,
    k: usize,
    spec: BandLimitSpec,
) -> Result<LowerBoundReport> {
    f.check_grid(frame.grid())?;
    truncation_set(frame.lattice(), m)?;
    if k == 0 {
        return Err(Error::config("lower bound needs depth K >= 1"));
    }
    let reach = (frame.lattice().spacing() * m) as f64;
    if reach < spec.radius {
        return Err(Error::precondition(format!(
            "a*M = {reach} is below the band limit R = {}",
            spec.radius
        )));
    }
    let norm_sq = f.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::precondition("lower bound needs a nonzero signal"));
    }
    if !spec.satisfied_by(f) {
        return Err(Error::precondition(format!(
            "signal is not ({}, {}) band-limited",
            spec.eps, spec.radius
        )));
    }

    let truncated = ScatterConfig::new(Width::Truncated(m), k)
        .with_storage(CoefficientStorage::EnergyOnly)
        .with_frontier_energy(false);
    let measured_ratio = scatter(f, frame, &truncated)?.norm_sq() / norm_sq;
    let full = ScatterConfig::new(Width::Full, k).with_storage(CoefficientStorage::EnergyOnly);
    let decay = estimate_decay(&energy_ledger(&scatter(f, frame, &full)?));

    let c_m = concentration_constant(frame.grid().dim, m);
    let floor =
        c_m.powi(k as i32) * (1.0 - spec.eps * spec.eps) - decay.fitted_rate.powi(k as i32 - 1);
    let status = if floor > 0.0 {
        BoundStatus::Checked {
            passes: measured_ratio >= floor - LOWER_BOUND_TOLERANCE,
        }
    } else {
        BoundStatus::Skipped {
            note: format!("floor {floor:.6} is not positive"),
        }
    };
    Ok(LowerBoundReport {
        width: m,
        depth: k,
        band_limit: spec,
        measured_ratio,
        concentration_constant: c_m,
        fitted_rate: decay.fitted_rate,
        decay_degenerate: decay.degenerate,
        floor,
        status,
    })
}
