use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::bounds::BandLimitSpec;
use crate::analysis::decay::estimate_decay;
use crate::analysis::ledger::energy_ledger;
use crate::error::{Error, Result};
use crate::frame::{gradient_l1_norm, UniformCoveringFrame};
use crate::grid::Grid;
use crate::signal::Signal;
use crate::transform::{scatter, CoefficientStorage, ScatterConfig, ScatteringTree};

/// Scales of the displacement field used by [`diffeo_distance`].
pub const WARP_SCALES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

fn comparable(config: &ScatterConfig) -> ScatterConfig {
    config.clone().with_storage(CoefficientStorage::Full)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub shift: Vec<i64>,
    /// `|y|`.
    pub shift_norm: f64,
    pub input_norm: f64,
    /// `D(y) = ||S(T_y f) - S(f)||`.
    pub distance: f64,
    /// `||grad f_0||_1`.
    pub gradient_l1: f64,
    /// Fitted decay rate `r` of `S(f)`, standing in for `C_0`.
    pub fitted_rate: f64,
    /// `sqrt(1 + 1/(1 - r))`.
    pub constant: f64,
    /// `C |y| ||grad f_0||_1 ||f||`.
    pub bound: f64,
    /// `D(y) / (|y| ||f||)`; 0 when either factor vanishes.
    pub normalized: f64,
    pub within_bound: bool,
}

fn translation_report(
    f: &Signal,
    shift: &[i64],
    frame: &UniformCoveringFrame,
    base: &ScatteringTree,
) -> Result<TranslationReport> {
    let moved = scatter(&f.translate(shift)?, frame, &base.config)?;
    let distance = moved.distance(base)?;
    let decay = estimate_decay(&energy_ledger(base));
    let shift_norm = shift.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
    let input_norm = f.norm();
    let gradient_l1 = gradient_l1_norm(frame);
    let constant = (1.0 + 1.0 / (1.0 - decay.fitted_rate)).sqrt();
    let bound = constant * shift_norm * gradient_l1 * input_norm;
    let scale = shift_norm * input_norm;
    Ok(TranslationReport {
        shift: shift.to_vec(),
        shift_norm,
        input_norm,
        distance,
        gradient_l1,
        fitted_rate: decay.fitted_rate,
        constant,
        bound,
        normalized: if scale > 0.0 { distance / scale } else { 0.0 },
        within_bound: distance <= bound,
    })
}

/// `||S(T_y f) - S(f)||` for the circular shift `y` and its theoretical bound.
pub fn translation_distance(
    f: &Signal,
    shift: &[i64],
    frame: &UniformCoveringFrame,
    config: &ScatterConfig,
) -> Result<TranslationReport> {
    f.check_grid(frame.grid())?;
    let base = scatter(f, frame, &comparable(config))?;
    translation_report(f, shift, frame, &base)
}

/// Several shifts of one signal against a single reference transform.
pub fn translation_series(
    f: &Signal,
    shifts: &[Vec<i64>],
    frame: &UniformCoveringFrame,
    config: &ScatterConfig,
) -> Result<Vec<TranslationReport>> {
    f.check_grid(frame.grid())?;
    let base = scatter(f, frame, &comparable(config))?;
    shifts
        .iter()
        .map(|y| translation_report(f, y, frame, &base))
        .collect()
}

/// Displacement field `tau` on the grid, in samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpField {
    grid: Grid,
    tau: Vec<[f64; 2]>,
    sup: f64,
    gradient_sup: f64,
}

impl WarpField {
    pub fn new(grid: Grid, tau: Vec<[f64; 2]>) -> Result<Self> {
        if tau.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.dims(),
                actual: vec![tau.len()],
            });
        }
        if tau.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::precondition("warp field has non-finite entries"));
        }
        let d = grid.dim;
        let sup = tau
            .iter()
            .flat_map(|t| t[..d].iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        // Central differences with periodic wrap.
        let mut gradient_sup: f64 = 0.0;
        for i in 0..grid.len() {
            let c = grid.coords(i);
            for axis in 0..d {
                let mut fwd = c;
                let mut bwd = c;
                fwd[axis] = grid.wrap(c[axis] as i64 + 1);
                bwd[axis] = grid.wrap(c[axis] as i64 - 1);
                let (tf, tb) = (tau[grid.flat(fwd)], tau[grid.flat(bwd)]);
                for comp in 0..d {
                    gradient_sup = gradient_sup.max(((tf[comp] - tb[comp]) / 2.0).abs());
                }
            }
        }
        Ok(Self {
            grid,
            tau,
            sup,
            gradient_sup,
        })
    }

    pub fn constant(grid: Grid, shift: &[f64]) -> Result<Self> {
        let mut v = [0.0; 2];
        v[..shift.len().min(2)].copy_from_slice(&shift[..shift.len().min(2)]);
        Self::new(grid, vec![v; grid.len()])
    }

    /// `tau_i(x) = amplitude * sin(2 pi k x_i / N)` on each axis.
    pub fn sinusoidal(grid: Grid, amplitude: f64, cycles: usize) -> Result<Self> {
        let tau = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                let mut v = [0.0; 2];
                for axis in 0..grid.dim {
                    v[axis] =
                        amplitude * (2.0 * PI * (cycles * c[axis]) as f64 / grid.n as f64).sin();
                }
                v
            })
            .collect();
        Self::new(grid, tau)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            grid: self.grid,
            tau: self.tau.iter().map(|v| [v[0] * t, v[1] * t]).collect(),
            sup: self.sup * t.abs(),
            gradient_sup: self.gradient_sup * t.abs(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn displacement(&self, i: usize) -> &[f64] {
        &self.tau[i][..self.grid.dim]
    }

    /// `||tau||_inf` over samples and components.
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    /// `max |d tau_i / d x_j|` by central differences.
    pub fn gradient_sup_norm(&self) -> f64 {
        self.gradient_sup
    }

    /// `||grad tau||_inf <= 1/(2d)`.
    pub fn within_gradient_cap(&self) -> bool {
        self.gradient_sup <= 1.0 / (2.0 * self.grid.dim as f64)
    }
}

/// `(T_tau f)(x) = f(x - tau(x))` by periodic (bi)linear interpolation.
pub fn warp(f: &Signal, field: &WarpField) -> Result<Signal> {
    f.check_grid(field.grid)?;
    let g = f.grid();
    let n = g.n as f64;
    let data = f.data();
    let out = (0..g.len())
        .map(|i| {
            let c = g.coords(i);
            let tau = field.displacement(i);
            let mut base = [0usize; 2];
            let mut frac = [0.0f64; 2];
            for axis in 0..g.dim {
                let pos = (c[axis] as f64 - tau[axis]).rem_euclid(n);
                let fl = pos.floor();
                base[axis] = g.wrap(fl as i64);
                frac[axis] = pos - fl;
            }
            let mut acc = Complex64::default();
            let corners = 1usize << g.dim;
            for corner in 0..corners {
                let mut idx = base;
                let mut w = 1.0;
                for axis in 0..g.dim {
                    if corner >> axis & 1 == 1 {
                        idx[axis] = g.wrap(base[axis] as i64 + 1);
                        w *= frac[axis];
                    } else {
                        w *= 1.0 - frac[axis];
                    }
                }
                if w != 0.0 {
                    acc += data[g.flat(idx)] * w;
                }
            }
            acc
        })
        .collect();
    Signal::new(g, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpSample {
    pub scale: f64,
    pub sup_norm: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffeoReport {
    pub input_norm: f64,
    pub sup_norm: f64,
    pub gradient_sup_norm: f64,
    pub band_limit: BandLimitSpec,
    /// `R ||tau||_inf + eps`.
    pub bound_scale: f64,
    /// `D(tau) = ||S(T_tau f) - S(f)||`.
    pub distance: f64,
    /// `D(t tau)` for `t` in [`WARP_SCALES`].
    pub series: Vec<WarpSample>,
    /// Least-squares `c` in `D(t tau) ~ c t`.
    pub slope: f64,
    /// Root-mean-square residual of that fit.
    pub residual: f64,
    /// `residual / slope`; 0 when the slope vanishes.
    pub relative_residual: f64,
}

/// Scattering distance between `f` and its warp, over a range of field scales.
pub fn diffeo_distance(
    f: &Signal,
    field: &WarpField,
    frame: &UniformCoveringFrame,
    config: &ScatterConfig,
    spec: BandLimitSpec,
) -> Result<DiffeoReport> {
    f.check_grid(frame.grid())?;
    if !field.within_gradient_cap() {
        return Err(Error::precondition(format!(
            "||grad tau||_inf = {} exceeds 1/(2d) = {}",
            field.gradient_sup,
            1.0 / (2.0 * field.grid.dim as f64)
        )));
    }
    if !spec.satisfied_by(f) {
        return Err(Error::precondition(format!(
            "signal is not ({}, {}) band-limited",
            spec.eps, spec.radius
        )));
    }
    let config = comparable(config);
    let base = scatter(f, frame, &config)?;
    let series = WARP_SCALES
        .iter()
        .map(|&t| {
            let scaled = field.scaled(t);
            let warped = scatter(&warp(f, &scaled)?, frame, &config)?;
            Ok(WarpSample {
                scale: t,
                sup_norm: scaled.sup_norm(),
                distance: warped.distance(&base)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stt: f64 = series.iter().map(|s| s.scale * s.scale).sum();
    let std: f64 = series.iter().map(|s| s.scale * s.distance).sum();
    let slope = std / stt;
    let residual = (series
        .iter()
        .map(|s| (s.distance - slope * s.scale).powi(2))
        .sum::<f64>()
        / series.len() as f64)
        .sqrt();
    Ok(DiffeoReport {
        input_norm: f.norm(),
        sup_norm: field.sup_norm(),
        gradient_sup_norm: field.gradient_sup_norm(),
        band_limit: spec,
        bound_scale: spec.radius * field.sup_norm() + spec.eps,
        distance: series[0].distance,
        series,
        slope,
        residual,
        relative_residual: if slope > 0.0 { residual / slope } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::analysis::bounds::project_band;
    use crate::frame::{build_frame, LatticeSpec, WindowKind, WindowProfile};
    use crate::transform::Width;

    fn frame(d: usize, n: usize) -> UniformCoveringFrame {
        build_frame(
            LatticeSpec::new(d, n, 4).unwrap(),
            WindowProfile::new(WindowKind::Tent),
        )
        .unwrap()
    }

    fn random(grid: Grid, seed: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::from_real(
            grid,
            (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_and_full_period_shifts_vanish() {
        let fr = frame(1, 64);
        let f = random(fr.grid(), 1);
        let cfg = ScatterConfig::new(Width::Truncated(3), 2);
        let r = translation_series(&f, &[vec![0], vec![64], vec![-128]], &fr, &cfg).unwrap();
        for rep in r {
            assert_eq!(rep.distance, 0.0);
        }
    }

    #[test]
    fn small_shift_within_bound() {
        let fr = frame(1, 64);
        let f = random(fr.grid(), 2);
        let r = translation_distance(&f, &[1], &fr, &ScatterConfig::new(Width::Full, 2)).unwrap();
        assert!(r.distance > 0.0 && r.within_bound, "{r:?}");
    }

    #[test]
    fn linear_interpolation_midpoint() {
        let g = Grid::new(1, 8).unwrap();
        let f = Signal::from_real(g, (0..8).map(|i| i as f64).collect()).unwrap();
        let w = warp(&f, &WarpField::constant(g, &[0.5]).unwrap()).unwrap();
        // f(x - 0.5): halfway between x-1 and x, wrapping at 0.
        assert_eq!(w.data()[3].re, 2.5);
        assert_eq!(w.data()[0].re, 3.5);
    }

    #[test]
    fn integer_constant_warp_is_translation() {
        let fr = frame(2, 16);
        let f = random(fr.grid(), 3);
        let w = warp(&f, &WarpField::constant(fr.grid(), &[2.0, -1.0]).unwrap()).unwrap();
        assert_eq!(w, f.translate(&[2, -1]).unwrap());
    }

    #[test]
    fn field_norms() {
        let g = Grid::new(1, 64).unwrap();
        let w = WarpField::sinusoidal(g, 2.0, 1).unwrap();
        assert!((w.sup_norm() - 2.0).abs() < 1e-12);
        let expect = 2.0 * (2.0 * PI / 64.0).sin();
        assert!((w.gradient_sup_norm() - expect).abs() < 1e-12);
        assert!(w.within_gradient_cap());
        assert!(!WarpField::sinusoidal(g, 8.0, 2)
            .unwrap()
            .within_gradient_cap());
    }

    #[test]
    fn steep_field_is_rejected() {
        let fr = frame(1, 64);
        let f = project_band(&random(fr.grid(), 4), 8.0);
        let field = WarpField::sinusoidal(fr.grid(), 8.0, 2).unwrap();
        let spec = BandLimitSpec::new(0.0, 8.0).unwrap();
        let r = diffeo_distance(
            &f,
            &field,
            &fr,
            &ScatterConfig::new(Width::Truncated(2), 2),
            spec,
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_field_gives_zero_distance() {
        let fr = frame(1, 64);
        let f = project_band(&random(fr.grid(), 5), 8.0);
        let field = WarpField::constant(fr.grid(), &[0.0]).unwrap();
        let spec = BandLimitSpec::new(0.0, 8.0).unwrap();
        let r = diffeo_distance(
            &f,
            &field,
            &fr,
            &ScatterConfig::new(Width::Truncated(2), 2),
            spec,
        )
        .unwrap();
        assert!(r.series.iter().all(|s| s.distance == 0.0));
        assert_eq!(r.relative_residual, 0.0);
    }
}
