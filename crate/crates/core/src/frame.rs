//! Gabor-type uniform covering frames on the discrete periodic frequency grid.
//!
//! A frame is built from a window profile `|g|^2` supported on the closed cube
//! of half-width one lattice unit, translated to every lattice point `p * a`
//! of the torus `Z_N^d`. Because integer shifts of the window form a partition
//! of unity, the squared masks of the finite periodised family sum to one at
//! every frequency bin.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ColumnSpectrum, FftEngine, FftScratch, Grid};

/// Deviation allowed when checking the partition of unity.
pub const PARTITION_TOLERANCE: f64 = 1e-12;

/// Periodic grid plus integer frequency lattice spacing `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    grid: Grid,
    spacing: usize,
}

impl LatticeSpec {
    pub fn new(dim: usize, n: usize, spacing: usize) -> Result<Self> {
        let grid = Grid::new(dim, n)?;
        if n < 4 {
            return Err(Error::config(format!("N must be at least 4, got {n}")));
        }
        if spacing == 0 {
            return Err(Error::config("lattice spacing a must be at least 1"));
        }
        if !n.is_multiple_of(spacing) {
            return Err(Error::config(format!(
                "lattice spacing a = {spacing} does not divide N = {n}"
            )));
        }
        if n / spacing < 2 {
            return Err(Error::config(format!(
                "N / a = {} lattice points per axis, need at least 2",
                n / spacing
            )));
        }
        Ok(Self { grid, spacing })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Lattice spacing `a` in frequency bins.
    pub fn spacing(&self) -> usize {
        self.spacing
    }

    /// Tiling constant; equal to the spacing for this construction.
    pub fn covering_constant(&self) -> usize {
        self.spacing
    }

    /// Number of lattice points per axis, `L = N / a`.
    pub fn points_per_axis(&self) -> usize {
        self.grid.n / self.spacing
    }

    /// Total number of filters including the low-pass, `L^d`.
    pub fn filter_count(&self) -> usize {
        self.points_per_axis().pow(self.dim() as u32)
    }

    /// Signed representative of a lattice coordinate in `(-L/2, L/2]`.
    pub fn canonical_coord(&self, c: i64) -> i32 {
        let l = self.points_per_axis() as i64;
        let w = c.rem_euclid(l);
        (if 2 * w <= l { w } else { w - l }) as i32
    }

    /// Whether coordinate `c` is its own negative on the lattice torus.
    pub fn is_self_mirror_coord(&self, c: i32) -> bool {
        let l = self.points_per_axis() as i64;
        (2 * c as i64).rem_euclid(l) == 0
    }

    pub fn canonical_point(&self, p: &LatticePoint) -> LatticePoint {
        let mut coords = [0i32; 2];
        for (j, c) in p.coords().iter().enumerate() {
            coords[j] = self.canonical_coord(*c as i64);
        }
        LatticePoint::new(&coords[..self.dim()])
    }

    /// All lattice points of the torus in lexicographic order.
    pub fn all_points(&self) -> Vec<LatticePoint> {
        let l = self.points_per_axis() as i64;
        let lo = -((l - 1) / 2);
        let hi = l / 2;
        let mut out = Vec::with_capacity(self.filter_count());
        match self.dim() {
            1 => (lo..=hi).for_each(|a| out.push(LatticePoint::new(&[a as i32]))),
            _ => {
                for a in lo..=hi {
                    for b in lo..=hi {
                        out.push(LatticePoint::new(&[a as i32, b as i32]));
                    }
                }
            }
        }
        out
    }
}

/// A lattice index `p` in `Z^d`, `d <= 2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    coords: [i32; 2],
    dim: u8,
}

impl LatticePoint {
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            (1..=2).contains(&coords.len()),
            "lattice points have 1 or 2 coordinates"
        );
        let mut c = [0; 2];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(&[0, 0][..dim])
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    pub fn sup_norm(&self) -> i32 {
        self.coords().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn negated(&self) -> Self {
        let c: Vec<i32> = self.coords().iter().map(|c| -c).collect();
        Self::new(&c)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coords() {
            [a] => write!(f, "{a}"),
            [a, b] => write!(f, "({a},{b})"),
            _ => unreachable!(),
        }
    }
}

impl Serialize for LatticePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        if !(1..=2).contains(&v.len()) {
            return Err(serde::de::Error::custom(
                "lattice point must have 1 or 2 coordinates",
            ));
        }
        Ok(Self::new(&v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Tent,
    RaisedCosine,
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tent" => Ok(WindowKind::Tent),
            "raised-cosine" => Ok(WindowKind::RaisedCosine),
            other => Err(Error::config(format!(
                "unknown window kind {other:?} (expected tent or raised-cosine)"
            ))),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Tent => "tent",
            WindowKind::RaisedCosine => "raised-cosine",
        })
    }
}

/// Squared window magnitude `|g|^2` in lattice units, a tensor product of a
/// one-dimensional profile whose integer shifts sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowProfile {
    kind: WindowKind,
}

impl WindowProfile {
    pub fn new(kind: WindowKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    /// One-dimensional `|g|^2(t)`.
    pub fn squared_1d(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= 1.0 {
            return 0.0;
        }
        match self.kind {
            WindowKind::Tent => 1.0 - t,
            WindowKind::RaisedCosine => {
                let c = (PI * t / 2.0).cos();
                c * c
            }
        }
    }

    /// One-dimensional amplitude `g(t) >= 0`.
    pub fn amplitude_1d(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= 1.0 {
            return 0.0;
        }
        match self.kind {
            WindowKind::Tent => (1.0 - t).sqrt(),
            WindowKind::RaisedCosine => (PI * t / 2.0).cos(),
        }
    }

    /// `|g|^2(xi)` for a point in lattice units.
    pub fn squared(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|&t| self.squared_1d(t)).product()
    }
}

/// Parses a window kind name and returns its profile.
pub fn build_window_profile(kind: &str) -> Result<WindowProfile> {
    Ok(WindowProfile::new(kind.parse()?))
}

/// Nonzero entries of a separable mask along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMask {
    /// Wrapped bin indices, ordered by signed offset from the centre.
    pub bins: Vec<usize>,
    pub values: Vec<f64>,
}

/// One frame element `|f_p|`, stored as its separable support.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFilter {
    grid: Grid,
    center: LatticePoint,
    axes: Vec<AxisMask>,
}

impl FrequencyFilter {
    fn build(lattice: &LatticeSpec, window: &WindowProfile, center: LatticePoint) -> Self {
        let grid = lattice.grid();
        let a = lattice.spacing() as i64;
        let axes = center
            .coords()
            .iter()
            .map(|&p| {
                let c = p as i64 * a;
                let mut bins = Vec::with_capacity(2 * a as usize);
                let mut values = Vec::with_capacity(2 * a as usize);
                for off in -(a - 1)..=(a - 1) {
                    let v = window.amplitude_1d(off as f64 / a as f64);
                    if v > 0.0 {
                        bins.push(grid.wrap(c + off));
                        values.push(v);
                    }
                }
                AxisMask { bins, values }
            })
            .collect();
        Self { grid, center, axes }
    }

    pub fn center(&self) -> LatticePoint {
        self.center
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn axes(&self) -> &[AxisMask] {
        &self.axes
    }

    /// Axis-1 bins touched by the support (all of axis 0 for `d = 1`).
    pub fn support_columns(&self) -> &[usize] {
        &self.axes[self.axes.len() - 1].bins
    }

    /// Number of nonzero mask entries.
    pub fn support_len(&self) -> usize {
        self.axes.iter().map(|a| a.bins.len()).product()
    }

    /// Calls `f(flat_index, mask_value)` over the support.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        let n = self.grid.n;
        match self.axes.as_slice() {
            [x] => {
                for (&b, &v) in x.bins.iter().zip(&x.values) {
                    f(b, v);
                }
            }
            [x, y] => {
                for (&r, &vr) in x.bins.iter().zip(&x.values) {
                    let base = r * n;
                    for (&c, &vc) in y.bins.iter().zip(&y.values) {
                        f(base + c, vr * vc);
                    }
                }
            }
            _ => unreachable!("grids are 1-D or 2-D"),
        }
    }

    /// Mask value at a flat spectrum index.
    pub fn value_at(&self, flat: usize) -> f64 {
        let c = self.grid.coords(flat);
        self.axes
            .iter()
            .enumerate()
            .map(|(j, ax)| {
                ax.bins
                    .iter()
                    .position(|&b| b == c[j])
                    .map_or(0.0, |i| ax.values[i])
            })
            .product()
    }

    /// Dense mask over the full grid.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.for_each(|i, v| out[i] = v);
        out
    }

    /// Writes `mask * spectrum` into `out` on the support and zero elsewhere.
    /// `out` must be zero outside this filter's support on entry.
    #[inline]
    pub fn apply_into(&self, spectrum: &[Complex64], out: &mut [Complex64]) {
        self.for_each(|i, v| out[i] = spectrum[i] * v);
    }

    /// Clears the support region of `out`.
    #[inline]
    pub fn clear_support(&self, out: &mut [Complex64]) {
        self.for_each(|i, _| out[i] = Complex64::default());
    }

    /// `sum |X|^2 |mask|^2 / n^d`: the energy of `x * f` from the spectrum of `x`.
    pub fn filtered_energy(&self, spectrum: &[Complex64]) -> f64 {
        let mut acc = crate::sum::CompensatedSum::new();
        self.for_each(|i, v| acc.add(spectrum[i].norm_sqr() * v * v));
        acc.value() / self.grid.len() as f64
    }

    /// Calls `f(row, col, mask_value)` over the support, column by column;
    /// `row` is 0 for `d = 1`.
    #[inline]
    pub fn for_each_cell(&self, mut f: impl FnMut(usize, usize, f64)) {
        match self.axes.as_slice() {
            [y] => {
                for (&c, &v) in y.bins.iter().zip(&y.values) {
                    f(0, c, v);
                }
            }
            [x, y] => {
                for (&c, &vc) in y.bins.iter().zip(&y.values) {
                    for (&r, &vr) in x.bins.iter().zip(&x.values) {
                        f(r, c, vr * vc);
                    }
                }
            }
            _ => unreachable!("grids are 1-D or 2-D"),
        }
    }

    /// [`filtered_energy`](Self::filtered_energy) on a column spectrum that
    /// holds every support column.
    pub fn filtered_energy_columns(&self, spectrum: &ColumnSpectrum) -> f64 {
        let mut acc = crate::sum::CompensatedSum::new();
        let y = &self.axes[self.axes.len() - 1];
        for (&c, &vc) in y.bins.iter().zip(&y.values) {
            let col = spectrum.column(c);
            match self.axes.len() {
                1 => acc.add(col[0].norm_sqr() * vc * vc),
                _ => {
                    let x = &self.axes[0];
                    for (&r, &vr) in x.bins.iter().zip(&x.values) {
                        let v = vr * vc;
                        acc.add(col[r].norm_sqr() * v * v);
                    }
                }
            }
        }
        acc.value() / self.grid.len() as f64
    }

    /// `mask * spectrum` as compact column data over
    /// [`support_columns`](Self::support_columns), zero off the support.
    pub fn apply_columns(&self, spectrum: &ColumnSpectrum, out: &mut Vec<Complex64>) {
        let rows = spectrum.rows();
        out.clear();
        out.resize(self.support_columns().len() * rows, Complex64::default());
        let y = &self.axes[self.axes.len() - 1];
        for (j, (&c, &vc)) in y.bins.iter().zip(&y.values).enumerate() {
            let col = spectrum.column(c);
            let dst = &mut out[j * rows..(j + 1) * rows];
            match self.axes.len() {
                1 => dst[0] = col[0] * vc,
                _ => {
                    let x = &self.axes[0];
                    for (&r, &vr) in x.bins.iter().zip(&x.values) {
                        dst[r] = col[r] * (vr * vc);
                    }
                }
            }
        }
    }
}

/// JSON description of a frame: `{d, N, a, window_kind}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub a: usize,
    pub window_kind: WindowKind,
}

impl FrameSpec {
    pub fn build(&self) -> Result<UniformCoveringFrame> {
        build_frame(
            LatticeSpec::new(self.d, self.n, self.a)?,
            WindowProfile::new(self.window_kind),
        )
    }
}

/// The full periodised Gabor frame `{f_0} ∪ {f_p : p != 0}`.
#[derive(Debug, Clone)]
pub struct UniformCoveringFrame {
    lattice: LatticeSpec,
    window: WindowProfile,
    filters: BTreeMap<LatticePoint, FrequencyFilter>,
    engine: FftEngine,
}

/// Builds every frame element of the torus for the given lattice and window.
pub fn build_frame(lattice: LatticeSpec, window: WindowProfile) -> Result<UniformCoveringFrame> {
    let filters = lattice
        .all_points()
        .into_iter()
        .map(|p| (p, FrequencyFilter::build(&lattice, &window, p)))
        .collect();
    Ok(UniformCoveringFrame {
        lattice,
        window,
        filters,
        engine: FftEngine::new(lattice.grid()),
    })
}

impl UniformCoveringFrame {
    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn window(&self) -> &WindowProfile {
        &self.window
    }

    pub fn grid(&self) -> Grid {
        self.lattice.grid()
    }

    pub fn engine(&self) -> &FftEngine {
        &self.engine
    }

    pub fn spec(&self) -> FrameSpec {
        FrameSpec {
            d: self.lattice.dim(),
            n: self.lattice.n(),
            a: self.lattice.spacing(),
            window_kind: self.window.kind(),
        }
    }

    /// The low-pass element `f_0`.
    pub fn low_pass(&self) -> &FrequencyFilter {
        &self.filters[&LatticePoint::origin(self.lattice.dim())]
    }

    /// The filter centred at `p` (any representative modulo `L`).
    pub fn filter(&self, p: &LatticePoint) -> Option<&FrequencyFilter> {
        self.filters.get(&self.lattice.canonical_point(p))
    }

    /// Band filters `p != 0` in lexicographic order of their canonical index.
    pub fn band_filters(&self) -> impl Iterator<Item = &FrequencyFilter> {
        self.filters.values().filter(|f| !f.center().is_origin())
    }

    /// Every element including `f_0`.
    pub fn filters(&self) -> impl Iterator<Item = &FrequencyFilter> {
        self.filters.values()
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Copy of the frame with one band filter dropped. Used to exercise the
    /// partition check against a broken family.
    pub fn without_filter(&self, p: &LatticePoint) -> Self {
        let mut out = self.clone();
        out.filters.remove(&self.lattice.canonical_point(p));
        out
    }

    /// Dense `sum_p |f_p|^2` over the given centres (and `f_0` if requested).
    pub fn squared_sum<'a>(&self, centers: impl IntoIterator<Item = &'a LatticePoint>) -> Vec<f64> {
        let mut acc = vec![0.0; self.grid().len()];
        for p in centers {
            if let Some(f) = self.filter(p) {
                f.for_each(|i, v| acc[i] += v * v);
            }
        }
        acc
    }
}

/// The width-`M` index set `P[M] = {p : 0 < |p|_inf <= M}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSet {
    pub width: usize,
    pub members: Vec<LatticePoint>,
}

/// Builds `P[M]`; requires `1 <= M < L/2` so no two members alias on the torus.
pub fn truncation_set(lattice: &LatticeSpec, width: usize) -> Result<TruncationSet> {
    let l = lattice.points_per_axis();
    if width == 0 {
        return Err(Error::config("truncation width M must be at least 1"));
    }
    if 2 * width >= l {
        return Err(Error::config(format!(
            "truncation width M = {width} must be below L/2 = {} (N/a = {l})",
            l as f64 / 2.0
        )));
    }
    let m = width as i32;
    let mut members = Vec::new();
    match lattice.dim() {
        1 => (-m..=m)
            .filter(|&a| a != 0)
            .for_each(|a| members.push(LatticePoint::new(&[a]))),
        _ => {
            for a in -m..=m {
                for b in -m..=m {
                    if a != 0 || b != 0 {
                        members.push(LatticePoint::new(&[a, b]));
                    }
                }
            }
        }
    }
    Ok(TruncationSet { width, members })
}

impl TruncationSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Outcome of a partition-of-unity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub max_deviation: f64,
    /// Signed frequency (bins) where the deviation peaks.
    pub argmax_frequency: Vec<i64>,
}

impl VerificationReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

/// Checks `|f_0|^2 + sum |f_p|^2 == 1` over the whole frame, or with a
/// truncation set, the tiling profile: 1 on `|xi|_inf <= aM` and 0 on
/// `|xi|_inf >= a(M+1)`.
pub fn verify_partition(
    frame: &UniformCoveringFrame,
    set: Option<&TruncationSet>,
) -> VerificationReport {
    let grid = frame.grid();
    let (sum, bounds) = match set {
        None => {
            let sum = frame.squared_sum(frame.filters.keys());
            (sum, None)
        }
        Some(set) => {
            let origin = LatticePoint::origin(grid.dim);
            let sum = frame.squared_sum(std::iter::once(&origin).chain(set.members.iter()));
            let a = frame.lattice().spacing() as i64;
            (
                sum,
                Some((a * set.width as i64, a * (set.width as i64 + 1))),
            )
        }
    };
    let mut worst = (0.0f64, 0usize);
    for (i, &s) in sum.iter().enumerate() {
        let target = match bounds {
            None => Some(1.0),
            Some((inner, outer)) => {
                let r = grid.frequency_sup(i);
                if r <= inner {
                    Some(1.0)
                } else if r >= outer {
                    Some(0.0)
                } else {
                    None
                }
            }
        };
        if let Some(t) = target {
            let dev = (s - t).abs();
            if dev > worst.0 {
                worst = (dev, i);
            }
        }
    }
    VerificationReport {
        max_deviation: worst.0,
        argmax_frequency: grid.frequency(worst.1),
    }
}

/// `||grad f_0||_{L^1}` of the frame's low-pass element.
pub fn gradient_l1_norm(frame: &UniformCoveringFrame) -> f64 {
    gradient_l1_norm_of_mask(frame.grid(), &frame.low_pass().to_dense())
}

/// `sum_x |grad h(x)|` for the filter `h` whose DFT is `mask`, with the
/// gradient taken spectrally (multiplier `2 pi i xi / N` per axis, samples as
/// unit cells).
pub fn gradient_l1_norm_of_mask(grid: Grid, mask: &[f64]) -> f64 {
    assert_eq!(mask.len(), grid.len());
    let engine = FftEngine::new(grid);
    let mut ws = FftScratch::default();
    let mut magnitude_sq = vec![0.0; grid.len()];
    for axis in 0..grid.dim {
        let mut buf: Vec<Complex64> = mask
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let k = grid.coords(i)[axis];
                // The Nyquist bin has no well-defined sign; drop it.
                let xi = if 2 * k == grid.n { 0 } else { grid.signed(k) };
                Complex64::new(0.0, 2.0 * PI * xi as f64 / grid.n as f64) * m
            })
            .collect();
        engine.inverse(&mut buf, &mut ws);
        for (acc, v) in magnitude_sq.iter_mut().zip(&buf) {
            *acc += v.norm_sqr();
        }
    }
    crate::sum::sum(magnitude_sq.into_iter().map(f64::sqrt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(d: usize, n: usize, a: usize, kind: WindowKind) -> UniformCoveringFrame {
        build_frame(LatticeSpec::new(d, n, a).unwrap(), WindowProfile::new(kind)).unwrap()
    }

    #[test]
    fn tent_profile_values() {
        let w = build_window_profile("tent").unwrap();
        assert_eq!(w.squared_1d(0.0), 1.0);
        assert_eq!(w.squared_1d(1.0), 0.0);
        assert_eq!(w.squared_1d(-1.0), 0.0);
        assert_eq!(w.squared_1d(0.5), 0.5);
        assert_eq!(w.squared(&[0.5, 0.5]), 0.25);
    }

    #[test]
    fn raised_cosine_profile_values() {
        let w = build_window_profile("raised-cosine").unwrap();
        assert!((w.squared_1d(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(w.squared_1d(0.0), 1.0);
    }

    #[test]
    fn unknown_window_is_config_error() {
        assert!(matches!(
            build_window_profile("hann"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn integer_shift_partition_of_unity() {
        for kind in [WindowKind::Tent, WindowKind::RaisedCosine] {
            let w = WindowProfile::new(kind);
            for i in 0..200 {
                let xi = -3.0 + i as f64 * 0.0301;
                let s: f64 = (-6..=6).map(|m| w.squared_1d(xi - m as f64)).sum();
                assert!((s - 1.0).abs() < 1e-14, "{kind} at {xi}: {s}");
            }
        }
    }

    #[test]
    fn lattice_preconditions() {
        assert!(matches!(LatticeSpec::new(1, 7, 2), Err(Error::Config(_))));
        assert!(LatticeSpec::new(1, 2, 1).is_err());
        assert!(LatticeSpec::new(1, 8, 8).is_err());
        assert!(LatticeSpec::new(3, 8, 2).is_err());
        assert!(LatticeSpec::new(1, 8, 4).is_ok());
    }

    #[test]
    fn small_frame_direct_summation() {
        // N = 8, a = 4: filters at p = 0 and p = 1 (centre bin 4).
        let f = frame(1, 8, 4, WindowKind::Tent);
        let centers: Vec<_> = f.filters().map(|x| x.center()).collect();
        assert_eq!(
            centers,
            vec![LatticePoint::new(&[0]), LatticePoint::new(&[1])]
        );
        let m0 = f.low_pass().to_dense();
        let m1 = f.filter(&LatticePoint::new(&[1])).unwrap().to_dense();
        for k in 0..8 {
            assert!(
                (m0[k] * m0[k] + m1[k] * m1[k] - 1.0).abs() < 1e-15,
                "bin {k}"
            );
        }
        assert_eq!(m0[0], 1.0);
        assert_eq!(m1[4], 1.0);
        assert!((m0[2] * m0[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn filter_count_2d() {
        let f = frame(2, 64, 4, WindowKind::Tent);
        assert_eq!(f.len(), 256);
        assert_eq!(f.band_filters().count(), 255);
    }

    #[test]
    fn full_partition_holds() {
        for kind in [WindowKind::Tent, WindowKind::RaisedCosine] {
            let f = frame(2, 64, 4, kind);
            let r = verify_partition(&f, None);
            assert!(r.max_deviation <= PARTITION_TOLERANCE, "{kind}: {r:?}");
        }
    }

    #[test]
    fn truncated_tiling_in_1d() {
        let f = frame(1, 64, 4, WindowKind::Tent);
        let set = truncation_set(f.lattice(), 1).unwrap();
        let sum = f.squared_sum(std::iter::once(&LatticePoint::origin(1)).chain(&set.members));
        for k in 0..64 {
            let r = f.grid().signed(k).abs();
            if r <= 4 {
                assert!((sum[k] - 1.0).abs() < 1e-15);
            }
            if r >= 8 {
                assert_eq!(sum[k], 0.0);
            }
        }
        assert!(verify_partition(&f, Some(&set)).max_deviation < 1e-15);
    }

    #[test]
    fn removing_a_filter_is_detected() {
        let f = frame(1, 64, 4, WindowKind::Tent);
        let p = LatticePoint::new(&[3]);
        let broken = f.without_filter(&p);
        let r = verify_partition(&broken, None);
        let removed = f.filter(&p).unwrap().to_dense();
        let expect = removed.iter().map(|v| v * v).fold(0.0, f64::max);
        assert!((r.max_deviation - expect).abs() < 1e-15);
        assert_eq!(r.argmax_frequency, vec![12]);
    }

    #[test]
    fn truncation_set_sizes() {
        let l2 = LatticeSpec::new(2, 64, 4).unwrap();
        assert_eq!(truncation_set(&l2, 1).unwrap().len(), 8);
        assert_eq!(truncation_set(&l2, 2).unwrap().len(), 24);
        let l1 = LatticeSpec::new(1, 64, 4).unwrap();
        assert_eq!(truncation_set(&l1, 3).unwrap().len(), 6);
        assert!(truncation_set(&l1, 8).is_err());
        assert!(truncation_set(&l1, 0).is_err());
    }

    #[test]
    fn mirror_masks_reflect() {
        let f = frame(2, 32, 4, WindowKind::RaisedCosine);
        let g = f.grid();
        for filt in f.band_filters() {
            let twin = f.filter(&filt.center().negated()).unwrap();
            let m = filt.to_dense();
            let t = twin.to_dense();
            for i in 0..g.len() {
                let c = g.coords(i);
                let reflected = g.flat([g.wrap(-(c[0] as i64)), g.wrap(-(c[1] as i64))]);
                assert_eq!(m[i], t[reflected]);
            }
        }
    }

    #[test]
    fn support_is_one_cube() {
        let f = frame(2, 32, 4, WindowKind::Tent);
        for filt in f.filters() {
            for ax in filt.axes() {
                assert!(ax.bins.len() <= 8);
                // Consecutive modulo N.
                for w in ax.bins.windows(2) {
                    assert_eq!((w[0] + 1) % 32, w[1]);
                }
            }
        }
    }

    #[test]
    fn gradient_norm_of_zero_mask() {
        let g = Grid::new(1, 64).unwrap();
        assert_eq!(gradient_l1_norm_of_mask(g, &vec![0.0; 64]), 0.0);
    }

    fn naive_gradient_l1(grid: Grid, mask: &[f64]) -> f64 {
        // |grad h(x)|, h(x) = N^-d sum_xi mask(xi) e^{2 pi i xi.x / N}
        let n = grid.n as f64;
        let scale = 1.0 / grid.len() as f64;
        let mut total = 0.0;
        for x in 0..grid.len() {
            let cx = grid.coords(x);
            let mut sq = 0.0;
            for axis in 0..grid.dim {
                let mut g = Complex64::default();
                for k in 0..grid.len() {
                    let ck = grid.coords(k);
                    let xi = if 2 * ck[axis] == grid.n {
                        0
                    } else {
                        grid.signed(ck[axis])
                    };
                    let phase: f64 = (0..grid.dim)
                        .map(|j| grid.signed(ck[j]) as f64 * cx[j] as f64)
                        .sum::<f64>()
                        * 2.0
                        * PI
                        / n;
                    g += Complex64::new(0.0, 2.0 * PI * xi as f64 / n)
                        * mask[k]
                        * Complex64::from_polar(scale, phase);
                }
                sq += g.norm_sqr();
            }
            total += sq.sqrt();
        }
        total
    }

    #[test]
    fn gradient_norm_matches_direct_sum() {
        for (d, n, a) in [(1, 64, 4), (1, 32, 8), (2, 16, 4)] {
            let f = frame(d, n, a, WindowKind::RaisedCosine);
            let mask = f.low_pass().to_dense();
            let direct = naive_gradient_l1(f.grid(), &mask);
            let fast = gradient_l1_norm(&f);
            assert!((fast - direct).abs() < 1e-10 * direct, "{fast} vs {direct}");
        }
    }

    #[test]
    fn gradient_norm_doubles_with_spacing() {
        let g4 = gradient_l1_norm(&frame(1, 64, 4, WindowKind::RaisedCosine));
        let g8 = gradient_l1_norm(&frame(1, 64, 8, WindowKind::RaisedCosine));
        assert!(g4 > 0.0 && g4.is_finite());
        let ratio = g8 / g4;
        assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
        let t4 = gradient_l1_norm(&frame(1, 64, 4, WindowKind::Tent));
        let t8 = gradient_l1_norm(&frame(1, 64, 8, WindowKind::Tent));
        assert!(t8 > 1.8 * t4, "{t4} vs {t8}");
    }

    #[test]
    fn gradient_norm_converges_under_refinement() {
        let g = |n: usize, kind| gradient_l1_norm(&frame(1, n, n / 16, kind));
        let (r1, r2) = (
            g(128, WindowKind::RaisedCosine),
            g(256, WindowKind::RaisedCosine),
        );
        assert!(((r2 - r1) / r1).abs() < 0.02, "{r1} vs {r2}");
        // The tent amplitude has a square-root edge, so its tail converges slowly.
        let t: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| g(n, WindowKind::Tent))
            .collect();
        for w in t.windows(3) {
            assert!((w[2] - w[1]).abs() < (w[1] - w[0]).abs());
        }
    }

    #[test]
    fn frame_spec_json_shape() {
        let spec = frame(2, 64, 4, WindowKind::Tent).spec();
        let json = serde_json::to_value(spec).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"d": 2, "N": 64, "a": 4, "window_kind": "tent"})
        );
    }
}
