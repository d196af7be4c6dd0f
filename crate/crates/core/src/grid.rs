//! The periodic sample grid `Z_N^d` and its DFT engine.
//!
//! Arrays are stored row-major with axis 0 slowest. For `d = 2` a flat index
//! is `i0 * n + i1`; "rows" are contiguous runs along axis 1 and "columns"
//! are strided runs along axis 0.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a periodic grid: `d` axes of `n` samples each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::config(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n == 0 {
            return Err(Error::config("grid size must be positive"));
        }
        Ok(Self { dim, n })
    }

    /// Total number of samples `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// Signed representative of bin `k` in `(-n/2, n/2]`.
    #[inline]
    pub fn signed(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if 2 * k <= n {
            k
        } else {
            k - n
        }
    }

    /// Wraps a signed bin onto `0..n`.
    #[inline]
    pub fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Per-axis coordinates of a flat index (unused axes are 0).
    #[inline]
    pub fn coords(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    #[inline]
    pub fn flat(&self, coords: [usize; 2]) -> usize {
        if self.dim == 1 {
            coords[0]
        } else {
            coords[0] * self.n + coords[1]
        }
    }

    /// Signed frequency of a flat spectrum index, per axis.
    pub fn frequency(&self, flat: usize) -> Vec<i64> {
        let c = self.coords(flat);
        c[..self.dim].iter().map(|&k| self.signed(k)).collect()
    }

    /// Sup-norm of the signed frequency at a flat index.
    pub fn frequency_sup(&self, flat: usize) -> i64 {
        let c = self.coords(flat);
        c[..self.dim]
            .iter()
            .map(|&k| self.signed(k).abs())
            .max()
            .unwrap_or(0)
    }
}

/// Reusable buffers for [`FftEngine`] calls. One per worker thread.
#[derive(Default)]
pub struct FftScratch {
    scratch: Vec<Complex64>,
    columns: Vec<Complex64>,
    real_row: Vec<f64>,
    half_row: Vec<Complex64>,
    real_scratch: Vec<Complex64>,
    row: Vec<Complex64>,
}

const NO_SLOT: usize = usize::MAX;

/// A spectrum kept only on selected axis-1 bins ("columns"), stored
/// column-major: `data[slot * rows + row]`. For `d = 1` there is one row.
#[derive(Debug, Clone, Default)]
pub struct ColumnSpectrum {
    rows: usize,
    cols: Vec<usize>,
    slot: Vec<usize>,
    data: Vec<Complex64>,
}

impl ColumnSpectrum {
    pub fn new(grid: Grid) -> Self {
        Self {
            rows: if grid.dim == 1 { 1 } else { grid.n },
            cols: Vec::new(),
            slot: vec![NO_SLOT; grid.n],
            data: Vec::new(),
        }
    }

    /// Copies the listed columns out of a full row-major spectrum.
    pub fn from_full(grid: Grid, full: &[Complex64], cols: &[usize]) -> Self {
        let mut s = Self::new(grid);
        s.set_columns(cols);
        let (rows, n) = (s.rows, grid.n);
        for (j, &c) in cols.iter().enumerate() {
            for r in 0..rows {
                s.data[j * rows + r] = full[r * n + c];
            }
        }
        s
    }

    fn set_columns(&mut self, cols: &[usize]) {
        if self.cols != cols {
            for &c in &self.cols {
                self.slot[c] = NO_SLOT;
            }
            self.cols.clear();
            self.cols.extend_from_slice(cols);
            for (j, &c) in cols.iter().enumerate() {
                self.slot[c] = j;
            }
        }
        self.data
            .resize(cols.len() * self.rows, Complex64::default());
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[usize] {
        &self.cols
    }

    pub fn has_column(&self, col: usize) -> bool {
        self.slot[col] != NO_SLOT
    }

    /// Values of column `col` along axis 0. Panics if the column is absent.
    #[inline]
    pub fn column(&self, col: usize) -> &[Complex64] {
        let j = self.slot[col];
        assert!(j != NO_SLOT, "column {col} was not computed");
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.column(col)[row]
    }
}

/// Planned forward/inverse DFTs over a [`Grid`].
///
/// The forward transform is unnormalised; inverses carry the `1/n^d` factor so
/// that `inverse(forward(x)) == x` and `sum |x|^2 == sum |X|^2 / n^d`.
#[derive(Clone)]
pub struct FftEngine {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    real_forward: Arc<dyn RealToComplex<f64>>,
}

impl std::fmt::Debug for FftEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftEngine")
            .field("grid", &self.grid)
            .finish()
    }
}

/// Columns processed per strided gather.
const COLUMN_BLOCK: usize = 8;

impl FftEngine {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let real_forward = RealFftPlanner::<f64>::new().plan_fft_forward(grid.n);
        Self {
            grid,
            forward,
            inverse,
            real_forward,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn check_len(&self, len: usize) {
        assert_eq!(len, self.grid.len(), "buffer does not match the grid");
    }

    fn ensure_scratch(&self, ws: &mut FftScratch) {
        let need = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        if ws.scratch.len() < need {
            ws.scratch.resize(need, Complex64::default());
        }
    }

    /// Runs `plan` over the listed columns (axis 0) in place, optionally scaling.
    fn columns_pass(
        &self,
        plan: &Arc<dyn Fft<f64>>,
        data: &mut [Complex64],
        cols: &[usize],
        scale: f64,
        ws: &mut FftScratch,
    ) {
        let n = self.grid.n;
        for block in cols.chunks(COLUMN_BLOCK) {
            let width = block.len();
            ws.columns.resize(width * n, Complex64::default());
            for r in 0..n {
                let row = &data[r * n..(r + 1) * n];
                for (j, &c) in block.iter().enumerate() {
                    ws.columns[j * n + r] = row[c];
                }
            }
            plan.process_with_scratch(&mut ws.columns[..width * n], &mut ws.scratch);
            for r in 0..n {
                let row = &mut data[r * n..(r + 1) * n];
                for (j, &c) in block.iter().enumerate() {
                    row[c] = ws.columns[j * n + r] * scale;
                }
            }
        }
    }

    /// Full forward DFT in place.
    pub fn forward(&self, data: &mut [Complex64], ws: &mut FftScratch) {
        self.check_len(data.len());
        self.ensure_scratch(ws);
        self.forward.process_with_scratch(data, &mut ws.scratch);
        if self.grid.dim == 2 {
            let all: Vec<usize> = (0..self.grid.n).collect();
            self.columns_pass(&self.forward, data, &all, 1.0, ws);
        }
    }

    /// Full normalised inverse DFT in place.
    pub fn inverse(&self, data: &mut [Complex64], ws: &mut FftScratch) {
        let all: Vec<usize> = (0..self.grid.n).collect();
        self.inverse_from_columns(data, &all, ws);
    }

    /// Normalised inverse DFT of a spectrum that vanishes outside the listed
    /// axis-1 bins (`cols`). Only those columns are transformed along axis 0.
    pub fn inverse_from_columns(
        &self,
        data: &mut [Complex64],
        cols: &[usize],
        ws: &mut FftScratch,
    ) {
        self.check_len(data.len());
        self.ensure_scratch(ws);
        let scale = 1.0 / self.grid.len() as f64;
        match self.grid.dim {
            1 => {
                self.inverse.process_with_scratch(data, &mut ws.scratch);
                for v in data.iter_mut() {
                    *v *= scale;
                }
            }
            _ => {
                self.columns_pass(&self.inverse, data, cols, scale, ws);
                self.inverse.process_with_scratch(data, &mut ws.scratch);
            }
        }
    }

    fn ensure_row(&self, ws: &mut FftScratch) {
        ws.row.resize(self.grid.n, Complex64::default());
    }

    /// Inverse-transforms compact column data (`data[j * rows + r]` for the
    /// axis-1 bin `cols[j]`, zero on every other bin) and hands each finished
    /// output row to `emit(row_index, values)`, unscaled.
    fn inverse_compact_rows(
        &self,
        data: &mut [Complex64],
        cols: &[usize],
        ws: &mut FftScratch,
        mut emit: impl FnMut(usize, &[Complex64]),
    ) {
        self.ensure_scratch(ws);
        self.ensure_row(ws);
        let n = self.grid.n;
        let rows = if self.grid.dim == 1 { 1 } else { n };
        assert_eq!(data.len(), cols.len() * rows);
        if rows > 1 {
            for column in data.chunks_exact_mut(rows) {
                self.inverse.process_with_scratch(column, &mut ws.scratch);
            }
        }
        for r in 0..rows {
            ws.row.fill(Complex64::default());
            for (j, &c) in cols.iter().enumerate() {
                ws.row[c] = data[j * rows + r];
            }
            self.inverse
                .process_with_scratch(&mut ws.row, &mut ws.scratch);
            emit(r, &ws.row);
        }
    }

    /// `|x|` where `x` is the normalised inverse DFT of compact column data.
    /// `data` is consumed as workspace.
    pub fn modulus_from_columns(
        &self,
        data: &mut [Complex64],
        cols: &[usize],
        out: &mut [f64],
        ws: &mut FftScratch,
    ) {
        self.check_len(out.len());
        let n = self.grid.n;
        let scale = 1.0 / self.grid.len() as f64;
        self.inverse_compact_rows(data, cols, ws, |r, row| {
            for (o, v) in out[r * n..(r + 1) * n].iter_mut().zip(row) {
                *o = v.norm() * scale;
            }
        });
    }

    /// Normalised inverse DFT of compact column data into a full array.
    pub fn inverse_columns_into(
        &self,
        data: &mut [Complex64],
        cols: &[usize],
        out: &mut [Complex64],
        ws: &mut FftScratch,
    ) {
        self.check_len(out.len());
        let n = self.grid.n;
        let scale = 1.0 / self.grid.len() as f64;
        self.inverse_compact_rows(data, cols, ws, |r, row| {
            for (o, v) in out[r * n..(r + 1) * n].iter_mut().zip(row) {
                *o = v * scale;
            }
        });
    }

    /// Forward DFT of a real signal, finished only on the listed axis-1 bins.
    /// Columns whose mirror bin is also listed are filled from the Hermitian
    /// symmetry `X(k0, -k1) = conj X(-k0, k1)`.
    pub fn forward_real_columns(
        &self,
        input: &[f64],
        cols: &[usize],
        out: &mut ColumnSpectrum,
        ws: &mut FftScratch,
    ) {
        self.check_len(input.len());
        self.ensure_scratch(ws);
        let n = self.grid.n;
        let half = n / 2 + 1;
        ws.real_row.resize(n, 0.0);
        ws.half_row.resize(half, Complex64::default());
        let need = self.real_forward.get_scratch_len();
        if ws.real_scratch.len() < need {
            ws.real_scratch.resize(need, Complex64::default());
        }
        out.set_columns(cols);
        let rows = out.rows;
        let mirrored = |c: usize| c >= half && out.slot[(n - c) % n] != NO_SLOT;
        let derived: Vec<bool> = cols.iter().map(|&c| rows > 1 && mirrored(c)).collect();
        for r in 0..rows {
            ws.real_row.copy_from_slice(&input[r * n..(r + 1) * n]);
            self.real_forward
                .process_with_scratch(&mut ws.real_row, &mut ws.half_row, &mut ws.real_scratch)
                .expect("real FFT buffer sizes are fixed by the plan");
            for (j, &c) in cols.iter().enumerate() {
                if !derived[j] {
                    out.data[j * rows + r] = if c < half {
                        ws.half_row[c]
                    } else {
                        ws.half_row[n - c].conj()
                    };
                }
            }
        }
        if rows > 1 {
            for (j, column) in out.data.chunks_exact_mut(rows).enumerate() {
                if !derived[j] {
                    self.forward.process_with_scratch(column, &mut ws.scratch);
                }
            }
            for (j, &c) in cols.iter().enumerate() {
                if derived[j] {
                    let src = out.slot[n - c];
                    for r in 0..rows {
                        out.data[j * rows + r] = out.data[src * rows + (n - r) % n].conj();
                    }
                }
            }
        }
    }

    /// Forward DFT of a real signal into `out`. With `cols = Some(..)` only the
    /// listed axis-1 bins are finished along axis 0; other columns of `out`
    /// hold partial (row-transformed) values and must not be read.
    pub fn forward_real(
        &self,
        input: &[f64],
        out: &mut [Complex64],
        cols: Option<&[usize]>,
        ws: &mut FftScratch,
    ) {
        self.check_len(input.len());
        self.check_len(out.len());
        self.ensure_scratch(ws);
        let n = self.grid.n;
        let half = n / 2 + 1;
        ws.real_row.resize(n, 0.0);
        ws.half_row.resize(half, Complex64::default());
        let need = self.real_forward.get_scratch_len();
        if ws.real_scratch.len() < need {
            ws.real_scratch.resize(need, Complex64::default());
        }
        let rows = if self.grid.dim == 1 { 1 } else { n };
        for r in 0..rows {
            ws.real_row.copy_from_slice(&input[r * n..(r + 1) * n]);
            self.real_forward
                .process_with_scratch(&mut ws.real_row, &mut ws.half_row, &mut ws.real_scratch)
                .expect("real FFT buffer sizes are fixed by the plan");
            let row = &mut out[r * n..(r + 1) * n];
            row[..half].copy_from_slice(&ws.half_row);
            for k in half..n {
                row[k] = ws.half_row[n - k].conj();
            }
        }
        if self.grid.dim == 2 {
            match cols {
                Some(cols) => self.columns_pass(&self.forward, out, cols, 1.0, ws),
                None => {
                    let all: Vec<usize> = (0..n).collect();
                    self.columns_pass(&self.forward, out, &all, 1.0, ws);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(grid: Grid, x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = grid.n;
        let mut out = vec![Complex64::default(); grid.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let kc = grid.coords(k);
            for (j, &v) in x.iter().enumerate() {
                let jc = grid.coords(j);
                let phase = (0..grid.dim).map(|a| (kc[a] * jc[a]) as f64).sum::<f64>();
                let w = Complex64::from_polar(
                    1.0,
                    sign * 2.0 * std::f64::consts::PI * phase / n as f64,
                );
                *o += v * w;
            }
        }
        out
    }

    fn sample(grid: Grid) -> Vec<Complex64> {
        (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() * 0.5))
            .collect()
    }

    #[test]
    fn signed_bins() {
        let g = Grid::new(1, 8).unwrap();
        let s: Vec<i64> = (0..8).map(|k| g.signed(k)).collect();
        assert_eq!(s, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.wrap(-3), 5);
    }

    #[test]
    fn forward_matches_naive_dft() {
        for grid in [Grid::new(1, 12).unwrap(), Grid::new(2, 6).unwrap()] {
            let engine = FftEngine::new(grid);
            let x = sample(grid);
            let mut y = x.clone();
            engine.forward(&mut y, &mut FftScratch::default());
            let expect = naive_dft(grid, &x, -1.0);
            for (a, b) in y.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let grid = Grid::new(2, 16).unwrap();
        let engine = FftEngine::new(grid);
        let x = sample(grid);
        let mut y = x.clone();
        let mut ws = FftScratch::default();
        engine.forward(&mut y, &mut ws);
        engine.inverse(&mut y, &mut ws);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn column_pruned_inverse_matches_full() {
        let grid = Grid::new(2, 16).unwrap();
        let engine = FftEngine::new(grid);
        let mut spec = vec![Complex64::default(); grid.len()];
        let cols = [3usize, 4, 5];
        for r in 0..16 {
            for &c in &cols {
                spec[r * 16 + c] = Complex64::new(r as f64 - 2.0, c as f64 * 0.5);
            }
        }
        let mut ws = FftScratch::default();
        let mut full = spec.clone();
        engine.inverse(&mut full, &mut ws);
        engine.inverse_from_columns(&mut spec, &cols, &mut ws);
        for (a, b) in spec.iter().zip(&full) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn real_forward_matches_complex_on_selected_columns() {
        for grid in [Grid::new(1, 10).unwrap(), Grid::new(2, 12).unwrap()] {
            let engine = FftEngine::new(grid);
            let real: Vec<f64> = (0..grid.len())
                .map(|i| ((i * 7 % 11) as f64).sqrt())
                .collect();
            let mut full: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let mut ws = FftScratch::default();
            engine.forward(&mut full, &mut ws);
            let mut out = vec![Complex64::default(); grid.len()];
            let cols = [0usize, 1, grid.n - 1];
            engine.forward_real(&real, &mut out, Some(&cols), &mut ws);
            for i in 0..grid.len() {
                let c = grid.coords(i);
                if grid.dim == 1 || cols.contains(&c[1]) {
                    assert!((out[i] - full[i]).norm() < 1e-10, "bin {i}");
                }
            }
        }
    }

    #[test]
    fn column_forward_matches_full_forward() {
        for grid in [
            Grid::new(2, 16).unwrap(),
            Grid::new(1, 16).unwrap(),
            Grid::new(2, 15).unwrap(),
        ] {
            let engine = FftEngine::new(grid);
            let mut ws = FftScratch::default();
            let x: Vec<f64> = sample(grid).iter().map(|v| v.re).collect();
            let mut full: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            engine.forward(&mut full, &mut ws);
            let mut spec = ColumnSpectrum::new(grid);
            for cols in [
                vec![0, 1, 2, grid.n - 1, grid.n - 2],
                vec![3, grid.n - 5],
                (0..grid.n).collect(),
            ] {
                engine.forward_real_columns(&x, &cols, &mut spec, &mut ws);
                assert_eq!(spec.columns(), &cols[..]);
                for &c in &cols {
                    for r in 0..spec.rows() {
                        assert!(
                            (spec.at(r, c) - full[r * grid.n + c]).norm() < 1e-12,
                            "{grid:?} ({r},{c})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn compact_inverse_matches_full_inverse() {
        for grid in [Grid::new(2, 12).unwrap(), Grid::new(1, 12).unwrap()] {
            let engine = FftEngine::new(grid);
            let mut ws = FftScratch::default();
            let cols = [1usize, 2, 7];
            let rows = if grid.dim == 1 { 1 } else { grid.n };
            let mut full = vec![Complex64::default(); grid.len()];
            let mut compact = vec![Complex64::default(); cols.len() * rows];
            for (j, &c) in cols.iter().enumerate() {
                for r in 0..rows {
                    let v = Complex64::new((r * 3 + c) as f64 * 0.1, (j as f64 - r as f64).sin());
                    full[r * grid.n + c] = v;
                    compact[j * rows + r] = v;
                }
            }
            engine.inverse(&mut full, &mut ws);
            let mut out = vec![Complex64::default(); grid.len()];
            engine.inverse_columns_into(&mut compact.clone(), &cols, &mut out, &mut ws);
            let mut modulus = vec![0.0; grid.len()];
            engine.modulus_from_columns(&mut compact, &cols, &mut modulus, &mut ws);
            for i in 0..grid.len() {
                assert!((out[i] - full[i]).norm() < 1e-14);
                assert!((modulus[i] - full[i].norm()).abs() < 1e-14);
            }
        }
    }
}
