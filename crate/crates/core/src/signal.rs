use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sum;

/// A sampled function on the periodic grid. Each sample is one unit cell, so
/// `||f||^2 = sum_x |f(x)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    data: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.dims(),
                actual: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::precondition("signal contains non-finite samples"));
        }
        Ok(Self { grid, data })
    }

    pub fn from_real(grid: Grid, data: Vec<f64>) -> Result<Self> {
        Self::new(
            grid,
            data.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|v| v.im == 0.0)
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.re).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        sum::sum(self.data.iter().map(|v| v.norm_sqr()))
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn check_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::ShapeMismatch {
                expected: grid.dims(),
                actual: self.grid.dims(),
            });
        }
        Ok(())
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &Signal) -> Result<f64> {
        other.check_grid(self.grid)?;
        Ok(sum::sum(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm_sqr()),
        )
        .sqrt())
    }

    /// Circular shift `(T_y f)(x) = f(x - y)`.
    pub fn translate(&self, shift: &[i64]) -> Result<Signal> {
        if shift.len() != self.grid.dim {
            return Err(Error::ShapeMismatch {
                expected: vec![self.grid.dim],
                actual: vec![shift.len()],
            });
        }
        let g = self.grid;
        let mut out = vec![Complex64::default(); g.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let c = g.coords(i);
            let mut src = [0usize; 2];
            for j in 0..g.dim {
                src[j] = g.wrap(c[j] as i64 - shift[j]);
            }
            *o = self.data[g.flat(src)];
        }
        Ok(Signal { grid: g, data: out })
    }
}
