use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{truncation_set, LatticePoint, UniformCoveringFrame};
use crate::grid::FftScratch;
use crate::signal::Signal;
use crate::sum::CompensatedSum;
use crate::transform::{propagate, Path};

/// Node energies below this fraction of `||f||^2` are treated as zero.
const ZERO_NODE: f64 = 1e-24;
pub const CONCENTRATION_TOLERANCE: f64 = 1e-9;

/// `C_M = (1 - 1/(2M))^{2d}`: the squared minorant `phi^_M(xi) =
/// prod_j max(0, 1 - |xi_j|/(aM))` at the corner of the half-cell cube.
pub fn concentration_constant(dim: usize, m: usize) -> f64 {
    (1.0 - 1.0 / (2.0 * m as f64)).powi(2 * dim as i32)
}

fn minorant_sq(offsets: &[i64], spacing: usize, m: usize) -> f64 {
    let scale = (spacing * m) as f64;
    offsets
        .iter()
        .map(|&o| (1.0 - o.abs() as f64 / scale).max(0.0).powi(2))
        .product()
}

/// `C_M` recomputed by scanning grid frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceConstant {
    /// Minimum of `|phi^_M(xi - p a)|^2` over bins with `|xi - p a|_inf <= a/2`,
    /// over all `p` in `P[M]`.
    pub half_cell: f64,
    /// The same minimum over each filter's actual (side `2a`) support.
    pub support: f64,
    /// `max_xi |phi^_M(xi)|^2 - (|f_0^|^2 + sum_{P[M]} |f_p^|^2)`; must be `<= 0`.
    pub domination_excess: f64,
}

pub fn brute_force_concentration_constant(
    frame: &UniformCoveringFrame,
    m: usize,
) -> Result<BruteForceConstant> {
    let lattice = frame.lattice();
    let set = truncation_set(lattice, m)?;
    let grid = frame.grid();
    let a = lattice.spacing() as i64;
    let mut half_cell = f64::INFINITY;
    let mut support = f64::INFINITY;
    for p in &set.members {
        let filt = frame.filter(p).expect("member of the lattice");
        for i in 0..grid.len() {
            let freq = grid.frequency(i);
            let off: Vec<i64> = freq
                .iter()
                .zip(p.coords())
                .map(|(&xi, &c)| grid.signed(grid.wrap(xi - c as i64 * a)))
                .collect();
            let v = minorant_sq(&off, lattice.spacing(), m);
            if off.iter().all(|o| 2 * o.abs() <= a) {
                half_cell = half_cell.min(v);
            }
            if filt.value_at(i) > 0.0 {
                support = support.min(v);
            }
        }
    }
    let origin = LatticePoint::origin(grid.dim);
    let truncated = frame.squared_sum(std::iter::once(&origin).chain(&set.members));
    let domination_excess = (0..grid.len())
        .map(|i| minorant_sq(&grid.frequency(i), lattice.spacing(), m) - truncated[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BruteForceConstant {
        half_cell,
        support,
        domination_excess,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub path: Path,
    /// `||U[p]f||^2`.
    pub node_energy: f64,
    /// `||U[p]f * f_0||^2 + sum_{q in P[M]} ||U[p]f * f_q||^2`.
    pub retained: f64,
    /// `retained / node_energy`, or 1 when the node carries no energy.
    pub ratio: f64,
    pub zero_energy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub width: usize,
    /// Analytic `C_M`.
    pub constant: f64,
    pub rows: Vec<ConcentrationRow>,
    pub min_ratio: f64,
    /// Every ratio is at least `C_M - 1e-9`.
    pub passes: bool,
}

/// Share of each node's energy that stays on `f_0` and the width set `P[M]`.
pub fn path_concentration(
    f: &Signal,
    frame: &UniformCoveringFrame,
    m: usize,
    paths: &[Path],
) -> Result<ConcentrationReport> {
    f.check_grid(frame.grid())?;
    let set = truncation_set(frame.lattice(), m)?;
    let constant = concentration_constant(frame.grid().dim, m);
    let floor = ZERO_NODE * f.norm_sq();
    let mut ws = FftScratch::default();
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        if path.is_empty() {
            return Err(Error::precondition("concentration needs nonempty paths"));
        }
        let mut u = f.clone();
        for step in path.steps() {
            let filt = frame
                .filter(step)
                .ok_or_else(|| Error::precondition(format!("{step} is not a frame index")))?;
            u = propagate(&u, filt)?;
        }
        let mut spectrum = u.data().to_vec();
        frame.engine().forward(&mut spectrum, &mut ws);
        let mut retained = CompensatedSum::new();
        retained.add(frame.low_pass().filtered_energy(&spectrum));
        for q in &set.members {
            retained.add(frame.filter(q).expect("member").filtered_energy(&spectrum));
        }
        let node_energy = u.norm_sq();
        let zero_energy = node_energy <= floor;
        let ratio = if zero_energy {
            1.0
        } else {
            retained.value() / node_energy
        };
        rows.push(ConcentrationRow {
            path: path.clone(),
            node_energy,
            retained: retained.value(),
            ratio,
            zero_energy,
        });
    }
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(ConcentrationReport {
        width: m,
        constant,
        passes: rows
            .iter()
            .all(|r| r.ratio >= constant - CONCENTRATION_TOLERANCE),
        rows,
        min_ratio,
    })
}
