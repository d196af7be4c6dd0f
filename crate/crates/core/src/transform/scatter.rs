use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{truncation_set, FrequencyFilter, LatticePoint, UniformCoveringFrame};
use crate::grid::{ColumnSpectrum, FftEngine, FftScratch, Grid};
use crate::signal::Signal;
use crate::sum::CompensatedSum;
use crate::transform::path::{is_canonical, mirror_path, Path};
use crate::transform::tree::{
    Coefficient, CoefficientStorage, ScatterConfig, ScatteringNode, ScatteringTree, Width,
};

/// Imaginary residue allowed on real coefficients, relative to `||f||`.
const RESIDUE_TOLERANCE: f64 = 1e-10;

/// Lattice points a layer branches over, in lexicographic order.
pub fn resolve_width(frame: &UniformCoveringFrame, width: Width) -> Result<Vec<LatticePoint>> {
    match width {
        Width::Full => Ok(frame.band_filters().map(|f| f.center()).collect()),
        Width::Truncated(m) => Ok(truncation_set(frame.lattice(), m)?.members),
    }
}

/// Computes the truncated scattering transform `S_F[M,K](f)`.
///
/// Layer `k + 1` is obtained from each layer-`k` node by `|U[p]f * f_q|` for
/// every `q` in the width set. Sibling subtrees are evaluated in parallel on
/// the current rayon pool; node order in the result is lexicographic by path
/// and does not depend on scheduling.
pub fn scatter(
    f: &Signal,
    frame: &UniformCoveringFrame,
    config: &ScatterConfig,
) -> Result<ScatteringTree> {
    scatter_above(f, frame, config, 0.0).map(|(tree, _)| tree)
}

/// [`scatter`] that leaves out every leaf with `||U[p]f||^2 < floor * ||f||^2`.
/// Returns the tree of evaluated nodes and the number of omitted paths per
/// layer, mirror twins included.
pub(crate) fn scatter_above(
    f: &Signal,
    frame: &UniformCoveringFrame,
    config: &ScatterConfig,
    floor: f64,
) -> Result<(ScatteringTree, Vec<usize>)> {
    f.check_grid(frame.grid())?;
    if !(config.prune_eps >= 0.0 && config.prune_eps.is_finite()) {
        return Err(Error::config(format!(
            "prune_eps must be finite and non-negative, got {}",
            config.prune_eps
        )));
    }
    if config.mirror_halving && !f.is_real() {
        return Err(Error::precondition(
            "mirror halving requires a real-valued input",
        ));
    }
    if let CoefficientStorage::Downsampled(k) = config.storage {
        if k == 0 || !frame.grid().n.is_multiple_of(k) {
            return Err(Error::config(format!(
                "downsampling factor {k} must divide N = {}",
                frame.grid().n
            )));
        }
    }
    let width = resolve_width(frame, config.width)?;
    let mut planner = Planner::new(frame, config, &width, f);
    planner.leaf_floor = floor * f.norm_sq();
    let nodes = planner.run(f)?;
    let omitted = planner
        .omitted
        .iter()
        .map(|c| c.load(Ordering::Relaxed))
        .collect();

    let mut computed_per_layer = vec![0usize; config.depth + 1];
    for n in &nodes {
        computed_per_layer[n.layer()] += 1;
    }
    let mut nodes = if config.mirror_halving {
        with_twins(nodes, frame)
    } else {
        nodes
    };
    nodes.sort_by(|a, b| a.path.cmp(&b.path));

    let tree = ScatteringTree {
        frame: frame.spec(),
        config: config.clone(),
        input_norm_sq: f.norm_sq(),
        computed_per_layer,
        nodes,
    };
    Ok((tree, omitted))
}

fn with_twins(nodes: Vec<ScatteringNode>, frame: &UniformCoveringFrame) -> Vec<ScatteringNode> {
    let lattice = frame.lattice();
    let mut out = Vec::with_capacity(2 * nodes.len());
    for n in nodes {
        let mirror = mirror_path(&n.path, lattice);
        if mirror != n.path {
            out.push(ScatteringNode {
                path: mirror,
                twin_of: Some(n.path.clone()),
                ..n.clone()
            });
        }
        out.push(n);
    }
    out
}

struct Workspace {
    fft: FftScratch,
    z: Vec<Complex64>,
    u: Vec<f64>,
    spectrum: ColumnSpectrum,
    coef: Vec<Complex64>,
}

impl Workspace {
    fn new(grid: Grid) -> Self {
        Self {
            fft: FftScratch::default(),
            z: Vec::new(),
            u: vec![0.0; grid.len()],
            spectrum: ColumnSpectrum::new(grid),
            coef: vec![Complex64::default(); grid.len()],
        }
    }
}

struct Planner<'a> {
    frame: &'a UniformCoveringFrame,
    config: &'a ScatterConfig,
    engine: &'a FftEngine,
    grid: Grid,
    width: Vec<&'a FrequencyFilter>,
    /// `(row, col, w)` where `w = sum_{q in width} |f_q|^2 > 0`.
    band_weight: Vec<(usize, usize, f64)>,
    /// Axis-1 bins that must be exact in a spectrum that is expanded further.
    expand_cols: Vec<usize>,
    low_cols: Vec<usize>,
    prune_threshold: f64,
    residue_tolerance: f64,
    leaf_floor: f64,
    omitted: Vec<AtomicUsize>,
}

impl<'a> Planner<'a> {
    fn new(
        frame: &'a UniformCoveringFrame,
        config: &'a ScatterConfig,
        width: &[LatticePoint],
        f: &Signal,
    ) -> Self {
        let grid = frame.grid();
        let filters: Vec<&FrequencyFilter> = width
            .iter()
            .map(|p| {
                frame
                    .filter(p)
                    .expect("width members are frame lattice points")
            })
            .collect();
        let mut weight = BTreeMap::new();
        let mut cols = BTreeSet::new();
        for filt in &filters {
            filt.for_each_cell(|r, c, v| *weight.entry((c, r)).or_insert(0.0) += v * v);
            cols.extend(filt.support_columns().iter().copied());
        }
        let low = frame.low_pass();
        cols.extend(low.support_columns().iter().copied());
        let band_weight = weight
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|((c, r), w)| (r, c, w))
            .collect();
        let norm_sq = f.norm_sq();
        Self {
            frame,
            config,
            engine: frame.engine(),
            grid,
            width: filters,
            band_weight,
            expand_cols: cols.into_iter().collect(),
            low_cols: low.support_columns().to_vec(),
            prune_threshold: config.prune_eps * config.prune_eps * norm_sq,
            residue_tolerance: RESIDUE_TOLERANCE * norm_sq.sqrt(),
            leaf_floor: 0.0,
            omitted: (0..=config.depth).map(|_| AtomicUsize::new(0)).collect(),
        }
    }

    fn run(&self, f: &Signal) -> Result<Vec<ScatteringNode>> {
        let mut ws = Workspace::new(self.grid);
        let mut full = f.data().to_vec();
        self.engine.forward(&mut full, &mut ws.fft);
        let spectrum = ColumnSpectrum::from_full(self.grid, &full, &self.expand_cols);
        drop(full);

        let node_energy = f.norm_sq();
        let coefficient_energy = self.frame.low_pass().filtered_energy_columns(&spectrum);
        let coefficient = self.coefficient(&spectrum, !f.is_real(), &mut ws)?;
        let expand = self.config.depth > 0 && node_energy >= self.prune_threshold;
        let root = ScatteringNode {
            path: Path::empty(),
            node_energy,
            coefficient_energy,
            child_energy: Some(self.child_energy(&spectrum)),
            expanded: expand,
            twin_of: None,
            coefficient,
        };
        let mut out = vec![root];
        if expand {
            self.expand(&spectrum, &Path::empty(), &mut out)?;
        }
        Ok(out)
    }

    fn expand(
        &self,
        spectrum: &ColumnSpectrum,
        path: &Path,
        out: &mut Vec<ScatteringNode>,
    ) -> Result<()> {
        let lattice = self.frame.lattice();
        let children: Vec<(Path, &FrequencyFilter)> = self
            .width
            .iter()
            .map(|q| (path.child(q.center()), *q))
            .filter(|(p, _)| !self.config.mirror_halving || is_canonical(p, lattice))
            .collect();
        let results: Vec<Result<Vec<ScatteringNode>>> = children
            .into_par_iter()
            .map_init(
                || Workspace::new(self.grid),
                |ws, (child, q)| {
                    let mut nodes = Vec::new();
                    self.child(spectrum, child, q, ws, &mut nodes)?;
                    Ok(nodes)
                },
            )
            .collect();
        for r in results {
            out.extend(r?);
        }
        Ok(())
    }

    fn child(
        &self,
        parent_spectrum: &ColumnSpectrum,
        path: Path,
        q: &FrequencyFilter,
        ws: &mut Workspace,
        out: &mut Vec<ScatteringNode>,
    ) -> Result<()> {
        let node_energy = q.filtered_energy_columns(parent_spectrum);
        let expand = path.len() < self.config.depth && node_energy >= self.prune_threshold;
        if !expand && node_energy < self.leaf_floor {
            let lattice = self.frame.lattice();
            let twins = if self.config.mirror_halving && mirror_path(&path, lattice) != path {
                2
            } else {
                1
            };
            self.omitted[path.len()].fetch_add(twins, Ordering::Relaxed);
            return Ok(());
        }

        // U[p]f = |U[p']f * f_q|
        q.apply_columns(parent_spectrum, &mut ws.z);
        self.engine
            .modulus_from_columns(&mut ws.z, q.support_columns(), &mut ws.u, &mut ws.fft);

        let full = expand || self.config.frontier_energy;
        let cols = if full {
            &self.expand_cols
        } else {
            &self.low_cols
        };
        self.engine
            .forward_real_columns(&ws.u, cols, &mut ws.spectrum, &mut ws.fft);

        let coefficient_energy = self.frame.low_pass().filtered_energy_columns(&ws.spectrum);
        let child_energy = full.then(|| self.child_energy(&ws.spectrum));
        let spectrum = std::mem::replace(&mut ws.spectrum, ColumnSpectrum::new(self.grid));
        let coefficient = self.coefficient(&spectrum, false, ws)?;
        out.push(ScatteringNode {
            path: path.clone(),
            node_energy,
            coefficient_energy,
            child_energy,
            expanded: expand,
            twin_of: None,
            coefficient,
        });
        let result = if expand {
            self.expand(&spectrum, &path, out)
        } else {
            Ok(())
        };
        ws.spectrum = spectrum;
        result
    }

    fn child_energy(&self, spectrum: &ColumnSpectrum) -> f64 {
        let mut acc = CompensatedSum::new();
        for &(r, c, w) in &self.band_weight {
            acc.add(spectrum.at(r, c).norm_sqr() * w);
        }
        acc.value() / self.grid.len() as f64
    }

    /// `U[p]f * f_0` from the spectrum of `U[p]f`, in the configured storage.
    fn coefficient(
        &self,
        spectrum: &ColumnSpectrum,
        complex: bool,
        ws: &mut Workspace,
    ) -> Result<Option<Coefficient>> {
        let factor = match self.config.storage {
            CoefficientStorage::EnergyOnly => return Ok(None),
            CoefficientStorage::Full => 1,
            CoefficientStorage::Downsampled(k) => k,
        };
        self.frame.low_pass().apply_columns(spectrum, &mut ws.z);
        self.engine
            .inverse_columns_into(&mut ws.z, &self.low_cols, &mut ws.coef, &mut ws.fft);
        let (dims, picks) = sample_positions(self.grid, factor);
        let coefficient = if complex {
            let data: Arc<[Complex64]> = picks.iter().map(|&i| ws.coef[i]).collect();
            Coefficient::Complex { dims, data }
        } else {
            let residue = ws.coef.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            if residue > self.residue_tolerance {
                return Err(Error::ImaginaryResidue {
                    residue,
                    tolerance: self.residue_tolerance,
                });
            }
            let data: Arc<[f64]> = picks.iter().map(|&i| ws.coef[i].re).collect();
            Coefficient::Real { dims, data }
        };
        Ok(Some(coefficient))
    }
}

fn sample_positions(grid: Grid, factor: usize) -> (Vec<usize>, Vec<usize>) {
    let m = grid.n / factor;
    let dims = vec![m; grid.dim];
    let picks = match grid.dim {
        1 => (0..m).map(|i| i * factor).collect(),
        _ => (0..m)
            .flat_map(|r| (0..m).map(move |c| grid.flat([r * factor, c * factor])))
            .collect(),
    };
    (dims, picks)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::frame::{build_frame, LatticeSpec, WindowKind, WindowProfile};
    use crate::transform::{mirror_path, propagate};

    fn frame(d: usize, n: usize, a: usize) -> UniformCoveringFrame {
        build_frame(
            LatticeSpec::new(d, n, a).unwrap(),
            WindowProfile::new(WindowKind::Tent),
        )
        .unwrap()
    }

    fn random_real(grid: Grid, seed: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::from_real(
            grid,
            (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_input_stops_at_layer_zero() {
        let fr = frame(1, 64, 4);
        let f = Signal::from_real(fr.grid(), vec![3.0; 64]).unwrap();
        let tree = scatter(&f, &fr, &ScatterConfig::new(Width::Truncated(3), 2)).unwrap();
        let root = tree.root();
        match root.coefficient.as_ref().unwrap() {
            Coefficient::Real { data, .. } => assert!(data.iter().all(|v| (v - 3.0).abs() < 1e-12)),
            _ => panic!("real input gives real coefficients"),
        }
        for n in tree.nodes.iter().skip(1) {
            assert!(n.node_energy < 1e-20, "{:?}", n.path);
        }
    }

    #[test]
    fn halving_computes_one_of_each_pair() {
        let fr = frame(1, 64, 4);
        let f = random_real(fr.grid(), 1);
        let cfg = ScatterConfig::new(Width::Truncated(1), 1).with_mirror_halving(true);
        let tree = scatter(&f, &fr, &cfg).unwrap();
        assert_eq!(tree.computed_per_layer, vec![1, 1]);
        let plus = tree
            .node(&Path::new(vec![LatticePoint::new(&[1])]))
            .unwrap();
        let minus = tree
            .node(&Path::new(vec![LatticePoint::new(&[-1])]))
            .unwrap();
        assert_eq!(plus.coefficient, minus.coefficient);
        assert!(minus.twin_of.is_some() ^ plus.twin_of.is_some());
    }

    #[test]
    fn halving_rejects_complex_input() {
        let fr = frame(1, 64, 4);
        let mut data = random_real(fr.grid(), 2).into_data();
        data[3].im = 0.5;
        let f = Signal::new(fr.grid(), data).unwrap();
        let cfg = ScatterConfig::new(Width::Truncated(2), 1).with_mirror_halving(true);
        assert!(matches!(
            scatter(&f, &fr, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn invalid_width_is_rejected() {
        let fr = frame(1, 64, 4);
        let f = random_real(fr.grid(), 3);
        assert!(scatter(&f, &fr, &ScatterConfig::new(Width::Truncated(8), 1)).is_err());
        assert!(scatter(
            &f,
            &fr,
            &ScatterConfig::new(Width::Truncated(2), 1).with_prune_eps(-1.0)
        )
        .is_err());
    }

    #[test]
    fn energy_identity_full_width() {
        let fr = frame(1, 64, 4);
        let f = random_real(fr.grid(), 4);
        let k = 3;
        let tree = scatter(&f, &fr, &ScatterConfig::new(Width::Full, k)).unwrap();
        let coef: f64 = tree.nodes.iter().map(|n| n.coefficient_energy).sum();
        let frontier: f64 = tree.layer(k).map(|n| n.child_energy.unwrap()).sum();
        let norm = f.norm_sq();
        assert!(((coef + frontier) - norm).abs() <= 1e-8 * norm);
    }

    #[test]
    fn nodes_match_direct_propagation() {
        let fr = frame(1, 64, 4);
        let f = random_real(fr.grid(), 5);
        let tree = scatter(&f, &fr, &ScatterConfig::new(Width::Truncated(3), 2)).unwrap();
        let p = [LatticePoint::new(&[2]), LatticePoint::new(&[-1])];
        let u1 = propagate(&f, fr.filter(&p[0]).unwrap()).unwrap();
        let u2 = propagate(&u1, fr.filter(&p[1]).unwrap()).unwrap();
        let node = tree.node(&Path::new(p.to_vec())).unwrap();
        assert!((node.node_energy - u2.norm_sq()).abs() < 1e-12 * u2.norm_sq());
        let c = crate::transform::filter_convolve(&u2, fr.low_pass()).unwrap();
        let stored = node.coefficient.as_ref().unwrap();
        for (i, v) in c.data().iter().enumerate() {
            assert!((stored.get(i) - v).norm() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_halving_matches_full_computation() {
        let fr = frame(2, 16, 4);
        let f = random_real(fr.grid(), 6);
        let cfg = ScatterConfig::new(Width::Full, 2);
        let full = scatter(&f, &fr, &cfg).unwrap();
        let half = scatter(&f, &fr, &cfg.clone().with_mirror_halving(true)).unwrap();
        assert_eq!(full.nodes.len(), half.nodes.len());
        assert!(half.computed_nodes() < full.computed_nodes());
        for (a, b) in full.nodes.iter().zip(&half.nodes) {
            assert_eq!(a.path, b.path);
            assert!((a.node_energy - b.node_energy).abs() <= 1e-10 * a.node_energy.max(1e-300));
            let diff = a
                .coefficient
                .as_ref()
                .unwrap()
                .max_abs_diff(b.coefficient.as_ref().unwrap());
            assert!(diff < 1e-12);
        }
        // Mirror twins agree inside the unhalved tree too.
        for n in &full.nodes {
            let m = full.node(&mirror_path(&n.path, fr.lattice())).unwrap();
            assert!(
                n.coefficient
                    .as_ref()
                    .unwrap()
                    .max_abs_diff(m.coefficient.as_ref().unwrap())
                    < 1e-12
            );
        }
    }

    #[test]
    fn energy_only_and_downsampled_storage() {
        let fr = frame(2, 32, 4);
        let f = random_real(fr.grid(), 7);
        let base = ScatterConfig::new(Width::Truncated(1), 1);
        let full = scatter(&f, &fr, &base).unwrap();
        let none = scatter(
            &f,
            &fr,
            &base.clone().with_storage(CoefficientStorage::EnergyOnly),
        )
        .unwrap();
        let down = scatter(
            &f,
            &fr,
            &base
                .clone()
                .with_storage(CoefficientStorage::Downsampled(4)),
        )
        .unwrap();
        for ((a, b), c) in full.nodes.iter().zip(&none.nodes).zip(&down.nodes) {
            assert_eq!(a.coefficient_energy, b.coefficient_energy);
            assert!(b.coefficient.is_none());
            let dc = c.coefficient.as_ref().unwrap();
            assert_eq!(dc.dims(), &[8, 8]);
            let fc = a.coefficient.as_ref().unwrap();
            assert_eq!(dc.get(9), fc.get(4 * 32 + 4));
        }
        assert!(scatter(
            &f,
            &fr,
            &base.with_storage(CoefficientStorage::Downsampled(5))
        )
        .is_err());
    }

    #[test]
    fn pruning_skips_children_of_weak_nodes() {
        let fr = frame(1, 64, 4);
        let f = random_real(fr.grid(), 8);
        let cfg = ScatterConfig::new(Width::Truncated(3), 2);
        let exact = scatter(&f, &fr, &cfg).unwrap();
        let eps = 0.25;
        let pruned = scatter(&f, &fr, &cfg.clone().with_prune_eps(eps)).unwrap();
        assert!(pruned.nodes.len() < exact.nodes.len());
        let threshold = eps * eps * f.norm_sq();
        for n in pruned.layer(1) {
            assert_eq!(n.expanded, n.node_energy >= threshold);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let _ = rng.gen::<u8>();
    }

    #[test]
    fn complex_input_gives_complex_root_coefficient() {
        let fr = frame(1, 32, 4);
        let data: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let f = Signal::new(fr.grid(), data).unwrap();
        let tree = scatter(&f, &fr, &ScatterConfig::new(Width::Truncated(1), 1)).unwrap();
        assert!(tree.root().coefficient.as_ref().unwrap().is_complex());
        assert!(!tree.nodes[1].coefficient.as_ref().unwrap().is_complex());
    }
}
