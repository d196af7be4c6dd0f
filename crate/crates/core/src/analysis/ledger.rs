use serde::{Deserialize, Serialize};

use crate::sum::CompensatedSum;
use crate::transform::{ScatteringTree, Width};

/// Per-layer energy sums of a scattering tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    /// `||f||^2`.
    pub input_norm_sq: f64,
    pub width: Width,
    /// `E_coef[k] = sum_{|p| = k} ||U[p]f * f_0||^2` for `k = 0..=K`.
    pub coefficient: Vec<f64>,
    /// `E_node[k] = sum_{|p| = k} ||U[p]f||^2` for `k = 0..=K`.
    pub node: Vec<f64>,
    /// `E_node[K+1]`, from the leaves' child energies, when recorded.
    pub frontier: Option<f64>,
    pub identity: IdentityCheck,
}

/// `||f||^2 - (sum_k E_coef[k] + E_node[K+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum IdentityCheck {
    /// Evaluated at full width, where the residual must vanish.
    Exact {
        residual: f64,
        relative: f64,
    },
    /// Evaluated on a truncated width; the residual is the energy outside
    /// the width set and is only bounded below by zero.
    Truncated {
        residual: f64,
        relative: f64,
    },
    NotApplicable {
        reason: String,
    },
}

impl EnergyLedger {
    pub fn depth(&self) -> usize {
        self.node.len() - 1
    }

    /// `E_node` followed by the frontier when present.
    pub fn node_series(&self) -> Vec<f64> {
        let mut v = self.node.clone();
        v.extend(self.frontier);
        v
    }

    /// Largest violation of `E_node[k+1] + E_coef[k] <= E_node[k]`, relative
    /// to `||f||^2`.
    pub fn max_layer_excess(&self) -> f64 {
        let series = self.node_series();
        let scale = self.input_norm_sq.max(f64::MIN_POSITIVE);
        series
            .windows(2)
            .zip(&self.coefficient)
            .map(|(w, c)| (w[1] + c - w[0]) / scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn energy_ledger(tree: &ScatteringTree) -> EnergyLedger {
    let depth = tree.depth();
    let mut coef: Vec<CompensatedSum> = vec![CompensatedSum::new(); depth + 1];
    let mut node: Vec<CompensatedSum> = vec![CompensatedSum::new(); depth + 1];
    let mut frontier = Some(CompensatedSum::new());
    for n in &tree.nodes {
        let k = n.layer();
        coef[k].add(n.coefficient_energy);
        node[k].add(n.node_energy);
        if k == depth {
            match (&mut frontier, n.child_energy) {
                (Some(acc), Some(e)) => acc.add(e),
                _ => frontier = None,
            }
        }
    }
    let coefficient: Vec<f64> = coef.iter().map(CompensatedSum::value).collect();
    let node: Vec<f64> = node.iter().map(CompensatedSum::value).collect();
    let frontier = frontier.map(|s| s.value());

    let identity = if tree.is_pruned() {
        IdentityCheck::NotApplicable {
            reason: "tree was pruned".into(),
        }
    } else if let Some(front) = frontier {
        let mut total = CompensatedSum::new();
        total.extend(coefficient.iter().copied());
        total.add(front);
        let residual = tree.input_norm_sq - total.value();
        let relative = if tree.input_norm_sq > 0.0 {
            residual / tree.input_norm_sq
        } else {
            0.0
        };
        match tree.config.width {
            Width::Full => IdentityCheck::Exact { residual, relative },
            Width::Truncated(_) => IdentityCheck::Truncated { residual, relative },
        }
    } else {
        IdentityCheck::NotApplicable {
            reason: "frontier energy was not recorded".into(),
        }
    };

    EnergyLedger {
        input_norm_sq: tree.input_norm_sq,
        width: tree.config.width,
        coefficient,
        node,
        frontier,
        identity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{build_frame, LatticeSpec, WindowKind, WindowProfile};
    use crate::signal::Signal;
    use crate::transform::{scatter, ScatterConfig};

    fn frame() -> crate::frame::UniformCoveringFrame {
        build_frame(
            LatticeSpec::new(1, 64, 4).unwrap(),
            WindowProfile::new(WindowKind::Tent),
        )
        .unwrap()
    }

    #[test]
    fn constant_signal_ledger() {
        let fr = frame();
        let f = Signal::from_real(fr.grid(), vec![0.5; 64]).unwrap();
        let tree = scatter(&f, &fr, &ScatterConfig::new(Width::Full, 2)).unwrap();
        let l = energy_ledger(&tree);
        assert!((l.coefficient[0] - 16.0).abs() < 1e-12);
        assert!(l.coefficient[1..].iter().all(|&e| e < 1e-24));
        assert!(l.node[1..].iter().all(|&e| e < 1e-24));
    }

    #[test]
    fn zero_signal_ledger() {
        let fr = frame();
        let tree = scatter(
            &Signal::zeros(fr.grid()),
            &fr,
            &ScatterConfig::new(Width::Full, 2),
        )
        .unwrap();
        let l = energy_ledger(&tree);
        assert!(l.coefficient.iter().chain(&l.node).all(|&e| e == 0.0));
        assert_eq!(l.frontier, Some(0.0));
        assert_eq!(
            l.identity,
            IdentityCheck::Exact {
                residual: 0.0,
                relative: 0.0
            }
        );
    }

    #[test]
    fn pruned_or_frontierless_trees_skip_identity() {
        let fr = frame();
        let f =
            Signal::from_real(fr.grid(), (0..64).map(|i| ((i * 7) % 11) as f64).collect()).unwrap();
        let pruned = scatter(
            &f,
            &fr,
            &ScatterConfig::new(Width::Full, 2).with_prune_eps(0.5),
        )
        .unwrap();
        assert!(matches!(
            energy_ledger(&pruned).identity,
            IdentityCheck::NotApplicable { .. }
        ));
        let bare = scatter(
            &f,
            &fr,
            &ScatterConfig::new(Width::Full, 1).with_frontier_energy(false),
        )
        .unwrap();
        let l = energy_ledger(&bare);
        assert_eq!(l.frontier, None);
        assert!(matches!(l.identity, IdentityCheck::NotApplicable { .. }));
    }

    #[test]
    fn truncated_residual_is_nonnegative() {
        let fr = frame();
        let f = Signal::from_real(
            fr.grid(),
            (0..64).map(|i| ((i * 13) % 17) as f64 - 8.0).collect(),
        )
        .unwrap();
        let tree = scatter(&f, &fr, &ScatterConfig::new(Width::Truncated(2), 2)).unwrap();
        let l = energy_ledger(&tree);
        match l.identity {
            IdentityCheck::Truncated { residual, .. } => assert!(residual >= -1e-9),
            other => panic!("{other:?}"),
        }
        assert!(l.max_layer_excess() <= 1e-12);
    }
}
