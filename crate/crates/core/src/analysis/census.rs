use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::UniformCoveringFrame;
use crate::signal::Signal;
use crate::transform::{scatter_above, ScatterConfig, ScatteringTree};

/// Default survivor threshold, as a fraction of `||f||`.
pub const DEFAULT_THRESHOLD: f64 = 0.005;

/// Coefficients with `||U[p]f * f_0|| >= threshold * ||f||`, per layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    #[serde(skip)]
    threshold_bits: u64,
    pub survivors: Vec<usize>,
    /// Paths present in the tree, per layer.
    pub totals: Vec<usize>,
}

impl Census {
    pub fn threshold(&self) -> f64 {
        f64::from_bits(self.threshold_bits)
    }

    /// `1,33,6`-style survivor list.
    pub fn survivors_line(&self) -> String {
        self.survivors
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,survivors,total\n");
        for (k, (s, t)) in self.survivors.iter().zip(&self.totals).enumerate() {
            let _ = writeln!(out, "{k},{s},{t}");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "threshold": self.threshold(),
            "survivors": self.survivors,
            "totals": self.totals,
        })
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(())
}

pub fn threshold_census(tree: &ScatteringTree, threshold: f64) -> Result<Census> {
    check_threshold(threshold)?;
    let depth = tree.depth();
    let cut = threshold * threshold * tree.input_norm_sq;
    let mut survivors = vec![0; depth + 1];
    let mut totals = vec![0; depth + 1];
    for n in &tree.nodes {
        totals[n.layer()] += 1;
        if tree.input_norm_sq > 0.0 && n.coefficient_energy >= cut {
            survivors[n.layer()] += 1;
        }
    }
    Ok(Census {
        threshold_bits: threshold.to_bits(),
        survivors,
        totals,
    })
}

/// Census of `f` without evaluating leaves that cannot survive.
///
/// `||U[p]f * f_0|| <= ||U[p]f||`, so a leaf whose node energy is already
/// below the cut is counted in the totals and skipped. Survivor counts equal
/// those of [`threshold_census`] on the full tree.
pub fn signal_census(
    f: &Signal,
    frame: &UniformCoveringFrame,
    config: &ScatterConfig,
    threshold: f64,
) -> Result<Census> {
    check_threshold(threshold)?;
    let (tree, omitted) = scatter_above(f, frame, config, threshold * threshold)?;
    let mut census = threshold_census(&tree, threshold)?;
    for (t, o) in census.totals.iter_mut().zip(omitted) {
        *t += o;
    }
    Ok(census)
}
