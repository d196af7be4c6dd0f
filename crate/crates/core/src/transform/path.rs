use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frame::{LatticePoint, LatticeSpec};

/// A scattering path `(p_1, ..., p_k)`; the empty path is layer 0.
///
/// Paths order lexicographically step by step, with a prefix before its
/// extensions.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<LatticePoint>);

impl Path {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(steps: Vec<LatticePoint>) -> Self {
        Self(steps)
    }

    pub fn steps(&self) -> &[LatticePoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(self, q)`.
    pub fn child(&self, q: LatticePoint) -> Path {
        let mut steps = Vec::with_capacity(self.0.len() + 1);
        steps.extend_from_slice(&self.0);
        steps.push(q);
        Path(steps)
    }

    pub fn parent(&self) -> Option<Path> {
        (!self.0.is_empty()).then(|| Path(self.0[..self.0.len() - 1].to_vec()))
    }

    /// Compact label such as `3/-1` or `(1,0)/(0,-2)`; `root` for the empty path.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "root".to_string();
        }
        self.0
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("/")
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path[{}]", self.label())
    }
}

impl From<Vec<LatticePoint>> for Path {
    fn from(steps: Vec<LatticePoint>) -> Self {
        Path(steps)
    }
}

/// Flips the sign of every step, reducing onto the lattice torus so that
/// Nyquist coordinates stay fixed.
pub fn mirror_path(path: &Path, lattice: &LatticeSpec) -> Path {
    Path(
        path.0
            .iter()
            .map(|p| lattice.canonical_point(&p.negated()))
            .collect(),
    )
}

/// Representative of a mirror pair that gets computed under real-input
/// halving: the lexicographically larger of `path` and its mirror.
pub fn is_canonical(path: &Path, lattice: &LatticeSpec) -> bool {
    *path >= mirror_path(path, lattice)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(c: i32) -> LatticePoint {
        LatticePoint::new(&[c])
    }

    fn p2(a: i32, b: i32) -> LatticePoint {
        LatticePoint::new(&[a, b])
    }

    #[test]
    fn mirror_examples() {
        let l1 = LatticeSpec::new(1, 64, 4).unwrap();
        let p = Path::new(vec![p1(1), p1(-2)]);
        assert_eq!(mirror_path(&p, &l1), Path::new(vec![p1(-1), p1(2)]));
        assert_eq!(mirror_path(&Path::empty(), &l1), Path::empty());

        let l2 = LatticeSpec::new(2, 64, 4).unwrap();
        let q = Path::new(vec![p2(1, 0), p2(0, 1)]);
        assert_eq!(mirror_path(&q, &l2), Path::new(vec![p2(-1, 0), p2(0, -1)]));
    }

    #[test]
    fn nyquist_coordinates_are_fixed() {
        // L = 16: coordinate 8 is its own negative.
        let l2 = LatticeSpec::new(2, 64, 4).unwrap();
        let p = Path::new(vec![p2(8, 3)]);
        assert_eq!(mirror_path(&p, &l2), Path::new(vec![p2(8, -3)]));
        let fixed = Path::new(vec![p2(8, 0), p2(0, 8)]);
        assert_eq!(mirror_path(&fixed, &l2), fixed);
        assert!(is_canonical(&fixed, &l2));
    }

    #[test]
    fn ordering_puts_prefix_first() {
        let a = Path::new(vec![p1(-1)]);
        let b = Path::new(vec![p1(-1), p1(-5)]);
        let c = Path::new(vec![p1(1)]);
        let mut v = vec![c.clone(), b.clone(), Path::empty(), a.clone()];
        v.sort();
        assert_eq!(v, vec![Path::empty(), a, b, c]);
    }

    #[test]
    fn exactly_one_of_each_pair_is_canonical() {
        let l = LatticeSpec::new(1, 32, 4).unwrap();
        for x in -3..=4 {
            for y in -3..=4 {
                let p = Path::new(vec![p1(x), p1(y)]);
                let m = mirror_path(&p, &l);
                if p == m {
                    assert!(is_canonical(&p, &l));
                } else {
                    assert_ne!(is_canonical(&p, &l), is_canonical(&m, &l));
                }
            }
        }
    }
}
