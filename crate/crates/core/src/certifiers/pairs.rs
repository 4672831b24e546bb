use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FinitePointSet;
use crate::semigroup::{step, SystemSpec};

pub const DEFAULT_PAIR_COUNT: usize = 10_000;

/// Sample points, their images under `S(T)`, and the index pairs to test.
#[derive(Clone, Debug, PartialEq)]
pub struct PairData {
    pub b: FinitePointSet,
    pub images: FinitePointSet,
    pub pairs: Vec<(usize, usize)>,
    pub t: f64,
}

impl PairData {
    pub fn new(sys: &SystemSpec, b: FinitePointSet, t: f64, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no pairs supplied".into()));
        }
        for &(i, j) in &pairs {
            if i >= b.len() || j >= b.len() {
                return Err(Error::InvalidArgument(format!("pair ({i}, {j}) out of range")));
            }
            if b.dist(i, j) == 0.0 {
                return Err(Error::InvalidArgument(format!("pair ({i}, {j}) has coincident points")));
            }
        }
        let images = step(sys, &b, t)?;
        Ok(Self { b, images, pairs, t })
    }

    /// `n_pairs` seeded random pairs, optionally followed by axis-aligned pairs.
    pub fn sample(
        sys: &SystemSpec,
        b: FinitePointSet,
        t: f64,
        n_pairs: usize,
        seed: u64,
        with_axis_pairs: bool,
    ) -> Result<Self> {
        if b.len() < 2 {
            return Err(Error::InvalidArgument("need at least two sample points".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n_pairs);
        let mut attempts = 0usize;
        while pairs.len() < n_pairs && attempts < 20 * n_pairs.max(1) {
            attempts += 1;
            let i = rng.gen_range(0..b.len());
            let j = rng.gen_range(0..b.len());
            if i != j && b.dist(i, j) > 0.0 {
                pairs.push((i, j));
            }
        }
        if with_axis_pairs {
            let seen: HashSet<(usize, usize)> = pairs.iter().copied().collect();
            pairs.extend(axis_aligned_pairs(&b).into_iter().filter(|p| !seen.contains(p)));
        }
        Self::new(sys, b, t, pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// Evaluates `f(x, y, S(T)x, S(T)y)` on every pair, in pair order.
    pub(crate) fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64], &[f64], &[f64], &[f64]) -> T + Sync,
    {
        let eval = |&(i, j): &(usize, usize)| {
            f(
                self.b.point(i),
                self.b.point(j),
                self.images.point(i),
                self.images.point(j),
            )
        };
        if self.pairs.len() >= 1024 {
            self.pairs.par_iter().map(eval).collect()
        } else {
            self.pairs.iter().map(eval).collect()
        }
    }

    pub(crate) fn witness(&self, k: usize, ratio: f64) -> Witness {
        let (i, j) = self.pairs[k];
        Witness {
            i,
            j,
            x: self.b.point(i).to_vec(),
            y: self.b.point(j).to_vec(),
            ratio,
        }
    }
}

/// For every coordinate axis, the widest pair of sample points that differ
/// only along that axis. Falls back to the coordinate extremes when no such
/// pair exists.
pub fn axis_aligned_pairs(b: &FinitePointSet) -> Vec<(usize, usize)> {
    let dim = b.dim();
    let mut out = Vec::new();
    for axis in 0..dim {
        let mut groups: BTreeMap<Vec<u64>, (usize, usize)> = BTreeMap::new();
        for (idx, p) in b.points().enumerate() {
            let key: Vec<u64> = p
                .iter()
                .enumerate()
                .filter(|(c, _)| *c != axis)
                .map(|(_, x)| x.to_bits())
                .collect();
            let e = groups.entry(key).or_insert((idx, idx));
            if p[axis] < b.point(e.0)[axis] {
                e.0 = idx;
            }
            if p[axis] > b.point(e.1)[axis] {
                e.1 = idx;
            }
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for &(lo, hi) in groups.values() {
            let spread = b.point(hi)[axis] - b.point(lo)[axis];
            if spread > 0.0 && best.map_or(true, |(_, _, s)| spread > s) {
                best = Some((lo, hi, spread));
            }
        }
        match best {
            Some((lo, hi, _)) => out.push((lo, hi)),
            None => {
                let (mut lo, mut hi) = (0, 0);
                for (idx, p) in b.points().enumerate() {
                    if p[axis] < b.point(lo)[axis] {
                        lo = idx;
                    }
                    if p[axis] > b.point(hi)[axis] {
                        hi = idx;
                    }
                }
                if b.dist(lo, hi) > 0.0 {
                    out.push((lo, hi));
                }
            }
        }
    }
    out.dedup();
    out
}

/// The pair attaining a fitted maximum ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ratio: f64,
}

/// First index of the largest value; `None` for an empty slice.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if best.map_or(true, |b| *v > values[b]) {
            best = Some(k);
        }
    }
    best
}

/// Outcome of re-checking a certificate's inequalities pair by pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_pairs: usize,
    pub violations: Vec<usize>,
    /// Smallest `rhs − lhs` over all checked inequalities.
    pub min_slack: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn pass_fraction(&self) -> f64 {
        1.0 - self.violations.len() as f64 / self.n_pairs.max(1) as f64
    }
}

pub(crate) const REL_TOL: f64 = 1e-12;

/// `lhs ≤ rhs` up to a relative rounding allowance.
pub(crate) fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_TOL * lhs.abs().max(rhs.abs())
}

/// Builds a report from per-pair slacks; a pair fails when `ok` is false.
pub(crate) fn report(per_pair: Vec<(bool, f64)>) -> ValidationReport {
    let n_pairs = per_pair.len();
    let violations = per_pair
        .iter()
        .enumerate()
        .filter(|(_, (ok, _))| !ok)
        .map(|(k, _)| k)
        .collect();
    let min_slack = per_pair.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    ValidationReport {
        n_pairs,
        violations,
        min_slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_pairs_on_a_grid() {
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 5, 2).unwrap();
        let pairs = axis_aligned_pairs(&b);
        assert_eq!(pairs.len(), 2);
        for (axis, &(i, j)) in pairs.iter().enumerate() {
            let (p, q) = (b.point(i), b.point(j));
            assert_eq!(p[1 - axis], q[1 - axis]);
            assert_eq!((q[axis] - p[axis]).abs(), 2.0);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let sys = SystemSpec::discrete("id", 2, |x, y| y.copy_from_slice(x));
        let b = FinitePointSet::grid_cube(0.0, 1.0, 4, 2).unwrap();
        let a = PairData::sample(&sys, b.clone(), 1.0, 50, 9, true).unwrap();
        let c = PairData::sample(&sys, b, 1.0, 50, 9, true).unwrap();
        assert_eq!(a.pairs, c.pairs);
        assert!((50..=52).contains(&a.len()));
    }

    #[test]
    fn coincident_pairs_are_rejected() {
        let sys = SystemSpec::discrete("id", 1, |x, y| y.copy_from_slice(x));
        let b = FinitePointSet::from_scalars(&[1.0, 1.0]).unwrap();
        assert!(PairData::new(&sys, b, 1.0, vec![(0, 1)]).is_err());
    }
}
