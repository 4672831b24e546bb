//! Finite metric geometry: point sets, pseudometrics, greedy ε-nets,
//! exhaustive cover numbers, box-counting fits and Hausdorff distances.
//!
//! A greedy net is simultaneously a maximal ε-separated set and an open
//! ε-cover of its input, so its size is an upper bound on the minimal
//! ball-cover count and a lower bound on the packing number.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs at least this large are processed in parallel.
const PAR_THRESHOLD: usize = 2048;

/// Largest input accepted by [`exact_cover_number`].
pub const EXACT_ORACLE_LIMIT: usize = 20;

/// Norm used to measure distances between points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricTag {
    Euclidean,
    Max,
    Sum,
    WeightedEuclidean(Vec<f64>),
}

impl MetricTag {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            MetricTag::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            MetricTag::Max => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            MetricTag::Sum => v.iter().map(|x| x.abs()).sum(),
            MetricTag::WeightedEuclidean(w) => v
                .iter()
                .zip(w)
                .map(|(x, wi)| wi * x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            MetricTag::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricTag::Max => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            MetricTag::Sum => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            MetricTag::WeightedEuclidean(w) => a
                .iter()
                .zip(b)
                .zip(w)
                .map(|((x, y), wi)| wi * (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let MetricTag::WeightedEuclidean(w) = self {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "metric weights must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Ordered finite subset of ℝ^dim with an attached metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitePointSet {
    dim: usize,
    coords: Vec<f64>,
    metric: MetricTag,
}

impl FinitePointSet {
    /// Empty set of the given dimension.
    pub fn empty(dim: usize, metric: MetricTag) -> Result<Self> {
        Self::from_flat(dim, Vec::new(), metric)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, metric: MetricTag) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        metric.validate(dim)?;
        Ok(Self {
            dim,
            coords,
            metric,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], metric: MetricTag) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyPointSet)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::from_flat(dim, coords, metric)
    }

    /// Points of a one-dimensional set.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec(), MetricTag::Euclidean)
    }

    /// Uniform grid of `n` points on `[lo, hi]` in ℝ¹.
    pub fn grid_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::from_scalars(&linspace(lo, hi, n))
    }

    /// Tensor grid of `n` points per axis on `[lo, hi]^dim` in row-major order.
    pub fn grid_cube(lo: f64, hi: f64, n: usize, dim: usize) -> Result<Self> {
        let axis = linspace(lo, hi, n);
        let total = n.checked_pow(dim as u32).ok_or_else(|| {
            Error::InvalidArgument("grid too large".into())
        })?;
        let mut coords = Vec::with_capacity(total * dim);
        for idx in 0..total {
            let mut rem = idx;
            let mut p = vec![0.0; dim];
            for d in (0..dim).rev() {
                p[d] = axis[rem % n];
                rem /= n;
            }
            coords.extend_from_slice(&p);
        }
        Self::from_flat(dim, coords, MetricTag::Euclidean)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn metric(&self) -> &MetricTag {
        &self.metric
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn with_metric(mut self, metric: MetricTag) -> Result<Self> {
        metric.validate(self.dim)?;
        self.metric = metric;
        Ok(self)
    }

    /// Same metric, different points.
    pub fn like(&self, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len() % self.dim, 0);
        Self {
            dim: self.dim,
            coords,
            metric: self.metric.clone(),
        }
    }

    /// Subset selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        self.like(coords)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.point(i), self.point(j))
    }

    /// Exact diameter by all-pairs scan.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let row_max = |i: usize| {
            (i + 1..n).fold(0.0f64, |m, j| m.max(self.dist(i, j)))
        };
        if n >= PAR_THRESHOLD / 8 {
            (0..n).into_par_iter().map(row_max).reduce(|| 0.0, f64::max)
        } else {
            (0..n).map(row_max).fold(0.0, f64::max)
        }
    }

    /// Bit patterns of each point, used for exact set comparisons.
    pub fn point_keys(&self) -> Vec<Vec<u64>> {
        self.points()
            .map(|p| p.iter().map(|x| x.to_bits()).collect())
            .collect()
    }

    /// Order-preserving union with exact (bitwise) deduplication.
    pub fn union_dedup<'a, I>(dim: usize, metric: MetricTag, parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FinitePointSet>,
    {
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut coords = Vec::new();
        for part in parts {
            if part.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: part.dim,
                });
            }
            for p in part.points() {
                if seen.insert(p.iter().map(|x| x.to_bits()).collect()) {
                    coords.extend_from_slice(p);
                }
            }
        }
        Self::from_flat(dim, coords, metric)
    }

    /// Exact deduplication keeping first occurrences.
    pub fn dedup(&self) -> Self {
        Self::union_dedup(self.dim, self.metric.clone(), [self])
            .expect("dimension is consistent")
    }

    /// True when both sets contain the same points, ignoring order and multiplicity.
    pub fn same_points(&self, other: &Self) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let a: HashSet<Vec<u64>> = self.point_keys().into_iter().collect();
        let b: HashSet<Vec<u64>> = other.point_keys().into_iter().collect();
        a == b
    }

    /// True when every point of `self` occurs bitwise in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        let b: HashSet<Vec<u64>> = other.point_keys().into_iter().collect();
        self.point_keys().iter().all(|k| b.contains(k))
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Map `K` evaluated by a pseudometric `ρ(x, y) = ‖Kx − Ky‖`.
pub type FeatureMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Pseudometric of the form `ρ(x, y) = norm(Kx − Ky)`.
#[derive(Clone)]
pub enum PseudometricSpec {
    /// `K` keeps the listed coordinates.
    CoordinateProjection { coords: Vec<usize>, norm: MetricTag },
    /// `K` is a row-major `rows × cols` matrix.
    LinearMap {
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
        norm: MetricTag,
    },
    /// `K` is an arbitrary map into ℝ^out_dim.
    Map {
        label: String,
        out_dim: usize,
        map: FeatureMap,
        norm: MetricTag,
    },
}

impl fmt::Debug for PseudometricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.describe())
    }
}

/// Serializable summary of a [`PseudometricSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PseudometricDescriptor {
    CoordinateProjection {
        coords: Vec<usize>,
        norm: MetricTag,
    },
    LinearMap {
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
        norm: MetricTag,
    },
    Map {
        label: String,
        out_dim: usize,
        norm: MetricTag,
    },
}

impl PseudometricSpec {
    /// Projection onto the first `m` coordinates with the euclidean norm.
    pub fn first_coordinates(m: usize) -> Self {
        PseudometricSpec::CoordinateProjection {
            coords: (0..m).collect(),
            norm: MetricTag::Euclidean,
        }
    }

    /// The zero map; every pair is at distance 0.
    pub fn zero(dim: usize) -> Self {
        PseudometricSpec::LinearMap {
            rows: 1,
            cols: dim,
            matrix: vec![0.0; dim],
            norm: MetricTag::Euclidean,
        }
    }

    pub fn map<F>(label: impl Into<String>, out_dim: usize, norm: MetricTag, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        PseudometricSpec::Map {
            label: label.into(),
            out_dim,
            map: Arc::new(f),
            norm,
        }
    }

    pub fn norm_tag(&self) -> &MetricTag {
        match self {
            PseudometricSpec::CoordinateProjection { norm, .. }
            | PseudometricSpec::LinearMap { norm, .. }
            | PseudometricSpec::Map { norm, .. } => norm,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            PseudometricSpec::CoordinateProjection { coords, .. } => coords.len(),
            PseudometricSpec::LinearMap { rows, .. } => *rows,
            PseudometricSpec::Map { out_dim, .. } => *out_dim,
        }
    }

    /// Evaluates `Kx`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PseudometricSpec::CoordinateProjection { coords, .. } => {
                coords.iter().map(|&c| x[c]).collect()
            }
            PseudometricSpec::LinearMap {
                rows, cols, matrix, ..
            } => (0..*rows)
                .map(|r| {
                    matrix[r * cols..(r + 1) * cols]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
            PseudometricSpec::Map { map, .. } => map(x),
        }
    }

    /// `ρ(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let kx = self.apply(x);
        let ky = self.apply(y);
        self.norm_tag().distance(&kx, &ky)
    }

    /// Feature images `Kx` of every point, carrying the pseudometric's norm.
    pub fn image_set(&self, g: &FinitePointSet) -> Result<FinitePointSet> {
        let out = self.out_dim();
        let coords: Vec<f64> = if g.len() >= PAR_THRESHOLD {
            (0..g.len())
                .into_par_iter()
                .flat_map_iter(|i| self.apply(g.point(i)))
                .collect()
        } else {
            (0..g.len()).flat_map(|i| self.apply(g.point(i))).collect()
        };
        if coords.len() != out * g.len() {
            return Err(Error::DimensionMismatch {
                expected: out * g.len(),
                got: coords.len(),
            });
        }
        FinitePointSet::from_flat(out.max(1), pad_empty(coords, out, g.len()), self.norm_tag().clone())
    }

    pub fn describe(&self) -> PseudometricDescriptor {
        match self {
            PseudometricSpec::CoordinateProjection { coords, norm } => {
                PseudometricDescriptor::CoordinateProjection {
                    coords: coords.clone(),
                    norm: norm.clone(),
                }
            }
            PseudometricSpec::LinearMap {
                rows,
                cols,
                matrix,
                norm,
            } => PseudometricDescriptor::LinearMap {
                rows: *rows,
                cols: *cols,
                matrix: matrix.clone(),
                norm: norm.clone(),
            },
            PseudometricSpec::Map {
                label,
                out_dim,
                norm,
                ..
            } => PseudometricDescriptor::Map {
                label: label.clone(),
                out_dim: *out_dim,
                norm: norm.clone(),
            },
        }
    }
}

// A zero-dimensional feature space is represented by a single zero coordinate.
fn pad_empty(coords: Vec<f64>, out: usize, n: usize) -> Vec<f64> {
    if out == 0 {
        vec![0.0; n]
    } else {
        coords
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetKind {
    Packing,
    Covering,
    Both,
}

/// Centers of an ε-net, as indices into the input set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetResult {
    pub centers: Vec<usize>,
    pub radius: f64,
    pub kind: NetKind,
    pub count: usize,
}

impl NetResult {
    /// Index (into `centers`) of the nearest center for every point, lowest index on ties.
    pub fn assignment(&self, g: &FinitePointSet) -> Vec<usize> {
        let nearest = |i: usize| {
            let p = g.point(i);
            let mut best = (f64::INFINITY, 0usize);
            for (ci, &c) in self.centers.iter().enumerate() {
                let d = g.metric().distance(p, g.point(c));
                if d < best.0 {
                    best = (d, ci);
                }
            }
            best.1
        };
        if g.len() >= PAR_THRESHOLD {
            (0..g.len()).into_par_iter().map(nearest).collect()
        } else {
            (0..g.len()).map(nearest).collect()
        }
    }

    /// Checks pairwise separation `≥ radius` of the centers.
    pub fn is_separated(&self, g: &FinitePointSet) -> bool {
        self.centers.iter().enumerate().all(|(a, &i)| {
            self.centers[a + 1..]
                .iter()
                .all(|&j| g.dist(i, j) >= self.radius)
        })
    }

    /// Checks that every point lies strictly within `radius` of some center.
    pub fn is_cover(&self, g: &FinitePointSet) -> bool {
        (0..g.len()).all(|i| {
            self.centers
                .iter()
                .any(|&c| g.dist(i, c) < self.radius)
        })
    }
}

/// Farthest-point traversal over `n` items under `dist`, stopped once every
/// item is strictly within `eps` of a chosen center.
pub(crate) fn farthest_point_net<F>(n: usize, eps: f64, dist: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    const CHUNK: usize = 4096;
    let mut min_d = vec![f64::INFINITY; n];
    let mut centers = Vec::new();
    let mut next = 0usize;
    loop {
        centers.push(next);
        let c = next;
        // Lowers the distances of one chunk and returns its farthest point.
        let sweep = |(k, chunk): (usize, &mut [f64])| {
            let base = k * CHUNK;
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for (off, m) in chunk.iter_mut().enumerate() {
                let i = base + off;
                let d = dist(c, i);
                if d < *m {
                    *m = d;
                }
                best = pick_farther(best, (*m, i));
            }
            best
        };
        let none = (f64::NEG_INFINITY, usize::MAX);
        let (far_d, far_i) = if n >= PAR_THRESHOLD {
            min_d
                .par_chunks_mut(CHUNK)
                .enumerate()
                .map(sweep)
                .reduce(|| none, pick_farther)
        } else {
            min_d.chunks_mut(CHUNK).enumerate().map(sweep).fold(none, pick_farther)
        };
        if far_d < eps {
            break;
        }
        next = far_i;
    }
    centers
}

// Associative and commutative, so parallel reductions are order independent.
fn pick_farther(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

/// Largest dimension handled by the bucketed traversal.
const GRID_MAX_DIM: usize = 4;

/// Totally ordered heap entry: larger distance first, then lower index.
#[derive(PartialEq)]
struct Far(f64, usize);

impl Eq for Far {}

impl PartialOrd for Far {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Far {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Same traversal as [`farthest_point_net`] for norms dominating every
/// coordinate difference, with points bucketed into cells of side `eps`.
/// A new center can only lower the distances of points closer to it than
/// the current farthest distance, so only nearby cells are swept.
fn farthest_point_net_grid(g: &FinitePointSet, eps: f64) -> Vec<usize> {
    use std::collections::{BinaryHeap, HashMap};
    let n = g.len();
    let d = g.dim();
    let key = |p: &[f64]| {
        let mut k = [0i64; GRID_MAX_DIM];
        for (j, v) in p.iter().enumerate() {
            k[j] = (v / eps).floor() as i64;
        }
        k
    };
    let mut order: Vec<usize> = (0..n).collect();
    let keys: Vec<[i64; GRID_MAX_DIM]> = (0..n).map(|i| key(g.point(i))).collect();
    order.sort_by_key(|&i| (keys[i], i));
    let mut cells: HashMap<[i64; GRID_MAX_DIM], (usize, usize)> = HashMap::new();
    let mut start = 0;
    while start < n {
        let k = keys[order[start]];
        let mut end = start;
        while end < n && keys[order[end]] == k {
            end += 1;
        }
        cells.insert(k, (start, end));
        start = end;
    }
    let mut occupied: Vec<([i64; GRID_MAX_DIM], (usize, usize))> = cells.iter().map(|(k, r)| (*k, *r)).collect();
    occupied.sort();

    let mut min_d = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    let mut centers = vec![0usize];
    for i in 0..n {
        min_d[i] = g.dist(0, i);
        heap.push(Far(min_d[i], i));
    }
    loop {
        while let Some(top) = heap.peek() {
            if top.0 == min_d[top.1] {
                break;
            }
            heap.pop();
        }
        let Some(&Far(r, c)) = heap.peek() else { break };
        if r < eps {
            break;
        }
        centers.push(c);
        let p = g.point(c);
        let mut lo = [0i64; GRID_MAX_DIM];
        let mut hi = [0i64; GRID_MAX_DIM];
        let mut boxes = 1f64;
        for j in 0..d {
            // One spare cell on each side absorbs rounding in the keys.
            lo[j] = ((p[j] - r) / eps).floor() as i64 - 1;
            hi[j] = ((p[j] + r) / eps).floor() as i64 + 1;
            boxes *= (hi[j] - lo[j] + 1) as f64;
        }
        let inside = |k: &[i64; GRID_MAX_DIM]| (0..d).all(|j| k[j] >= lo[j] && k[j] <= hi[j]);
        let mut relax = |range: (usize, usize)| {
            for &i in &order[range.0..range.1] {
                let dist = g.dist(c, i);
                if dist < min_d[i] {
                    min_d[i] = dist;
                    heap.push(Far(dist, i));
                }
            }
        };
        if boxes > occupied.len() as f64 {
            for (k, range) in &occupied {
                if inside(k) {
                    relax(*range);
                }
            }
        } else {
            let mut k = lo;
            'walk: loop {
                if let Some(range) = cells.get(&k) {
                    relax(*range);
                }
                for j in 0..d {
                    if k[j] < hi[j] {
                        k[j] += 1;
                        continue 'walk;
                    }
                    k[j] = lo[j];
                }
                break;
            }
        }
        // Stale entries pile up when cells hold single points.
        if heap.len() > 4 * n {
            heap = (0..n).map(|i| Far(min_d[i], i)).collect();
        }
    }
    centers
}

/// Greedy farthest-point ε-net: a packing and an open cover at once.
///
/// The first center is point 0; each further center is the point farthest
/// from those already chosen (lowest index on ties). With `rho` the
/// pseudometric replaces the set's own metric.
pub fn greedy_net(
    g: &FinitePointSet,
    eps: f64,
    rho: Option<&PseudometricSpec>,
) -> Result<NetResult> {
    if g.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {eps}")));
    }
    // Cell keys are i64; far below the coordinate scale they would saturate.
    let scale = g.coords().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bucketed = g.dim() <= GRID_MAX_DIM
        && g.len() >= PAR_THRESHOLD
        && scale / eps < 1e15
        && !matches!(g.metric(), MetricTag::WeightedEuclidean(_));
    let centers = match rho {
        None if bucketed => farthest_point_net_grid(g, eps),
        None => farthest_point_net(g.len(), eps, |i, j| g.dist(i, j)),
        Some(rho) => {
            let feats = rho.image_set(g)?;
            farthest_point_net(g.len(), eps, |i, j| feats.dist(i, j))
        }
    };
    let count = centers.len();
    Ok(NetResult {
        centers,
        radius: eps,
        kind: NetKind::Both,
        count,
    })
}

/// Minimal number of open ε-balls centered in `g` that cover `g`, by
/// exhaustive search. Intended for small test instances only.
pub fn exact_cover_number(g: &FinitePointSet, eps: f64) -> Result<usize> {
    let n = g.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    if n > EXACT_ORACLE_LIMIT {
        return Err(Error::OracleSizeExceeded {
            size: n,
            limit: EXACT_ORACLE_LIMIT,
        });
    }
    let masks: Vec<u32> = (0..n)
        .map(|c| {
            (0..n)
                .filter(|&j| g.dist(c, j) < eps)
                .fold(0u32, |m, j| m | (1 << j))
        })
        .collect();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    fn search(masks: &[u32], full: u32, start: usize, left: usize, covered: u32) -> bool {
        if covered == full {
            return true;
        }
        if left == 0 {
            return false;
        }
        (start..masks.len()).any(|c| search(masks, full, c + 1, left - 1, covered | masks[c]))
    }
    Ok((1..=n)
        .find(|&k| search(&masks, full, 0, k, 0))
        .unwrap_or(n))
}

/// Least-squares box-counting fit of `ln N(ε)` against `ln(1/ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub eps_range: (f64, f64),
    pub counts: Vec<(f64, usize)>,
}

/// Estimates the box-counting dimension of `g` from greedy cover counts.
///
/// `eps_grid` must be strictly decreasing with at least three entries.
/// Counts are made monotone by noting that a cover at a smaller radius
/// also covers at every larger radius.
pub fn box_counting_dimension(g: &FinitePointSet, eps_grid: &[f64]) -> Result<DimensionFit> {
    if g.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if eps_grid.len() < 3 {
        return Err(Error::InvalidArgument("need at least three radii".into()));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0) || !e.is_finite())
        || eps_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidArgument(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    let eps_max = eps_grid[0];
    let eps_min = eps_grid[eps_grid.len() - 1];
    if g.len() > 1 && eps_max >= diameter_upper_estimate(g) {
        return Err(Error::InvalidArgument(format!(
            "radius {eps_max} is not below the set diameter"
        )));
    }
    let mut raw: Vec<usize> = Vec::with_capacity(eps_grid.len());
    for &e in eps_grid {
        raw.push(greedy_net(g, e, None)?.count);
    }
    // Smallest count seen at or below each radius.
    let mut counts = raw.clone();
    for i in (0..counts.len().saturating_sub(1)).rev() {
        counts[i] = counts[i].min(counts[i + 1]);
    }
    let pairs: Vec<(f64, usize)> = eps_grid.iter().copied().zip(counts.iter().copied()).collect();
    let xs: Vec<f64> = eps_grid.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = least_squares(&xs, &ys);
    let (slope, intercept, r_squared) = match fit {
        Some(f) => f,
        None => (0.0, ys[0], 0.0),
    };
    Ok(DimensionFit {
        slope,
        intercept,
        r_squared,
        eps_range: (eps_min, eps_max),
        counts: pairs,
    })
}

/// Exact diameter for small sets, otherwise twice the largest distance from point 0.
fn diameter_upper_estimate(g: &FinitePointSet) -> f64 {
    if g.len() <= 4096 {
        g.diameter()
    } else {
        let r = (0..g.len())
            .into_par_iter()
            .map(|i| g.dist(0, i))
            .reduce(|| 0.0, f64::max);
        2.0 * r
    }
}

/// Ordinary least squares; `None` when `ys` is constant or `xs` degenerate.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r2 = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Some((slope, intercept, r2))
}

/// `sup_{x∈G} inf_{y∈H} d(x, y)`; zero for empty `g`.
pub fn hausdorff_distance_onesided(g: &FinitePointSet, h: &FinitePointSet) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("target set is empty".into()));
    }
    if g.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: h.dim(),
        });
    }
    let metric = h.metric();
    let nearest = |i: usize| {
        let p = g.point(i);
        h.points()
            .map(|q| metric.distance(p, q))
            .fold(f64::INFINITY, f64::min)
    };
    let work = g.len().saturating_mul(h.len());
    Ok(if work >= 1 << 16 {
        (0..g.len()).into_par_iter().map(nearest).reduce(|| 0.0, f64::max)
    } else {
        (0..g.len()).map(nearest).fold(0.0, f64::max)
    })
}

/// Symmetric Hausdorff distance.
pub fn hausdorff_distance(g: &FinitePointSet, h: &FinitePointSet) -> Result<f64> {
    Ok(hausdorff_distance_onesided(g, h)?.max(hausdorff_distance_onesided(h, g)?))
}
