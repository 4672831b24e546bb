use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use super::pairs::{argmax, holds, report, PairData, ValidationReport, Witness};
use crate::covering::json_f64;
use crate::error::{Error, Result};
use crate::metric::{MetricTag, PseudometricSpec};

/// A linear projection of `ℝ^dim` (`P² = P`).
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    matrix: DMatrix<f64>,
}

impl Projector {
    pub fn coordinate(dim: usize, coords: &[usize]) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| **c >= dim) {
            return Err(Error::InvalidArgument(format!("coordinate {c} out of range")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for &c in coords {
            m[(c, c)] = 1.0;
        }
        Ok(Self { matrix: m })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    /// Orthogonal projection onto the span of `vectors`; directions with
    /// singular value below `1e-10·σ_max` are dropped.
    pub fn onto_span(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.is_empty() {
            return Ok(Self::zero(dim));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let a = DMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
        let svd = a.svd(true, false);
        let u = svd.u.ok_or_else(|| Error::InvalidArgument("SVD failed".into()))?;
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let mut m = DMatrix::zeros(dim, dim);
        if smax > 0.0 {
            for (k, s) in svd.singular_values.iter().enumerate() {
                if *s > 1e-10 * smax {
                    let col = u.column(k);
                    m += &col * col.transpose();
                }
            }
        }
        Ok(Self { matrix: m })
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument("projector must be square".into()));
        }
        let scale = matrix.norm().max(1.0);
        if (&matrix * &matrix - &matrix).norm() > 1e-9 * scale {
            return Err(Error::InvalidArgument("matrix is not idempotent".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        self.matrix.trace().round().max(0.0) as usize
    }

    pub fn is_orthogonal(&self) -> bool {
        let scale = self.matrix.norm().max(1.0);
        (&self.matrix - self.matrix.transpose()).norm() <= 1e-12 * scale
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| self.matrix.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(I − P)v`.
    pub fn complement(&self, v: &[f64]) -> Vec<f64> {
        let pv = self.apply(v);
        v.iter().zip(pv).map(|(a, b)| a - b).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|r| self.matrix.row(r).iter().copied().collect())
            .collect()
    }

    pub fn as_pseudometric(&self, norm: MetricTag) -> PseudometricSpec {
        let n = self.dim();
        PseudometricSpec::LinearMap {
            rows: n,
            cols: n,
            matrix: self.rows().concat(),
            norm,
        }
    }
}

/// The map `K` of a quasi-stability certificate.
#[derive(Clone, Debug)]
pub enum KMap {
    /// `K` acts on the state `x`.
    State(PseudometricSpec),
    /// `Kx = scale·P(S(T)x)`.
    Image { p: PseudometricSpec, scale: f64 },
}

impl KMap {
    pub(crate) fn z(&self, x: &[f64], sx: &[f64]) -> Vec<f64> {
        match self {
            KMap::State(p) => p.apply(x),
            KMap::Image { p, scale } => p.apply(sx).into_iter().map(|v| v * scale).collect(),
        }
    }

    pub fn z_norm(&self) -> &MetricTag {
        match self {
            KMap::State(p) | KMap::Image { p, .. } => p.norm_tag(),
        }
    }

    /// Dimension of the range of `K`, which spans `Z`.
    pub fn z_dim(&self) -> usize {
        match self {
            KMap::State(p) | KMap::Image { p, .. } => match p {
                PseudometricSpec::LinearMap { rows, cols, matrix, .. } => {
                    DMatrix::from_row_slice(*rows, *cols, matrix).rank(1e-10)
                }
                other => other.out_dim(),
            },
        }
    }

    pub fn describe(&self) -> Value {
        match self {
            KMap::State(p) => json!({"acts_on": "state", "map": p.describe()}),
            KMap::Image { p, scale } => {
                json!({"acts_on": "image", "map": p.describe(), "scale": json_f64(*scale)})
            }
        }
    }
}

fn witness_json(w: &Option<Witness>) -> Value {
    w.as_ref()
        .map(|w| serde_json::to_value(w).unwrap_or(Value::Null))
        .unwrap_or(Value::Null)
}

fn opt_f64(x: Option<f64>) -> Value {
    x.map(json_f64).unwrap_or(Value::Null)
}

pub const COMPACTNESS_CAVEAT: &str =
    "every seminorm on a finite sample is compact; compactness of the continuum seminorm is not tested";

#[derive(Clone, Debug)]
pub struct QuasiStabilityCert {
    pub eta: f64,
    pub kappa: f64,
    pub k_map: KMap,
    /// `𝔫_Z` applied to `Kx` and `Ky`; `None` means the norm of `Z` itself.
    pub seminorm: Option<PseudometricSpec>,
    pub t: f64,
    pub n_pairs: usize,
    pub margin: Option<f64>,
    pub eta_witness: Option<Witness>,
    pub kappa_witness: Option<Witness>,
}

impl QuasiStabilityCert {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "certificate/1",
            "kind": "quasi-stability",
            "eta": json_f64(self.eta),
            "kappa": json_f64(self.kappa),
            "T": self.t,
            "n_pairs": self.n_pairs,
            "margin": opt_f64(self.margin),
            "k_map": self.k_map.describe(),
            "z_dim": self.k_map.z_dim(),
            "seminorm": self.seminorm.as_ref().map(|s| serde_json::to_value(s.describe()).unwrap_or(Value::Null)),
            "caveat": COMPACTNESS_CAVEAT,
            "witness": {"eta": witness_json(&self.eta_witness), "kappa": witness_json(&self.kappa_witness)},
        })
    }
}

/// Max-ratio fit of `η` and `κ` in `d(Sx, Sy) ≤ η d(x, y) + 𝔫_Z(Kx − Ky)` and
/// `‖Kx − Ky‖_Z ≤ κ d(x, y)`.
pub fn estimate_quasi_stability(
    data: &PairData,
    k_map: KMap,
    seminorm: Option<PseudometricSpec>,
) -> Result<QuasiStabilityCert> {
    let metric = data.b.metric().clone();
    let terms: Vec<(f64, f64, f64, f64)> = data.map(|x, y, sx, sy| {
        let d = metric.distance(x, y);
        let ds = metric.distance(sx, sy);
        let (zx, zy) = (k_map.z(x, sx), k_map.z(y, sy));
        let kz = k_map.z_norm().distance(&zx, &zy);
        let sn = seminorm.as_ref().map_or(kz, |s| s.eval(&zx, &zy));
        (d, ds, kz, sn)
    });
    let kappas: Vec<f64> = terms.iter().map(|t| t.2 / t.0).collect();
    let etas: Vec<f64> = terms.iter().map(|t| (t.1 - t.3).max(0.0) / t.0).collect();
    let ke = argmax(&kappas).expect("pair data is nonempty");
    let ee = argmax(&etas).expect("pair data is nonempty");
    let (eta, kappa) = (etas[ee], kappas[ke]);
    if !(eta < 1.0) {
        let (i, j) = data.pairs[ee];
        return Err(Error::NotQuasiStable { eta, i, j });
    }
    let margin = terms
        .iter()
        .map(|&(d, ds, kz, sn)| (kappa * d - kz).min(eta * d + sn - ds))
        .fold(f64::INFINITY, f64::min);
    Ok(QuasiStabilityCert {
        eta,
        kappa,
        k_map,
        seminorm,
        t: data.t,
        n_pairs: data.len(),
        margin: Some(margin),
        eta_witness: Some(data.witness(ee, eta)),
        kappa_witness: Some(data.witness(ke, kappa)),
    })
}

pub fn validate_quasi(data: &PairData, c: &QuasiStabilityCert) -> ValidationReport {
    let metric = data.b.metric().clone();
    report(data.map(|x, y, sx, sy| {
        let d = metric.distance(x, y);
        let ds = metric.distance(sx, sy);
        let (zx, zy) = (c.k_map.z(x, sx), c.k_map.z(y, sy));
        let kz = c.k_map.z_norm().distance(&zx, &zy);
        let sn = c.seminorm.as_ref().map_or(kz, |s| s.eval(&zx, &zy));
        let (r1, r2) = (c.kappa * d, c.eta * d + sn);
        (holds(kz, r1) && holds(ds, r2), (r1 - kz).min(r2 - ds))
    }))
}

#[derive(Clone, Debug)]
pub struct SqueezingCert {
    pub n: usize,
    pub eta: f64,
    pub mu: f64,
    pub kappa: f64,
    /// `P`, applied to `S(T)x`; its norm is the norm of `X_n`.
    pub p: PseudometricSpec,
    pub generalized: bool,
    pub t: f64,
    pub n_pairs: usize,
    /// Pairs in the finite-dimensional branch and in the contraction branch.
    pub branch_counts: Option<(usize, usize)>,
    pub eta_witness: Option<Witness>,
    pub kappa_witness: Option<Witness>,
}

impl SqueezingCert {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "certificate/1",
            "kind": if self.generalized { "generalized-squeezing" } else { "squeezing" },
            "n": self.n,
            "eta": json_f64(self.eta),
            "mu": json_f64(self.mu),
            "kappa": json_f64(self.kappa),
            "T": self.t,
            "n_pairs": self.n_pairs,
            "projection": self.p.describe(),
            "branch_counts": self.branch_counts.map(|(a, b)| json!({"finite_dim": a, "contraction": b})),
            "witness": {"eta": witness_json(&self.eta_witness), "kappa": witness_json(&self.kappa_witness)},
        })
    }
}

fn squeezing_terms(data: &PairData, p: &PseudometricSpec) -> Vec<(f64, f64, f64)> {
    let metric = data.b.metric().clone();
    data.map(|x, y, sx, sy| (metric.distance(x, y), metric.distance(sx, sy), p.eval(sx, sy)))
}

/// Alternative form: each pair satisfies `‖ΔS‖ ≤ μ‖PΔS‖` or contributes
/// `‖ΔS‖/‖Δ‖` to `η`.
pub fn certify_squeezing(data: &PairData, p: PseudometricSpec, mu: f64) -> Result<SqueezingCert> {
    fit_squeezing(data, p, mu, false)
}

/// `η = max (‖ΔS‖ − μ‖PΔS‖)⁺ / ‖Δ‖`.
pub fn certify_generalized_squeezing(data: &PairData, p: PseudometricSpec, mu: f64) -> Result<SqueezingCert> {
    fit_squeezing(data, p, mu, true)
}

fn fit_squeezing(data: &PairData, p: PseudometricSpec, mu: f64, generalized: bool) -> Result<SqueezingCert> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("μ must be positive, got {mu}")));
    }
    let terms = squeezing_terms(data, &p);
    let kappas: Vec<f64> = terms.iter().map(|t| t.2 / t.0).collect();
    let mut in_branch = 0;
    let etas: Vec<f64> = terms
        .iter()
        .map(|&(d, ds, pd)| {
            if generalized {
                (ds - mu * pd).max(0.0) / d
            } else if ds <= mu * pd {
                in_branch += 1;
                0.0
            } else {
                ds / d
            }
        })
        .collect();
    let ke = argmax(&kappas).expect("pair data is nonempty");
    let ee = argmax(&etas).expect("pair data is nonempty");
    let eta = etas[ee];
    if !(eta < 1.0) {
        let (i, j) = data.pairs[ee];
        return Err(Error::NoContraction { eta, i, j });
    }
    Ok(SqueezingCert {
        n: p.out_dim(),
        eta,
        mu,
        kappa: kappas[ke],
        p,
        generalized,
        t: data.t,
        n_pairs: data.len(),
        branch_counts: (!generalized).then_some((in_branch, terms.len() - in_branch)),
        eta_witness: Some(data.witness(ee, eta)),
        kappa_witness: Some(data.witness(ke, kappas[ke])),
    })
}

pub fn validate_squeezing(data: &PairData, c: &SqueezingCert) -> ValidationReport {
    let metric = data.b.metric().clone();
    report(data.map(|x, y, sx, sy| {
        let d = metric.distance(x, y);
        let ds = metric.distance(sx, sy);
        let pd = c.p.eval(sx, sy);
        let lip = (holds(pd, c.kappa * d), c.kappa * d - pd);
        let main = if c.generalized {
            let r = c.eta * d + c.mu * pd;
            (holds(ds, r), r - ds)
        } else {
            let (r1, r2) = (c.mu * pd, c.eta * d);
            (holds(ds, r1) || holds(ds, r2), r1.max(r2) - ds)
        };
        (lip.0 && main.0, lip.1.min(main.1))
    }))
}

#[derive(Clone, Debug)]
pub struct LadyzhenskayaCert {
    pub n: usize,
    pub eta: f64,
    pub kappa: f64,
    pub p: Projector,
    /// `P` is orthogonal and the metric euclidean.
    pub hilbert: bool,
    pub metric: MetricTag,
    pub t: f64,
    pub n_pairs: usize,
    pub eta_witness: Option<Witness>,
    pub kappa_witness: Option<Witness>,
}

impl LadyzhenskayaCert {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "certificate/1",
            "kind": "ladyzhenskaya",
            "n": self.n,
            "eta": json_f64(self.eta),
            "kappa": json_f64(self.kappa),
            "hilbert": self.hilbert,
            "metric": self.metric,
            "T": self.t,
            "n_pairs": self.n_pairs,
            "projection": self.p.rows(),
            "witness": {"eta": witness_json(&self.eta_witness), "kappa": witness_json(&self.kappa_witness)},
        })
    }
}

/// `η = max ‖(I−P)ΔS‖/‖Δ‖` and `κ = max ‖PΔS‖/‖Δ‖`.
pub fn certify_ladyzhenskaya(data: &PairData, p: Projector) -> Result<LadyzhenskayaCert> {
    if p.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: p.dim(),
        });
    }
    let metric = data.b.metric().clone();
    let terms: Vec<(f64, f64)> = data.map(|x, y, sx, sy| {
        let d = metric.distance(x, y);
        let diff: Vec<f64> = sx.iter().zip(sy).map(|(a, b)| a - b).collect();
        (metric.norm(&p.complement(&diff)) / d, metric.norm(&p.apply(&diff)) / d)
    });
    let etas: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let kappas: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let ee = argmax(&etas).expect("pair data is nonempty");
    let ke = argmax(&kappas).expect("pair data is nonempty");
    let eta = etas[ee];
    if !(eta < 1.0) {
        let (i, j) = data.pairs[ee];
        return Err(Error::NoContraction { eta, i, j });
    }
    Ok(LadyzhenskayaCert {
        n: p.rank(),
        eta,
        kappa: kappas[ke],
        hilbert: p.is_orthogonal() && metric == MetricTag::Euclidean,
        p,
        metric,
        t: data.t,
        n_pairs: data.len(),
        eta_witness: Some(data.witness(ee, eta)),
        kappa_witness: Some(data.witness(ke, kappas[ke])),
    })
}

pub fn validate_ladyzhenskaya(data: &PairData, c: &LadyzhenskayaCert) -> ValidationReport {
    let metric = data.b.metric().clone();
    report(data.map(|x, y, sx, sy| {
        let d = metric.distance(x, y);
        let diff: Vec<f64> = sx.iter().zip(sy).map(|(a, b)| a - b).collect();
        let (q, pd) = (metric.norm(&c.p.complement(&diff)), metric.norm(&c.p.apply(&diff)));
        let (r1, r2) = (c.eta * d, c.kappa * d);
        (holds(q, r1) && holds(pd, r2), (r1 - q).min(r2 - pd))
    }))
}

/// `x ↦ (C x, M x)` with `S(T) = C + M`.
pub type SplitFn = Arc<dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// Where the smoothing part `M` takes values, with the norm inherited from `X`.
#[derive(Clone, Debug, PartialEq)]
pub enum ZSpace {
    Coordinates(Vec<usize>),
    Range(Projector),
}

impl ZSpace {
    /// Orthonormal basis vectors of the subspace.
    pub fn basis(&self, dim: usize) -> Vec<Vec<f64>> {
        match self {
            ZSpace::Coordinates(cs) => cs
                .iter()
                .map(|&c| (0..dim).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
                .collect(),
            ZSpace::Range(p) => {
                let svd = p.matrix().clone().svd(true, false);
                let u = svd.u.expect("requested U");
                svd.singular_values
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| **s > 0.5)
                    .map(|(k, _)| u.column(k).iter().copied().collect())
                    .collect()
            }
        }
    }

    fn describe(&self) -> Value {
        match self {
            ZSpace::Coordinates(cs) => json!({"coordinates": cs}),
            ZSpace::Range(p) => json!({"range_of": p.rows()}),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmoothingCert {
    pub eta: f64,
    pub kappa: f64,
    pub z: ZSpace,
    pub metric: MetricTag,
    pub dim: usize,
    pub t: f64,
    pub n_pairs: usize,
    pub eta_witness: Option<Witness>,
    pub kappa_witness: Option<Witness>,
}

impl SmoothingCert {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "certificate/1",
            "kind": "smoothing",
            "eta": json_f64(self.eta),
            "kappa": json_f64(self.kappa),
            "z": self.z.describe(),
            "metric": self.metric,
            "T": self.t,
            "n_pairs": self.n_pairs,
            "witness": {"eta": witness_json(&self.eta_witness), "kappa": witness_json(&self.kappa_witness)},
        })
    }
}

/// Fits `‖CΔ‖ ≤ η‖Δ‖` and `‖MΔ‖ ≤ κ‖Δ‖` for a supplied split whose smoothing
/// part lives on the coordinates `z_coords`.
pub fn estimate_smoothing(data: &PairData, split: &SplitFn, z_coords: Vec<usize>) -> Result<SmoothingCert> {
    let dim = data.dim();
    if let Some(c) = z_coords.iter().find(|c| **c >= dim) {
        return Err(Error::InvalidArgument(format!("coordinate {c} out of range")));
    }
    for (x, sx) in data.b.points().zip(data.images.points()) {
        let (c, m) = split(x);
        if c.len() != dim || m.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.len().min(m.len()),
            });
        }
        for r in 0..dim {
            if (c[r] + m[r] - sx[r]).abs() > 1e-9 * (1.0 + sx[r].abs()) {
                return Err(Error::InvalidArgument("split does not reproduce S(T)".into()));
            }
            if !z_coords.contains(&r) && m[r] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "smoothing part leaves the subspace at coordinate {r}"
                )));
            }
        }
    }
    let metric = data.b.metric().clone();
    let terms: Vec<(f64, f64)> = data.map(|x, y, _, _| {
        let d = metric.distance(x, y);
        let ((cx, mx), (cy, my)) = (split(x), split(y));
        (metric.distance(&cx, &cy) / d, metric.distance(&mx, &my) / d)
    });
    let etas: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let kappas: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let ee = argmax(&etas).expect("pair data is nonempty");
    let ke = argmax(&kappas).expect("pair data is nonempty");
    let eta = etas[ee];
    if !(eta < 1.0) {
        let (i, j) = data.pairs[ee];
        return Err(Error::NoContraction { eta, i, j });
    }
    Ok(SmoothingCert {
        eta,
        kappa: kappas[ke],
        z: ZSpace::Coordinates(z_coords),
        metric,
        dim,
        t: data.t,
        n_pairs: data.len(),
        eta_witness: Some(data.witness(ee, eta)),
        kappa_witness: Some(data.witness(ke, kappas[ke])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FinitePointSet;
    use crate::semigroup::SystemSpec;
    use approx::assert_relative_eq;

    fn diag() -> SystemSpec {
        SystemSpec::discrete("diag", 2, |x, y| {
            y[0] = 0.9 * x[0];
            y[1] = 0.3 * x[1];
        })
    }

    fn diag_data() -> PairData {
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 11, 2).unwrap();
        PairData::sample(&diag(), b, 1.0, 2000, 5, true).unwrap()
    }

    fn first_axis() -> PseudometricSpec {
        PseudometricSpec::first_coordinates(1)
    }

    #[test]
    fn quasi_on_diagonal_map() {
        let k = PseudometricSpec::LinearMap {
            rows: 1,
            cols: 2,
            matrix: vec![0.9, 0.0],
            norm: MetricTag::Euclidean,
        };
        let c = estimate_quasi_stability(&diag_data(), KMap::State(k), None).unwrap();
        assert_relative_eq!(c.kappa, 0.9, max_relative = 1e-12);
        assert_relative_eq!(c.eta, 0.3, max_relative = 1e-12);
        assert!(validate_quasi(&diag_data(), &c).passed());
    }

    #[test]
    fn quasi_on_pure_contraction() {
        let sys = SystemSpec::discrete("c", 1, |x, y| y[0] = 0.4 * x[0]);
        let b = FinitePointSet::grid_1d(-1.0, 1.0, 9).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 100, 1, true).unwrap();
        let c = estimate_quasi_stability(&data, KMap::State(PseudometricSpec::zero(1)), None).unwrap();
        assert_relative_eq!(c.eta, 0.4, max_relative = 1e-12);
        assert_eq!(c.kappa, 0.0);
    }

    #[test]
    fn identity_is_not_quasi_stable_without_k() {
        let sys = SystemSpec::discrete("id", 1, |x, y| y[0] = x[0]);
        let b = FinitePointSet::grid_1d(-1.0, 1.0, 9).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 100, 1, true).unwrap();
        let err = estimate_quasi_stability(&data, KMap::State(PseudometricSpec::zero(1)), None).unwrap_err();
        assert!(err.to_string().starts_with("not quasi-stable on supplied data"));
    }

    #[test]
    fn generalized_squeezing_on_diagonal_map() {
        let c = certify_generalized_squeezing(&diag_data(), first_axis(), 1.0).unwrap();
        assert_relative_eq!(c.eta, 0.3, max_relative = 1e-12);
        assert_relative_eq!(c.kappa, 0.9, max_relative = 1e-12);
        assert_eq!(c.n, 1);
        assert!(validate_squeezing(&diag_data(), &c).passed());
    }

    #[test]
    fn squeezing_of_a_contraction_uses_the_contraction_branch() {
        let sys = SystemSpec::discrete("c", 2, |x, y| {
            y[0] = 0.5 * x[0];
            y[1] = 0.5 * x[1];
        });
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 5, 2).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 200, 2, true).unwrap();
        let c = certify_squeezing(&data, PseudometricSpec::zero(2), 3.0).unwrap();
        assert_relative_eq!(c.eta, 0.5, max_relative = 1e-12);
        assert_eq!(c.branch_counts, Some((0, data.len())));
    }

    #[test]
    fn rotation_fails_squeezing() {
        let sys = SystemSpec::discrete("rot", 2, |x, y| {
            y[0] = -x[1];
            y[1] = x[0];
        });
        let b = FinitePointSet::grid_cube(0.0, 1.0, 2, 2).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 0, 0, true).unwrap();
        let err = certify_squeezing(&data, first_axis(), 1.0).unwrap_err();
        let Error::NoContraction { eta, i, j } = err else {
            panic!("unexpected error {err}");
        };
        assert_eq!(eta, 1.0);
        // The failing pair differs along the first axis.
        let (p, q) = (data.b.point(i), data.b.point(j));
        assert_eq!(p[1], q[1]);
    }

    #[test]
    fn ladyzhenskaya_on_diagonal_map() {
        let c = certify_ladyzhenskaya(&diag_data(), Projector::coordinate(2, &[0]).unwrap()).unwrap();
        assert_relative_eq!(c.eta, 0.3, max_relative = 1e-12);
        assert_relative_eq!(c.kappa, 0.9, max_relative = 1e-12);
        assert!(c.hilbert);
        assert_eq!(c.n, 1);
    }

    #[test]
    fn constant_map_has_zero_constants() {
        let sys = SystemSpec::discrete("k", 2, |_, y| y.copy_from_slice(&[1.0, 2.0]));
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 4, 2).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 100, 3, true).unwrap();
        let c = certify_ladyzhenskaya(&data, Projector::coordinate(2, &[0]).unwrap()).unwrap();
        assert_eq!((c.eta, c.kappa), (0.0, 0.0));
    }

    #[test]
    fn identity_without_projection_fails_ladyzhenskaya() {
        let sys = SystemSpec::discrete("id", 2, |x, y| y.copy_from_slice(x));
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 4, 2).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 100, 3, true).unwrap();
        assert!(certify_ladyzhenskaya(&data, Projector::zero(2)).is_err());
    }

    #[test]
    fn projector_from_span() {
        let p = Projector::onto_span(3, &[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.is_orthogonal());
        let v = p.apply(&[1.0, 0.0, 5.0]);
        assert_relative_eq!(v[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(v[2], 0.0, epsilon = 1e-15);
        assert!(Projector::from_matrix(DMatrix::from_element(2, 2, 1.0)).is_err());
    }

    #[test]
    fn smoothing_split_is_checked() {
        let sys = SystemSpec::discrete("s", 2, |x, y| {
            y[0] = 0.2 * x[0] + 0.5 * x[0];
            y[1] = 0.2 * x[1];
        });
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 5, 2).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 300, 4, true).unwrap();
        let good: SplitFn = Arc::new(|x: &[f64]| (vec![0.2 * x[0], 0.2 * x[1]], vec![0.5 * x[0], 0.0]));
        let c = estimate_smoothing(&data, &good, vec![0]).unwrap();
        assert_relative_eq!(c.eta, 0.2, max_relative = 1e-12);
        assert_relative_eq!(c.kappa, 0.5, max_relative = 1e-12);
        let bad: SplitFn = Arc::new(|x: &[f64]| (vec![0.2 * x[0], 0.2 * x[1]], vec![0.0, 0.0]));
        assert!(estimate_smoothing(&data, &bad, vec![0]).is_err());
    }
}
