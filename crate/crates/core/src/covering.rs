//! Covering-condition certificates `N(S(kT)B, a·q^k) ≤ b·h^k` and the
//! one-step cover propagation of quasi-stable maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{greedy_net, FinitePointSet, NetResult, PseudometricSpec};
use crate::semigroup::{step, SystemSpec};

/// Measured cover count at one generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerK {
    pub k: usize,
    pub eps: f64,
    pub count: usize,
    pub allowed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub k0: usize,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub per_k: Vec<PerK>,
    /// Sampled counts only bound continuum counts from below.
    pub empirical: bool,
}

impl CoveringCertificate {
    /// `ln h / ln(1/q)`.
    pub fn dim_bound(&self) -> f64 {
        dim_bound(self.q, self.h)
    }

    /// `(1/T)·ln(1/q)`.
    pub fn attraction_rate_bound(&self) -> f64 {
        (1.0 / self.q).ln() / self.t
    }

    pub fn k_max(&self) -> usize {
        self.per_k.last().map_or(self.k0, |p| p.k)
    }

    /// Cover bound for the union set at generation `k`: `2b(k−k0+1)²h^k`.
    pub fn union_cover_bound(&self, k: usize) -> f64 {
        let m = (k.saturating_sub(self.k0) + 1) as f64;
        2.0 * self.b * m * m * self.h.powi(k as i32)
    }

    /// Dimension ratio of [`Self::union_cover_bound`] at `k_max`, including
    /// the polynomial factor that vanishes in the limit.
    pub fn union_dim_at_kmax(&self) -> f64 {
        let k = self.k_max();
        let eps = self.a * self.q.powi(k as i32);
        if eps >= 1.0 {
            return f64::NAN;
        }
        self.union_cover_bound(k).ln() / (1.0 / eps).ln()
    }

    /// True when every recorded count is within its allowance.
    pub fn holds(&self) -> bool {
        self.per_k.iter().all(|p| (p.count as f64) <= p.allowed)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("certificate serializes");
        let o = v.as_object_mut().expect("object");
        o.insert("schema".into(), "covering-certificate/1".into());
        o.insert("dim_bound".into(), json_f64(self.dim_bound()));
        o.insert("xi_T".into(), json_f64(self.attraction_rate_bound()));
        o.insert("union_dim_at_kmax".into(), json_f64(self.union_dim_at_kmax()));
        v
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(v.clone())?)
    }
}

pub(crate) fn json_f64(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

pub fn dim_bound(q: f64, h: f64) -> f64 {
    h.ln() / (1.0 / q).ln()
}

/// First generation at which the covering condition fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringViolation {
    pub k: usize,
    pub eps: f64,
    pub count: usize,
    pub allowed: f64,
    pub per_k: Vec<PerK>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoveringOutcome {
    Certified(CoveringCertificate),
    Violated(CoveringViolation),
}

impl CoveringOutcome {
    pub fn certificate(self) -> Option<CoveringCertificate> {
        match self {
            CoveringOutcome::Certified(c) => Some(c),
            CoveringOutcome::Violated(_) => None,
        }
    }
}

/// Images `S(kT)B` for `k = 0..=k_max`, each obtained from the previous one.
pub fn orbit_images(sys: &SystemSpec, b: &FinitePointSet, t: f64, k_max: usize) -> Result<Vec<FinitePointSet>> {
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(b.clone());
    for k in 1..=k_max {
        let next = step(sys, &out[k - 1], t)?;
        out.push(next);
    }
    Ok(out)
}

fn counts_at(images: &[FinitePointSet], k0: usize, a: f64, q: f64) -> Result<Vec<usize>> {
    (k0..images.len())
        .into_par_iter()
        .map(|k| Ok(greedy_net(&images[k], a * q.powi(k as i32), None)?.count))
        .collect()
}

fn validate_constants(a: f64, q: f64, b: f64, h: f64, k0: usize, k_max: usize) -> Result<()> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidArgument("a and b must be positive".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("q must lie in (0, 1), got {q}")));
    }
    if !(h >= 1.0) {
        return Err(Error::InvalidArgument(format!("h must be at least 1, got {h}")));
    }
    if k0 == 0 || k0 > k_max {
        return Err(Error::InvalidArgument("need 1 ≤ k0 ≤ k_max".into()));
    }
    Ok(())
}

/// Checks `N(S(kT)B, a·q^k) ≤ b·h^k` for `k0 ≤ k ≤ k_max` using greedy cover counts.
#[allow(clippy::too_many_arguments)]
pub fn check_covering_condition(
    sys: &SystemSpec,
    b_set: &FinitePointSet,
    t: f64,
    a: f64,
    q: f64,
    b: f64,
    h: f64,
    k0: usize,
    k_max: usize,
) -> Result<CoveringOutcome> {
    validate_constants(a, q, b, h, k0, k_max)?;
    let images = orbit_images(sys, b_set, t, k_max)?;
    let counts = counts_at(&images, k0, a, q)?;
    let per_k: Vec<PerK> = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let k = k0 + i;
            PerK {
                k,
                eps: a * q.powi(k as i32),
                count,
                allowed: b * h.powi(k as i32),
            }
        })
        .collect();
    if let Some(bad) = per_k.iter().find(|p| p.count as f64 > p.allowed) {
        return Ok(CoveringOutcome::Violated(CoveringViolation {
            k: bad.k,
            eps: bad.eps,
            count: bad.count,
            allowed: bad.allowed,
            per_k: per_k.clone(),
        }));
    }
    Ok(CoveringOutcome::Certified(CoveringCertificate {
        k0,
        a,
        b,
        q,
        h,
        t,
        per_k,
        empirical: true,
    }))
}

/// How the ball-radius constant `a` is chosen when fitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum APolicy {
    /// `1.5 · max(diam B, 1)`.
    Default,
    Fixed(f64),
}

/// Smallest `h ≥ 1` with `h^k ≥ count`, as the `k`-th root nudged upward
/// until the power clears the count in floating point.
fn root_allowance(count: usize, k: usize) -> f64 {
    if count <= 1 {
        return 1.0;
    }
    let c = count as f64;
    let mut h = c.powf(1.0 / k as f64);
    while h.powi(k as i32) < c {
        h = h.next_up();
    }
    h
}

/// Fits `(q, h)` with `b = 1`: for each `q` in the grid `h(q)` is the largest
/// `count_k^{1/k}`, and the `q` with the smallest `ln h / ln(1/q)` wins
/// (smaller `q` on ties). A `q` is discarded when some count equals the
/// number of distinct image points, since the sample can no longer resolve
/// the cover at that radius.
pub fn fit_certificate(
    sys: &SystemSpec,
    b_set: &FinitePointSet,
    t: f64,
    k0: usize,
    k_max: usize,
    q_grid: &[f64],
    a_policy: APolicy,
) -> Result<CoveringCertificate> {
    if q_grid.is_empty() {
        return Err(Error::InvalidArgument("empty q grid".into()));
    }
    if b_set.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let a = match a_policy {
        APolicy::Default => 1.5 * b_set.diameter().max(1.0),
        APolicy::Fixed(a) => a,
    };
    for &q in q_grid {
        validate_constants(a, q, 1.0, 1.0, k0, k_max)?;
    }
    let images = orbit_images(sys, b_set, t, k_max)?;
    let distinct: Vec<usize> = images.iter().map(|s| s.dedup().len()).collect();
    let mut best: Option<(f64, CoveringCertificate)> = None;
    for &q in q_grid {
        let counts = counts_at(&images, k0, a, q)?;
        let saturated = counts
            .iter()
            .enumerate()
            .any(|(i, &c)| c > 1 && c >= distinct[k0 + i]);
        if saturated {
            continue;
        }
        let h = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| root_allowance(c, k0 + i))
            .fold(1.0, f64::max);
        let per_k = counts
            .iter()
            .enumerate()
            .map(|(i, &count)| {
                let k = k0 + i;
                PerK {
                    k,
                    eps: a * q.powi(k as i32),
                    count,
                    allowed: h.powi(k as i32),
                }
            })
            .collect();
        let cert = CoveringCertificate {
            k0,
            a,
            b: 1.0,
            q,
            h,
            t,
            per_k,
            empirical: true,
        };
        let d = cert.dim_bound();
        let better = match &best {
            None => true,
            Some((bd, bc)) => d < *bd || (d == *bd && q < bc.q),
        };
        if better {
            best = Some((d, cert));
        }
    }
    best.map(|(_, c)| c).ok_or(Error::NoCertificateInGrid)
}

/// Result of pushing a cover of `A` through one step of a quasi-stable map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    /// Cells of the input cover (points grouped by nearest center).
    pub cells: usize,
    /// Size of the maximal `σε`-distinguishable subset of each cell under `ρ`.
    pub per_cell_packing: Vec<usize>,
    /// Largest per-cell packing, the empirical `c_ρ(A, ε, σε)`.
    pub c_rho: usize,
    /// Total number of subcells, i.e. predicted cover count of the image.
    pub predicted_count: usize,
    /// `cells · c_rho`, the product form of the bound.
    pub product_bound: usize,
    /// Center of each subcell as an index into the image set.
    pub image_centers: Vec<usize>,
    /// Ball radius `3(η+σ)ε` of the realized image cover.
    pub image_radius: f64,
    /// Largest distance from an image point to its subcell center.
    pub realized_max_distance: f64,
}

/// One step of the cover-propagation argument.
///
/// `cover` is a ball cover of `a` at radius `ε`; its cells have diameter
/// below `2ε`. Within each cell a greedy `σε`-net under `ρ` splits the cell
/// into subcells whose images have diameter below `2(η+σ)ε`, so balls of
/// radius `3(η+σ)ε` around subcell images cover `S(A)`.
///
/// The inequality `d(Sx, Sy) ≤ η·d(x, y) + ρ(x, y)` is checked on every
/// pair inside each cell before anything is counted.
pub fn propagate_cover(
    a: &FinitePointSet,
    image: &FinitePointSet,
    cover: &NetResult,
    rho: &PseudometricSpec,
    eta: f64,
    sigma: f64,
) -> Result<PropagationResult> {
    if a.len() != image.len() {
        return Err(Error::InvalidArgument("image must have one point per input point".into()));
    }
    if a.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !(eta >= 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidArgument("need eta ≥ 0 and sigma > 0".into()));
    }
    let eps = cover.radius;
    let assign = cover.assignment(a);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); cover.centers.len()];
    for (i, &c) in assign.iter().enumerate() {
        cells[c].push(i);
    }
    cells.retain(|c| !c.is_empty());
    let feats = rho.image_set(a)?;

    for cell in &cells {
        for (u, &i) in cell.iter().enumerate() {
            for &j in &cell[u + 1..] {
                let lhs = image.dist(i, j);
                let rhs = eta * a.dist(i, j) + feats.dist(i, j);
                if lhs > rhs + 1e-12 * (lhs.abs() + rhs.abs()) {
                    return Err(Error::InequalityViolated { i, j, lhs, rhs });
                }
            }
        }
    }

    let mut per_cell_packing = Vec::with_capacity(cells.len());
    let mut image_centers = Vec::new();
    let mut realized = 0.0f64;
    for cell in &cells {
        let sub = feats.select(cell);
        let net = greedy_net(&sub, sigma * eps, None)?;
        per_cell_packing.push(net.count);
        let sub_assign = net.assignment(&sub);
        for (local, &c) in sub_assign.iter().enumerate() {
            let center = cell[net.centers[c]];
            realized = realized.max(image.dist(cell[local], center));
        }
        image_centers.extend(net.centers.iter().map(|&c| cell[c]));
    }
    let c_rho = per_cell_packing.iter().copied().max().unwrap_or(0);
    Ok(PropagationResult {
        cells: cells.len(),
        predicted_count: per_cell_packing.iter().sum(),
        product_bound: cells.len() * c_rho,
        per_cell_packing,
        c_rho,
        image_centers,
        image_radius: 3.0 * (eta + sigma) * eps,
        realized_max_distance: realized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricTag;

    fn halving() -> SystemSpec {
        SystemSpec::discrete("halving", 1, |x, y| y[0] = 0.5 * x[0])
    }

    fn grid() -> FinitePointSet {
        FinitePointSet::grid_1d(-1.0, 1.0, 100).unwrap()
    }

    #[test]
    fn halving_passes_with_unit_growth() {
        let out = check_covering_condition(&halving(), &grid(), 1.0, 3.0, 0.5, 1.0, 1.0, 1, 20).unwrap();
        let cert = out.certificate().expect("certified");
        assert!(cert.per_k.iter().all(|p| p.count == 1));
        assert_eq!(cert.dim_bound(), 0.0);
        assert!((cert.attraction_rate_bound() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unit_radius_constant_needs_two_balls() {
        // The image interval has diameter 2·2^-k, so an open ball of radius
        // 2^-k centered at a grid point never holds both endpoints.
        let out = check_covering_condition(&halving(), &grid(), 1.0, 1.0, 0.5, 1.0, 2.0, 1, 20).unwrap();
        let cert = out.certificate().expect("certified with h = 2");
        assert!(cert.per_k.iter().all(|p| p.count == 2));
        let small = FinitePointSet::grid_1d(-1.0, 1.0, 20).unwrap();
        for k in [1, 2, 5] {
            let img = step(&halving(), &small, k as f64).unwrap();
            let eps = 0.5f64.powi(k);
            assert_eq!(crate::metric::exact_cover_number(&img, eps).unwrap(), 2);
        }
    }

    #[test]
    fn halving_fails_for_fast_radius_decay() {
        let out = check_covering_condition(&halving(), &grid(), 1.0, 1.0, 0.25, 1.0, 1.0, 1, 20).unwrap();
        match out {
            CoveringOutcome::Violated(v) => {
                assert!(v.count > 1);
                assert!(v.k <= 2);
            }
            CoveringOutcome::Certified(_) => panic!("expected a violation"),
        }
    }

    #[test]
    fn identity_violates_contraction() {
        let id = SystemSpec::discrete("id", 1, |x, y| y[0] = x[0]);
        let b = FinitePointSet::grid_1d(0.0, 1.0, 50).unwrap();
        let out = check_covering_condition(&id, &b, 1.0, 1.0, 0.5, 1.0, 1.0, 1, 10).unwrap();
        assert!(matches!(out, CoveringOutcome::Violated(ref v) if v.k == 1));
    }

    #[test]
    fn fitted_halving_certificate() {
        let qs: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let cert = fit_certificate(&halving(), &grid(), 1.0, 1, 20, &qs, APolicy::Default).unwrap();
        assert_eq!(cert.q, 0.5);
        assert_eq!(cert.h, 1.0);
        assert_eq!(cert.dim_bound(), 0.0);
        assert_eq!(cert.a, 3.0);
        assert!(cert.holds());
    }

    #[test]
    fn identity_has_no_certificate_at_small_q() {
        let id = SystemSpec::discrete("id", 1, |x, y| y[0] = x[0]);
        let b = FinitePointSet::grid_1d(0.0, 1.0, 20).unwrap();
        let err = fit_certificate(&id, &b, 1.0, 1, 12, &[0.3], APolicy::Default).unwrap_err();
        assert_eq!(err.to_string(), "no certificate in grid");
    }

    #[test]
    fn root_allowance_clears_count() {
        for c in 1..200usize {
            for k in 1..40usize {
                let h = root_allowance(c, k);
                assert!(h.powi(k as i32) >= c as f64);
            }
        }
    }

    #[test]
    fn json_carries_schema_and_bounds() {
        let out = check_covering_condition(&halving(), &grid(), 1.0, 3.0, 0.5, 1.0, 1.0, 1, 3).unwrap();
        let v = out.certificate().unwrap().to_json();
        assert_eq!(v["schema"], "covering-certificate/1");
        assert_eq!(v["dim_bound"], 0.0);
        assert_eq!(v["empirical"], true);
        assert_eq!(v["per_k"].as_array().unwrap().len(), 3);
        let back = CoveringCertificate::from_json(&v).unwrap();
        assert_eq!(back.q, 0.5);
    }

    #[test]
    fn trivial_seminorm_gives_one_subcell() {
        let a = FinitePointSet::grid_1d(0.0, 0.2, 11).unwrap();
        let image = step(&halving(), &a, 1.0).unwrap();
        let cover = greedy_net(&a, 0.5, None).unwrap();
        let res = propagate_cover(&a, &image, &cover, &PseudometricSpec::zero(1), 0.5, 0.1).unwrap();
        assert_eq!(res.cells, 1);
        assert_eq!(res.predicted_count, 1);
    }

    #[test]
    fn identity_seminorm_splits_cell_into_three() {
        let eps = 0.5;
        let a = FinitePointSet::grid_1d(0.0, 2.0 * eps - 1e-9, 201).unwrap();
        let image = step(&halving(), &a, 1.0).unwrap();
        let cover = NetResult {
            centers: vec![100],
            radius: eps,
            kind: crate::metric::NetKind::Covering,
            count: 1,
        };
        let rho = PseudometricSpec::first_coordinates(1);
        let res = propagate_cover(&a, &image, &cover, &rho, 0.0, 1.0).unwrap();
        assert!(res.c_rho <= 3, "c_rho {}", res.c_rho);
        assert!(res.realized_max_distance < res.image_radius);
    }

    #[test]
    fn propagation_rejects_expanding_pairs() {
        let a = FinitePointSet::from_scalars(&[0.0, 0.1]).unwrap();
        let image = FinitePointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let cover = greedy_net(&a, 1.0, None).unwrap();
        let err = propagate_cover(&a, &image, &cover, &PseudometricSpec::zero(1), 0.5, 0.1).unwrap_err();
        assert!(matches!(err, Error::InequalityViolated { .. }));
        let _ = MetricTag::Euclidean;
    }
}
