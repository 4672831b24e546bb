//! Finite-stage construction of a discrete exponential attractor.
//!
//! Generation `k` keeps the net centers `W_k` of `S(kT)B` at radius `a·q^k`
//! and the set `Q_k = W_k ∪ S(T)Q_{k−1}`. The union of all `Q_k` is `E0`.
//! Images are stored rather than recomputed, so the recursion holds as an
//! exact statement about bit patterns.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covering::{json_f64, orbit_images, CoveringCertificate};
use crate::error::{Error, Result};
use crate::io;
use crate::metric::{greedy_net, hausdorff_distance_onesided, least_squares, FinitePointSet, MetricTag};
use crate::semigroup::{advance_all, step, step_time, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Origin {
    /// Net center of `S(kT)B`, by index into that image.
    NetCenter { image_index: usize },
    /// `S(T)` image of point `q_index` of the previous generation.
    ImageOf { q_index: usize },
    /// `S(shift·T/N)` image of point `of` of the unrefined set.
    Shifted { shift: usize, of: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub k: usize,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub k: usize,
    pub w: FinitePointSet,
    pub q: FinitePointSet,
    pub q_origin: Vec<Origin>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttractorApproximation {
    pub t: f64,
    pub k0: usize,
    pub k_max: usize,
    /// `N` when the sets were refined to step `T/N`; 1 otherwise.
    pub refinement: usize,
    pub generations: Vec<Generation>,
    pub e0: FinitePointSet,
    pub provenance: Vec<Provenance>,
    pub cert: CoveringCertificate,
}

/// Order-preserving union that records the origin of each kept point.
struct Accumulator {
    seen: HashMap<Vec<u64>, usize>,
    coords: Vec<f64>,
    origins: Vec<Origin>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            seen: HashMap::new(),
            coords: Vec::new(),
            origins: Vec::new(),
        }
    }

    fn add(&mut self, p: &[f64], origin: Origin) {
        let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
        if !self.seen.contains_key(&key) {
            self.seen.insert(key, self.origins.len());
            self.coords.extend_from_slice(p);
            self.origins.push(origin);
        }
    }
}

impl AttractorApproximation {
    pub fn generation(&self, k: usize) -> Option<&Generation> {
        k.checked_sub(self.k0).and_then(|i| self.generations.get(i))
    }

    /// Allowed size of `Q_k`: `N·b·Σ_{l=0}^{k−k0} h^{k−l}`.
    pub fn cardinality_allowance(&self, k: usize) -> f64 {
        let s: f64 = (0..=k - self.k0)
            .map(|l| self.cert.h.powi((k - l) as i32))
            .sum();
        self.refinement as f64 * self.cert.b * s
    }

    /// Re-derives every structural invariant from stored data.
    pub fn verify_invariants(&self, sys: &SystemSpec, b: &FinitePointSet) -> Result<InvariantReport> {
        let images = orbit_images(sys, b, self.t, self.k_max)?;
        let mut per_k = Vec::with_capacity(self.generations.len());
        for (i, g) in self.generations.iter().enumerate() {
            let recursion_exact = if i == 0 {
                g.q.same_points(&g.w)
            } else {
                let prev = step(sys, &self.generations[i - 1].q, self.t)?;
                let rebuilt = FinitePointSet::union_dedup(g.q.dim(), g.q.metric().clone(), [&g.w, &prev])?;
                g.q.same_points(&rebuilt)
            };
            let allowance = self.cardinality_allowance(g.k);
            let radius = self.cert.a * self.cert.q.powi(g.k as i32);
            let distance = hausdorff_distance_onesided(&images[g.k], &self.e0)?;
            per_k.push(GenerationCheck {
                k: g.k,
                q_size: g.q.len(),
                w_size: g.w.len(),
                allowance,
                radius,
                distance,
                recursion_exact,
                w_in_e0: g.w.is_subset_of(&self.e0),
            });
        }
        Ok(InvariantReport { per_k })
    }

    /// Writes `meta.json`, `E0.csv`, `W<k>.csv`, `Q<k>.csv` and `provenance.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = serde_json::json!({
            "schema": "attractor/1",
            "T": self.t,
            "k0": self.k0,
            "k_max": self.k_max,
            "refinement": self.refinement,
            "dim": self.e0.dim(),
            "metric": self.e0.metric(),
            "e0_count": self.e0.len(),
            "generations": self.generations.iter().map(|g| serde_json::json!({
                "k": g.k,
                "w_count": g.w.len(),
                "q_count": g.q.len(),
                "allowance": json_f64(self.cardinality_allowance(g.k)),
            })).collect::<Vec<_>>(),
            "certificate": self.cert.to_json(),
        });
        fs::write(dir.join("meta.json"), crate::to_pretty_json(&meta)?)?;
        io::save_csv(&self.e0, &dir.join("E0.csv"))?;
        for g in &self.generations {
            io::save_csv(&g.w, &dir.join(format!("W{}.csv", g.k)))?;
            io::save_csv(&g.q, &dir.join(format!("Q{}.csv", g.k)))?;
            let mut wr = csv::Writer::from_path(dir.join(format!("Q{}_origin.csv", g.k)))?;
            wr.write_record(["index", "origin", "ref", "shift"])?;
            for (i, o) in g.q_origin.iter().enumerate() {
                let (kind, r, s) = origin_fields(o);
                wr.write_record([i.to_string(), kind.into(), r.to_string(), s.to_string()])?;
            }
            wr.flush()?;
        }
        let mut wr = csv::Writer::from_path(dir.join("provenance.csv"))?;
        wr.write_record(["index", "k", "origin", "ref", "shift"])?;
        for (i, p) in self.provenance.iter().enumerate() {
            let (kind, r, s) = origin_fields(&p.origin);
            wr.write_record([i.to_string(), p.k.to_string(), kind.into(), r.to_string(), s.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a directory written by [`Self::write_dir`].
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let get_usize = |key: &str| {
            meta[key]
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| Error::Format(format!("meta.json lacks {key}")))
        };
        let k0 = get_usize("k0")?;
        let k_max = get_usize("k_max")?;
        let refinement = get_usize("refinement")?;
        let t = meta["T"]
            .as_f64()
            .ok_or_else(|| Error::Format("meta.json lacks T".into()))?;
        let metric: MetricTag = serde_json::from_value(meta["metric"].clone())?;
        let cert = CoveringCertificate::from_json(&meta["certificate"])?;
        let e0 = io::load_csv(&dir.join("E0.csv"), metric.clone())?;
        let mut generations = Vec::new();
        for k in k0..=k_max {
            let w = io::load_csv(&dir.join(format!("W{k}.csv")), metric.clone())?;
            let q = io::load_csv(&dir.join(format!("Q{k}.csv")), metric.clone())?;
            let mut rd = csv::Reader::from_path(dir.join(format!("Q{k}_origin.csv")))?;
            let mut q_origin = Vec::new();
            for rec in rd.records() {
                let rec = rec?;
                q_origin.push(parse_origin(&rec[1], &rec[2], &rec[3])?);
            }
            generations.push(Generation { k, w, q, q_origin });
        }
        let mut rd = csv::Reader::from_path(dir.join("provenance.csv"))?;
        let mut provenance = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let k = rec[1]
                .parse()
                .map_err(|e| Error::Format(format!("provenance k: {e}")))?;
            provenance.push(Provenance {
                k,
                origin: parse_origin(&rec[2], &rec[3], &rec[4])?,
            });
        }
        Ok(Self {
            t,
            k0,
            k_max,
            refinement,
            generations,
            e0,
            provenance,
            cert,
        })
    }
}

fn origin_fields(o: &Origin) -> (&'static str, usize, usize) {
    match *o {
        Origin::NetCenter { image_index } => ("net-center", image_index, 0),
        Origin::ImageOf { q_index } => ("image-of", q_index, 0),
        Origin::Shifted { shift, of } => ("shifted", of, shift),
    }
}

fn parse_origin(kind: &str, r: &str, s: &str) -> Result<Origin> {
    let num = |v: &str| {
        v.parse::<usize>()
            .map_err(|e| Error::Format(format!("provenance field: {e}")))
    };
    Ok(match kind {
        "net-center" => Origin::NetCenter { image_index: num(r)? },
        "image-of" => Origin::ImageOf { q_index: num(r)? },
        "shifted" => Origin::Shifted {
            shift: num(s)?,
            of: num(r)?,
        },
        other => return Err(Error::Format(format!("unknown origin {other}"))),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationCheck {
    pub k: usize,
    pub q_size: usize,
    pub w_size: usize,
    pub allowance: f64,
    pub radius: f64,
    /// One-sided distance from `S(kT)B` to `E0`.
    pub distance: f64,
    pub recursion_exact: bool,
    pub w_in_e0: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub per_k: Vec<GenerationCheck>,
}

impl InvariantReport {
    pub fn recursion_holds(&self) -> bool {
        self.per_k.iter().all(|c| c.recursion_exact && c.w_in_e0)
    }

    pub fn cardinality_holds(&self) -> bool {
        self.per_k.iter().all(|c| c.q_size as f64 <= c.allowance)
    }

    pub fn coverage_holds(&self) -> bool {
        self.per_k.iter().all(|c| c.distance <= c.radius)
    }

    pub fn all_hold(&self) -> bool {
        self.recursion_holds() && self.cardinality_holds() && self.coverage_holds()
    }
}

/// Runs the recursion from `k0` to `k_max` with the certificate's constants.
pub fn build_e0(
    sys: &SystemSpec,
    b: &FinitePointSet,
    cert: &CoveringCertificate,
    k_max: usize,
) -> Result<AttractorApproximation> {
    if k_max < cert.k0 {
        return Err(Error::CertificateMismatch(format!(
            "k_max {k_max} is below k0 {}",
            cert.k0
        )));
    }
    if b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let t = cert.t;
    let images = orbit_images(sys, b, t, k_max)?;
    let mut generations: Vec<Generation> = Vec::with_capacity(k_max - cert.k0 + 1);
    for k in cert.k0..=k_max {
        let eps = cert.a * cert.q.powi(k as i32);
        let net = greedy_net(&images[k], eps, None)?;
        let allowed = cert.b * cert.h.powi(k as i32);
        if net.count as f64 > allowed {
            return Err(Error::CertificateMismatch(format!(
                "generation {k} needs {} centers, certificate allows {allowed}",
                net.count
            )));
        }
        let w = images[k].select(&net.centers);
        let mut acc = Accumulator::new();
        for (p, &c) in w.points().zip(&net.centers) {
            acc.add(p, Origin::NetCenter { image_index: c });
        }
        if let Some(prev) = generations.last() {
            let moved = step(sys, &prev.q, t)?;
            for (j, p) in moved.points().enumerate() {
                acc.add(p, Origin::ImageOf { q_index: j });
            }
        }
        let q = w.like(acc.coords);
        generations.push(Generation {
            k,
            w,
            q,
            q_origin: acc.origins,
        });
    }
    let (e0, provenance) = union_with_provenance(&generations, b.dim(), b.metric().clone());
    Ok(AttractorApproximation {
        t,
        k0: cert.k0,
        k_max,
        refinement: 1,
        generations,
        e0,
        provenance,
        cert: cert.clone(),
    })
}

fn union_with_provenance(gens: &[Generation], dim: usize, metric: MetricTag) -> (FinitePointSet, Vec<Provenance>) {
    let mut acc = Accumulator::new();
    let mut ks = Vec::new();
    for g in gens {
        for (p, o) in g.q.points().zip(&g.q_origin) {
            let before = acc.origins.len();
            acc.add(p, o.clone());
            if acc.origins.len() > before {
                ks.push(g.k);
            }
        }
    }
    let prov = ks
        .into_iter()
        .zip(acc.origins)
        .map(|(k, origin)| Provenance { k, origin })
        .collect();
    let e0 = FinitePointSet::from_flat(dim, acc.coords, metric).expect("consistent dimension");
    (e0, prov)
}

/// Union of `S(lT/N)` images, `l = 0..N`, of every stored set.
pub fn refine_to_tn(sys: &SystemSpec, approx: &AttractorApproximation, n: usize) -> Result<AttractorApproximation> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if n == 1 {
        return Ok(approx.clone());
    }
    if !sys.is_flow() {
        return Err(Error::TimeStepNotDivisible);
    }
    let steps = sys.unit_steps(approx.t)?;
    if steps % n != 0 {
        return Err(Error::TimeStepNotDivisible);
    }
    let per = steps / n;
    let shifts = |set: &FinitePointSet| -> Result<Vec<FinitePointSet>> {
        (0..n).map(|l| advance_all(sys, set, l * per)).collect()
    };
    let mut generations = Vec::with_capacity(approx.generations.len());
    for g in &approx.generations {
        let ws = shifts(&g.w)?;
        let w = FinitePointSet::union_dedup(g.w.dim(), g.w.metric().clone(), ws.iter())?;
        let qs = shifts(&g.q)?;
        let mut acc = Accumulator::new();
        for (l, s) in qs.iter().enumerate() {
            for (j, p) in s.points().enumerate() {
                acc.add(p, Origin::Shifted { shift: l, of: j });
            }
        }
        generations.push(Generation {
            k: g.k,
            w,
            q: g.q.like(acc.coords),
            q_origin: acc.origins,
        });
    }
    let mut acc = Accumulator::new();
    let mut ks = Vec::new();
    for (l, s) in shifts(&approx.e0)?.iter().enumerate() {
        for (j, p) in s.points().enumerate() {
            let before = acc.origins.len();
            acc.add(p, Origin::Shifted { shift: l, of: j });
            if acc.origins.len() > before {
                ks.push(approx.provenance[j].k);
            }
        }
    }
    let provenance = ks
        .into_iter()
        .zip(acc.origins)
        .map(|(k, origin)| Provenance { k, origin })
        .collect();
    Ok(AttractorApproximation {
        t: approx.t,
        k0: approx.k0,
        k_max: approx.k_max,
        refinement: approx.refinement * n,
        generations,
        e0: approx.e0.like(acc.coords),
        provenance,
        cert: approx.cert.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub defect: f64,
    pub pass: bool,
}

/// Defect of `S(T)M ⊆ M` as the one-sided Hausdorff distance.
pub fn verify_positive_invariance(sys: &SystemSpec, m: &FinitePointSet, t: f64, tol: f64) -> Result<InvarianceReport> {
    let img = step(sys, m, t)?;
    let defect = hausdorff_distance_onesided(&img, m)?;
    Ok(InvarianceReport {
        defect,
        pass: defect <= tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionReport {
    pub dists: Vec<(usize, f64)>,
    /// Fitted exponential rate; `+∞` when the tail distances vanish.
    pub xi_hat: f64,
    pub fit_from: usize,
}

impl AttractionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": "attraction/1",
            "dists": self.dists.iter().map(|(k, d)| serde_json::json!({"k": k, "dist": d})).collect::<Vec<_>>(),
            "xi_hat": json_f64(self.xi_hat),
            "xi_hat_infinite": self.xi_hat.is_infinite(),
            "fit_from": self.fit_from,
        })
    }
}

/// `dist(S(kT)G, M)` for `k = 0..=k_max` and the decay rate fitted by least
/// squares of `ln dist` against `kT` over the second half of the range.
pub fn measure_attraction(
    sys: &SystemSpec,
    g: &FinitePointSet,
    m: &FinitePointSet,
    t: f64,
    k_max: usize,
) -> Result<AttractionReport> {
    if g.is_empty() || m.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let images = orbit_images(sys, g, t, k_max)?;
    let dists: Vec<(usize, f64)> = images
        .iter()
        .enumerate()
        .map(|(k, s)| Ok((k, hausdorff_distance_onesided(s, m)?)))
        .collect::<Result<_>>()?;
    let fit_from = k_max / 2;
    let tail: Vec<(f64, f64)> = dists[fit_from..]
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(k, d)| (k as f64 * t, d.ln()))
        .collect();
    let xi_hat = if tail.len() < 2 {
        f64::INFINITY
    } else {
        let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
        match least_squares(&xs, &ys) {
            Some((slope, _, _)) => -slope,
            None => 0.0,
        }
    };
    Ok(AttractionReport {
        dists,
        xi_hat,
        fit_from,
    })
}

/// `∪_{p} S(p)E0` over grid times `p ∈ [N·T, (N+1)·T]`.
pub fn build_time_interpolated_e(
    sys: &SystemSpec,
    e0: &FinitePointSet,
    t: f64,
    n: usize,
    p_grid: &[f64],
) -> Result<FinitePointSet> {
    if p_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    let lo = n as f64 * t;
    let hi = (n + 1) as f64 * t;
    let slack = 1e-12 * hi.abs().max(1.0);
    if let Some(p) = p_grid.iter().find(|p| !(**p >= lo - slack && **p <= hi + slack)) {
        return Err(Error::InvalidArgument(format!(
            "grid time {p} lies outside [{lo}, {hi}]"
        )));
    }
    let parts: Vec<FinitePointSet> = p_grid
        .iter()
        .map(|&p| step_time(sys, e0, p.clamp(lo, hi)))
        .collect::<Result<_>>()?;
    FinitePointSet::union_dedup(e0.dim(), e0.metric().clone(), parts.iter())
}

/// `M(t) = S(t)E0` on a grid of phases in `[0, T)`, extended `T`-periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct NonautonomousFamily {
    pub period: f64,
    pub times: Vec<f64>,
    pub sets: Vec<FinitePointSet>,
}

impl NonautonomousFamily {
    /// Grid index of the phase `t mod T`, if it is on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let mut r = t - (t / self.period).floor() * self.period;
        let tol = 1e-9 * self.period;
        if (self.period - r).abs() <= tol {
            r = 0.0;
        }
        self.times.iter().position(|&s| (s - r).abs() <= tol)
    }

    pub fn at(&self, t: f64) -> Option<&FinitePointSet> {
        self.index_of(t).map(|i| &self.sets[i])
    }

    /// Defect of `S(t)M(s) ⊆ M(s + t)`; `None` if `s + t` is off the grid.
    pub fn invariance_defect(&self, sys: &SystemSpec, s: f64, t: f64) -> Result<Option<f64>> {
        let (Some(src), Some(dst)) = (self.at(s), self.at(s + t)) else {
            return Ok(None);
        };
        let moved = step_time(sys, src, t)?;
        Ok(Some(hausdorff_distance_onesided(&moved, dst)?))
    }
}

pub fn nonautonomous_family(
    sys: &SystemSpec,
    e0: &FinitePointSet,
    t: f64,
    t_grid: &[f64],
) -> Result<NonautonomousFamily> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty phase grid".into()));
    }
    if !sys.is_flow() && t_grid.iter().any(|&s| s != 0.0) {
        return Err(Error::InvalidArgument(
            "discrete systems only admit the phase 0".into(),
        ));
    }
    if let Some(s) = t_grid.iter().find(|s| !(**s >= 0.0 && **s < t)) {
        return Err(Error::InvalidArgument(format!("phase {s} lies outside [0, {t})")));
    }
    let sets = t_grid
        .iter()
        .map(|&s| step_time(sys, e0, s))
        .collect::<Result<_>>()?;
    Ok(NonautonomousFamily {
        period: t,
        times: t_grid.to_vec(),
        sets,
    })
}
