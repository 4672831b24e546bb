//! Packing and covering counts of unit balls in finite-dimensional norm pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::ScalarField;

/// Norms on `𝕂^n`, evaluated on the moduli of the components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormTag {
    L1,
    L2,
    LInf,
    WeightedL2(Vec<f64>),
}

impl NormTag {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let NormTag::WeightedL2(w) = self {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParameter("weights must be positive".into()));
            }
        }
        Ok(())
    }

    /// `v` holds `n` reals, or `n` interleaved (re, im) pairs for complex fields.
    pub fn norm(&self, v: &[f64], field: ScalarField) -> f64 {
        let moduli: Vec<f64> = match field {
            ScalarField::Real => v.iter().map(|x| x.abs()).collect(),
            ScalarField::Complex => v.chunks_exact(2).map(|z| z[0].hypot(z[1])).collect(),
        };
        match self {
            NormTag::L1 => moduli.iter().sum(),
            NormTag::L2 => moduli.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormTag::LInf => moduli.iter().fold(0.0, |m, x| m.max(*x)),
            NormTag::WeightedL2(w) => moduli
                .iter()
                .zip(w)
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NormTag::L1 => "l1".into(),
            NormTag::L2 => "l2".into(),
            NormTag::LInf => "linf".into(),
            NormTag::WeightedL2(w) => format!(
                "weighted-l2[{}]",
                w.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
            ),
        }
    }

    /// `(to_l2, from_l2)` with `‖x‖_2 ≤ to_l2·‖x‖` and `‖x‖ ≤ from_l2·‖x‖_2`.
    fn l2_constants(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        match self {
            NormTag::L1 => (1.0, nf.sqrt()),
            NormTag::L2 => (1.0, 1.0),
            NormTag::LInf => (nf.sqrt(), 1.0),
            NormTag::WeightedL2(w) => {
                let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = w.iter().cloned().fold(0.0, f64::max);
                (1.0 / lo.sqrt(), hi.sqrt())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub n: usize,
    pub norm_x: NormTag,
    pub norm_y: NormTag,
    pub field: ScalarField,
}

impl NormPair {
    pub fn new(n: usize, norm_x: NormTag, norm_y: NormTag, field: ScalarField) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        norm_x.validate(n)?;
        norm_y.validate(n)?;
        Ok(Self {
            n,
            norm_x,
            norm_y,
            field,
        })
    }

    pub fn euclidean(n: usize) -> Self {
        Self {
            n,
            norm_x: NormTag::L2,
            norm_y: NormTag::L2,
            field: ScalarField::Real,
        }
    }

    pub fn real_dim(&self) -> usize {
        self.field.real_dim(self.n)
    }

    /// Upper bound on `sup{‖x‖_Y : ‖x‖_X ≤ 1}`; exact for every pair of
    /// ℓp norms and for weighted pairs against ℓ2.
    pub fn containment_radius(&self) -> f64 {
        use NormTag::*;
        let n = self.n as f64;
        let lp = |t: &NormTag| match t {
            L1 => Some(1.0f64),
            L2 => Some(0.5),
            LInf => Some(0.0),
            WeightedL2(_) => None,
        };
        match (&self.norm_x, &self.norm_y) {
            (WeightedL2(w), WeightedL2(v)) => w
                .iter()
                .zip(v)
                .map(|(w, v)| (v / w).sqrt())
                .fold(0.0, f64::max),
            (x, y) => match (lp(x), lp(y)) {
                // ‖x‖_q ≤ n^{max(0, 1/q − 1/p)} ‖x‖_p
                (Some(ip), Some(iq)) => n.powf(f64::max(iq - ip, 0.0)),
                _ => self.norm_x.l2_constants(self.n).0 * self.norm_y.l2_constants(self.n).1,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub count: usize,
    pub points: Vec<Vec<f64>>,
    pub eps: f64,
    pub budget: usize,
    pub seed: u64,
}

pub const DEFAULT_PACKING_BUDGET: usize = 100_000;
const RESTARTS: usize = 8;
const TOL: f64 = 1e-12;

/// Lower bound on the largest `ε`-separated subset (in `‖·‖_Y`) of the closed
/// `X`-unit ball, found by lattice seeding and random insertion.
pub fn unit_ball_packing(pair: &NormPair, eps: f64, budget: usize, seed: u64) -> Result<PackingResult> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    pair.norm_x.validate(pair.n)?;
    pair.norm_y.validate(pair.n)?;
    let per = budget / RESTARTS;
    let runs: Vec<Vec<Vec<f64>>> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let mut pts: Vec<Vec<f64>> = Vec::new();
            if r == 0 {
                for c in lattice_candidates(pair, eps) {
                    try_insert(pair, eps, &mut pts, c);
                }
            }
            for i in 0..per {
                let c = random_in_ball(pair, &mut rng, i % 2 == 1);
                try_insert(pair, eps, &mut pts, c);
            }
            pts
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.len() > runs[best].len() {
            best = i;
        }
    }
    let points = runs.into_iter().nth(best).unwrap_or_default();
    Ok(PackingResult {
        count: points.len(),
        points,
        eps,
        budget,
        seed,
    })
}

fn in_x_ball(pair: &NormPair, p: &[f64]) -> bool {
    pair.norm_x.norm(p, pair.field) <= 1.0 + TOL
}

fn y_dist(pair: &NormPair, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    pair.norm_y.norm(&d, pair.field)
}

fn try_insert(pair: &NormPair, eps: f64, pts: &mut Vec<Vec<f64>>, c: Vec<f64>) {
    if !in_x_ball(pair, &c) {
        return;
    }
    let floor = eps - TOL * eps.max(1.0);
    if pts.iter().all(|p| y_dist(pair, p, &c) >= floor) {
        pts.push(c);
    }
}

/// Origin-centred lattice with spacing `ε`: hexagonal in real dimension 2
/// under ℓ2, cubic otherwise. Ordered by distance from the origin.
fn lattice_candidates(pair: &NormPair, eps: f64) -> Vec<Vec<f64>> {
    let d = pair.real_dim();
    let reach = pair.norm_x.l2_constants(pair.n).0;
    let m = (reach / eps).ceil() as i64 + 1;
    let mut out = Vec::new();
    let hex = d == 2 && pair.norm_y == NormTag::L2;
    if hex {
        let h = eps * 3f64.sqrt() / 2.0;
        for j in -2 * m..=2 * m {
            for i in -2 * m..=2 * m {
                let x = eps * (i as f64 + 0.5 * j as f64);
                let y = h * j as f64;
                out.push(vec![x, y]);
            }
        }
    } else if d <= 6 && (2 * m + 1).pow(d as u32) <= 2_000_000 {
        let side = (2 * m + 1) as usize;
        for idx in 0..side.pow(d as u32) {
            let mut r = idx;
            let mut p = Vec::with_capacity(d);
            for _ in 0..d {
                p.push(eps * ((r % side) as i64 - m) as f64);
                r /= side;
            }
            out.push(p);
        }
    }
    out.retain(|p| in_x_ball(pair, p));
    out.sort_by(|a, b| {
        let na: f64 = a.iter().map(|x| x * x).sum();
        let nb: f64 = b.iter().map(|x| x * x).sum();
        na.total_cmp(&nb)
    });
    out
}

fn random_in_ball(pair: &NormPair, rng: &mut ChaCha8Rng, boundary: bool) -> Vec<f64> {
    let d = pair.real_dim();
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let nx = pair.norm_x.norm(&g, pair.field);
        if nx == 0.0 {
            continue;
        }
        let s = if boundary {
            1.0
        } else {
            rng.gen::<f64>().powf(1.0 / d as f64)
        };
        return g.iter().map(|x| x * s / nx).collect();
    }
}

/// `(1 + 2r/ε)^n_real`.
pub fn volume_upper_bound(r: f64, eps: f64, n_real: usize) -> Result<f64> {
    if !(r > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument("r and ε must be positive".into()));
    }
    Ok((1.0 + 2.0 * r / eps).powi(n_real as i32))
}

/// Banach–Mazur distance `n^{|1/p − 1/2|}` from `ℓⁿ_p` to `ℓⁿ_2`, `p ∈ [1, ∞]`.
pub fn banach_mazur_lp(n: usize, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("unsupported p = {p}")));
    }
    Ok((n as f64).powf((1.0 / p - 0.5).abs()))
}

pub fn john_bound(n: usize) -> f64 {
    (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCountBound {
    pub d_bm_form: f64,
    pub sqrt_n_form: f64,
}

/// Balls of radius `ε` covering an `r`-ball of an `n`-dimensional normed space.
pub fn finite_cover_count_bound(n: usize, r: f64, eps: f64, d_bm: f64, field: ScalarField) -> Result<CoverCountBound> {
    if !(eps > 0.0) || !(d_bm > 0.0) {
        return Err(Error::InvalidArgument("ε and d_BM must be positive".into()));
    }
    if eps >= r {
        return Err(Error::InvalidArgument(format!("need ε < r, got ε = {eps}, r = {r}")));
    }
    let e = field.real_dim(n) as i32;
    Ok(CoverCountBound {
        d_bm_form: (1.0 + 2.0 * d_bm * r / eps).powi(e),
        sqrt_n_form: (1.0 + 2.0 * john_bound(n) * r / eps).powi(e),
    })
}

/// `log₂ count`.
pub fn epsilon_capacity(count: usize) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    Ok((count as f64).log2())
}

/// How the packing number `m_Z(ε)` of a unit ball is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MzEvaluator {
    PackingLowerBound { pair: NormPair, budget: usize, seed: u64 },
    VolumeUpperBound { pair: NormPair },
}

impl MzEvaluator {
    pub fn eval(&self, eps: f64) -> Result<f64> {
        match self {
            MzEvaluator::PackingLowerBound { pair, budget, seed } => {
                Ok(unit_ball_packing(pair, eps, *budget, *seed)?.count as f64)
            }
            MzEvaluator::VolumeUpperBound { pair } => {
                volume_upper_bound(pair.containment_radius(), eps, pair.real_dim())
            }
        }
    }
}

/// `ε`-net of the closed Euclidean unit ball of `ℝ^m`: grid points radially
/// projected onto the ball. Every ball point lies within `ε` of the net.
pub fn unit_ball_net(m: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    if m == 0 {
        return Ok(vec![Vec::new()]);
    }
    let s = 1.9 * eps / (m as f64).sqrt();
    let k = (1.0 / s).ceil() as i64 + 1;
    let side = (2 * k + 1) as usize;
    let total = side
        .checked_pow(m as u32)
        .filter(|t| *t <= 4_000_000)
        .ok_or_else(|| Error::OracleSizeExceeded {
            size: side.saturating_pow(m as u32),
            limit: 4_000_000,
        })?;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for idx in 0..total {
        let mut r = idx;
        let mut p = Vec::with_capacity(m);
        for _ in 0..m {
            p.push(s * ((r % side) as i64 - k) as f64);
            r /= side;
        }
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 + eps {
            continue;
        }
        if norm > 1.0 {
            p.iter_mut().for_each(|x| *x /= norm);
        }
        if seen.insert(p.iter().map(|x| x.to_bits()).collect::<Vec<_>>()) {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub n: usize,
    pub norm_x: String,
    pub norm_y: String,
    pub eps: f64,
    pub packing_lb: usize,
    pub volume_ub: f64,
    pub capacity_bits: f64,
}

pub fn capacity_row(pair: &NormPair, eps: f64, budget: usize, seed: u64) -> Result<CapacityRow> {
    let pack = unit_ball_packing(pair, eps, budget, seed)?;
    Ok(CapacityRow {
        n: pair.n,
        norm_x: pair.norm_x.label(),
        norm_y: pair.norm_y.label(),
        eps,
        packing_lb: pack.count,
        volume_ub: volume_upper_bound(pair.containment_radius(), eps, pair.real_dim())?,
        capacity_bits: epsilon_capacity(pack.count)?,
    })
}

pub fn write_capacity_csv<W: std::io::Write>(rows: &[CapacityRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "norm_X", "norm_Y", "eps", "packing_lb", "volume_ub", "capacity_bits"])?;
    for r in rows {
        wr.write_record([
            r.n.to_string(),
            r.norm_x.clone(),
            r.norm_y.clone(),
            format!("{:?}", r.eps),
            r.packing_lb.to_string(),
            format!("{:?}", r.volume_ub),
            format!("{:?}", r.capacity_bits),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn segment_packing() {
        let r = unit_ball_packing(&NormPair::euclidean(1), 1.0, 1000, 7).unwrap();
        assert_eq!(r.count, 3);
    }

    #[test]
    fn disc_packing_reaches_seven() {
        let r = unit_ball_packing(&NormPair::euclidean(2), 1.0, DEFAULT_PACKING_BUDGET, 1).unwrap();
        assert_eq!(r.count, 7);
        assert!(r.count as f64 <= volume_upper_bound(1.0, 1.0, 2).unwrap());
    }

    #[test]
    fn wide_separation_leaves_one_point() {
        let pair = NormPair::new(3, NormTag::LInf, NormTag::L1, ScalarField::Real).unwrap();
        let c = pair.containment_radius();
        assert_relative_eq!(c, 3.0);
        let r = unit_ball_packing(&pair, 2.0 * c + 0.1, 4000, 3).unwrap();
        assert_eq!(r.count, 1);
    }

    #[test]
    fn volume_bound_values() {
        assert_eq!(volume_upper_bound(1.0, 0.5, 2).unwrap(), 25.0);
        assert_relative_eq!(volume_upper_bound(1.0, 100.0, 2).unwrap(), 1.0404, epsilon = 1e-12);
        assert_eq!(volume_upper_bound(1.0, 2.0, 3).unwrap(), 8.0);
    }

    #[test]
    fn banach_mazur_values() {
        assert_relative_eq!(banach_mazur_lp(2, f64::INFINITY).unwrap(), 2f64.sqrt());
        assert_eq!(banach_mazur_lp(9, 2.0).unwrap(), 1.0);
        assert_eq!(banach_mazur_lp(4, 1.0).unwrap(), 2.0);
        assert_eq!(john_bound(4), 2.0);
        assert!(banach_mazur_lp(3, 0.5).is_err());
        assert_relative_eq!(banach_mazur_lp(8, 3.0).unwrap(), 8f64.powf(1.0 / 6.0));
    }

    #[test]
    fn cover_count_values() {
        let b = finite_cover_count_bound(1, 1.0, 0.5, 1.0, ScalarField::Real).unwrap();
        assert_eq!(b.d_bm_form, 5.0);
        let c = finite_cover_count_bound(2, 1.0, 0.5, 2f64.sqrt(), ScalarField::Complex).unwrap();
        assert_relative_eq!(c.d_bm_form, (1.0 + 4.0 * 2f64.sqrt()).powi(4), max_relative = 1e-14);
        assert_relative_eq!(c.d_bm_form, 1963.7, max_relative = 1e-4);
        assert!(finite_cover_count_bound(1, 1.0, 1.0, 1.0, ScalarField::Real).is_err());
    }

    #[test]
    fn capacity_values() {
        assert_eq!(epsilon_capacity(1).unwrap(), 0.0);
        assert_relative_eq!(epsilon_capacity(7).unwrap(), 2.807, epsilon = 1e-3);
        assert_relative_eq!(epsilon_capacity(25).unwrap(), 4.644, epsilon = 1e-3);
    }

    #[test]
    fn complex_norms_use_moduli() {
        let v = [3.0, 4.0];
        assert_eq!(NormTag::L1.norm(&v, ScalarField::Complex), 5.0);
        assert_eq!(NormTag::L1.norm(&v, ScalarField::Real), 7.0);
    }

    #[test]
    fn net_covers_the_ball() {
        let net = unit_ball_net(2, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let p = random_in_ball(&NormPair::euclidean(2), &mut rng, false);
            let d = net
                .iter()
                .map(|c| ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 0.3);
        }
        assert!(net.iter().all(|c| c[0].hypot(c[1]) <= 1.0 + 1e-15));
    }

    #[test]
    fn csv_table_has_header() {
        let row = capacity_row(&NormPair::euclidean(1), 1.0, 100, 0).unwrap();
        let mut buf = Vec::new();
        write_capacity_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,norm_X,norm_Y,eps,packing_lb,volume_ub,capacity_bits\n"));
    }
}
