//! Semigroups on ℝ^d: discrete maps and fixed-step RK4 time-T maps of flows.
//!
//! Flow times must be whole multiples of the step size, so composing time-T
//! maps repeats exactly the same floating-point operations and the
//! semigroup law holds bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FinitePointSet;

/// Coordinates beyond this magnitude abort an iteration.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Right-hand side or map, writing its result into the second argument.
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Jacobian of a map at a point.
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarField {
    Real,
    /// Complex coordinates stored as interleaved real and imaginary parts.
    Complex,
}

impl ScalarField {
    /// Real dimension of an `n`-dimensional space over this field.
    pub fn real_dim(self, n: usize) -> usize {
        match self {
            ScalarField::Real => n,
            ScalarField::Complex => 2 * n,
        }
    }
}

#[derive(Clone)]
pub enum Dynamics {
    Map {
        map: VectorFn,
        jacobian: Option<JacobianFn>,
    },
    Flow {
        field: VectorFn,
        step_size: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    DiscreteMap,
    OdeFlow,
}

/// An immutable semigroup description.
#[derive(Clone)]
pub struct SystemSpec {
    name: String,
    phase_dim: usize,
    dynamics: Dynamics,
    field: ScalarField,
    params: Params,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("phase_dim", &self.phase_dim)
            .field("kind", &self.kind())
            .field("step_size", &self.step_size())
            .field("field", &self.field)
            .field("params", &self.params)
            .finish()
    }
}

impl SystemSpec {
    pub fn discrete<F>(name: impl Into<String>, phase_dim: usize, map: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            phase_dim,
            dynamics: Dynamics::Map {
                map: Arc::new(map),
                jacobian: None,
            },
            field: ScalarField::Real,
            params: Params::new(),
        }
    }

    pub fn flow<F>(name: impl Into<String>, phase_dim: usize, step_size: f64, field: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if !(step_size > 0.0) || !step_size.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        Ok(Self {
            name: name.into(),
            phase_dim,
            dynamics: Dynamics::Flow {
                field: Arc::new(field),
                step_size,
            },
            field: ScalarField::Real,
            params: Params::new(),
        })
    }

    /// Attaches an analytic Jacobian of the one-step map (discrete systems only).
    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if let Dynamics::Map { jacobian, .. } = &mut self.dynamics {
            *jacobian = Some(Arc::new(jac));
        }
        self
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn with_field(mut self, field: ScalarField) -> Self {
        self.field = field;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phase_dim(&self) -> usize {
        self.phase_dim
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn kind(&self) -> SystemKind {
        match self.dynamics {
            Dynamics::Map { .. } => SystemKind::DiscreteMap,
            Dynamics::Flow { .. } => SystemKind::OdeFlow,
        }
    }

    pub fn is_flow(&self) -> bool {
        matches!(self.dynamics, Dynamics::Flow { .. })
    }

    pub fn step_size(&self) -> Option<f64> {
        match self.dynamics {
            Dynamics::Flow { step_size, .. } => Some(step_size),
            Dynamics::Map { .. } => None,
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        matches!(self.dynamics, Dynamics::Map { jacobian: Some(_), .. })
    }

    /// Number of elementary steps making up time `t`.
    pub fn unit_steps(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
        }
        match self.dynamics {
            Dynamics::Map { .. } => {
                if t.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "discrete time must be an integer, got {t}"
                    )));
                }
                Ok(t as usize)
            }
            Dynamics::Flow { step_size, .. } => {
                let r = t / step_size;
                let n = r.round();
                if (r - n).abs() > 1e-9 * n.max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "time {t} is not a multiple of the step size {step_size}"
                    )));
                }
                Ok(n as usize)
            }
        }
    }

    /// Applies `steps` elementary steps in place. Returns `false` on blow-up.
    pub fn advance(&self, x: &mut [f64], steps: usize) -> bool {
        let mut ws = Workspace::new(x.len());
        for _ in 0..steps {
            self.elementary(x, &mut ws, None);
            flush_subnormal(x);
            if !within_bounds(x) {
                return false;
            }
        }
        true
    }

    /// Moves `x` forward by time `t`; flows may end with one shortened step.
    pub fn advance_time(&self, x: &mut [f64], t: f64) -> Result<bool> {
        match self.dynamics {
            Dynamics::Map { .. } => Ok(self.advance(x, self.unit_steps(t)?)),
            Dynamics::Flow { step_size, .. } => {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "time must be nonnegative, got {t}"
                    )));
                }
                if let Ok(n) = self.unit_steps(t) {
                    return Ok(self.advance(x, n));
                }
                let full = (t / step_size).floor();
                if !self.advance(x, full as usize) {
                    return Ok(false);
                }
                let rest = t - full * step_size;
                let mut ws = Workspace::new(x.len());
                self.elementary(x, &mut ws, Some(rest));
                flush_subnormal(x);
                Ok(within_bounds(x))
            }
        }
    }

    fn elementary(&self, x: &mut [f64], ws: &mut Workspace, h_override: Option<f64>) {
        match &self.dynamics {
            Dynamics::Map { map, .. } => {
                map(x, &mut ws.k1);
                x.copy_from_slice(&ws.k1);
            }
            Dynamics::Flow { field, step_size } => {
                let h = h_override.unwrap_or(*step_size);
                rk4_step(field.as_ref(), x, h, ws);
            }
        }
    }

    /// Analytic Jacobian of the time-`t` map by the chain rule, if available.
    pub fn analytic_jacobian(&self, x: &[f64], t: f64) -> Result<Option<DMatrix<f64>>> {
        let Dynamics::Map {
            map,
            jacobian: Some(jac),
        } = &self.dynamics
        else {
            return Ok(None);
        };
        let n = self.unit_steps(t)?;
        let d = x.len();
        let mut acc = DMatrix::<f64>::identity(d, d);
        let mut cur = x.to_vec();
        let mut next = vec![0.0; d];
        for _ in 0..n {
            acc = jac(&cur) * acc;
            map(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(Some(acc))
    }

    /// Central-difference Jacobian of the time-`t` map with step `1e-6·(1+|x_i|)`.
    pub fn fd_jacobian(&self, x: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let d = x.len();
        let n = self.unit_steps(t)?;
        let mut jac = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let width = xp[i] - xm[i];
            if !self.advance(&mut xp, n) || !self.advance(&mut xm, n) {
                return Err(Error::BlowUp { index: 0 });
            }
            for r in 0..d {
                jac[(r, i)] = (xp[r] - xm[r]) / width;
            }
        }
        Ok(jac)
    }
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Self {
            k1: vec![0.0; d],
            k2: vec![0.0; d],
            k3: vec![0.0; d],
            k4: vec![0.0; d],
            tmp: vec![0.0; d],
        }
    }
}

fn rk4_step(f: &(dyn Fn(&[f64], &mut [f64]) + Send + Sync), x: &mut [f64], h: f64, ws: &mut Workspace) {
    let d = x.len();
    f(x, &mut ws.k1);
    for i in 0..d {
        ws.tmp[i] = x[i] + 0.5 * h * ws.k1[i];
    }
    f(&ws.tmp, &mut ws.k2);
    for i in 0..d {
        ws.tmp[i] = x[i] + 0.5 * h * ws.k2[i];
    }
    f(&ws.tmp, &mut ws.k3);
    for i in 0..d {
        ws.tmp[i] = x[i] + h * ws.k3[i];
    }
    f(&ws.tmp, &mut ws.k4);
    for i in 0..d {
        x[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

fn within_bounds(x: &[f64]) -> bool {
    x.iter().all(|v| v.abs() <= BLOW_UP_THRESHOLD)
}

/// Subnormal coordinates are set to zero; decaying modes otherwise end up
/// there and every later step runs orders of magnitude slower.
fn flush_subnormal(x: &mut [f64]) {
    for v in x.iter_mut() {
        if v.is_subnormal() {
            *v = 0.0;
        }
    }
}

fn check_dim(sys: &SystemSpec, x: &FinitePointSet) -> Result<()> {
    if x.dim() != sys.phase_dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.phase_dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// Advances every point by a whole number of elementary steps, in parallel
/// and order preserving. Blow-up reports the lowest offending index.
pub(crate) fn advance_all(sys: &SystemSpec, x: &FinitePointSet, steps: usize) -> Result<FinitePointSet> {
    check_dim(sys, x)?;
    let d = x.dim();
    let mut coords = x.coords().to_vec();
    let ok: Vec<bool> = if x.len() >= 64 {
        coords
            .par_chunks_mut(d)
            .map(|p| sys.advance(p, steps))
            .collect()
    } else {
        coords.chunks_mut(d).map(|p| sys.advance(p, steps)).collect()
    };
    if let Some(index) = ok.iter().position(|b| !b) {
        return Err(Error::BlowUp { index });
    }
    Ok(x.like(coords))
}

/// `S(t)X`, point `i` mapping to point `i`.
pub fn step(sys: &SystemSpec, x: &FinitePointSet, t: f64) -> Result<FinitePointSet> {
    let n = sys.unit_steps(t)?;
    advance_all(sys, x, n)
}

/// `S(t)X` for arbitrary nonnegative `t`, allowing a shortened final RK4 step.
pub fn step_time(sys: &SystemSpec, x: &FinitePointSet, t: f64) -> Result<FinitePointSet> {
    if sys.unit_steps(t).is_ok() {
        return step(sys, x, t);
    }
    check_dim(sys, x)?;
    let d = x.dim();
    let mut coords = x.coords().to_vec();
    let ok: Vec<Result<bool>> = coords
        .par_chunks_mut(d)
        .map(|p| sys.advance_time(p, t))
        .collect();
    for (index, r) in ok.into_iter().enumerate() {
        if !r? {
            return Err(Error::BlowUp { index });
        }
    }
    Ok(x.like(coords))
}

/// Orbit `x, S(T)x, …, S(nT)x` of a single point.
pub fn orbit(sys: &SystemSpec, x: &[f64], t: f64, n: usize) -> Result<FinitePointSet> {
    let per = sys.unit_steps(t)?;
    let mut cur = x.to_vec();
    let mut coords = Vec::with_capacity((n + 1) * x.len());
    coords.extend_from_slice(&cur);
    for _ in 0..n {
        if !sys.advance(&mut cur, per) {
            return Err(Error::BlowUp { index: 0 });
        }
        coords.extend_from_slice(&cur);
    }
    FinitePointSet::from_flat(x.len(), coords, crate::metric::MetricTag::Euclidean)
}

/// Empirical absorbing ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingSetEstimate {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Time after which every surviving probe orbit stays in the open ball.
    pub entry_time: f64,
    /// Entry time in units of `T`.
    pub entry_step: usize,
    pub positively_invariant_checked: bool,
    pub witness_probes: usize,
    /// Probes whose orbits left every bounded region and were discarded.
    pub escaped_probes: usize,
    pub horizon: usize,
    #[serde(rename = "T")]
    pub t: f64,
}

/// Smallest ball on a halving-by-√2 radius grid that every probe orbit
/// enters by half the horizon and never leaves afterwards.
///
/// The center is the midpoint of the bounding box of the final probe states.
/// Probes that blow up are discarded and counted; if all do, no ball exists.
pub fn find_absorbing_ball(
    sys: &SystemSpec,
    probes: &FinitePointSet,
    horizon: usize,
    t: f64,
) -> Result<AbsorbingSetEstimate> {
    check_dim(sys, probes)?;
    if probes.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if horizon < 2 {
        return Err(Error::InvalidArgument("horizon must be at least 2".into()));
    }
    let per = sys.unit_steps(t)?;
    let d = probes.dim();
    let metric = probes.metric().clone();

    let finals: Vec<Option<Vec<f64>>> = (0..probes.len())
        .into_par_iter()
        .map(|i| {
            let mut x = probes.point(i).to_vec();
            (0..horizon)
                .all(|_| sys.advance(&mut x, per))
                .then_some(x)
        })
        .collect();
    let kept: Vec<usize> = (0..probes.len()).filter(|&i| finals[i].is_some()).collect();
    if kept.is_empty() {
        return Err(Error::NoAbsorbingBall);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in &kept {
        for (j, v) in finals[i].as_ref().unwrap().iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();

    // Largest distance to the center over all kept probes, at each time.
    let per_time = kept
        .par_iter()
        .map(|&i| {
            let mut x = probes.point(i).to_vec();
            let mut out = Vec::with_capacity(horizon + 1);
            out.push(metric.distance(&x, &center));
            for _ in 0..horizon {
                sys.advance(&mut x, per);
                out.push(metric.distance(&x, &center));
            }
            out
        })
        .reduce(
            || vec![0.0; horizon + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    let mut tail = per_time;
    for k in (0..horizon).rev() {
        tail[k] = tail[k].max(tail[k + 1]);
    }
    let half = horizon / 2;
    let base = if tail[0] > 0.0 { tail[0] } else { 1.0 };
    let radius = (0..=200)
        .map(|j| base * (1.0 + 1e-12) * 0.5f64.powf(j as f64 / 2.0))
        .take_while(|r| tail[half] < *r)
        .last()
        .ok_or(Error::NoAbsorbingBall)?;
    let entry_step = (0..=horizon)
        .find(|&k| tail[k] < radius)
        .ok_or(Error::NoAbsorbingBall)?;

    let boundary = boundary_sample(&center, radius, &metric, 16);
    let invariant = boundary.par_iter().all(|b| {
        let mut x = b.clone();
        (0..horizon).all(|_| sys.advance(&mut x, per) && metric.distance(&x, &center) <= radius)
    });

    Ok(AbsorbingSetEstimate {
        center,
        radius,
        entry_time: entry_step as f64 * t,
        entry_step,
        positively_invariant_checked: invariant,
        witness_probes: kept.len(),
        escaped_probes: probes.len() - kept.len(),
        horizon,
        t,
    })
}

fn boundary_sample(
    center: &[f64],
    radius: f64,
    metric: &crate::metric::MetricTag,
    random: usize,
) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = s;
            dirs.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b0a_d5a3);
    for _ in 0..random {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        dirs.push(v);
    }
    dirs.into_iter()
        .filter_map(|v| {
            let n = metric.norm(&v);
            (n > 0.0).then(|| {
                center
                    .iter()
                    .zip(&v)
                    .map(|(c, x)| c + radius * x / n)
                    .collect()
            })
        })
        .collect()
}

/// Orbit points of surviving probes from the entry step to the horizon,
/// thinned by a fixed stride to at most `max_points` points.
pub fn absorbed_sample(
    sys: &SystemSpec,
    probes: &FinitePointSet,
    est: &AbsorbingSetEstimate,
    max_points: usize,
) -> Result<FinitePointSet> {
    check_dim(sys, probes)?;
    let per = sys.unit_steps(est.t)?;
    let orbits: Vec<Option<Vec<f64>>> = (0..probes.len())
        .into_par_iter()
        .map(|i| {
            let mut x = probes.point(i).to_vec();
            let mut out = Vec::new();
            for k in 0..=est.horizon {
                if k > 0 && !sys.advance(&mut x, per) {
                    return None;
                }
                if k >= est.entry_step {
                    out.extend_from_slice(&x);
                }
            }
            Some(out)
        })
        .collect();
    let all: Vec<f64> = orbits.into_iter().flatten().flatten().collect();
    let full = probes.like(all).dedup();
    let n = full.len();
    if n == 0 {
        return Err(Error::NoAbsorbingBall);
    }
    if max_points == 0 || n <= max_points {
        return Ok(full);
    }
    let idx: Vec<usize> = (0..max_points).map(|i| i * n / max_points).collect();
    Ok(full.select(&idx))
}

/// Points `S(kT)x` for `burn_in ≤ k < burn_in + keep` over all `x ∈ B`,
/// deduplicated by exact coordinate equality.
pub fn omega_limit_sample(
    sys: &SystemSpec,
    b: &FinitePointSet,
    burn_in: usize,
    keep: usize,
    t: f64,
) -> Result<FinitePointSet> {
    check_dim(sys, b)?;
    if burn_in < 1 || keep < 1 {
        return Err(Error::InvalidArgument("burn_in and keep must be at least 1".into()));
    }
    let per = sys.unit_steps(t)?;
    let orbits: Vec<Option<Vec<f64>>> = (0..b.len())
        .into_par_iter()
        .map(|i| {
            let mut x = b.point(i).to_vec();
            for _ in 0..burn_in {
                if !sys.advance(&mut x, per) {
                    return None;
                }
            }
            let mut out = Vec::with_capacity(keep * x.len());
            out.extend_from_slice(&x);
            for _ in 1..keep {
                if !sys.advance(&mut x, per) {
                    return None;
                }
                out.extend_from_slice(&x);
            }
            Some(out)
        })
        .collect();
    let mut coords = Vec::new();
    for (index, o) in orbits.into_iter().enumerate() {
        coords.extend(o.ok_or(Error::BlowUp { index })?);
    }
    Ok(b.like(coords).dedup())
}

/// `S(t)x` for each requested time, each integrated from `x` directly.
pub fn flow_sample(sys: &SystemSpec, x: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if x.len() != sys.phase_dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.phase_dim(),
            got: x.len(),
        });
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be nonnegative and increasing".into()));
    }
    times
        .iter()
        .map(|&t| {
            let mut p = x.to_vec();
            if sys.advance_time(&mut p, t)? {
                Ok(p)
            } else {
                Err(Error::BlowUp { index: 0 })
            }
        })
        .collect()
}

/// Uniform seeded sample of `n` points in the box `[-half, half]^dim` around `center`.
pub fn uniform_box(center: &[f64], half: f64, n: usize, seed: u64) -> Result<FinitePointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * center.len());
    for _ in 0..n {
        for c in center {
            coords.push(c + rng.gen_range(-half..=half));
        }
    }
    FinitePointSet::from_flat(center.len(), coords, crate::metric::MetricTag::Euclidean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricTag;

    fn halving() -> SystemSpec {
        SystemSpec::discrete("halving", 1, |x, y| y[0] = 0.5 * x[0])
    }

    fn henon() -> SystemSpec {
        SystemSpec::discrete("henon", 2, |x, y| {
            y[0] = 1.0 - 1.4 * x[0] * x[0] + x[1];
            y[1] = 0.3 * x[0];
        })
    }

    #[test]
    fn halving_steps() {
        let x = FinitePointSet::from_scalars(&[1.0]).unwrap();
        assert_eq!(step(&halving(), &x, 1.0).unwrap().coords(), &[0.5]);
        assert_eq!(step(&halving(), &x, 3.0).unwrap().coords(), &[0.125]);
    }

    #[test]
    fn henon_maps_origin_to_one_zero() {
        let x = FinitePointSet::from_rows(&[[0.0, 0.0]], MetricTag::Euclidean).unwrap();
        assert_eq!(step(&henon(), &x, 1.0).unwrap().coords(), &[1.0, 0.0]);
    }

    #[test]
    fn blow_up_reports_first_bad_index() {
        let sys = SystemSpec::discrete("square", 1, |x, y| y[0] = x[0] * x[0] + 1.0);
        let x = FinitePointSet::from_scalars(&[0.0, 10.0, 100.0]).unwrap();
        match step(&sys, &x, 3.0) {
            Err(Error::BlowUp { index }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = step(&sys, &x, 3.0).unwrap_err();
        assert!(err.to_string().starts_with("trajectory blow-up"));
    }

    #[test]
    fn flow_times_must_be_step_multiples() {
        let sys = SystemSpec::flow("decay", 1, 0.01, |x, y| y[0] = -x[0]).unwrap();
        assert_eq!(sys.unit_steps(1.0).unwrap(), 100);
        assert!(sys.unit_steps(0.005).is_err());
        assert!(halving().unit_steps(0.5).is_err());
    }

    #[test]
    fn flow_sample_of_decay() {
        let sys = SystemSpec::flow("decay", 1, 0.01, |x, y| y[0] = -x[0]).unwrap();
        let out = flow_sample(&sys, &[1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(out[0], vec![1.0]);
        assert!((out[1][0] - (-1.0f64).exp()).abs() < 1e-6);
        let half = flow_sample(&sys, &[1.0], &[0.005]).unwrap();
        assert!((half[0][0] - (-0.005f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn stationary_flow_sample() {
        let sys = SystemSpec::flow("still", 1, 0.1, |_, y| y[0] = 0.0).unwrap();
        let out = flow_sample(&sys, &[5.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(out, vec![vec![5.0]; 3]);
    }

    #[test]
    fn affine_absorbing_ball() {
        let sys = SystemSpec::discrete("affine", 1, |x, y| y[0] = 0.5 * x[0] + 1.0);
        let probes = FinitePointSet::from_scalars(&[-10.0, 10.0]).unwrap();
        let est = find_absorbing_ball(&sys, &probes, 60, 1.0).unwrap();
        assert!((est.center[0] - 2.0).abs() < 1e-6);
        assert!(est.radius <= 1.0);
        assert!(est.entry_time <= 40.0);
        assert!(est.positively_invariant_checked);
    }

    #[test]
    fn halving_absorbing_ball_is_tight() {
        let probes = FinitePointSet::from_scalars(&[1.0]).unwrap();
        let est = find_absorbing_ball(&halving(), &probes, 10, 1.0).unwrap();
        assert!(est.center[0].abs() <= 2f64.powi(-10));
        // Orbit points from step 5 on lie within 2^-5 of the origin.
        assert!(est.radius <= 2.0 * 2f64.powi(-5) + 1e-3);
        assert!(est.radius > 2f64.powi(-5) - est.center[0]);
    }

    #[test]
    fn diverging_map_has_no_absorbing_ball() {
        let sys = SystemSpec::discrete("double", 1, |x, y| y[0] = 3.0 * x[0]);
        let probes = FinitePointSet::from_scalars(&[1.0, -2.0]).unwrap();
        let err = find_absorbing_ball(&sys, &probes, 200, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "no absorbing ball found");
    }

    #[test]
    fn omega_limit_of_halving() {
        let b = FinitePointSet::from_scalars(&[1.0]).unwrap();
        let w = omega_limit_sample(&halving(), &b, 50, 5, 1.0).unwrap();
        assert_eq!(w.len(), 5);
        assert!(w.coords().iter().all(|v| v.abs() <= 2f64.powi(-50)));
    }

    #[test]
    fn omega_limit_deduplicates_fixed_points() {
        let sys = SystemSpec::discrete("zero", 1, |_, y| y[0] = 0.0);
        let b = FinitePointSet::from_scalars(&[1.0, 2.0]).unwrap();
        let w = omega_limit_sample(&sys, &b, 1, 10, 1.0).unwrap();
        assert_eq!(w.coords(), &[0.0]);
    }

    #[test]
    fn chain_rule_jacobian_matches_differences() {
        let sys = henon().with_jacobian(|x| {
            DMatrix::from_row_slice(2, 2, &[-2.8 * x[0], 1.0, 0.3, 0.0])
        });
        let x = [0.3, -0.1];
        let a = sys.analytic_jacobian(&x, 3.0).unwrap().unwrap();
        let f = sys.fd_jacobian(&x, 3.0).unwrap();
        let rel = (&a - &f).norm() / a.norm();
        assert!(rel < 1e-7, "relative error {rel}");
    }
}
