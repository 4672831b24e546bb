use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::covering::json_f64;
use crate::error::{Error, Result};
use crate::metric::{least_squares, FinitePointSet};
use crate::semigroup::{flow_sample, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCert {
    pub zeta: f64,
    pub nu: f64,
    pub t1: f64,
    pub t2: f64,
    pub r_squared: f64,
    pub n_samples: usize,
    pub n_times: usize,
}

impl HolderCert {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "certificate/1",
            "kind": "holder",
            "zeta": json_f64(self.zeta),
            "nu": json_f64(self.nu),
            "interval": [self.t1, self.t2],
            "r_squared": json_f64(self.r_squared),
            "n_samples": self.n_samples,
            "n_times": self.n_times,
        })
    }
}

/// Positions of every sample point at every grid time.
fn trajectories(sys: &SystemSpec, b: &FinitePointSet, times: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..b.len())
        .into_par_iter()
        .map(|i| flow_sample(sys, b.point(i), times))
        .collect()
}

/// Max displacement over the sample for every ordered pair of grid times.
fn displacements(b: &FinitePointSet, traj: &[Vec<Vec<f64>>], times: &[f64]) -> Vec<(f64, f64)> {
    let metric = b.metric();
    let mut out = Vec::new();
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let d = traj
                .iter()
                .map(|tr| metric.distance(&tr[i], &tr[j]))
                .fold(0.0, f64::max);
            out.push((times[j] - times[i], d));
        }
    }
    out
}

/// Fits `d(S(t1)x, S(t2)x) ≤ ζ|t1 − t2|^ν` over grid times. `ν` is the
/// log-log slope of the largest displacement per octave of lags up to a
/// quarter of the window; `ζ` is then raised until every sampled triple holds.
pub fn estimate_holder(sys: &SystemSpec, b: &FinitePointSet, times: &[f64]) -> Result<HolderCert> {
    if !sys.is_flow() {
        return Err(Error::InvalidArgument("Hölder fits need a flow".into()));
    }
    if b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("need at least two increasing grid times".into()));
    }
    let (t1, t2) = (times[0], times[times.len() - 1]);
    let traj = trajectories(sys, b, times)?;
    let disp = displacements(b, &traj, times);
    let base = |nu: f64, zeta: f64, r2: f64| HolderCert {
        zeta,
        nu,
        t1,
        t2,
        r_squared: r2,
        n_samples: b.len(),
        n_times: times.len(),
    };
    if disp.iter().all(|p| p.1 == 0.0) {
        return Ok(base(1.0, 0.0, 0.0));
    }
    let window = t2 - t1;
    let min_lag = disp.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut small: Vec<(f64, f64)> = disp
        .iter()
        .copied()
        .filter(|p| p.0 <= window / 4.0 && p.1 > 0.0)
        .collect();
    if small.len() < 2 {
        small = disp.iter().copied().filter(|p| p.1 > 0.0).collect();
    }
    let mut bins: std::collections::BTreeMap<i64, (f64, f64)> = std::collections::BTreeMap::new();
    for (lag, d) in small {
        let key = ((lag / min_lag).ln() / std::f64::consts::LN_2 + 1e-9).floor() as i64;
        let e = bins.entry(key).or_insert((lag, d));
        if d > e.1 {
            *e = (lag, d);
        }
    }
    let xs: Vec<f64> = bins.values().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = bins.values().map(|p| p.1.ln()).collect();
    let (nu, r2) = match least_squares(&xs, &ys) {
        Some((slope, _, r2)) => (slope, r2),
        None => (1.0, 0.0),
    };
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "displacements do not shrink with the time lag (slope {nu})"
        )));
    }
    let zeta = disp
        .iter()
        .map(|&(lag, d)| d / lag.powf(nu))
        .fold(0.0, f64::max);
    Ok(base(nu, zeta, r2))
}

/// Fraction of triples `(x, t_i, t_j)` on which the fitted inequality holds.
pub fn holder_check(sys: &SystemSpec, cert: &HolderCert, points: &FinitePointSet, times: &[f64]) -> Result<f64> {
    let traj = trajectories(sys, points, times)?;
    let metric = points.metric();
    let (mut ok, mut total) = (0usize, 0usize);
    for tr in &traj {
        for i in 0..times.len() {
            for j in i + 1..times.len() {
                let lhs = metric.distance(&tr[i], &tr[j]);
                let rhs = cert.zeta * (times[j] - times[i]).abs().powf(cert.nu);
                total += 1;
                if lhs <= rhs * (1.0 + 1e-12) {
                    ok += 1;
                }
            }
        }
    }
    Ok(ok as f64 / total.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::linspace;

    #[test]
    fn decay_flow_is_lipschitz_in_time() {
        let sys = SystemSpec::flow("decay", 1, 0.01, |x, y| y[0] = -x[0]).unwrap();
        let b = FinitePointSet::grid_1d(0.0, 1.0, 21).unwrap();
        let times = linspace(1.0, 2.0, 41);
        let c = estimate_holder(&sys, &b, &times).unwrap();
        assert!((0.9..=1.1).contains(&c.nu), "ν = {}", c.nu);
        let held = FinitePointSet::grid_1d(0.05, 0.95, 10).unwrap();
        assert_eq!(holder_check(&sys, &c, &held, &times).unwrap(), 1.0);
    }

    #[test]
    fn rest_gives_sentinel() {
        let sys = SystemSpec::flow("rest", 1, 0.01, |_, y| y[0] = 0.0).unwrap();
        let b = FinitePointSet::grid_1d(0.0, 1.0, 5).unwrap();
        let c = estimate_holder(&sys, &b, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!((c.nu, c.zeta), (1.0, 0.0));
    }
}
