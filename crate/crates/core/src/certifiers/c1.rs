use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::covering::json_f64;
use crate::error::{Error, Result};
use crate::metric::FinitePointSet;
use crate::semigroup::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianSource {
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Sample {
    pub index: usize,
    pub singular_values: Vec<f64>,
    /// `min{m : σ_{m+1} < 2λ}`, an upper bound on `ν_λ`.
    pub nu: usize,
    /// `min{m : σ_{m+1} < λ}`: rank of the compact part `K`.
    pub split_rank: usize,
    /// `‖C‖ = σ_{split_rank+1}`.
    pub c_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Cert {
    pub lambda: f64,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub jacobian_source: JacobianSource,
    #[serde(rename = "T")]
    pub t: f64,
    pub samples: Vec<C1Sample>,
}

impl C1Cert {
    pub fn worst_sample(&self) -> Option<&C1Sample> {
        self.samples.iter().reduce(|a, b| if b.nu > a.nu { b } else { a })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": "certificate/1",
            "kind": "c1",
            "lambda": self.lambda,
            "n": self.n,
            "n_is_upper_bound": true,
            "M": json_f64(self.m),
            "jacobian_source": self.jacobian_source,
            "T": self.t,
            "n_samples": self.samples.len(),
            "witness": self.worst_sample().map(|s| json!({
                "index": s.index,
                "singular_values": s.singular_values,
                "nu": s.nu,
                "split_rank": s.split_rank,
                "c_norm": s.c_norm,
            })),
        })
    }
}

/// Jacobian of `S(T)` at `y`, analytic when the system provides one.
pub fn jacobian(sys: &SystemSpec, y: &[f64], t: f64) -> Result<(DMatrix<f64>, JacobianSource)> {
    match sys.analytic_jacobian(y, t)? {
        Some(j) => Ok((j, JacobianSource::Analytic)),
        None => Ok((sys.fd_jacobian(y, t)?, JacobianSource::FiniteDifference)),
    }
}

/// Splits every sampled derivative into a finite-rank part and a remainder
/// of norm below `λ` using its singular values.
pub fn certify_c1(sys: &SystemSpec, b: &FinitePointSet, t: f64, lambda: f64) -> Result<C1Cert> {
    if !(lambda > 0.0 && lambda < 0.25) {
        return Err(Error::InvalidParameter(format!("λ must lie in (0, 1/4), got {lambda}")));
    }
    if b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let per: Vec<(C1Sample, JacobianSource)> = (0..b.len())
        .into_par_iter()
        .map(|i| {
            let (d, src) = jacobian(sys, b.point(i), t)?;
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NoSplit { index: i });
            }
            let mut sv: Vec<f64> = d.singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            let below = |thr: f64| sv.iter().position(|s| *s < thr).unwrap_or(sv.len());
            let nu = below(2.0 * lambda);
            let split_rank = below(lambda);
            let c_norm = sv.get(split_rank).copied().unwrap_or(0.0);
            Ok((
                C1Sample {
                    index: i,
                    singular_values: sv,
                    nu,
                    split_rank,
                    c_norm,
                },
                src,
            ))
        })
        .collect::<Result<_>>()?;
    let source = if per.iter().all(|p| p.1 == JacobianSource::Analytic) {
        JacobianSource::Analytic
    } else {
        JacobianSource::FiniteDifference
    };
    let samples: Vec<C1Sample> = per.into_iter().map(|p| p.0).collect();
    Ok(C1Cert {
        lambda,
        n: samples.iter().map(|s| s.nu).max().unwrap_or(0),
        m: samples
            .iter()
            .map(|s| s.singular_values.first().copied().unwrap_or(0.0))
            .fold(0.0, f64::max),
        jacobian_source: source,
        t,
        samples,
    })
}

/// Largest `‖J_fd − J_an‖_F / ‖J_an‖_F` over the sample (absolute error when
/// the analytic Jacobian vanishes). `None` without an analytic Jacobian.
pub fn jacobian_agreement(sys: &SystemSpec, b: &FinitePointSet, t: f64) -> Result<Option<f64>> {
    if !sys.has_analytic_jacobian() {
        return Ok(None);
    }
    let mut worst: f64 = 0.0;
    for p in b.points() {
        let an = sys.analytic_jacobian(p, t)?.expect("analytic Jacobian present");
        let fd = sys.fd_jacobian(p, t)?;
        let err = (&fd - &an).norm();
        let scale = an.norm();
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64) -> SystemSpec {
        SystemSpec::discrete("diag", 2, move |x, y| {
            y[0] = a * x[0];
            y[1] = b * x[1];
        })
        .with_jacobian(move |_| DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]))
    }

    #[test]
    fn diagonal_split() {
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 3, 2).unwrap();
        let c = certify_c1(&diag(0.9, 0.05), &b, 1.0, 0.1).unwrap();
        assert_eq!(c.n, 1);
        assert!((c.m - 0.9).abs() < 1e-15);
        assert_eq!(c.jacobian_source, JacobianSource::Analytic);
        assert!(c.samples.iter().all(|s| s.c_norm < 0.1));
    }

    #[test]
    fn zero_derivative() {
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 3, 2).unwrap();
        let c = certify_c1(&diag(0.0, 0.0), &b, 1.0, 0.1).unwrap();
        assert_eq!((c.n, c.m), (0, 0.0));
    }

    #[test]
    fn lambda_range() {
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 2, 2).unwrap();
        assert!(certify_c1(&diag(0.5, 0.5), &b, 1.0, 0.25).is_err());
    }

    #[test]
    fn finite_differences_match_linear_jacobian() {
        let b = FinitePointSet::grid_cube(-2.0, 2.0, 4, 2).unwrap();
        let e = jacobian_agreement(&diag(0.9, 0.3), &b, 1.0).unwrap().unwrap();
        assert!(e < 1e-6, "relative error {e}");
    }
}
