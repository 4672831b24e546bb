//! Benchmark catalog of semigroups.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certifiers::SplitFn;
use crate::error::{Error, Result};
use crate::semigroup::{ParamValue, Params, SystemKind, SystemSpec};

/// Largest Galerkin truncation offered for the Chafee–Infante system.
pub const MAX_GALERKIN_MODES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSchema {
    pub name: String,
    pub default: ParamValue,
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthBasis {
    /// Follows from a one-line computation.
    Exact,
    /// Follows from the closed form of the dynamics.
    Analytic,
    /// Measured against a long brute-force run.
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentedTruth {
    pub claim: String,
    pub basis: TruthBasis,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    /// `None` when a parameter sets the dimension.
    pub phase_dim: Option<usize>,
    pub kind: SystemKind,
    pub params: Vec<ParamSchema>,
    /// Time step used by the pipelines unless configured otherwise.
    #[serde(rename = "default_T")]
    pub default_t: f64,
    pub documented_truths: Vec<DocumentedTruth>,
}

fn p(name: &str, default: ParamValue, description: &str) -> ParamSchema {
    ParamSchema {
        name: name.into(),
        default,
        description: description.into(),
    }
}

fn s(v: f64) -> ParamValue {
    ParamValue::Scalar(v)
}

fn truth(claim: &str, basis: TruthBasis, value: Option<f64>, tolerance: Option<f64>) -> DocumentedTruth {
    DocumentedTruth {
        claim: claim.into(),
        basis,
        value,
        tolerance,
    }
}

pub fn list_systems() -> Vec<CatalogEntry> {
    use TruthBasis::*;
    vec![
        CatalogEntry {
            name: "affine_contraction".into(),
            phase_dim: None,
            kind: SystemKind::DiscreteMap,
            params: vec![
                p("eta", s(0.5), "contraction factor, |eta| < 1"),
                p("c", s(1.0), "offset; a list sets the dimension"),
                p("dim", s(1.0), "dimension when c is a scalar"),
            ],
            default_t: 1.0,
            documented_truths: vec![
                truth("fixed point c/(1-eta), equal to 2 at the defaults", Exact, Some(2.0), Some(0.0)),
                truth("fitted covering certificate has h = 1 and dim_bound 0", Exact, Some(0.0), Some(0.0)),
            ],
        },
        CatalogEntry {
            name: "diag_linear".into(),
            phase_dim: None,
            kind: SystemKind::DiscreteMap,
            params: vec![p("diag", ParamValue::List(vec![0.9, 0.3]), "diagonal entries")],
            default_t: 1.0,
            documented_truths: vec![
                truth("Jacobian is the constant diagonal matrix", Exact, None, Some(0.0)),
                truth(
                    "Ladyzhenskaya type with P onto the first axis, eta = 0.3 and kappa = 0.9",
                    Exact,
                    Some(0.3),
                    Some(1e-12),
                ),
                truth("C1 estimate with lambda = 0.1 gives nu = 2", Exact, Some(2.0), Some(0.0)),
            ],
        },
        CatalogEntry {
            name: "henon".into(),
            phase_dim: Some(2),
            kind: SystemKind::DiscreteMap,
            params: vec![p("a", s(1.4), "quadratic coefficient"), p("b", s(0.3), "contraction")],
            default_t: 1.0,
            documented_truths: vec![
                truth("S(1)(0, 0) = (1, 0)", Exact, None, Some(0.0)),
                truth("absorbing ball of radius at most 3", Empirical, Some(3.0), None),
                truth("box-counting dimension of the attractor", Empirical, Some(1.26), Some(0.1)),
            ],
        },
        CatalogEntry {
            name: "logistic".into(),
            phase_dim: Some(1),
            kind: SystemKind::DiscreteMap,
            params: vec![p("r", s(3.5), "growth rate in [0, 4]")],
            default_t: 1.0,
            documented_truths: vec![
                truth("[0, 1] is positively invariant", Exact, None, Some(0.0)),
                truth("at r = 3.5 the attractor is a 4-cycle of dimension 0", Analytic, Some(0.0), Some(0.1)),
            ],
        },
        CatalogEntry {
            name: "lorenz63_timeT".into(),
            phase_dim: Some(3),
            kind: SystemKind::OdeFlow,
            params: vec![
                p("sigma", s(10.0), "Prandtl number"),
                p("rho", s(28.0), "Rayleigh number"),
                p("beta", s(8.0 / 3.0), "geometric factor"),
                p("step", s(0.01), "RK4 step size"),
            ],
            default_t: 0.1,
            documented_truths: vec![truth(
                "box-counting dimension of the attractor",
                Empirical,
                Some(2.05),
                Some(0.15),
            )],
        },
        CatalogEntry {
            name: "chafee_infante_galerkin".into(),
            phase_dim: None,
            kind: SystemKind::OdeFlow,
            params: vec![
                p("lambda", s(5.0), "linear growth rate"),
                p("modes", s(4.0), "number of sine modes, at most 16"),
                p("step", s(0.005), "RK4 step size"),
            ],
            default_t: 0.1,
            documented_truths: vec![
                truth("the origin is an equilibrium", Exact, None, Some(0.0)),
                truth(
                    "for lambda < 1 the origin attracts at rate 1 - lambda",
                    Analytic,
                    None,
                    None,
                ),
            ],
        },
        CatalogEntry {
            name: "smoothing_demo".into(),
            phase_dim: None,
            kind: SystemKind::DiscreteMap,
            params: vec![
                p("eta", s(0.3), "linear contraction"),
                p("gain", s(0.5), "Lipschitz constant of the finite-rank part"),
                p("rank", s(1.0), "number of coordinates driven by the nonlinearity"),
                p("dim", s(2.0), "phase dimension"),
            ],
            default_t: 1.0,
            documented_truths: vec![truth(
                "smoothing with eta = 0.3, kappa at most 0.5 and Z the first rank coordinates",
                Exact,
                Some(0.3),
                Some(1e-12),
            )],
        },
        CatalogEntry {
            name: "linear_flow".into(),
            phase_dim: None,
            kind: SystemKind::OdeFlow,
            params: vec![
                p("rate", s(1.0), "decay rate of x' = -rate x"),
                p("dim", s(1.0), "phase dimension"),
                p("step", s(0.01), "RK4 step size"),
            ],
            default_t: 1.0,
            documented_truths: vec![
                truth("the attractor is the origin", Exact, Some(0.0), Some(0.0)),
                truth("Hölder exponent in time equals 1", Analytic, Some(1.0), Some(0.1)),
            ],
        },
    ]
}

pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    list_systems()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownSystem(name.into()))
}

/// The catalog as a JSON document.
pub fn catalog_json() -> Value {
    json!({
        "schema": "catalog/1",
        "systems": list_systems(),
    })
}

/// Parameters with defaults filled in; rejects names outside the schema.
pub fn resolve_params(entry: &CatalogEntry, given: &Params) -> Result<Params> {
    for k in given.keys() {
        if !entry.params.iter().any(|p| &p.name == k) {
            return Err(Error::InvalidParameter(format!("{} has no parameter {k}", entry.name)));
        }
    }
    Ok(entry
        .params
        .iter()
        .map(|p| (p.name.clone(), given.get(&p.name).cloned().unwrap_or_else(|| p.default.clone())))
        .collect())
}

fn scalar(params: &Params, key: &str) -> Result<f64> {
    match params.get(key) {
        Some(ParamValue::Scalar(v)) if v.is_finite() => Ok(*v),
        Some(ParamValue::List(v)) if v.len() == 1 && v[0].is_finite() => Ok(v[0]),
        _ => Err(Error::InvalidParameter(format!("{key} must be a finite number"))),
    }
}

fn list(params: &Params, key: &str) -> Result<Vec<f64>> {
    let v = match params.get(key) {
        Some(ParamValue::Scalar(v)) => vec![*v],
        Some(ParamValue::List(v)) => v.clone(),
        None => Vec::new(),
    };
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{key} must be a nonempty list of finite numbers")));
    }
    Ok(v)
}

fn count(params: &Params, key: &str, max: usize) -> Result<usize> {
    let v = scalar(params, key)?;
    if v < 1.0 || v.fract() != 0.0 || v > max as f64 {
        return Err(Error::InvalidParameter(format!("{key} must be an integer in 1..={max}, got {v}")));
    }
    Ok(v as usize)
}

fn positive(params: &Params, key: &str) -> Result<f64> {
    let v = scalar(params, key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{key} must be positive, got {v}")))
    }
}

fn diagonal(d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

pub fn make_system(name: &str, given: &Params) -> Result<SystemSpec> {
    let entry = catalog_entry(name)?;
    let params = resolve_params(&entry, given)?;
    let sys = match name {
        "affine_contraction" => {
            let eta = scalar(&params, "eta")?;
            if !(eta.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!("eta must satisfy |eta| < 1, got {eta}")));
            }
            let c = match params.get("c") {
                Some(ParamValue::List(v)) => list(&params, "c").map(|_| v.clone())?,
                _ => vec![scalar(&params, "c")?; count(&params, "dim", 1 << 16)?],
            };
            let d = c.len();
            let jac = DMatrix::identity(d, d) * eta;
            SystemSpec::discrete(name, d, move |x, y| {
                for i in 0..x.len() {
                    y[i] = eta * x[i] + c[i];
                }
            })
            .with_jacobian(move |_| jac.clone())
        }
        "diag_linear" => {
            let d = list(&params, "diag")?;
            let jac = diagonal(&d);
            SystemSpec::discrete(name, d.len(), move |x, y| {
                for i in 0..x.len() {
                    y[i] = d[i] * x[i];
                }
            })
            .with_jacobian(move |_| jac.clone())
        }
        "henon" => {
            let (a, b) = (scalar(&params, "a")?, scalar(&params, "b")?);
            SystemSpec::discrete(name, 2, move |x, y| {
                y[0] = 1.0 - a * x[0] * x[0] + x[1];
                y[1] = b * x[0];
            })
            .with_jacobian(move |x| DMatrix::from_row_slice(2, 2, &[-2.0 * a * x[0], 1.0, b, 0.0]))
        }
        "logistic" => {
            let r = scalar(&params, "r")?;
            if !(0.0..=4.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("r must lie in [0, 4], got {r}")));
            }
            SystemSpec::discrete(name, 1, move |x, y| y[0] = r * x[0] * (1.0 - x[0]))
                .with_jacobian(move |x| DMatrix::from_element(1, 1, r * (1.0 - 2.0 * x[0])))
        }
        "lorenz63_timeT" => {
            let (sigma, rho, beta) = (scalar(&params, "sigma")?, scalar(&params, "rho")?, scalar(&params, "beta")?);
            SystemSpec::flow(name, 3, positive(&params, "step")?, move |x, y| {
                y[0] = sigma * (x[1] - x[0]);
                y[1] = x[0] * (rho - x[2]) - x[1];
                y[2] = x[0] * x[1] - beta * x[2];
            })?
        }
        "chafee_infante_galerkin" => {
            let lambda = scalar(&params, "lambda")?;
            let n = count(&params, "modes", MAX_GALERKIN_MODES)?;
            let cubic = cubic_coefficients(n);
            SystemSpec::flow(name, n, positive(&params, "step")?, move |u, du| {
                for j in 0..n {
                    let k = (j + 1) as f64;
                    du[j] = (lambda - k * k) * u[j];
                }
                for &(j, a, b, c, w) in &cubic {
                    du[j] -= w * u[a] * u[b] * u[c];
                }
            })?
        }
        "smoothing_demo" => {
            let (eta, gain) = (scalar(&params, "eta")?, scalar(&params, "gain")?);
            let d = count(&params, "dim", 1 << 16)?;
            let rank = count(&params, "rank", d)?;
            let jac_eta = eta;
            SystemSpec::discrete(name, d, move |x, y| {
                for i in 0..x.len() {
                    y[i] = eta * x[i] + if i < rank { gain * x[i].tanh() } else { 0.0 };
                }
            })
            .with_jacobian(move |x| {
                let v: Vec<f64> = (0..x.len())
                    .map(|i| {
                        let t = x[i].tanh();
                        jac_eta + if i < rank { gain * (1.0 - t * t) } else { 0.0 }
                    })
                    .collect();
                diagonal(&v)
            })
        }
        "linear_flow" => {
            let rate = scalar(&params, "rate")?;
            let d = count(&params, "dim", 1 << 16)?;
            SystemSpec::flow(name, d, positive(&params, "step")?, move |x, y| {
                for i in 0..x.len() {
                    y[i] = -rate * x[i];
                }
            })?
        }
        _ => unreachable!("catalog entry without constructor"),
    };
    Ok(sys.with_params(params))
}

/// Nonzero terms `(j, a, b, c, w)` of the sine-basis projection of `u³`:
/// `(u³)_j = Σ w·u_a u_b u_c` over mode indices starting at 0.
pub fn cubic_coefficients(n: usize) -> Vec<(usize, usize, usize, usize, f64)> {
    // (2/π)∫₀^π sin(ax) sin(bx) sin(cx) sin(jx) dx expanded into cosines.
    let delta = |m: i64, k: i64| (m == k) as i64 + (m == -k) as i64;
    let mut out = Vec::new();
    for j in 1..=n as i64 {
        for a in 1..=n as i64 {
            for b in 1..=n as i64 {
                for c in 1..=n as i64 {
                    let s = delta(a - b, c - j) - delta(a - b, c + j) - delta(a + b, c - j) + delta(a + b, c + j);
                    if s != 0 {
                        out.push((
                            (j - 1) as usize,
                            (a - 1) as usize,
                            (b - 1) as usize,
                            (c - 1) as usize,
                            s as f64 / 4.0,
                        ));
                    }
                }
            }
        }
    }
    out
}

/// The contraction / smoothing split of `smoothing_demo` and the coordinates spanning `Z`.
pub fn smoothing_split(given: &Params) -> Result<(SplitFn, Vec<usize>)> {
    let params = resolve_params(&catalog_entry("smoothing_demo")?, given)?;
    let (eta, gain) = (scalar(&params, "eta")?, scalar(&params, "gain")?);
    let d = count(&params, "dim", 1 << 16)?;
    let rank = count(&params, "rank", d)?;
    let split: SplitFn = Arc::new(move |x: &[f64]| {
        let c = x.iter().map(|v| eta * v).collect();
        let m = x
            .iter()
            .enumerate()
            .map(|(i, v)| if i < rank { gain * v.tanh() } else { 0.0 })
            .collect();
        (c, m)
    });
    Ok((split, (0..rank).collect()))
}

/// Parses `key=value` pairs, where a value is a number or a comma list.
pub fn parse_param(s: &str) -> Result<(String, ParamValue)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {s}")))?;
    let nums: std::result::Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
    let nums = nums.map_err(|_| Error::InvalidParameter(format!("cannot parse {v} for {k}")))?;
    let value = if nums.len() == 1 && !v.contains(',') {
        ParamValue::Scalar(nums[0])
    } else {
        ParamValue::List(nums)
    };
    Ok((k.trim().to_string(), value))
}
