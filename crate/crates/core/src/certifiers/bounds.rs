//! Closed-form fractal dimension bounds and the choice of `σ`.

use serde::{Deserialize, Serialize};

use crate::capacity::MzEvaluator;
use crate::covering::dim_bound;
use crate::error::{Error, Result};
use crate::semigroup::ScalarField;

fn check_nonneg(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be a nonnegative number, got {v}")));
        }
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    check_nonneg(&[("η", eta)])?;
    if eta >= 1.0 {
        return Err(Error::EmptyAdmissibleInterval);
    }
    Ok(())
}

/// `𝐧·ln(1 + x) / ln(1/q)`, with `0` when the log term vanishes.
fn log_ratio(nn: usize, x: f64, q: f64) -> f64 {
    let num = nn as f64 * x.ln_1p();
    if num == 0.0 {
        0.0
    } else {
        num / (1.0 / q).ln()
    }
}

/// `ln m_Z(σ/2κ) / ln(1/(η+σ))` for `σ ∈ (0, 1−η)`; `+∞` outside.
pub fn bound_quasi<F>(eta: f64, kappa: f64, sigma: f64, mz: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    check_eta(eta)?;
    check_nonneg(&[("κ", kappa)])?;
    if !(sigma > 0.0 && sigma < 1.0 - eta) {
        return Ok(f64::INFINITY);
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let m = mz(sigma / (2.0 * kappa))?;
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("packing count {m} below 1")));
    }
    Ok(if m == 1.0 { 0.0 } else { m.ln() / (1.0 / (eta + sigma)).ln() })
}

/// `𝐧·ln(1 + 2κμ d_BM/σ) / ln(1/(η+σ))` for `σ ∈ (0, 1−η)`.
pub fn bound_squeezing(n: usize, eta: f64, mu: f64, kappa: f64, sigma: f64, d_bm: f64, field: ScalarField) -> Result<f64> {
    squeezing_form(2.0, n, eta, mu, kappa, sigma, d_bm, field)
}

/// The volume-comparison form with `4κμ d_BM/σ` in place of `2κμ d_BM/σ`.
pub fn bound_squeezing_volume(
    n: usize,
    eta: f64,
    mu: f64,
    kappa: f64,
    sigma: f64,
    d_bm: f64,
    field: ScalarField,
) -> Result<f64> {
    squeezing_form(4.0, n, eta, mu, kappa, sigma, d_bm, field)
}

#[allow(clippy::too_many_arguments)]
fn squeezing_form(
    factor: f64,
    n: usize,
    eta: f64,
    mu: f64,
    kappa: f64,
    sigma: f64,
    d_bm: f64,
    field: ScalarField,
) -> Result<f64> {
    check_eta(eta)?;
    check_nonneg(&[("μ", mu), ("κ", kappa), ("d_BM", d_bm)])?;
    if !(sigma > 0.0 && sigma < 1.0 - eta) {
        return Ok(f64::INFINITY);
    }
    Ok(log_ratio(field.real_dim(n), factor * kappa * mu * d_bm / sigma, eta + sigma))
}

/// `𝐧·ln(1 + 2κ/σ) / ln(1/√(σ²+η²))` for `σ ∈ (0, √(1−η²))`.
pub fn bound_ladyzhenskaya_hilbert(n: usize, eta: f64, kappa: f64, sigma: f64, field: ScalarField) -> Result<f64> {
    check_eta(eta)?;
    check_nonneg(&[("κ", kappa)])?;
    if !(sigma > 0.0 && sigma < (1.0 - eta * eta).sqrt()) {
        return Ok(f64::INFINITY);
    }
    Ok(log_ratio(field.real_dim(n), 2.0 * kappa / sigma, sigma.hypot(eta)))
}

/// `𝐧·ln(1 + 8√n M/σ) / ln(1/(σ+4λ))` for `σ ∈ (0, 1−4λ)`.
pub fn bound_c1(n: usize, m: f64, lambda: f64, sigma: f64, field: ScalarField) -> Result<f64> {
    check_nonneg(&[("M", m), ("λ", lambda)])?;
    if !(lambda > 0.0 && lambda < 0.25) {
        return Err(Error::EmptyAdmissibleInterval);
    }
    if !(sigma > 0.0 && sigma < 1.0 - 4.0 * lambda) {
        return Ok(f64::INFINITY);
    }
    Ok(log_ratio(
        field.real_dim(n),
        8.0 * (n as f64).sqrt() * m / sigma,
        sigma + 4.0 * lambda,
    ))
}

/// `1/ν + ln h / ln(1/q)`.
pub fn bound_holder(q: f64, h: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("ν must be positive, got {nu}")));
    }
    if !(q > 0.0 && q < 1.0) || !(h >= 1.0) {
        return Err(Error::InvalidParameter(format!("need q ∈ (0,1) and h ≥ 1, got q = {q}, h = {h}")));
    }
    Ok(1.0 / nu + dim_bound(q, h))
}

/// A bound family in `σ` with its fixed parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "kebab-case")]
pub enum BoundParams {
    Quasi {
        eta: f64,
        kappa: f64,
        mz: MzEvaluator,
    },
    Squeezing {
        n: usize,
        eta: f64,
        mu: f64,
        kappa: f64,
        d_bm: f64,
        field: ScalarField,
    },
    SqueezingVolume {
        n: usize,
        eta: f64,
        mu: f64,
        kappa: f64,
        d_bm: f64,
        field: ScalarField,
    },
    LadyzhenskayaHilbert {
        n: usize,
        eta: f64,
        kappa: f64,
        field: ScalarField,
    },
    C1 {
        n: usize,
        m: f64,
        lambda: f64,
        field: ScalarField,
    },
}

impl BoundParams {
    pub fn id(&self) -> &'static str {
        match self {
            BoundParams::Quasi { .. } => "quasi",
            BoundParams::Squeezing { .. } => "squeezing",
            BoundParams::SqueezingVolume { .. } => "squeezing-volume",
            BoundParams::LadyzhenskayaHilbert { .. } => "ladyzhenskaya-hilbert",
            BoundParams::C1 { .. } => "c1",
        }
    }

    /// Open interval of admissible `σ`.
    pub fn interval(&self) -> Result<(f64, f64)> {
        let hi = match self {
            BoundParams::Quasi { eta, .. }
            | BoundParams::Squeezing { eta, .. }
            | BoundParams::SqueezingVolume { eta, .. } => 1.0 - eta,
            BoundParams::LadyzhenskayaHilbert { eta, .. } => (1.0 - eta * eta).max(0.0).sqrt(),
            BoundParams::C1 { lambda, .. } => 1.0 - 4.0 * lambda,
        };
        if !(hi > 0.0) || !hi.is_finite() {
            return Err(Error::EmptyAdmissibleInterval);
        }
        Ok((0.0, hi))
    }

    pub fn eval(&self, sigma: f64) -> Result<f64> {
        match self {
            BoundParams::Quasi { eta, kappa, mz } => bound_quasi(*eta, *kappa, sigma, |e| mz.eval(e)),
            BoundParams::Squeezing {
                n,
                eta,
                mu,
                kappa,
                d_bm,
                field,
            } => bound_squeezing(*n, *eta, *mu, *kappa, sigma, *d_bm, *field),
            BoundParams::SqueezingVolume {
                n,
                eta,
                mu,
                kappa,
                d_bm,
                field,
            } => bound_squeezing_volume(*n, *eta, *mu, *kappa, sigma, *d_bm, *field),
            BoundParams::LadyzhenskayaHilbert { n, eta, kappa, field } => {
                bound_ladyzhenskaya_hilbert(*n, *eta, *kappa, sigma, *field)
            }
            BoundParams::C1 { n, m, lambda, field } => bound_c1(*n, *m, *lambda, sigma, *field),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaOptimum {
    pub sigma: f64,
    pub bound: f64,
}

/// Log-spaced scan `σ_i = hi·10^{−6+6i/G}`, `i < G`, followed by
/// golden-section refinement between the neighbours of the best grid point.
pub fn optimize_sigma(params: &BoundParams, grid_size: usize) -> Result<SigmaOptimum> {
    if grid_size < 8 {
        return Err(Error::InvalidArgument(format!("grid size {grid_size} is below 8")));
    }
    let (_, hi) = params.interval()?;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| hi * 10f64.powf(-6.0 + 6.0 * i as f64 / grid_size as f64))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&s| params.eval(s)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let mut opt = SigmaOptimum {
        sigma: grid[best],
        bound: values[best],
    };
    let mut a = grid[best.saturating_sub(1)];
    let mut b = if best + 1 < grid.len() {
        grid[best + 1]
    } else {
        hi * (1.0 - 1e-12)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (params.eval(c)?, params.eval(d)?);
    for _ in 0..200 {
        if (b - a) <= 1e-12 * hi {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = params.eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = params.eval(d)?;
        }
    }
    for (s, v) in [(c, fc), (d, fd)] {
        if v < opt.bound {
            opt = SigmaOptimum { sigma: s, bound: v };
        }
    }
    Ok(opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::NormPair;
    use approx::assert_relative_eq;

    const R: ScalarField = ScalarField::Real;

    #[test]
    fn spot_values() {
        let sq = bound_squeezing(1, 0.3, 1.0, 0.9, 0.5, 1.0, R).unwrap();
        assert_relative_eq!(sq, 4.6f64.ln() / 1.25f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(sq, 6.8389, epsilon = 5e-5);
        let lh = bound_ladyzhenskaya_hilbert(1, 0.3, 0.9, 0.5, R).unwrap();
        assert_relative_eq!(lh, 4.6f64.ln() / (1.0 / 0.34f64.sqrt()).ln(), max_relative = 1e-15);
        assert_relative_eq!(lh, 2.829, epsilon = 5e-4);
        assert_eq!(bound_holder(0.5, 4.0, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn complex_field_doubles() {
        let r = bound_squeezing(2, 0.3, 1.0, 0.9, 0.5, 1.0, R).unwrap();
        let c = bound_squeezing(2, 0.3, 1.0, 0.9, 0.5, 1.0, ScalarField::Complex).unwrap();
        assert_relative_eq!(c, 2.0 * r, max_relative = 1e-15);
    }

    #[test]
    fn out_of_range_sigma_is_infinite() {
        assert!(bound_squeezing(1, 0.3, 1.0, 0.9, 0.7, 1.0, R).unwrap().is_infinite());
        assert!(bound_c1(1, 0.9, 0.1, 0.6, R).unwrap().is_infinite());
        assert!(bound_squeezing(1, -0.1, 1.0, 0.9, 0.5, 1.0, R).is_err());
    }

    #[test]
    fn optimum_beats_the_midpoint() {
        let p = BoundParams::Squeezing {
            n: 1,
            eta: 0.3,
            mu: 1.0,
            kappa: 0.9,
            d_bm: 1.0,
            field: R,
        };
        let o64 = optimize_sigma(&p, 64).unwrap();
        let o128 = optimize_sigma(&p, 128).unwrap();
        assert!(o64.sigma > 0.0 && o64.sigma < 0.7);
        assert!(o64.bound <= p.eval(0.5).unwrap());
        assert!((o64.sigma - o128.sigma).abs() < 1e-3);
        let dense = (1..100_000)
            .map(|i| p.eval(0.7 * i as f64 / 100_000.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(o64.bound <= dense + 1e-9);
    }

    #[test]
    fn degenerate_family_is_zero() {
        let p = BoundParams::LadyzhenskayaHilbert {
            n: 3,
            eta: 0.5,
            kappa: 0.0,
            field: R,
        };
        assert_eq!(optimize_sigma(&p, 16).unwrap().bound, 0.0);
    }

    #[test]
    fn empty_interval_and_small_grid() {
        let p = BoundParams::C1 {
            n: 1,
            m: 1.0,
            lambda: 0.3,
            field: R,
        };
        assert!(optimize_sigma(&p, 16).is_err());
        let q = BoundParams::Squeezing {
            n: 1,
            eta: 0.3,
            mu: 1.0,
            kappa: 0.9,
            d_bm: 1.0,
            field: R,
        };
        assert!(optimize_sigma(&q, 7).is_err());
    }

    #[test]
    fn quasi_bound_with_volume_evaluator() {
        let mz = MzEvaluator::VolumeUpperBound {
            pair: NormPair::euclidean(1),
        };
        // m ≤ 1 + 2/ε with ε = σ/2κ = 0.25
        let v = bound_quasi(0.3, 1.0, 0.5, |e| mz.eval(e)).unwrap();
        assert_relative_eq!(v, 9f64.ln() / 1.25f64.ln(), max_relative = 1e-15);
    }
}
