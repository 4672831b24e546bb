use super::stability::{KMap, LadyzhenskayaCert, Projector, QuasiStabilityCert, SmoothingCert, SqueezingCert, ZSpace};
use crate::capacity::unit_ball_net;
use crate::error::{Error, Result};
use crate::metric::MetricTag;

/// Squeezing with `(n, η, μ, κ)` gives quasi-stability with `(η, κμ)` for
/// `Kx = μ·P(S(T)x)` and `𝔫_Z` the norm of `X_n`.
pub fn derive_quasi_from_squeezing(c: &SqueezingCert) -> QuasiStabilityCert {
    QuasiStabilityCert {
        eta: c.eta,
        kappa: c.kappa * c.mu,
        k_map: KMap::Image {
            p: c.p.clone(),
            scale: c.mu,
        },
        seminorm: None,
        t: c.t,
        n_pairs: c.n_pairs,
        margin: None,
        eta_witness: None,
        kappa_witness: None,
    }
}

/// Ladyzhenskaya `(n, η, κ)` gives generalized squeezing `(n, η, 1, κ)`.
pub fn derive_squeezing_from_ladyzhenskaya(c: &LadyzhenskayaCert) -> SqueezingCert {
    SqueezingCert {
        n: c.n,
        eta: c.eta,
        mu: 1.0,
        kappa: c.kappa,
        p: c.p.as_pseudometric(c.metric.clone()),
        generalized: true,
        t: c.t,
        n_pairs: c.n_pairs,
        branch_counts: None,
        eta_witness: None,
        kappa_witness: None,
    }
}

/// Ladyzhenskaya `(n, η, κ)` gives smoothing `(η, κ)` with `C = (I−P)S(T)`,
/// `M = PS(T)` and `Z` the range of `P`.
pub fn derive_smoothing_from_ladyzhenskaya(c: &LadyzhenskayaCert) -> SmoothingCert {
    SmoothingCert {
        eta: c.eta,
        kappa: c.kappa,
        z: ZSpace::Range(c.p.clone()),
        metric: c.metric.clone(),
        dim: c.p.dim(),
        t: c.t,
        n_pairs: c.n_pairs,
        eta_witness: None,
        kappa_witness: None,
    }
}

/// Smoothing `(η, κ)` in a euclidean space gives Ladyzhenskaya type with
/// `(n, η + εκ, η + κ)`, where `P` projects orthogonally onto the span of an
/// `ε`-net of the unit ball of `Z`.
pub fn derive_ladyzhenskaya_from_smoothing_hilbert(c: &SmoothingCert, eps: f64) -> Result<LadyzhenskayaCert> {
    if c.metric != MetricTag::Euclidean {
        return Err(Error::InvalidArgument("a euclidean metric is required".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let eta = c.eta + eps * c.kappa;
    if !(eta < 1.0) {
        return Err(Error::EpsilonTooLarge(eta));
    }
    let basis = c.z.basis(c.dim);
    let net = unit_ball_net(basis.len(), eps)?;
    let embedded: Vec<Vec<f64>> = net
        .iter()
        .map(|v| {
            (0..c.dim)
                .map(|r| v.iter().zip(&basis).map(|(a, e)| a * e[r]).sum())
                .collect()
        })
        .collect();
    let p = Projector::onto_span(c.dim, &embedded)?;
    Ok(LadyzhenskayaCert {
        n: p.rank(),
        eta,
        // The embedding of Z into X has constant 1 here.
        kappa: c.eta + c.kappa,
        hilbert: true,
        p,
        metric: c.metric.clone(),
        t: c.t,
        n_pairs: c.n_pairs,
        eta_witness: None,
        kappa_witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifiers::pairs::PairData;
    use crate::certifiers::stability::*;
    use crate::metric::{FinitePointSet, PseudometricSpec};
    use crate::semigroup::SystemSpec;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn diag_data() -> PairData {
        let sys = SystemSpec::discrete("diag", 2, |x, y| {
            y[0] = 0.9 * x[0];
            y[1] = 0.3 * x[1];
        });
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 9, 2).unwrap();
        PairData::sample(&sys, b, 1.0, 1000, 11, true).unwrap()
    }

    #[test]
    fn squeezing_to_quasi_parameters() {
        let data = diag_data();
        let mut sq = certify_generalized_squeezing(&data, PseudometricSpec::first_coordinates(1), 1.0).unwrap();
        sq.mu = 2.0;
        sq.eta = 0.3;
        sq.kappa = 0.9;
        let q = derive_quasi_from_squeezing(&sq);
        assert_eq!(q.eta, 0.3);
        assert_relative_eq!(q.kappa, 1.8);
        assert!(validate_quasi(&data, &q).passed());
    }

    #[test]
    fn ladyzhenskaya_chain_revalidates() {
        let data = diag_data();
        let lady = certify_ladyzhenskaya(&data, Projector::coordinate(2, &[0]).unwrap()).unwrap();
        let sq = derive_squeezing_from_ladyzhenskaya(&lady);
        assert_eq!((sq.n, sq.mu), (1, 1.0));
        assert_eq!((sq.eta, sq.kappa), (lady.eta, lady.kappa));
        assert!(validate_squeezing(&data, &sq).passed());
        let q = derive_quasi_from_squeezing(&sq);
        assert!(validate_quasi(&data, &q).passed());
        let sm = derive_smoothing_from_ladyzhenskaya(&lady);
        assert_eq!((sm.eta, sm.kappa), (lady.eta, lady.kappa));
    }

    fn smoothing_demo_data() -> (PairData, SplitFn) {
        let sys = SystemSpec::discrete("sm", 2, |x, y| {
            y[0] = 0.2 * x[0] + 0.5 * x[0];
            y[1] = 0.2 * x[1];
        });
        let b = FinitePointSet::grid_cube(-1.0, 1.0, 7, 2).unwrap();
        let data = PairData::sample(&sys, b, 1.0, 500, 8, true).unwrap();
        let split: SplitFn = Arc::new(|x: &[f64]| (vec![0.2 * x[0], 0.2 * x[1]], vec![0.5 * x[0], 0.0]));
        (data, split)
    }

    #[test]
    fn smoothing_to_ladyzhenskaya() {
        let (data, split) = smoothing_demo_data();
        let sm = estimate_smoothing(&data, &split, vec![0]).unwrap();
        let lady = derive_ladyzhenskaya_from_smoothing_hilbert(&sm, 0.1).unwrap();
        assert_eq!(lady.n, 1);
        assert_relative_eq!(lady.eta, 0.25, max_relative = 1e-12);
        assert!(lady.hilbert);
        assert!(validate_ladyzhenskaya(&data, &lady).passed());
        match derive_ladyzhenskaya_from_smoothing_hilbert(&sm, 1.7) {
            Err(Error::EpsilonTooLarge(v)) => assert_relative_eq!(v, sm.eta + 1.7 * sm.kappa, max_relative = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_smoothing_part_keeps_eta() {
        let (data, _) = smoothing_demo_data();
        let split: SplitFn = Arc::new(|x: &[f64]| (vec![0.7 * x[0], 0.2 * x[1]], vec![0.0, 0.0]));
        let sm = estimate_smoothing(&data, &split, vec![0]).unwrap();
        assert_eq!(sm.kappa, 0.0);
        let lady = derive_ladyzhenskaya_from_smoothing_hilbert(&sm, 0.3).unwrap();
        assert_eq!(lady.eta, sm.eta);
    }
}
