//! Stability certificates fitted on sampled pairs, the implications between
//! them, and the closed-form dimension bounds they feed.

pub mod bounds;
pub mod c1;
pub mod derive;
pub mod holder;
pub mod pairs;
pub mod stability;

pub use bounds::{
    bound_c1, bound_holder, bound_ladyzhenskaya_hilbert, bound_quasi, bound_squeezing, bound_squeezing_volume,
    optimize_sigma, BoundParams, SigmaOptimum,
};
pub use c1::{certify_c1, jacobian_agreement, C1Cert, C1Sample, JacobianSource};
pub use derive::{
    derive_ladyzhenskaya_from_smoothing_hilbert, derive_quasi_from_squeezing, derive_smoothing_from_ladyzhenskaya,
    derive_squeezing_from_ladyzhenskaya,
};
pub use holder::{estimate_holder, holder_check, HolderCert};
pub use pairs::{axis_aligned_pairs, PairData, ValidationReport, Witness, DEFAULT_PAIR_COUNT};
pub use stability::{
    certify_generalized_squeezing, certify_ladyzhenskaya, certify_squeezing, estimate_quasi_stability,
    estimate_smoothing, validate_ladyzhenskaya, validate_quasi, validate_squeezing, KMap, LadyzhenskayaCert,
    Projector, QuasiStabilityCert, SmoothingCert, SplitFn, SqueezingCert, ZSpace, COMPACTNESS_CAVEAT,
};
