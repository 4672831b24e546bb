pub mod builder;
pub mod capacity;
pub mod certifiers;
pub mod covering;
pub mod error;
pub mod io;
pub mod metric;
pub mod semigroup;
pub mod systems;

pub use builder::{build_e0, AttractorApproximation};
pub use covering::{fit_certificate, CoveringCertificate};
pub use error::{Error, Result};
pub use metric::{FinitePointSet, MetricTag, PseudometricSpec};
pub use semigroup::{ParamValue, Params, ScalarField, SystemKind, SystemSpec};
pub use systems::{list_systems, make_system, CatalogEntry};

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_pretty_json(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}
