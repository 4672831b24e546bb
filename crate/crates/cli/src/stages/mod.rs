use std::path::PathBuf;

use attrforge::{make_system, FinitePointSet, MetricTag, SystemSpec};

use crate::config::RunConfig;

pub mod absorb;
pub mod bounds;
pub mod build;
pub mod capacity;
pub mod certify;
pub mod cover;
pub mod dim;
pub mod report;
pub mod systems;

pub const B_FILE: &str = "B.csv";
pub const CERT_FILE: &str = "certificate.json";
pub const CERTS_DIR: &str = "certs";

/// A required input from an earlier stage is absent.
#[derive(Debug)]
pub struct MissingArtifact {
    pub path: PathBuf,
    pub stage: &'static str,
}

impl std::fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} not found; run the `{}` stage first", self.path.display(), self.stage)
    }
}

impl std::error::Error for MissingArtifact {}

pub struct Ctx {
    pub run: PathBuf,
    pub cfg: RunConfig,
}

impl Ctx {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.run.join(rel)
    }

    pub fn require(&self, rel: &str, stage: &'static str) -> anyhow::Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(MissingArtifact { path: p, stage }.into())
        }
    }

    pub fn system(&self) -> anyhow::Result<SystemSpec> {
        Ok(make_system(self.cfg.system_name()?, &self.cfg.params)?)
    }

    pub fn load_b(&self, stage: &'static str) -> anyhow::Result<FinitePointSet> {
        let p = self.require(B_FILE, stage)?;
        Ok(attrforge::io::load_csv(&p, MetricTag::Euclidean)?)
    }

    /// Probe box from the sampling configuration.
    pub fn probes(&self, sys: &SystemSpec, n: usize, seed: u64) -> anyhow::Result<FinitePointSet> {
        let center = self.cfg.center(sys.phase_dim())?;
        Ok(attrforge::semigroup::uniform_box(&center, self.cfg.half, n, seed)?)
    }
}
