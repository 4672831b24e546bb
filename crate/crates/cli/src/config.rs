//! Run configuration: defaults, then the run directory's saved config, then
//! a TOML file, then `ATTRFORGE_SEED`, then command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use attrforge::systems::catalog_entry;
use attrforge::{ParamValue, Params};
use serde::{Deserialize, Serialize};

use crate::args::PipelineArgs;

pub const SEED_ENV: &str = "ATTRFORGE_SEED";

/// Marks errors that come from bad configuration rather than numerics.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: Option<String>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub probes: Option<usize>,
    pub half: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub horizon: Option<usize>,
    pub max_points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSection {
    pub k0: Option<usize>,
    pub kmax: Option<usize>,
    pub q_grid: Option<Vec<f64>>,
    pub a: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub kinds: Option<Vec<String>>,
    pub pairs: Option<usize>,
    pub rank: Option<usize>,
    pub c1_lambda: Option<f64>,
    pub holder_window: Option<[f64; 2]>,
    pub holder_points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub sigma: Option<f64>,
    pub grid: Option<usize>,
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimSection {
    pub source: Option<String>,
    pub burn_in: Option<usize>,
    pub keep: Option<usize>,
    pub seeds: Option<usize>,
    pub eps_hi: Option<f64>,
    pub eps_lo: Option<f64>,
    pub n_eps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub slack: Option<f64>,
}

/// Every layer has this shape; later layers fill in or replace fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub seed: Option<u64>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub cover: CoverSection,
    #[serde(default)]
    pub certify: CertifySection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub dim: DimSection,
    #[serde(default)]
    pub report: ReportSection,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($f:ident),+) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )+
    };
}

impl ConfigLayer {
    pub fn overlay(&mut self, top: &ConfigLayer) {
        if top.seed.is_some() {
            self.seed = top.seed;
        }
        if let Some(name) = &top.system.name {
            if self.system.name.as_ref() != Some(name) {
                self.system.params.clear();
                self.system.t = None;
            }
            self.system.name = Some(name.clone());
        }
        if top.system.t.is_some() {
            self.system.t = top.system.t;
        }
        for (k, v) in &top.system.params {
            self.system.params.insert(k.clone(), v.clone());
        }
        overlay!(self.sampling, top.sampling, probes, half, center, horizon, max_points);
        overlay!(self.cover, top.cover, k0, kmax, q_grid, a);
        overlay!(self.certify, top.certify, kinds, pairs, rank, c1_lambda, holder_window, holder_points);
        overlay!(self.bounds, top.bounds, sigma, grid, budget);
        overlay!(self.dim, top.dim, source, burn_in, keep, seeds, eps_hi, eps_lo, n_eps);
        overlay!(self.report, top.report, slack);
    }

    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved configuration, saved next to every stage's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub system: Option<String>,
    pub params: Params,
    #[serde(rename = "T")]
    pub t: f64,
    pub probes: usize,
    pub half: f64,
    pub center: Option<Vec<f64>>,
    pub horizon: usize,
    pub max_points: usize,
    pub k0: usize,
    pub kmax: usize,
    pub q_grid: Vec<f64>,
    pub cover_a: Option<f64>,
    pub kinds: Option<Vec<String>>,
    pub pairs: usize,
    pub rank: usize,
    pub c1_lambda: f64,
    pub holder_window: Option<[f64; 2]>,
    pub holder_points: usize,
    pub sigma: Option<f64>,
    pub sigma_grid: usize,
    pub budget: usize,
    pub dim_source: Option<String>,
    pub burn_in: usize,
    pub keep: usize,
    pub dim_seeds: usize,
    pub eps_hi: Option<f64>,
    pub eps_lo: Option<f64>,
    pub n_eps: usize,
    pub slack: f64,
}

pub fn default_q_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

impl RunConfig {
    fn resolve(layer: &ConfigLayer) -> anyhow::Result<Self> {
        let system = layer.system.name.clone();
        let (params, default_t) = match &system {
            Some(name) => {
                let entry = catalog_entry(name).map_err(|e| config_error(e.to_string()))?;
                let params = attrforge::systems::resolve_params(&entry, &layer.system.params)
                    .map_err(|e| config_error(e.to_string()))?;
                (params, entry.default_t)
            }
            None => (Params::new(), 1.0),
        };
        let c = RunConfig {
            seed: layer.seed.unwrap_or(0),
            system,
            params,
            t: layer.system.t.unwrap_or(default_t),
            probes: layer.sampling.probes.unwrap_or(100),
            half: layer.sampling.half.unwrap_or(2.0),
            center: layer.sampling.center.clone(),
            horizon: layer.sampling.horizon.unwrap_or(1000),
            max_points: layer.sampling.max_points.unwrap_or(2000),
            k0: layer.cover.k0.unwrap_or(1),
            kmax: layer.cover.kmax.unwrap_or(16),
            q_grid: layer.cover.q_grid.clone().unwrap_or_else(default_q_grid),
            cover_a: layer.cover.a,
            kinds: layer.certify.kinds.clone(),
            pairs: layer.certify.pairs.unwrap_or(attrforge::certifiers::DEFAULT_PAIR_COUNT),
            rank: layer.certify.rank.unwrap_or(1),
            c1_lambda: layer.certify.c1_lambda.unwrap_or(0.1),
            holder_window: layer.certify.holder_window,
            holder_points: layer.certify.holder_points.unwrap_or(41),
            sigma: layer.bounds.sigma,
            sigma_grid: layer.bounds.grid.unwrap_or(200),
            budget: layer.bounds.budget.unwrap_or(4000),
            dim_source: layer.dim.source.clone(),
            burn_in: layer.dim.burn_in.unwrap_or(1000),
            keep: layer.dim.keep.unwrap_or(10_000),
            dim_seeds: layer.dim.seeds.unwrap_or(10),
            eps_hi: layer.dim.eps_hi,
            eps_lo: layer.dim.eps_lo,
            n_eps: layer.dim.n_eps.unwrap_or(8),
            slack: layer.report.slack.unwrap_or(0.3),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> anyhow::Result<()> {
        let bad = |m: String| Err(config_error(m));
        if !(self.t > 0.0) || !self.t.is_finite() {
            return bad(format!("T must be positive, got {}", self.t));
        }
        if self.probes == 0 || self.horizon < 2 {
            return bad("need at least one probe and a horizon of at least 2".into());
        }
        if !(self.half > 0.0) {
            return bad(format!("sampling half-width must be positive, got {}", self.half));
        }
        if self.k0 == 0 || self.kmax < self.k0 {
            return bad(format!("need 1 ≤ k0 ≤ kmax, got k0 = {}, kmax = {}", self.k0, self.kmax));
        }
        if self.q_grid.is_empty() || self.q_grid.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return bad("q grid must be nonempty with entries in (0, 1)".into());
        }
        if self.n_eps < 3 {
            return bad("need at least three radii for box counting".into());
        }
        if let Some(src) = &self.dim_source {
            if !["omega", "e0", "b"].contains(&src.as_str()) {
                return bad(format!("unknown dimension source {src}; expected omega, e0 or b"));
            }
        }
        Ok(())
    }

    pub fn system_name(&self) -> anyhow::Result<&str> {
        match &self.system {
            Some(s) => Ok(s),
            None => bail!(ConfigError(
                "no system given; pass --system or set [system] name in the config".into()
            )),
        }
    }

    pub fn center(&self, dim: usize) -> anyhow::Result<Vec<f64>> {
        match &self.center {
            Some(c) if c.len() == dim => Ok(c.clone()),
            Some(c) => Err(config_error(format!("center has {} entries, system dimension is {dim}", c.len()))),
            None => Ok(vec![0.0; dim]),
        }
    }
}

pub const CONFIG_FILE: &str = "config.json";

/// The run directory's saved configuration as a layer, if present.
fn saved_layer(run: &Path) -> anyhow::Result<Option<ConfigLayer>> {
    let path = run.join(CONFIG_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let c: RunConfig = serde_json::from_value(v["config"].clone())
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    Ok(Some(ConfigLayer {
        seed: Some(c.seed),
        system: SystemSection {
            name: c.system,
            t: Some(c.t),
            params: c.params,
        },
        sampling: SamplingSection {
            probes: Some(c.probes),
            half: Some(c.half),
            center: c.center,
            horizon: Some(c.horizon),
            max_points: Some(c.max_points),
        },
        cover: CoverSection {
            k0: Some(c.k0),
            kmax: Some(c.kmax),
            q_grid: Some(c.q_grid),
            a: c.cover_a,
        },
        certify: CertifySection {
            kinds: c.kinds,
            pairs: Some(c.pairs),
            rank: Some(c.rank),
            c1_lambda: Some(c.c1_lambda),
            holder_window: c.holder_window,
            holder_points: Some(c.holder_points),
        },
        bounds: BoundsSection {
            sigma: c.sigma,
            grid: Some(c.sigma_grid),
            budget: Some(c.budget),
        },
        dim: DimSection {
            source: c.dim_source,
            burn_in: Some(c.burn_in),
            keep: Some(c.keep),
            seeds: Some(c.dim_seeds),
            eps_hi: c.eps_hi,
            eps_lo: c.eps_lo,
            n_eps: Some(c.n_eps),
        },
        report: ReportSection { slack: Some(c.slack) },
    }))
}

fn env_layer() -> anyhow::Result<ConfigLayer> {
    let mut layer = ConfigLayer::default();
    if let Ok(v) = std::env::var(SEED_ENV) {
        let seed = v
            .trim()
            .parse()
            .map_err(|_| config_error(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
        layer.seed = Some(seed);
    }
    Ok(layer)
}

pub fn load(run: &Path, args: &PipelineArgs) -> anyhow::Result<RunConfig> {
    let mut layer = saved_layer(run)?.unwrap_or_default();
    if let Some(path) = &args.config {
        layer.overlay(&ConfigLayer::from_toml_file(path)?);
    }
    layer.overlay(&env_layer()?);
    layer.overlay(&args.to_layer()?);
    RunConfig::resolve(&layer)
}

pub fn save(run: &Path, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let v = serde_json::json!({ "schema": "config/1", "config": cfg });
    let path = run.join(CONFIG_FILE);
    fs::write(&path, attrforge::to_pretty_json(&v)?)?;
    Ok(PathBuf::from(CONFIG_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_layers_win() {
        let mut base: ConfigLayer = toml::from_str(
            r#"
            seed = 3
            [system]
            name = "henon"
            params = { a = 1.2 }
            [cover]
            kmax = 7
            "#,
        )
        .unwrap();
        let top = ConfigLayer {
            seed: Some(9),
            cover: CoverSection {
                kmax: Some(12),
                ..Default::default()
            },
            ..Default::default()
        };
        base.overlay(&top);
        let c = RunConfig::resolve(&base).unwrap();
        assert_eq!((c.seed, c.kmax), (9, 12));
        assert_eq!(c.params["a"], ParamValue::Scalar(1.2));
        assert_eq!(c.params["b"], ParamValue::Scalar(0.3));
    }

    #[test]
    fn switching_system_drops_old_params() {
        let mut base: ConfigLayer = toml::from_str("[system]\nname = \"henon\"\nparams = { a = 1.2 }").unwrap();
        let top: ConfigLayer = toml::from_str("[system]\nname = \"logistic\"").unwrap();
        base.overlay(&top);
        let c = RunConfig::resolve(&base).unwrap();
        assert!(!c.params.contains_key("a"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ConfigLayer>("[cover]\nkmx = 3").is_err());
        let bad: ConfigLayer = toml::from_str("[system]\nname = \"nope\"").unwrap();
        assert!(RunConfig::resolve(&bad).is_err());
    }
}
