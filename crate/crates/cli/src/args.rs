use std::path::PathBuf;

use attrforge::systems::{catalog_entry, parse_param};
use clap::{Args, Parser, Subcommand};

use crate::config::{
    config_error, BoundsSection, CertifySection, ConfigLayer, CoverSection, DimSection, ReportSection,
    SamplingSection, SystemSection,
};

#[derive(Debug, Parser)]
#[command(name = "attrforge", version, about = "Finite approximations of exponential attractors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in systems and their parameters.
    Systems(SystemsArgs),
    /// Estimate an absorbing ball and sample the absorbed set B.
    Absorb(StageArgs),
    /// Fit or check the covering condition on B.
    Cover(CoverArgs),
    /// Run the recursion and build E0.
    Build(StageArgs),
    /// Fit stability certificates on pairs drawn from B.
    Certify(StageArgs),
    /// Evaluate dimension bounds from the certificates.
    Bounds(BoundsArgs),
    /// Box-counting dimension of a sampled set.
    Dim(DimArgs),
    /// Packing numbers of finite-dimensional unit balls.
    Capacity(CapacityArgs),
    /// Collate stage outputs and cross-check bounds against the box dimension.
    Report(StageArgs),
}

#[derive(Debug, Args)]
pub struct SystemsArgs {
    /// Also write catalog.json into this directory.
    #[arg(long, alias = "run")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub verify_repro: bool,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Check a given q instead of fitting one.
    #[arg(long, requires = "check_h")]
    pub check_q: Option<f64>,
    #[arg(long, requires = "check_q")]
    pub check_h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub check_b: f64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Certificate directory written by `certify`; defaults to `<run>/certs`.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Minimize each bound over σ. This is the default unless --bound-sigma is set.
    #[arg(long)]
    pub optimize_sigma: bool,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Point file (CSV or ATRF) to measure instead of a pipeline set.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long = "n", value_delimiter = ',', default_value = "1,2,3")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25")]
    pub eps: Vec<f64>,
    /// One of l1, l2, linf.
    #[arg(long, default_value = "l2")]
    pub norm_x: String,
    #[arg(long, default_value = "l2")]
    pub norm_y: String,
    #[arg(long, default_value = "real")]
    pub field: String,
    /// Random insertion attempts per packing.
    #[arg(long, default_value_t = attrforge::capacity::DEFAULT_PACKING_BUDGET)]
    pub packing_budget: usize,
}

/// Flags shared by the pipeline stages. Every one of them overrides the
/// matching configuration entry.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory holding the artifacts of every stage.
    #[arg(long, alias = "out", default_value = ".")]
    pub run: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Rerun the stage on a copy of the run directory and compare outputs byte for byte.
    #[arg(long)]
    pub verify_repro: bool,

    #[arg(long)]
    pub system: Option<String>,
    /// System parameter as key=value or key=v1,v2,...
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long = "T")]
    pub t: Option<f64>,

    #[arg(long)]
    pub probes: Option<usize>,
    /// Half-width of the probe box.
    #[arg(long)]
    pub half: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub max_points: Option<usize>,

    #[arg(long)]
    pub k0: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub q_grid: Option<Vec<f64>>,
    /// Ball radius constant a of the covering condition.
    #[arg(long)]
    pub cover_a: Option<f64>,

    /// Certificate kinds to fit: ladyzhenskaya, smoothing, c1, holder.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Rank of the coordinate projection used by the projection certificates.
    #[arg(long)]
    pub proj_rank: Option<usize>,
    #[arg(long)]
    pub c1_lambda: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub holder_window: Option<Vec<f64>>,
    #[arg(long)]
    pub holder_points: Option<usize>,

    /// Evaluate bounds at this σ instead of optimizing.
    #[arg(long)]
    pub bound_sigma: Option<f64>,
    #[arg(long)]
    pub sigma_grid: Option<usize>,
    /// Insertion budget for packing-based m_Z evaluations.
    #[arg(long)]
    pub mz_budget: Option<usize>,

    /// Set measured by `dim`: omega, e0 or b.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub dim_seeds: Option<usize>,
    #[arg(long)]
    pub eps_hi: Option<f64>,
    #[arg(long)]
    pub eps_lo: Option<f64>,
    #[arg(long)]
    pub n_eps: Option<usize>,

    /// Tolerance added to every bound in the report cross-check.
    #[arg(long)]
    pub slack: Option<f64>,
}

impl PipelineArgs {
    pub fn to_layer(&self) -> anyhow::Result<ConfigLayer> {
        let mut params = std::collections::BTreeMap::new();
        for p in &self.params {
            let (k, v) = parse_param(p).map_err(|e| config_error(e.to_string()))?;
            params.insert(k, v);
        }
        let holder_window = match &self.holder_window {
            None => None,
            Some(w) if w.len() == 2 => Some([w[0], w[1]]),
            Some(w) => return Err(config_error(format!("holder window needs two times, got {}", w.len()))),
        };
        Ok(ConfigLayer {
            seed: self.seed,
            system: SystemSection {
                name: self.system.clone(),
                t: self.t,
                params,
            },
            sampling: SamplingSection {
                probes: self.probes,
                half: self.half,
                center: self.center.clone(),
                horizon: self.horizon,
                max_points: self.max_points,
            },
            cover: CoverSection {
                k0: self.k0,
                kmax: self.kmax,
                q_grid: self.q_grid.clone(),
                a: self.cover_a,
            },
            certify: CertifySection {
                kinds: self.kinds.clone(),
                pairs: self.pairs,
                rank: self.proj_rank,
                c1_lambda: self.c1_lambda,
                holder_window,
                holder_points: self.holder_points,
            },
            bounds: BoundsSection {
                sigma: self.bound_sigma,
                grid: self.sigma_grid,
                budget: self.mz_budget,
            },
            dim: DimSection {
                source: self.source.clone(),
                burn_in: self.burn_in,
                keep: self.keep,
                seeds: self.dim_seeds,
                eps_hi: self.eps_hi,
                eps_lo: self.eps_lo,
                n_eps: self.n_eps,
            },
            report: ReportSection { slack: self.slack },
        })
    }
}

/// Rewrites `--<name> v` into `--param <name>=v` for every parameter of the
/// system named by `--system`, so catalog parameters can be passed directly.
pub fn rewrite_param_flags(argv: Vec<String>) -> Vec<String> {
    let system = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--system" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--system=").map(str::to_string)
        }
    });
    let Some(entry) = system.and_then(|s| catalog_entry(&s).ok()) else {
        return argv;
    };
    let is_param = |name: &str| entry.params.iter().any(|p| p.name == name);
    let mut out = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            out.push(a);
            continue;
        };
        match flag.split_once('=') {
            Some((name, v)) if is_param(name) => {
                out.push("--param".into());
                out.push(format!("{name}={v}"));
            }
            None if is_param(flag) => {
                let name = flag.to_string();
                out.push("--param".into());
                match it.next() {
                    Some(v) => out.push(format!("{name}={v}")),
                    None => out.push(name),
                }
            }
            _ => out.push(a),
        }
    }
    out
}
