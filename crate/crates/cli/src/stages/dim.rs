use attrforge::metric::box_counting_dimension;
use attrforge::semigroup::omega_limit_sample;
use attrforge::{FinitePointSet, MetricTag};
use serde_json::json;

use super::{Ctx, B_FILE};
use crate::args::DimArgs;
use crate::config::config_error;
use crate::output::{fmt, num, write_csv, write_json, StageOutcome, Table};

/// Length of the bounding-box diagonal, an upper estimate of the diameter.
fn box_diagonal(g: &FinitePointSet) -> f64 {
    let d = g.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in g.points() {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
}

/// Sets whose extent is below this fraction of their coordinate scale are
/// treated as a single point.
const POINT_LIKE: f64 = 1e-9;

fn point_like(ctx: &Ctx, set: &FinitePointSet, source: &str, diag: f64) -> anyhow::Result<StageOutcome> {
    let mut out = StageOutcome::default();
    let doc = json!({
        "schema": "dimension/1",
        "source": source,
        "status": "point-like",
        "n_points": set.len(),
        "diameter_estimate": diag,
        "slope": 0.0,
        "intercept": null,
        "r_squared": null,
        "eps_range": null,
        "counts": [],
    });
    write_json(&ctx.run, "dim.json", &doc, &mut out)?;
    write_csv(&ctx.run, "box_counts.csv", &["eps", "count", "log_inv_eps", "log_count"], std::iter::empty::<Vec<String>>(), &mut out)?;
    let mut t = Table::new(&["dim", source]);
    t.kv("points", set.len());
    t.kv("extent", format!("{diag:e}"));
    t.kv("box slope", "0 (point-like)");
    out.table = t;
    Ok(out)
}

pub fn geometric_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64)).collect()
}

pub fn run(ctx: &Ctx, args: &DimArgs) -> anyhow::Result<StageOutcome> {
    let cfg = &ctx.cfg;
    let (set, source) = match &args.input {
        Some(p) => (attrforge::io::load_points(p, MetricTag::Euclidean)?, format!("file:{}", p.display())),
        None => {
            let src = cfg.dim_source.clone().unwrap_or_else(|| "omega".into());
            match src.as_str() {
                "omega" => {
                    let sys = ctx.system()?;
                    // Points of B already survived the absorb horizon, so
                    // they make safe seeds; otherwise use the probe box.
                    let seeds = if ctx.path(B_FILE).exists() {
                        let b = ctx.load_b("absorb")?;
                        let n = cfg.dim_seeds.min(b.len()).max(1);
                        b.select(&(0..n).map(|i| i * b.len() / n).collect::<Vec<_>>())
                    } else {
                        ctx.probes(&sys, cfg.dim_seeds, cfg.seed)?
                    };
                    (omega_limit_sample(&sys, &seeds, cfg.burn_in, cfg.keep, cfg.t)?, src)
                }
                "e0" => {
                    let p = ctx.require("E0/E0.csv", "build")?;
                    (attrforge::io::load_csv(&p, MetricTag::Euclidean)?, src)
                }
                "b" => {
                    let p = ctx.require(B_FILE, "absorb")?;
                    (attrforge::io::load_csv(&p, MetricTag::Euclidean)?, src)
                }
                other => return Err(config_error(format!("unknown dimension source {other}"))),
            }
        }
    };
    if set.is_empty() {
        return Err(config_error(format!("the {source} set is empty; nothing to measure")));
    }
    let diag = box_diagonal(&set);
    let scale = set.points().flat_map(|p| p.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    if diag <= POINT_LIKE * scale {
        return point_like(ctx, &set, &source, diag);
    }
    let hi = cfg.eps_hi.unwrap_or(diag / 20.0);
    let lo = cfg.eps_lo.unwrap_or(hi / 20.0);
    if !(hi > lo && lo > 0.0) {
        return Err(config_error(format!("need eps_hi > eps_lo > 0, got {hi} and {lo}")));
    }
    let grid = geometric_grid(hi, lo, cfg.n_eps);
    let fit = box_counting_dimension(&set, &grid)?;

    let mut out = StageOutcome::default();
    let doc = json!({
        "schema": "dimension/1",
        "source": source,
        "status": "fitted",
        "diameter_estimate": diag,
        "n_points": set.len(),
        "slope": num(fit.slope),
        "intercept": num(fit.intercept),
        "r_squared": num(fit.r_squared),
        "eps_range": [fit.eps_range.0, fit.eps_range.1],
        "counts": fit.counts.iter().map(|(e, c)| json!({"eps": e, "count": c})).collect::<Vec<_>>(),
    });
    write_json(&ctx.run, "dim.json", &doc, &mut out)?;
    let rows = fit.counts.iter().map(|&(e, c)| {
        vec![e.to_string(), c.to_string(), (1.0 / e).ln().to_string(), (c as f64).ln().to_string()]
    });
    write_csv(&ctx.run, "box_counts.csv", &["eps", "count", "log_inv_eps", "log_count"], rows, &mut out)?;

    let mut t = Table::new(&["dim", source.as_str()]);
    t.kv("points", set.len());
    t.kv("eps range", format!("[{}, {}]", fmt(lo), fmt(hi)));
    t.kv("box slope", fmt(fit.slope));
    t.kv("r^2", fmt(fit.r_squared));
    out.table = t;
    Ok(out)
}
