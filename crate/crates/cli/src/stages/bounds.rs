use std::path::{Path, PathBuf};

use attrforge::capacity::{MzEvaluator, NormPair, NormTag};
use attrforge::certifiers::{bound_holder, optimize_sigma, BoundParams, SigmaOptimum};
use attrforge::{Error, ScalarField};
use serde_json::{json, Value};

use super::{Ctx, MissingArtifact, CERTS_DIR, CERT_FILE};
use crate::args::BoundsArgs;
use crate::output::{fmt, num, read_json, write_csv, write_json, StageOutcome, Table};

/// Largest `Z` dimension for which packing counts are attempted.
const PACKING_MAX_DIM: usize = 3;
/// Interior σ points at which the packing evaluator is tried.
const PACKING_SIGMAS: usize = 16;

pub struct Row {
    pub bound: String,
    pub source: String,
    pub sigma: Option<f64>,
    pub value: f64,
    /// `upper` rows bound the dimension; `estimate` rows may undercut it.
    pub role: &'static str,
    pub params: Value,
}

fn cert_dir(ctx: &Ctx, args: &BoundsArgs) -> PathBuf {
    match &args.from {
        Some(p) if p.is_absolute() || p.exists() => p.clone(),
        Some(p) => ctx.run.join(p),
        None => ctx.path(CERTS_DIR),
    }
}

fn f(doc: &Value, key: &str) -> anyhow::Result<f64> {
    doc[key]
        .as_f64()
        .ok_or_else(|| Error::Format(format!("certificate lacks {key}")).into())
}

fn u(doc: &Value, key: &str) -> anyhow::Result<usize> {
    Ok(doc[key]
        .as_u64()
        .ok_or_else(|| Error::Format(format!("certificate lacks {key}")))? as usize)
}

struct Evaluator {
    sigma: Option<f64>,
    grid: usize,
}

impl Evaluator {
    fn eval(&self, p: &BoundParams) -> attrforge::Result<SigmaOptimum> {
        match self.sigma {
            Some(s) => Ok(SigmaOptimum { sigma: s, bound: p.eval(s)? }),
            None => optimize_sigma(p, self.grid),
        }
    }
}

fn covering_doc(ctx: &Ctx, dir: &Path) -> Option<Value> {
    let candidates = [Some(ctx.path(CERT_FILE)), dir.parent().map(|p| p.join(CERT_FILE))];
    candidates
        .into_iter()
        .flatten()
        .find(|p| p.exists())
        .and_then(|p| read_json(&p).ok())
        .filter(|d| d["status"] == "certified")
}

pub fn compute(ctx: &Ctx, args: &BoundsArgs) -> anyhow::Result<(Vec<Row>, Vec<Value>)> {
    let dir = cert_dir(ctx, args);
    let summary_path = dir.join("summary.json");
    if !summary_path.exists() {
        return Err(MissingArtifact { path: summary_path, stage: "certify" }.into());
    }
    let summary = read_json(&summary_path)?;
    let field: ScalarField = serde_json::from_value(summary["field"].clone())?;
    let ev = Evaluator {
        sigma: ctx.cfg.sigma,
        grid: ctx.cfg.sigma_grid,
    };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let push = |bound: &str, source: &str, p: BoundParams, role: &'static str, rows: &mut Vec<Row>, skipped: &mut Vec<Value>| {
        match ev.eval(&p) {
            Ok(o) => rows.push(Row {
                bound: bound.into(),
                source: source.into(),
                sigma: Some(o.sigma),
                value: o.bound,
                role,
                params: serde_json::to_value(&p).unwrap_or(Value::Null),
            }),
            Err(e) => skipped.push(json!({"bound": bound, "source": source, "reason": e.to_string()})),
        }
    };

    let entries = summary["entries"].as_array().cloned().unwrap_or_default();
    for e in &entries {
        let status = e["status"].as_str().unwrap_or("");
        if status != "certified" && status != "derived" {
            continue;
        }
        let kind = e["kind"].as_str().unwrap_or("");
        let Some(file) = e["file"].as_str() else { continue };
        let doc = read_json(&dir.join(file))?;
        match kind {
            "ladyzhenskaya" | "ladyzhenskaya_from_smoothing" => {
                if doc["hilbert"] == true {
                    let p = BoundParams::LadyzhenskayaHilbert {
                        n: u(&doc, "n")?,
                        eta: f(&doc, "eta")?,
                        kappa: f(&doc, "kappa")?,
                        field,
                    };
                    push("ladyzhenskaya-hilbert", kind, p, "upper", &mut rows, &mut skipped);
                } else {
                    skipped.push(json!({"bound": "ladyzhenskaya-hilbert", "source": kind, "reason": "projection is not orthogonal"}));
                }
            }
            "squeezing" => {
                let (n, eta, mu, kappa) = (u(&doc, "n")?, f(&doc, "eta")?, f(&doc, "mu")?, f(&doc, "kappa")?);
                // Coordinate projections of a euclidean state space have euclidean range.
                let d_bm = 1.0;
                let p = BoundParams::Squeezing { n, eta, mu, kappa, d_bm, field };
                push("squeezing", kind, p, "upper", &mut rows, &mut skipped);
                let p = BoundParams::SqueezingVolume { n, eta, mu, kappa, d_bm, field };
                push("squeezing-volume", kind, p, "upper", &mut rows, &mut skipped);
            }
            "quasi" => {
                let (eta, kappa, z_dim) = (f(&doc, "eta")?, f(&doc, "kappa")?, u(&doc, "z_dim")?);
                if z_dim == 0 {
                    skipped.push(json!({"bound": "quasi", "source": kind, "reason": "Z is trivial"}));
                    continue;
                }
                let pair = NormPair::new(z_dim, NormTag::L2, NormTag::L2, field)?;
                let p = BoundParams::Quasi {
                    eta,
                    kappa,
                    mz: MzEvaluator::VolumeUpperBound { pair: pair.clone() },
                };
                push("quasi-volume", kind, p, "upper", &mut rows, &mut skipped);
                if pair.real_dim() > PACKING_MAX_DIM {
                    skipped.push(json!({"bound": "quasi-packing", "source": kind,
                        "reason": format!("packing counts skipped above real dimension {PACKING_MAX_DIM}")}));
                    continue;
                }
                let p = BoundParams::Quasi {
                    eta,
                    kappa,
                    mz: MzEvaluator::PackingLowerBound { pair, budget: ctx.cfg.budget, seed: ctx.cfg.seed },
                };
                match packing_row(&p, ctx.cfg.sigma) {
                    Ok(o) => rows.push(Row {
                        bound: "quasi-packing".into(),
                        source: kind.into(),
                        sigma: Some(o.sigma),
                        value: o.bound,
                        role: "estimate",
                        params: serde_json::to_value(&p).unwrap_or(Value::Null),
                    }),
                    Err(e) => skipped.push(json!({"bound": "quasi-packing", "source": kind, "reason": e.to_string()})),
                }
            }
            "c1" => {
                let p = BoundParams::C1 {
                    n: u(&doc, "n")?,
                    m: f(&doc, "M")?,
                    lambda: f(&doc, "lambda")?,
                    field,
                };
                push("c1", kind, p, "upper", &mut rows, &mut skipped);
            }
            "holder" => {
                let nu = f(&doc, "nu")?;
                match covering_doc(ctx, &dir) {
                    Some(c) => {
                        let (q, h) = (f(&c, "q")?, f(&c, "h")?);
                        rows.push(Row {
                            bound: "holder-composite".into(),
                            source: "holder+covering".into(),
                            sigma: None,
                            value: bound_holder(q, h, nu)?,
                            role: "upper",
                            params: json!({"q": q, "h": h, "nu": nu}),
                        });
                    }
                    None => skipped.push(json!({"bound": "holder-composite", "source": kind,
                        "reason": "no covering certificate; run the `cover` stage"})),
                }
            }
            _ => {}
        }
    }
    if let Some(c) = covering_doc(ctx, &dir) {
        rows.push(Row {
            bound: "covering".into(),
            source: "covering".into(),
            sigma: None,
            value: f(&c, "dim_bound")?,
            role: "upper",
            params: json!({"q": c["q"], "h": c["h"], "b": c["b"]}),
        });
    }
    Ok((rows, skipped))
}

/// Packing counts are costly, so σ runs over a coarse interior grid.
fn packing_row(p: &BoundParams, sigma: Option<f64>) -> attrforge::Result<SigmaOptimum> {
    if let Some(s) = sigma {
        return Ok(SigmaOptimum { sigma: s, bound: p.eval(s)? });
    }
    let (_, hi) = p.interval()?;
    let mut best: Option<SigmaOptimum> = None;
    for i in 1..=PACKING_SIGMAS {
        let s = hi * i as f64 / (PACKING_SIGMAS + 1) as f64;
        let v = p.eval(s)?;
        if best.map_or(true, |b| v < b.bound) {
            best = Some(SigmaOptimum { sigma: s, bound: v });
        }
    }
    best.ok_or(Error::EmptyAdmissibleInterval)
}

pub fn run(ctx: &Ctx, args: &BoundsArgs) -> anyhow::Result<StageOutcome> {
    let (rows, skipped) = compute(ctx, args)?;
    let mut out = StageOutcome::default();
    let mode = if ctx.cfg.sigma.is_some() { "fixed" } else { "optimized" };
    let doc = json!({
        "schema": "bounds/1",
        "sigma_mode": mode,
        "rows": rows.iter().map(|r| json!({
            "bound": r.bound,
            "source": r.source,
            "sigma": r.sigma.map(num),
            "value": num(r.value),
            "value_is_infinite": r.value.is_infinite(),
            "role": r.role,
            "params": r.params,
        })).collect::<Vec<_>>(),
        "skipped": skipped,
    });
    write_json(&ctx.run, "bounds.json", &doc, &mut out)?;
    let csv_rows = rows.iter().map(|r| {
        vec![
            r.bound.clone(),
            r.source.clone(),
            r.sigma.map(|s| s.to_string()).unwrap_or_default(),
            r.value.to_string(),
            r.role.to_string(),
        ]
    });
    write_csv(&ctx.run, "bounds.csv", &["bound", "source", "sigma", "value", "role"], csv_rows, &mut out)?;

    let mut t = Table::new(&["bound", "source", "sigma*", "bound*", "role"]);
    for r in &rows {
        let s = r.sigma.map(fmt).unwrap_or_else(|| "-".into());
        t.row(&[r.bound.clone(), r.source.clone(), s, fmt(r.value), r.role.to_string()]);
    }
    for s in &skipped {
        t.row(&[
            s["bound"].as_str().unwrap_or("").to_string(),
            s["source"].as_str().unwrap_or("").to_string(),
            "-".into(),
            "skipped".into(),
            s["reason"].as_str().unwrap_or("").to_string(),
        ]);
    }
    out.table = t;
    Ok(out)
}
