use attrforge::covering::{check_covering_condition, fit_certificate, APolicy, CoveringOutcome, PerK};
use attrforge::Error;
use serde_json::json;

use super::{Ctx, B_FILE, CERT_FILE};
use crate::args::CoverArgs;
use crate::output::{fmt, num, save_points, write_csv, write_json, StageOutcome, Table};

fn counts_csv(ctx: &Ctx, per_k: &[PerK], out: &mut StageOutcome) -> anyhow::Result<()> {
    let rows = per_k.iter().map(|p| {
        vec![
            p.k.to_string(),
            p.eps.to_string(),
            p.count.to_string(),
            p.allowed.to_string(),
            (p.count as f64).ln().to_string(),
        ]
    });
    write_csv(&ctx.run, "cover_counts.csv", &["k", "eps", "count", "allowed", "log_count"], rows, out)
}

pub fn run(ctx: &Ctx, args: &CoverArgs) -> anyhow::Result<StageOutcome> {
    let cfg = &ctx.cfg;
    let sys = ctx.system()?;
    let mut out = StageOutcome::default();
    let (b, b_source) = if ctx.path(B_FILE).exists() {
        (ctx.load_b("absorb")?, "B.csv")
    } else {
        let b = ctx.probes(&sys, cfg.probes, cfg.seed)?;
        save_points(&ctx.run, B_FILE, &b, &mut out)?;
        (b, "uniform-box")
    };
    let policy = cfg.cover_a.map_or(APolicy::Default, APolicy::Fixed);

    let mut t = Table::new(&["cover", sys.name()]);
    t.kv("|B|", b.len());
    t.kv("B source", b_source);

    if let (Some(q), Some(h)) = (args.check_q, args.check_h) {
        let a = match policy {
            APolicy::Fixed(a) => a,
            APolicy::Default => 1.5 * b.diameter().max(1.0),
        };
        match check_covering_condition(&sys, &b, cfg.t, a, q, args.check_b, h, cfg.k0, cfg.kmax)? {
            CoveringOutcome::Certified(cert) => {
                let mut doc = cert.to_json();
                doc["status"] = json!("certified");
                doc["mode"] = json!("check");
                write_json(&ctx.run, CERT_FILE, &doc, &mut out)?;
                counts_csv(ctx, &cert.per_k, &mut out)?;
                t.kv("status", "certified");
                t.kv("dim_bound", fmt(cert.dim_bound()));
            }
            CoveringOutcome::Violated(v) => {
                let doc = json!({
                    "schema": "covering-certificate/1",
                    "status": "violated",
                    "mode": "check",
                    "a": num(a), "q": q, "b": args.check_b, "h": h, "T": cfg.t,
                    "violation": {"k": v.k, "eps": num(v.eps), "count": v.count, "allowed": num(v.allowed)},
                    "per_k": v.per_k,
                });
                write_json(&ctx.run, CERT_FILE, &doc, &mut out)?;
                counts_csv(ctx, &v.per_k, &mut out)?;
                t.kv("status", "violated");
                t.kv("first failing k", v.k);
                out.violated(format!(
                    "covering condition fails at k = {}: count {} > allowed {}",
                    v.k, v.count, v.allowed
                ));
            }
        }
        out.table = t;
        return Ok(out);
    }

    match fit_certificate(&sys, &b, cfg.t, cfg.k0, cfg.kmax, &cfg.q_grid, policy) {
        Ok(cert) => {
            let mut doc = cert.to_json();
            doc["status"] = json!("certified");
            doc["mode"] = json!("fit");
            write_json(&ctx.run, CERT_FILE, &doc, &mut out)?;
            counts_csv(ctx, &cert.per_k, &mut out)?;
            t.kv("status", "certified");
            t.kv("a", fmt(cert.a));
            t.kv("q", cert.q);
            t.kv("h", fmt(cert.h));
            t.kv("dim_bound", fmt(cert.dim_bound()));
            t.kv("xi_T", fmt(cert.attraction_rate_bound()));
        }
        Err(Error::NoCertificateInGrid) => {
            let doc = json!({
                "schema": "covering-certificate/1",
                "status": "no-certificate-in-grid",
                "mode": "fit",
                "q_grid": cfg.q_grid,
                "k0": cfg.k0,
                "k_max": cfg.kmax,
                "T": cfg.t,
            });
            write_json(&ctx.run, CERT_FILE, &doc, &mut out)?;
            t.kv("status", "no certificate in grid");
            out.violated("no q in the grid gives a resolvable certificate");
        }
        Err(e) => return Err(e.into()),
    }
    out.table = t;
    Ok(out)
}
