use serde_json::{json, Value};

use super::certify::SUMMARY;
use super::{Ctx, CERT_FILE};
use crate::output::{fmt, num, read_json, write_csv, write_json, StageOutcome, Table};

fn optional(ctx: &Ctx, rel: &str) -> anyhow::Result<Option<Value>> {
    let p = ctx.path(rel);
    if p.exists() {
        Ok(Some(read_json(&p)?))
    } else {
        Ok(None)
    }
}

pub fn run(ctx: &Ctx) -> anyhow::Result<StageOutcome> {
    let cert = read_json(&ctx.require(CERT_FILE, "cover")?)?;
    let inv = read_json(&ctx.require("invariants.json", "build")?)?;
    let dim = read_json(&ctx.require("dim.json", "dim")?)?;
    let bounds = optional(ctx, "bounds.json")?;
    let attraction = optional(ctx, "attraction.json")?;
    let summary = optional(ctx, SUMMARY)?;
    let slack = ctx.cfg.slack;
    let box_dim = dim["slope"].as_f64().unwrap_or(f64::NAN);
    let certified = cert["status"] == "certified";
    let t = cert["T"].as_f64().unwrap_or(ctx.cfg.t);

    // (name, value) of every upper bound on the dimension.
    let mut uppers: Vec<(String, f64)> = Vec::new();
    let mut has_covering = false;
    if let Some(b) = &bounds {
        for r in b["rows"].as_array().into_iter().flatten() {
            if r["role"] != "upper" {
                continue;
            }
            let name = format!("{} ({})", r["bound"].as_str().unwrap_or("?"), r["source"].as_str().unwrap_or("?"));
            has_covering |= r["bound"] == "covering";
            let v = if r["value_is_infinite"] == true { f64::INFINITY } else { r["value"].as_f64().unwrap_or(f64::NAN) };
            uppers.push((name, v));
        }
    }
    if certified && !has_covering {
        uppers.push(("covering (covering)".into(), cert["dim_bound"].as_f64().unwrap_or(f64::NAN)));
    }
    let checks: Vec<(String, f64, bool)> = uppers
        .iter()
        .map(|(n, v)| (n.clone(), *v, box_dim <= v + slack))
        .collect();
    let consistent = box_dim.is_finite() && checks.iter().all(|c| c.2);
    let invariants_hold = ["recursion_holds", "cardinality_holds", "coverage_holds"]
        .iter()
        .all(|k| inv[*k] == true);

    let mut out = StageOutcome::default();
    let per_k = cert["per_k"].as_array().cloned().unwrap_or_default();
    let rows = per_k.iter().map(|p| {
        let c = p["count"].as_f64().unwrap_or(f64::NAN);
        vec![p["k"].to_string(), c.ln().to_string()]
    });
    write_csv(&ctx.run, "plots/cover_counts.csv", &["k", "log_count"], rows, &mut out)?;
    let counts = dim["counts"].as_array().cloned().unwrap_or_default();
    let rows = counts.iter().map(|c| {
        let e = c["eps"].as_f64().unwrap_or(f64::NAN);
        let n = c["count"].as_f64().unwrap_or(f64::NAN);
        vec![e.to_string(), n.ln().to_string()]
    });
    write_csv(&ctx.run, "plots/box_counts.csv", &["eps", "log_count"], rows, &mut out)?;
    if let Some(a) = &attraction {
        let rows = a["dists"].as_array().cloned().unwrap_or_default().into_iter().map(|d| {
            let k = d["k"].as_f64().unwrap_or(f64::NAN);
            let v = d["dist"].as_f64().unwrap_or(f64::NAN);
            vec![(k * t).to_string(), v.ln().to_string()]
        });
        write_csv(&ctx.run, "plots/attraction.csv", &["t", "log_dist"], rows.collect::<Vec<_>>(), &mut out)?;
    }

    let doc = json!({
        "schema": "report/1",
        "system": ctx.cfg.system,
        "seed": ctx.cfg.seed,
        "T": t,
        "covering": {
            "status": cert["status"],
            "q": cert["q"],
            "h": cert["h"],
            "dim_bound": cert["dim_bound"],
        },
        "invariants": {
            "recursion_holds": inv["recursion_holds"],
            "cardinality_holds": inv["cardinality_holds"],
            "coverage_holds": inv["coverage_holds"],
            "e0_count": inv["e0_count"],
        },
        "attraction": attraction.as_ref().map(|a| json!({"xi_hat": a["xi_hat"]})),
        "certificates": summary.as_ref().map(|s| s["entries"].clone()),
        "bounds": bounds.as_ref().map(|b| b["rows"].clone()),
        "box_dimension": {
            "slope": num(box_dim),
            "source": dim["source"],
            "r_squared": dim["r_squared"],
        },
        "slack": slack,
        "cross_checks": checks.iter().map(|(n, v, ok)| json!({
            "bound": n,
            "value": num(*v),
            "box_dimension": num(box_dim),
            "pass": ok,
        })).collect::<Vec<_>>(),
        "consistent": consistent,
        "invariants_hold": invariants_hold,
    });
    write_json(&ctx.run, "report.json", &doc, &mut out)?;

    let mut tb = Table::new(&["bound", "value", "box dim", "pass"]);
    for (n, v, ok) in &checks {
        tb.row(&[n.clone(), fmt(*v), fmt(box_dim), if *ok { "yes".into() } else { "NO".to_string() }]);
    }
    out.table = tb;
    if !consistent {
        out.violated(format!("box dimension {box_dim} exceeds a certified bound by more than {slack}"));
    }
    if !invariants_hold {
        out.violated("recursion invariants fail; see invariants.json");
    }
    Ok(out)
}
