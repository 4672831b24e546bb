use attrforge::builder::measure_attraction;
use attrforge::{build_e0, CoveringCertificate, Error};
use serde_json::json;

use super::{Ctx, CERT_FILE};
use crate::output::{add_tree, fmt, num, read_json, write_csv, write_json, StageOutcome, Table};

/// The fitted covering certificate of the run.
pub fn load_certificate(ctx: &Ctx) -> anyhow::Result<CoveringCertificate> {
    let doc = read_json(&ctx.require(CERT_FILE, "cover")?)?;
    match doc["status"].as_str() {
        Some("certified") => Ok(CoveringCertificate::from_json(&doc)?),
        other => Err(Error::CertificateMismatch(format!(
            "{CERT_FILE} holds no certificate (status {})",
            other.unwrap_or("missing")
        ))
        .into()),
    }
}

pub fn run(ctx: &Ctx) -> anyhow::Result<StageOutcome> {
    let sys = ctx.system()?;
    let cert = load_certificate(ctx)?;
    let b = ctx.load_b("cover")?;
    let mut out = StageOutcome::default();

    let approx = build_e0(&sys, &b, &cert, cert.k_max())?;
    let dir = ctx.path("E0");
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    approx.write_dir(&dir)?;
    add_tree(&ctx.run, "E0", &mut out)?;

    let inv = approx.verify_invariants(&sys, &b)?;
    let doc = json!({
        "schema": "invariants/1",
        "per_k": inv.per_k.iter().map(|c| json!({
            "k": c.k,
            "q_size": c.q_size,
            "w_size": c.w_size,
            "allowance": num(c.allowance),
            "radius": num(c.radius),
            "distance": num(c.distance),
            "recursion_exact": c.recursion_exact,
            "w_in_e0": c.w_in_e0,
        })).collect::<Vec<_>>(),
        "recursion_holds": inv.recursion_holds(),
        "cardinality_holds": inv.cardinality_holds(),
        "coverage_holds": inv.coverage_holds(),
        "e0_count": approx.e0.len(),
    });
    write_json(&ctx.run, "invariants.json", &doc, &mut out)?;

    let att = measure_attraction(&sys, &b, &approx.e0, cert.t, cert.k_max())?;
    write_json(&ctx.run, "attraction.json", &att.to_json(), &mut out)?;
    let rows = att.dists.iter().map(|&(k, d)| {
        vec![k.to_string(), (k as f64 * cert.t).to_string(), d.to_string(), d.ln().to_string()]
    });
    write_csv(&ctx.run, "attraction.csv", &["k", "t", "dist", "log_dist"], rows, &mut out)?;

    let mut t = Table::new(&["build", sys.name()]);
    t.kv("|E0|", approx.e0.len());
    t.kv("k range", format!("{}..={}", cert.k0, cert.k_max()));
    t.kv("recursion exact", inv.recursion_holds());
    t.kv("cardinality bound", inv.cardinality_holds());
    t.kv("coverage", inv.coverage_holds());
    t.kv("xi_hat", fmt(att.xi_hat));
    out.table = t;
    if !inv.all_hold() {
        out.violated("recursion invariants fail; see invariants.json");
    }
    Ok(out)
}
