use attrforge::semigroup::{absorbed_sample, find_absorbing_ball};
use attrforge::{Error, FinitePointSet};
use serde_json::json;

use super::{Ctx, B_FILE};
use crate::output::{fmt, save_points, write_json, StageOutcome, Table};

pub fn run(ctx: &Ctx) -> anyhow::Result<StageOutcome> {
    let cfg = &ctx.cfg;
    let sys = ctx.system()?;
    let probes = ctx.probes(&sys, cfg.probes, cfg.seed)?;
    let mut out = StageOutcome::default();
    save_points(&ctx.run, "probes.csv", &probes, &mut out)?;

    let est = match find_absorbing_ball(&sys, &probes, cfg.horizon, cfg.t) {
        Ok(e) => e,
        Err(Error::NoAbsorbingBall) => {
            let doc = json!({
                "schema": "absorb/1",
                "system": sys.name(),
                "status": "no-absorbing-ball",
                "probes": probes.len(),
                "horizon": cfg.horizon,
                "T": cfg.t,
            });
            write_json(&ctx.run, "absorb.json", &doc, &mut out)?;
            out.violated("every probe orbit blew up; no absorbing ball");
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let absorbed = absorbed_sample(&sys, &probes, &est, cfg.max_points)?;
    // A contraction collapses the absorbed orbits onto a few points; when no
    // probe escaped, the probe box itself is kept as part of B.
    let (b, source) = if est.escaped_probes == 0 {
        let b = FinitePointSet::union_dedup(probes.dim(), probes.metric().clone(), [&probes, &absorbed])?;
        (b, "probes+absorbed-orbits")
    } else {
        (absorbed, "absorbed-orbits")
    };
    save_points(&ctx.run, B_FILE, &b, &mut out)?;

    let doc = json!({
        "schema": "absorb/1",
        "system": sys.name(),
        "status": "found",
        "estimate": est,
        "probes": probes.len(),
        "b_count": b.len(),
        "b_source": source,
        "seed": cfg.seed,
    });
    write_json(&ctx.run, "absorb.json", &doc, &mut out)?;

    let mut t = Table::new(&["absorb", sys.name()]);
    t.kv("radius", fmt(est.radius));
    t.kv("center", format!("{:?}", est.center));
    t.kv("entry time", fmt(est.entry_time));
    t.kv("escaped probes", est.escaped_probes);
    t.kv("|B|", b.len());
    out.table = t;
    Ok(out)
}
