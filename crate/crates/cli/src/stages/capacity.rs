use attrforge::capacity::{banach_mazur_lp, capacity_row, john_bound, write_capacity_csv, NormPair, NormTag};
use attrforge::ScalarField;
use serde_json::json;

use super::Ctx;
use crate::args::CapacityArgs;
use crate::config::config_error;
use crate::output::{fmt, num, write_json, StageOutcome, Table};

fn norm(s: &str) -> anyhow::Result<NormTag> {
    match s {
        "l1" => Ok(NormTag::L1),
        "l2" => Ok(NormTag::L2),
        "linf" => Ok(NormTag::LInf),
        other => Err(config_error(format!("unknown norm {other}; expected l1, l2 or linf"))),
    }
}

fn lp_exponent(t: &NormTag) -> f64 {
    match t {
        NormTag::L1 => 1.0,
        NormTag::LInf => f64::INFINITY,
        _ => 2.0,
    }
}

pub fn run(ctx: &Ctx, args: &CapacityArgs) -> anyhow::Result<StageOutcome> {
    let field = match args.field.as_str() {
        "real" => ScalarField::Real,
        "complex" => ScalarField::Complex,
        other => return Err(config_error(format!("unknown field {other}; expected real or complex"))),
    };
    let (nx, ny) = (norm(&args.norm_x)?, norm(&args.norm_y)?);
    if args.n.is_empty() || args.eps.is_empty() {
        return Err(config_error("need at least one dimension and one radius"));
    }
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    for &n in &args.n {
        let pair = NormPair::new(n, nx.clone(), ny.clone(), field)?;
        // d_BM of ℓp^n to ℓ2^n, with ℓ∞ as the limit p → ∞.
        let p = lp_exponent(&ny);
        let d_bm = if p.is_infinite() { (n as f64).sqrt() } else { banach_mazur_lp(n, p)? };
        for &eps in &args.eps {
            rows.push(capacity_row(&pair, eps, args.packing_budget, ctx.cfg.seed)?);
            extra.push((d_bm, john_bound(n)));
        }
    }
    let mut out = StageOutcome::default();
    let mut buf = Vec::new();
    write_capacity_csv(&rows, &mut buf)?;
    std::fs::write(ctx.path("capacity.csv"), buf)?;
    out.files.push("capacity.csv".into());
    let doc = json!({
        "schema": "capacity/1",
        "field": field,
        "budget": args.packing_budget,
        "seed": ctx.cfg.seed,
        "rows": rows.iter().zip(&extra).map(|(r, (d, j))| json!({
            "n": r.n,
            "norm_x": r.norm_x,
            "norm_y": r.norm_y,
            "eps": r.eps,
            "packing_lb": r.packing_lb,
            "volume_ub": num(r.volume_ub),
            "capacity_bits": num(r.capacity_bits),
            "d_bm_y": num(*d),
            "john_bound": num(*j),
        })).collect::<Vec<_>>(),
    });
    write_json(&ctx.run, "capacity.json", &doc, &mut out)?;

    let mut t = Table::new(&["n", "X", "Y", "eps", "packing >=", "volume <=", "bits"]);
    for r in &rows {
        t.row(&[
            r.n.to_string(),
            r.norm_x.clone(),
            r.norm_y.clone(),
            r.eps.to_string(),
            r.packing_lb.to_string(),
            fmt(r.volume_ub),
            fmt(r.capacity_bits),
        ]);
    }
    out.table = t;
    Ok(out)
}
