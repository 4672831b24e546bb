use attrforge::certifiers::{
    certify_c1, certify_ladyzhenskaya, derive_ladyzhenskaya_from_smoothing_hilbert, derive_quasi_from_squeezing,
    derive_smoothing_from_ladyzhenskaya, derive_squeezing_from_ladyzhenskaya, estimate_holder, estimate_smoothing,
    jacobian_agreement, validate_ladyzhenskaya, validate_quasi, validate_squeezing, PairData, Projector,
    ValidationReport,
};
use attrforge::systems::smoothing_split;
use attrforge::Error;
use serde_json::{json, Value};

use super::{Ctx, CERTS_DIR};
use crate::config::config_error;
use crate::output::{fmt, num, write_json, StageOutcome, Table};

pub const KINDS: [&str; 4] = ["ladyzhenskaya", "smoothing", "c1", "holder"];
pub const SUMMARY: &str = "certs/summary.json";

fn report_json(r: &ValidationReport) -> Value {
    json!({
        "n_pairs": r.n_pairs,
        "violations": r.violations.len(),
        "pass_fraction": num(r.pass_fraction()),
        "min_slack": num(r.min_slack),
    })
}

struct Recorder<'a> {
    ctx: &'a Ctx,
    entries: Vec<Value>,
    table: Table,
    out: StageOutcome,
}

impl Recorder<'_> {
    /// Writes a certificate with its re-validation on the fitting pairs and
    /// on held-out pairs. Failing on the fitting pairs is a violation.
    fn cert(
        &mut self,
        kind: &str,
        status: &str,
        mut doc: Value,
        fit: Option<ValidationReport>,
        holdout: Option<ValidationReport>,
    ) -> anyhow::Result<()> {
        let file = format!("{CERTS_DIR}/{kind}.json");
        let passed = fit.as_ref().map_or(true, ValidationReport::passed);
        doc["validation"] = json!({
            "fit_pairs": fit.as_ref().map(report_json),
            "holdout_pairs": holdout.as_ref().map(report_json),
        });
        write_json(&self.ctx.run, &file, &doc, &mut self.out)?;
        let holdout_frac = holdout.as_ref().map(ValidationReport::pass_fraction);
        self.entries.push(json!({
            "kind": kind,
            "status": status,
            "file": format!("{kind}.json"),
            "revalidated": passed,
            "holdout_pass_fraction": holdout_frac.map(num),
        }));
        let eta = doc.get("eta").and_then(Value::as_f64).map(fmt).unwrap_or_default();
        let kappa = doc.get("kappa").and_then(Value::as_f64).map(fmt).unwrap_or_default();
        self.table.row(&[kind, status, &eta, &kappa, if passed { "yes" } else { "NO" }]);
        if !passed {
            self.out.violated(format!("{kind} certificate fails re-validation on its own pairs"));
        }
        Ok(())
    }

    fn skip(&mut self, kind: &str, status: &str, message: String) {
        self.table.row(&[kind, status, "", "", ""]);
        self.entries.push(json!({"kind": kind, "status": status, "message": message}));
    }
}

pub fn run(ctx: &Ctx) -> anyhow::Result<StageOutcome> {
    let cfg = &ctx.cfg;
    let sys = ctx.system()?;
    let b = ctx.load_b("absorb")?;
    let dim = b.dim();
    let kinds: Vec<String> = cfg.kinds.clone().unwrap_or_else(|| KINDS.iter().map(|s| s.to_string()).collect());
    if let Some(k) = kinds.iter().find(|k| !KINDS.contains(&k.as_str())) {
        return Err(config_error(format!("unknown certificate kind {k}; expected one of {KINDS:?}")));
    }
    if cfg.rank == 0 || cfg.rank > dim {
        return Err(config_error(format!("projection rank must be in 1..={dim}, got {}", cfg.rank)));
    }
    let certs = ctx.path(CERTS_DIR);
    if certs.exists() {
        std::fs::remove_dir_all(&certs)?;
    }
    let data = PairData::sample(&sys, b.clone(), cfg.t, cfg.pairs, cfg.seed, true)?;
    let holdout = PairData::sample(&sys, b.clone(), cfg.t, cfg.pairs, cfg.seed.wrapping_add(1), false)?;
    let mut rec = Recorder {
        ctx,
        entries: Vec::new(),
        table: Table::new(&["certificate", "status", "eta", "kappa", "revalidated"]),
        out: StageOutcome::default(),
    };
    let wants = |k: &str| kinds.iter().any(|x| x == k);

    if wants("ladyzhenskaya") {
        let coords: Vec<usize> = (0..cfg.rank).collect();
        match certify_ladyzhenskaya(&data, Projector::coordinate(dim, &coords)?) {
            Ok(lady) => {
                let (f, h) = (validate_ladyzhenskaya(&data, &lady), validate_ladyzhenskaya(&holdout, &lady));
                rec.cert("ladyzhenskaya", "certified", lady.to_json(), Some(f), Some(h))?;
                let sq = derive_squeezing_from_ladyzhenskaya(&lady);
                let (f, h) = (validate_squeezing(&data, &sq), validate_squeezing(&holdout, &sq));
                rec.cert("squeezing", "derived", sq.to_json(), Some(f), Some(h))?;
                let q = derive_quasi_from_squeezing(&sq);
                let (f, h) = (validate_quasi(&data, &q), validate_quasi(&holdout, &q));
                rec.cert("quasi", "derived", q.to_json(), Some(f), Some(h))?;
                let sm = derive_smoothing_from_ladyzhenskaya(&lady);
                rec.cert("smoothing_from_ladyzhenskaya", "derived", sm.to_json(), None, None)?;
            }
            Err(e @ Error::NoContraction { .. }) => {
                rec.skip("ladyzhenskaya", "failed", e.to_string());
                for k in ["squeezing", "quasi"] {
                    rec.skip(k, "not-derived", "no Ladyzhenskaya certificate to derive from".into());
                }
            }
            Err(e) => return Err(e.into()),
        }
    }

    if wants("smoothing") {
        if sys.name() == "smoothing_demo" {
            let (split, z) = smoothing_split(&cfg.params)?;
            let sm = estimate_smoothing(&data, &split, z)?;
            rec.cert("smoothing", "certified", sm.to_json(), None, None)?;
            let eps = if sm.kappa > 0.0 { (0.5 * (1.0 - sm.eta) / sm.kappa).min(0.5) } else { 0.5 };
            match derive_ladyzhenskaya_from_smoothing_hilbert(&sm, eps) {
                Ok(lady) => {
                    let mut doc = lady.to_json();
                    doc["net_eps"] = json!(eps);
                    let (f, h) = (validate_ladyzhenskaya(&data, &lady), validate_ladyzhenskaya(&holdout, &lady));
                    rec.cert("ladyzhenskaya_from_smoothing", "derived", doc, Some(f), Some(h))?;
                }
                Err(e) => rec.skip("ladyzhenskaya_from_smoothing", "failed", e.to_string()),
            }
        } else {
            rec.skip("smoothing", "not-applicable", "no smoothing split is known for this system".into());
        }
    }

    if wants("c1") {
        match certify_c1(&sys, &b, cfg.t, cfg.c1_lambda) {
            Ok(c1) => {
                let mut doc = c1.to_json();
                let agree = jacobian_agreement(&sys, &b, cfg.t)?;
                doc["fd_relative_error"] = agree.map(num).unwrap_or(Value::Null);
                rec.cert("c1", "certified", doc, None, None)?;
            }
            Err(e @ Error::NoSplit { .. }) => rec.skip("c1", "failed", e.to_string()),
            Err(e) => return Err(e.into()),
        }
    }

    if wants("holder") {
        if sys.is_flow() {
            let [t1, t2] = cfg.holder_window.unwrap_or([cfg.t, 2.0 * cfg.t]);
            let n = cfg.holder_points.max(2);
            let times: Vec<f64> = (0..n).map(|i| t1 + (t2 - t1) * i as f64 / (n - 1) as f64).collect();
            let h = estimate_holder(&sys, &b, &times)?;
            rec.cert("holder", "certified", h.to_json(), None, None)?;
        } else {
            rec.skip("holder", "not-applicable", "time continuity applies to flows".into());
        }
    }

    let summary = json!({
        "schema": "certify-summary/1",
        "system": sys.name(),
        "T": cfg.t,
        "field": sys.field(),
        "dim": dim,
        "fit_pairs": data.len(),
        "holdout_pairs": holdout.len(),
        "seed": cfg.seed,
        "entries": rec.entries,
    });
    write_json(&ctx.run, SUMMARY, &summary, &mut rec.out)?;
    let mut out = rec.out;
    out.table = rec.table;
    Ok(out)
}
