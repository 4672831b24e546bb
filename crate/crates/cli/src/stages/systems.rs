use std::path::Path;

use attrforge::systems::catalog_json;
use attrforge::{list_systems, ParamValue};

use crate::output::{write_json, StageOutcome, Table};

fn show(v: &ParamValue) -> String {
    match v {
        ParamValue::Scalar(x) => x.to_string(),
        ParamValue::List(xs) => xs.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    }
}

pub fn run(out_dir: Option<&Path>) -> anyhow::Result<StageOutcome> {
    let mut out = StageOutcome::default();
    if let Some(dir) = out_dir {
        write_json(dir, "catalog.json", &catalog_json(), &mut out)?;
    }
    let mut t = Table::new(&["system", "kind", "dim", "T", "parameters"]);
    for e in list_systems() {
        let params: Vec<String> = e.params.iter().map(|p| format!("{}={}", p.name, show(&p.default))).collect();
        let kind = serde_json::to_value(e.kind)?.as_str().unwrap_or("").to_string();
        let dim = e.phase_dim.map_or("param".to_string(), |d| d.to_string());
        t.row(&[e.name.clone(), kind, dim, e.default_t.to_string(), params.join(" ")]);
    }
    out.table = t;
    Ok(out)
}
