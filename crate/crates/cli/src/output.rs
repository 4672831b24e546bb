use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::Value;

/// What a stage produced, relative to the run directory.
#[derive(Debug, Default)]
pub struct StageOutcome {
    pub files: Vec<PathBuf>,
    /// Set when a certificate failed; outputs are still written.
    pub violation: Option<String>,
    pub table: Table,
}

impl StageOutcome {
    pub fn violated(&mut self, msg: impl Into<String>) {
        if self.violation.is_none() {
            self.violation = Some(msg.into());
        }
    }
}

/// Left-aligned text table for the terminal summary.
#[derive(Debug, Default)]
pub struct Table {
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: ToString>(header: &[S]) -> Self {
        Self {
            rows: vec![header.iter().map(|s| s.to_string()).collect()],
        }
    }

    pub fn row<S: ToString>(&mut self, cells: &[S]) {
        self.rows.push(cells.iter().map(|s| s.to_string()).collect());
    }

    pub fn kv(&mut self, key: &str, value: impl ToString) {
        self.row(&[key.to_string(), value.to_string()]);
    }

    pub fn render(&self) -> String {
        let cols = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let width: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|r| r.get(c))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for (i, r) in self.rows.iter().enumerate() {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{s:<w$}", w = width[c]))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if i == 0 {
                let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "{}", rule.join("  "));
            }
        }
        out
    }
}

/// Short rendering of a float for tables.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        x.to_string()
    }
}

pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn write_json(run: &Path, rel: &str, v: &Value, out: &mut StageOutcome) -> anyhow::Result<()> {
    let path = run.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, attrforge::to_pretty_json(v)?).with_context(|| format!("writing {}", path.display()))?;
    out.files.push(PathBuf::from(rel));
    Ok(())
}

/// Writes a CSV with a header row; floats use the shortest round-trip form.
pub fn write_csv(
    run: &Path,
    rel: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    out: &mut StageOutcome,
) -> anyhow::Result<()> {
    let path = run.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    out.files.push(PathBuf::from(rel));
    Ok(())
}

pub fn save_points(run: &Path, rel: &str, set: &attrforge::FinitePointSet, out: &mut StageOutcome) -> anyhow::Result<()> {
    let path = run.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    attrforge::io::save_csv(set, &path)?;
    out.files.push(PathBuf::from(rel));
    Ok(())
}

/// Records every file below `rel` as an output.
pub fn add_tree(run: &Path, rel: &str, out: &mut StageOutcome) -> anyhow::Result<()> {
    let mut stack = vec![PathBuf::from(rel)];
    let mut found = Vec::new();
    while let Some(p) = stack.pop() {
        for e in fs::read_dir(run.join(&p))? {
            let e = e?;
            let child = p.join(e.file_name());
            if e.file_type()?.is_dir() {
                stack.push(child);
            } else {
                found.push(child);
            }
        }
    }
    found.sort();
    out.files.extend(found);
    Ok(())
}

pub fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
