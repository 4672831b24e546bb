//! Rerun a stage on a copy of the run directory and compare its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::output::StageOutcome;

/// The rerun produced different bytes.
#[derive(Debug)]
pub struct ReproMismatch(pub Vec<PathBuf>);

impl std::fmt::Display for ReproMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self.0.iter().map(|p| p.display().to_string()).collect();
        write!(f, "rerun differs in {}", names.join(", "))
    }
}

impl std::error::Error for ReproMismatch {}

pub fn copy_tree(from: &Path, to: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(to)?;
    for e in fs::read_dir(from).with_context(|| format!("reading {}", from.display()))? {
        let e = e?;
        let dst = to.join(e.file_name());
        if e.file_type()?.is_dir() {
            copy_tree(&e.path(), &dst)?;
        } else {
            fs::copy(e.path(), &dst)?;
        }
    }
    Ok(())
}

/// Snapshots `run`, runs `stage` on it, reruns on the snapshot and compares
/// every output file byte for byte.
pub fn verify<F>(run: &Path, stage: F) -> anyhow::Result<(StageOutcome, usize)>
where
    F: Fn(&Path) -> anyhow::Result<StageOutcome>,
{
    let snap = tempfile::tempdir()?;
    copy_tree(run, snap.path())?;
    let first = stage(run)?;
    let second = stage(snap.path())?;
    if first.files != second.files {
        bail!(ReproMismatch(first.files.clone()));
    }
    let differing: Vec<PathBuf> = first
        .files
        .iter()
        .filter(|f| fs::read(run.join(f)).ok() != fs::read(snap.path().join(f)).ok())
        .cloned()
        .collect();
    if !differing.is_empty() {
        bail!(ReproMismatch(differing));
    }
    let n = first.files.len();
    Ok((first, n))
}
