//! Point-set persistence: CSV text and the `ATRF` binary format.
//!
//! `ATRF` layout: the four magic bytes, a little-endian `u16` version (1),
//! a `u32` dimension, a `u64` point count, then `count × dim` little-endian
//! `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{FinitePointSet, MetricTag};

pub const ATRF_MAGIC: &[u8; 4] = b"ATRF";
pub const ATRF_VERSION: u16 = 1;

pub fn write_atrf<W: Write>(set: &FinitePointSet, mut w: W) -> Result<()> {
    w.write_all(ATRF_MAGIC)?;
    w.write_all(&ATRF_VERSION.to_le_bytes())?;
    let dim = u32::try_from(set.dim())
        .map_err(|_| Error::Format("dimension does not fit in u32".into()))?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    for x in set.coords() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_atrf<R: Read>(mut r: R, metric: MetricTag) -> Result<FinitePointSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != ATRF_MAGIC {
        return Err(Error::Format("bad magic, expected ATRF".into()));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != ATRF_VERSION {
        return Err(Error::Format(format!("unsupported ATRF version {version}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let total = dim
        .checked_mul(count)
        .ok_or_else(|| Error::Format("point count overflows".into()))?;
    let mut coords = Vec::with_capacity(total.min(1 << 24));
    for _ in 0..total {
        r.read_exact(&mut b8)?;
        coords.push(f64::from_le_bytes(b8));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    FinitePointSet::from_flat(dim, coords, metric)
}

/// One point per row, no header. Values use the shortest round-trip decimal form.
pub fn write_csv<W: Write>(set: &FinitePointSet, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for p in set.points() {
        wr.write_record(p.iter().map(|x| format!("{x:?}")))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R, metric: MetricTag) -> Result<FinitePointSet> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut dim = None;
    let mut coords = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if dim.get_or_insert(rec.len()) != &rec.len() {
            return Err(Error::Format(format!("row {} has {} fields", line + 1, rec.len())));
        }
        for f in rec.iter() {
            coords.push(
                f.parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?,
            );
        }
    }
    let dim = dim.ok_or(Error::EmptyPointSet)?;
    FinitePointSet::from_flat(dim, coords, metric)
}

pub fn save_csv(set: &FinitePointSet, path: &Path) -> Result<()> {
    write_csv(set, BufWriter::new(File::create(path)?))
}

pub fn load_csv(path: &Path, metric: MetricTag) -> Result<FinitePointSet> {
    read_csv(BufReader::new(File::open(path)?), metric)
}

pub fn save_atrf(set: &FinitePointSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_atrf(set, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_atrf(path: &Path, metric: MetricTag) -> Result<FinitePointSet> {
    read_atrf(BufReader::new(File::open(path)?), metric)
}

/// Loads by extension: `.atrf` is binary, anything else is CSV.
pub fn load_points(path: &Path, metric: MetricTag) -> Result<FinitePointSet> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("atrf") => load_atrf(path, metric),
        _ => load_csv(path, metric),
    }
}
