use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::hex;
use crate::data::{RowKey, YearMonth};
use crate::error::{Error, Result};
use crate::indices::SupervisedDataset;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Files under `path` (or the file itself), sorted, relative to `root`.
fn collect(root: &Path, path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io_err(path))?
            .map(|e| e.map(|e| e.path()).map_err(io_err(path)))
            .collect::<Result<_>>()?;
        entries.sort();
        for e in entries {
            collect(root, &e, out)?;
        }
    } else if path.is_file() {
        out.push(path.strip_prefix(root).unwrap_or(path).to_path_buf());
    }
    Ok(())
}

/// Content hash over relative names and bytes of every file in `paths`;
/// `None` if any path is missing.
pub fn content_hash(root: &Path, paths: &[PathBuf]) -> Result<Option<String>> {
    let mut h = Sha256::new();
    for p in paths {
        let full = root.join(p);
        if !full.exists() {
            return Ok(None);
        }
        let mut files = Vec::new();
        collect(root, &full, &mut files)?;
        for f in files {
            let bytes = fs::read(root.join(&f)).map_err(io_err(&f))?;
            h.update(f.to_string_lossy().replace('\\', "/").as_bytes());
            h.update([0]);
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
    }
    Ok(Some(hex(&h.finalize())))
}

pub fn write_supervised(path: &Path, ds: &SupervisedDataset) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["unit".to_string(), "month".to_string(), "target_month".to_string()];
    header.extend(ds.feature_names.iter().cloned());
    header.push(ds.target_name.clone());
    w.write_record(&header)?;
    for i in 0..ds.n_rows() {
        let mut rec = vec![ds.keys[i].unit.clone(), ds.keys[i].month.to_string(), ds.target_months[i].to_string()];
        rec.extend(ds.features[i].iter().map(|v| v.to_string()));
        rec.push(ds.targets[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_supervised(path: &Path, lead: usize) -> Result<SupervisedDataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.len() < 4 || header[..3] != ["unit", "month", "target_month"] {
        return Err(Error::Data(format!("{}: not a supervised table", path.display())));
    }
    let d = header.len() - 4;
    let mut ds = SupervisedDataset {
        keys: Vec::new(),
        target_months: Vec::new(),
        feature_names: header[3..3 + d].to_vec(),
        features: Vec::new(),
        targets: Vec::new(),
        target_name: header[3 + d].clone(),
        lead,
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = line + 2;
        let month = |s: &str| {
            s.parse::<YearMonth>().map_err(|_| Error::BadDate {
                line,
                value: s.to_string(),
            })
        };
        let num = |j: usize| {
            rec[j].parse::<f64>().map_err(|_| Error::NonNumeric {
                line,
                column: header[j].clone(),
                value: rec[j].to_string(),
            })
        };
        ds.keys.push(RowKey::new(&rec[0], month(&rec[1])?));
        ds.target_months.push(month(&rec[2])?);
        ds.features.push((3..3 + d).map(num).collect::<Result<_>>()?);
        ds.targets.push(num(3 + d)?);
    }
    Ok(ds)
}
