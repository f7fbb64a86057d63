//! Dataset files: `label,f0,f1,…` CSV with integer class ids, plus a
//! `<file>.meta.json` sidecar holding the class table, feature names and
//! provenance.

use std::fs;
use std::path::{Path, PathBuf};

use nilm_core::train::Dataset;
use serde::{Deserialize, Serialize};

use crate::samples::csv_error;
use crate::{FileError, Result};

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub version: u32,
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub provenance: String,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("label".to_string())
        .chain((0..d.n_features()).map(|k| format!("f{k}")))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for (row, label) in d.rows().iter().zip(d.labels()) {
        let record = std::iter::once(label.to_string()).chain(row.iter().map(f64::to_string));
        w.write_record(record).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    fs::write(path, bytes).map_err(|e| FileError::io(path, e))?;
    let meta = DatasetMeta {
        version: DATASET_VERSION,
        classes: d.classes().to_vec(),
        feature_names: d.feature_names().to_vec(),
        provenance: d.provenance().to_string(),
    };
    let sidecar = meta_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("plain data serializes");
    fs::write(&sidecar, json + "\n").map_err(|e| FileError::io(sidecar, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let sidecar = meta_path(path);
    let meta_text = fs::read_to_string(&sidecar).map_err(|e| FileError::io(&sidecar, e))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text).map_err(|e| FileError::Parse {
        path: sidecar.clone(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    if meta.version != DATASET_VERSION {
        return Err(FileError::Version {
            found: meta.version,
            supported: DATASET_VERSION,
        });
    }
    let bytes = fs::read(path).map_err(|e| FileError::io(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let f = meta.feature_names.len();
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = std::iter::once("label".to_string()).chain((0..f).map(|k| format!("f{k}")));
    if header.iter().map(str::trim).ne(expected.collect::<Vec<_>>().iter().map(String::as_str)) {
        return Err(FileError::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header label,f0,…,f{} for {f} features", f.saturating_sub(1)),
        });
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| FileError::Parse {
            path: path.into(),
            line,
            message,
        };
        let label: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("label `{}` is not a class id", &record[0])))?;
        if label >= meta.classes.len() {
            return Err(bad(format!("label {label} outside the {} classes", meta.classes.len())));
        }
        let mut row = Vec::with_capacity(f);
        for (k, cell) in record.iter().skip(1).enumerate() {
            let x: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| bad(format!("`{cell}` in column f{k} is not a finite number")))?;
            row.push(x);
        }
        labels.push(label);
        rows.push(row);
    }
    Dataset::new(rows, labels, meta.classes, meta.feature_names, meta.provenance)
        .map_err(|e| FileError::format(path, e.to_string()))
}
