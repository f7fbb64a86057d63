//! Sample stream files.
//!
//! CSV: header `t_s,v,i`, one row per sample at 10 kHz. Binary: magic
//! `NILM1`, then little-endian `u32` sample count, `f64` rate and `count`
//! pairs of `f64` (v, i).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nilm_core::signal::{SampleStream, SAMPLE_RATE_HZ};

use crate::{FileError, Result};

pub const BINARY_MAGIC: &[u8; 5] = b"NILM1";
const CSV_HEADER: [&str; 3] = ["t_s", "v", "i"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SampleFormat {
    Csv,
    Bin,
}

impl SampleFormat {
    /// `.bin` and `.nilm` mean binary, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin" | "nilm") => SampleFormat::Bin,
            _ => SampleFormat::Csv,
        }
    }
}

pub fn save_samples(stream: &SampleStream, path: &Path, format: SampleFormat) -> Result<()> {
    let bytes = match format {
        SampleFormat::Csv => to_csv(stream),
        SampleFormat::Bin => to_binary(stream)?,
    };
    fs::write(path, bytes).map_err(|e| FileError::io(path, e))
}

pub fn load_samples(path: &Path, format: SampleFormat) -> Result<SampleStream> {
    let bytes = fs::read(path).map_err(|e| FileError::io(path, e))?;
    match format {
        SampleFormat::Csv => from_csv(&bytes, path),
        SampleFormat::Bin => from_binary(&bytes).map_err(|e| match e {
            FileError::Core(_) | FileError::Io { .. } => e,
            other => FileError::format(path, other.to_string()),
        }),
    }
}

pub fn to_csv(stream: &SampleStream) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (k, (v, i)) in stream.v.iter().zip(&stream.i).enumerate() {
        let t = k as f64 / stream.rate_hz;
        w.write_record([t.to_string(), v.to_string(), i.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn from_csv(bytes: &[u8], path: &Path) -> Result<SampleStream> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(FileError::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header `t_s,v,i`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut v = Vec::new();
    let mut i = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64> {
            let raw = record.get(k).unwrap_or("").trim();
            raw.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| FileError::Parse {
                path: path.into(),
                line,
                message: format!("`{raw}` in column {} is not a finite number", CSV_HEADER[k]),
            })
        };
        field(0)?;
        v.push(field(1)?);
        i.push(field(2)?);
    }
    Ok(SampleStream::new(v, i, f64::from(SAMPLE_RATE_HZ))?)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> FileError {
    let line = e.position().map_or(0, |p| p.line());
    FileError::Parse {
        path: path.into(),
        line,
        message: e.to_string(),
    }
}

pub fn to_binary(stream: &SampleStream) -> Result<Vec<u8>> {
    let count = u32::try_from(stream.len())
        .map_err(|_| FileError::Corrupt(format!("{} samples exceed the u32 count field", stream.len())))?;
    let mut out = BufWriter::new(Vec::with_capacity(17 + 16 * stream.len()));
    let mut put = |b: &[u8]| out.write_all(b).expect("in-memory write");
    put(BINARY_MAGIC);
    put(&count.to_le_bytes());
    put(&stream.rate_hz.to_le_bytes());
    for (v, i) in stream.v.iter().zip(&stream.i) {
        put(&v.to_le_bytes());
        put(&i.to_le_bytes());
    }
    Ok(out.into_inner().expect("in-memory flush"))
}

pub fn from_binary(bytes: &[u8]) -> Result<SampleStream> {
    let rest = bytes.strip_prefix(BINARY_MAGIC).ok_or(FileError::BadMagic { expected: "NILM1" })?;
    if rest.len() < 12 {
        return Err(FileError::Truncated);
    }
    let count = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
    let rate = f64::from_le_bytes(rest[4..12].try_into().expect("8 bytes"));
    let body = &rest[12..];
    if body.len() < count * 16 {
        return Err(FileError::Truncated);
    }
    if body.len() > count * 16 {
        return Err(FileError::Corrupt(format!("{} trailing bytes", body.len() - count * 16)));
    }
    let mut v = Vec::with_capacity(count);
    let mut i = Vec::with_capacity(count);
    for pair in body.chunks_exact(16) {
        v.push(f64::from_le_bytes(pair[..8].try_into().expect("8 bytes")));
        i.push(f64::from_le_bytes(pair[8..].try_into().expect("8 bytes")));
    }
    Ok(SampleStream::new(v, i, rate)?)
}
