//! File formats: labeled matrix CSV (17-significant-digit decimal text,
//! header row, first column holds row ids) and atomically-written JSON.
//!
//! All emissions go through a temp-file-and-rename step so an interrupted
//! run never leaves a truncated file that still parses.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// 17 significant digits round-trips every finite f64 bit-exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    std::io::Write::write_all(&mut tmp.as_file(), bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("cannot persist {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Writes a labeled matrix: header `corner,col0,col1,...`, then one record
/// per row starting with its id.
pub fn write_matrix(
    path: &Path,
    m: &Array2<f64>,
    row_ids: &[String],
    col_ids: &[String],
    corner: &str,
) -> CliResult<()> {
    assert_eq!(row_ids.len(), m.nrows());
    assert_eq!(col_ids.len(), m.ncols());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = Vec::with_capacity(col_ids.len() + 1);
    header.push(corner.to_string());
    header.extend(col_ids.iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    let mut record = Vec::with_capacity(col_ids.len() + 1);
    for (i, row) in m.rows().into_iter().enumerate() {
        record.clear();
        record.push(row_ids[i].clone());
        record.extend(row.iter().map(|&v| format_float(v)));
        writer
            .write_record(&record)
            .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("csv flush {}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}

/// Reads a labeled matrix back: returns the values, row ids, and column ids.
pub fn read_matrix(path: &Path) -> CliResult<(Array2<f64>, Vec<String>, Vec<String>)> {
    let raw = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(raw.as_slice());
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if header.len() < 2 {
        return Err(CliError::Data(format!("{}: header needs an id column and data columns", path.display())));
    }
    let col_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let cols = col_ids.len();

    let mut row_ids = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (line, record) in records.enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if record.len() != cols + 1 {
            return Err(CliError::Data(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 2,
                record.len(),
                cols + 1
            )));
        }
        row_ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("{}: row {}: bad number {field:?}", path.display(), line + 2))
            })?;
            values.push(v);
        }
    }
    let rows = row_ids.len();
    let m = Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((m, row_ids, col_ids))
}

/// Writes `id,group` labels.
pub fn write_labels(path: &Path, sample_ids: &[String], labels: &[usize]) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["id", "group"])
        .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    for (id, g) in sample_ids.iter().zip(labels) {
        writer
            .write_record([id.as_str(), &g.to_string()])
            .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("csv flush {}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}

pub fn read_labels(path: &Path) -> CliResult<(Vec<String>, Vec<usize>)> {
    let raw = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw.as_slice());
    let mut ids = Vec::new();
    let mut groups = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        ids.push(record[0].to_string());
        let g: usize = record[1]
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad group {:?}", path.display(), &record[1])))?;
        groups.push(g);
    }
    Ok((ids, groups))
}

/// Pretty JSON written atomically. Serialization order is the struct field
/// order (or sorted keys for maps), so identical values give identical bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Generic table CSV with string cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(header)
        .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("csv flush {}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}

/// Generic curve CSV: a header plus float rows at 17 significant digits.
pub fn write_curve(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(header)
        .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    for row in rows {
        let record: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        writer
            .write_record(&record)
            .map_err(|e| CliError::Data(format!("csv write {}: {e}", path.display())))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("csv flush {}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}
