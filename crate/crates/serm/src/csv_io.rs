//! Dataset CSV reading and writing.
//!
//! Comma-separated, header row required. Columns named `tangent<k>_<j>`
//! hold component `j` of tangent direction `k` (both 1-based); every other
//! non-label column is a numeric feature.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use serm_core::data::Dataset;
use serm_core::response::TangentSpec;

use crate::error::{Error, Result};

/// A data row left out of the dataset. `row` is 1-based, header excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reject {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub data: Dataset,
    pub rejects: Vec<Reject>,
}

pub fn load_csv(path: &Path, label_column: &str, positive_label: &str) -> Result<LoadedCsv> {
    let file = File::open(path).map_err(Error::io(path))?;
    read_csv(file, label_column, positive_label)
}

fn tangent_slot(name: &str) -> Option<(usize, usize)> {
    let (k, j) = name.strip_prefix("tangent")?.split_once('_')?;
    let (k, j) = (k.parse::<usize>().ok()?, j.parse::<usize>().ok()?);
    (k >= 1 && j >= 1).then_some((k - 1, j - 1))
}

fn same_label(cell: &str, positive: &str) -> bool {
    match (cell.parse::<f64>(), positive.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => cell == positive,
    }
}

pub fn read_csv<R: Read>(reader: R, label_column: &str, positive_label: &str) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let label_at = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let mut feature_cols = Vec::new();
    let mut tangent_cols = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if c == label_at {
            continue;
        }
        match tangent_slot(name) {
            Some(slot) => tangent_cols.push((c, slot)),
            None => feature_cols.push(c),
        }
    }
    let d = feature_cols.len();
    let n_dirs = tangent_cols.iter().map(|(_, (k, _))| k + 1).max().unwrap_or(0);
    if !tangent_cols.is_empty() && tangent_cols.len() != n_dirs * d {
        return Err(Error::Parse {
            context: "csv header",
            line: 1,
            message: format!("expected {d} tangent columns per direction"),
        });
    }

    let (mut features, mut labels, mut tangents, mut rejects) = (vec![], vec![], vec![], vec![]);
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rejects.push(Reject {
                    row,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if record.len() != header.len() {
            rejects.push(Reject {
                row,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
            continue;
        }
        let parse = |c: usize| -> std::result::Result<f64, String> {
            let cell = &record[c];
            if cell.is_empty() {
                return Err(format!("blank cell in column `{}`", &header[c]));
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("non-numeric cell `{cell}` in column `{}`", &header[c])),
            }
        };
        let label_cell = &record[label_at];
        if label_cell.is_empty() {
            rejects.push(Reject {
                row,
                reason: "blank label".into(),
            });
            continue;
        }
        let x: std::result::Result<Vec<f64>, String> = feature_cols.iter().map(|&c| parse(c)).collect();
        let mut dirs = vec![vec![0.0; d]; n_dirs];
        let mut bad = None;
        for &(c, (k, j)) in &tangent_cols {
            match parse(c) {
                Ok(v) => dirs[k][j] = v,
                Err(e) => bad = Some(e),
            }
        }
        match (x, bad) {
            (Ok(x), None) => {
                labels.push(if same_label(label_cell, positive_label) {
                    1.0
                } else {
                    -1.0
                });
                if n_dirs > 0 {
                    match TangentSpec::new(x.clone(), dirs) {
                        Ok(t) => tangents.push(t),
                        Err(e) => {
                            labels.pop();
                            rejects.push(Reject {
                                row,
                                reason: e.to_string(),
                            });
                            continue;
                        }
                    }
                }
                features.push(x);
            }
            (Err(e), _) | (_, Some(e)) => rejects.push(Reject { row, reason: e }),
        }
    }
    if features.is_empty() {
        return Err(Error::NoUsableRows {
            rejected: rejects.len(),
        });
    }
    let names = feature_cols.iter().map(|&c| header[c].to_string()).collect();
    let mut data = Dataset::new(features, labels)?.with_feature_names(names)?;
    if n_dirs > 0 {
        data = data.with_tangents(tangents)?;
    }
    Ok(LoadedCsv { data, rejects })
}

/// Feature columns, then `label` (±1), then tangent columns if present.
pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = data.dim();
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (1..=d).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".into());
    let n_dirs = data
        .tangents()
        .map_or(0, |t| t.iter().map(|s| s.directions.len()).max().unwrap_or(0));
    for k in 1..=n_dirs {
        header.extend((1..=d).map(|j| format!("tangent{k}_{j}")));
    }
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(f64::to_string).collect();
        rec.push(data.label(i).to_string());
        if let Some(t) = data.tangent(i) {
            for dir in &t.directions {
                rec.extend(dir.iter().map(f64::to_string));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    write_dataset(std::io::BufWriter::new(file), data)
}

/// Writes serializable rows as CSV with a header taken from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(())
}
