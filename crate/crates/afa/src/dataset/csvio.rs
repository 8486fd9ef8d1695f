//! CSV ingestion and emission.
//!
//! Input CSVs are comma-separated with a header row. The companion
//! [`Schema`](super::Schema) decides which columns form each group, their
//! costs, and which column holds the binary label; CSV column order is
//! irrelevant.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Dataset, FeatureGroup, Schema};
use crate::error::{Error, Result};

/// Loads a dataset from a CSV file according to a schema.
///
/// Groups appear in schema order; costs come from the schema (1.0 when
/// omitted). Labels must parse to exactly 0 or 1.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::Data(format!("{}: {e}", path.display())),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let index_of: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        index_of
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("schema column {name:?} not found in CSV header")))
    };

    let label_idx = col_index(&schema.label)?;
    let mut groups = Vec::with_capacity(schema.groups.len());
    let mut feature_idx: Vec<usize> = Vec::new();
    for (id, decl) in schema.groups.iter().enumerate() {
        for col in &decl.columns {
            feature_idx.push(col_index(col)?);
        }
        groups.push(FeatureGroup {
            id,
            name: decl.name.clone(),
            dims: decl.columns.len(),
            cost: decl.cost,
        });
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).ok_or_else(|| {
                Error::Data(format!("row {}: missing column {idx}", r + 1))
            })?;
            raw.trim().parse::<f64>().map_err(|_| {
                Error::Data(format!(
                    "row {}: non-numeric cell {raw:?} in column {:?}",
                    r + 1,
                    headers.get(idx).unwrap_or("")
                ))
            })
        };
        for &idx in &feature_idx {
            rows.push(cell(idx)?);
        }
        let y = cell(label_idx)?;
        if y == 0.0 {
            labels.push(0);
        } else if y == 1.0 {
            labels.push(1);
        } else {
            return Err(Error::Data(format!(
                "row {}: label {y} not in {{0,1}}",
                r + 1
            )));
        }
    }

    let n = labels.len();
    let width = feature_idx.len();
    let values = Array2::from_shape_vec((n, width), rows)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, groups, values, Array1::from_vec(labels))
}

/// Writes a dataset as CSV: one column per feature dimension plus `label`.
///
/// Scalar groups use their name as the header; multidimensional groups emit
/// `<name>_<k>` columns. [`write_schema`] produces the matching schema file.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut header: Vec<String> = Vec::with_capacity(d.n_cols() + 1);
    for g in d.groups() {
        if g.dims == 1 {
            header.push(g.name.clone());
        } else {
            header.extend((0..g.dims).map(|k| format!("{}_{k}", g.name)));
        }
    }
    header.push("label".into());
    let io_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    w.write_record(&header).map_err(io_err)?;
    for i in 0..d.n_rows() {
        let mut record: Vec<String> = d.values().row(i).iter().map(|v| v.to_string()).collect();
        record.push(d.labels()[i].to_string());
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the schema file matching [`write_csv`]'s column naming.
pub fn write_schema(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("label = label\n");
    for g in d.groups() {
        let cols: Vec<String> = if g.dims == 1 {
            vec![g.name.clone()]
        } else {
            (0..g.dims).map(|k| format!("{}_{k}", g.name)).collect()
        };
        text.push_str(&format!(
            "group {} cost={} = {}\n",
            g.name,
            g.cost,
            cols.join(", ")
        ));
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
