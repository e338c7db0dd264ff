//! Headed, comma-separated numeric tables.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};

/// A dataset read from CSV together with its column names.
#[derive(Debug, Clone)]
pub struct Table {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub target: String,
    /// Present when the covariates were standardized on read.
    pub standardization: Option<Standardization>,
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            msg: format!("{kind:?}"),
        },
    }
}

struct RawTable {
    header: Vec<String>,
    /// Row-major cells, `header.len()` per row.
    cells: Vec<f64>,
    n: usize,
}

fn read_raw(reader: impl Read) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            msg: "missing header row".into(),
        });
    }
    let mut seen = HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("duplicate column name {dup:?}"),
        });
    }
    let mut cells = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                row: line,
                col: col + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumericCell {
                    row: line,
                    col: col + 1,
                    value: cell.to_string(),
                });
            }
            cells.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(RawTable { header, cells, n })
}

/// Reads a headed CSV; `target` names the response and every other column, in header
/// order, becomes a covariate. Cell positions in errors are 1-based file line and column.
pub fn read_dataset_from(reader: impl Read, target: &str, standardize: bool) -> Result<Table> {
    let raw = read_raw(reader)?;
    let t = raw
        .header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingTarget(target.to_string()))?;
    let width = raw.header.len();
    if width < 2 {
        return Err(Error::Parse {
            line: 1,
            msg: "need at least one covariate column besides the target".into(),
        });
    }
    let mut x = Vec::with_capacity(raw.n * (width - 1));
    let mut y = Vec::with_capacity(raw.n);
    for row in raw.cells.chunks_exact(width) {
        for (j, &v) in row.iter().enumerate() {
            if j == t {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    let feature_names: Vec<String> = raw
        .header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != t)
        .map(|(_, h)| h.clone())
        .collect();
    let mut data = Dataset::new(x, y, width - 1)?;
    let mut standardization = None;
    if standardize {
        let s = Standardization::fit(&data).map_err(|j| Error::ConstantColumn(feature_names[j].clone()))?;
        data = s.apply(&data);
        standardization = Some(s);
    }
    Ok(Table {
        data,
        feature_names,
        target: target.to_string(),
        standardization,
    })
}

pub fn read_dataset(path: impl AsRef<Path>, target: &str, standardize: bool) -> Result<Table> {
    read_dataset_from(std::fs::File::open(path)?, target, standardize)
}

/// Reads query points: the columns named in `features`, in that order. Other columns
/// (such as a response) are ignored. The response of the returned dataset is zero.
pub fn read_points_from(reader: impl Read, features: &[String]) -> Result<Dataset> {
    let raw = read_raw(reader)?;
    let cols: Vec<usize> = features
        .iter()
        .map(|f| {
            raw.header.iter().position(|h| h == f).ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("column {f:?} missing from query file"),
            })
        })
        .collect::<Result<_>>()?;
    let width = raw.header.len();
    let x: Vec<f64> = raw
        .cells
        .chunks_exact(width)
        .flat_map(|row| cols.iter().map(move |&c| row[c]))
        .collect();
    Dataset::new(x, vec![0.0; raw.n], features.len())
}

pub fn read_points(path: impl AsRef<Path>, features: &[String]) -> Result<Dataset> {
    read_points_from(std::fs::File::open(path)?, features)
}

/// Writes a numeric table with the given header.
pub fn write_matrix<'a>(
    writer: impl Write,
    header: &[String],
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes serializable records, one row each, with a header taken from the field names.
pub fn write_records<T: Serialize>(writer: impl Write, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a dataset with columns `x1..xp,y`.
pub fn write_dataset(writer: impl Write, data: &Dataset) -> Result<()> {
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let rows: Vec<Vec<f64>> = data
        .rows()
        .zip(data.y())
        .map(|(r, &y)| r.iter().copied().chain(std::iter::once(y)).collect())
        .collect();
    write_matrix(writer, &header, rows.iter().map(Vec::as_slice))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_target_and_features_in_order() {
        let t = read_dataset_from("a,y,b\n1,10,4\n2,20,5\n3,30,7\n".as_bytes(), "y", false).unwrap();
        assert_eq!(t.feature_names, vec!["a", "b"]);
        assert_eq!(t.data.n(), 3);
        assert_eq!(t.data.row(2), &[3.0, 7.0]);
        assert_eq!(t.data.y(), &[10.0, 20.0, 30.0]);
    }

    #[test]
    fn reports_bad_cells_and_missing_target() {
        let e = read_dataset_from("a,y\n1,2\nabc,3\n".as_bytes(), "y", false).unwrap_err();
        assert!(matches!(e, Error::NonNumericCell { row: 3, col: 1, .. }), "{e}");
        let e = read_dataset_from("a,y\n1,2\n".as_bytes(), "z", false).unwrap_err();
        assert!(matches!(e, Error::MissingTarget(_)));
        let e = read_dataset_from("a,y\n1,2\n2,nan\n".as_bytes(), "y", false).unwrap_err();
        assert!(matches!(e, Error::NonNumericCell { row: 3, col: 2, .. }));
    }

    #[test]
    fn ragged_rows_are_parse_errors() {
        let e = read_dataset_from("a,y\n1,2\n3\n".as_bytes(), "y", false).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn standardized_columns() {
        let t = read_dataset_from("a,b,y\n1,5,0\n2,5,1\n4,6,2\n9,9,3\n".as_bytes(), "y", true).unwrap();
        for j in 0..2 {
            let c = t.data.column(j);
            let m = c.iter().sum::<f64>() / 4.0;
            let v = c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
            assert!(m.abs() < 1e-10 && (v - 1.0).abs() < 1e-10);
        }
        let e = read_dataset_from("a,b,y\n1,5,0\n2,5,1\n".as_bytes(), "y", true).unwrap_err();
        assert!(matches!(e, Error::ConstantColumn(ref c) if c == "b"));
    }

    #[test]
    fn points_follow_requested_order() {
        let d = read_points_from("y,b,a\n0,2,1\n".as_bytes(), &["a".into(), "b".into()]).unwrap();
        assert_eq!(d.row(0), &[1.0, 2.0]);
    }
}
