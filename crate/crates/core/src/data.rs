//! Datasets and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, OsirError, Result};
use crate::linalg::{serde_rows, serde_vec};

/// Predictors (`n x p`, one observation per row) and a scalar response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(with = "serde_rows")]
    pub x: DMatrix<f64>,
    #[serde(with = "serde_vec")]
    pub y: DVector<f64>,
    /// Predictor names, one per column of `x`.
    pub columns: Vec<String>,
    pub response: String,
}

impl Dataset {
    /// Wraps unnamed data as `x1..xp` and `y`.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let columns = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, columns, "y".to_string())
    }

    pub fn with_names(
        x: DMatrix<f64>,
        y: DVector<f64>,
        columns: Vec<String>,
        response: String,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return invalid(format!(
                "predictor rows ({}) and response length ({}) differ",
                x.nrows(),
                y.len()
            ));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return invalid("dataset is empty");
        }
        if columns.len() != x.ncols() {
            return invalid("column names do not match predictor count");
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return invalid("dataset contains non-finite values");
        }
        Ok(Self {
            x,
            y,
            columns,
            response,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i])),
            columns: self.columns.clone(),
            response: self.response.clone(),
        }
    }
}

/// Reads a headered numeric CSV; `response` names the response column and
/// every other column becomes a predictor.
pub fn ingest_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, response)
}

pub fn read_csv<R: Read>(reader: R, response: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(OsirError::Ingest("file is empty or has no header".into()));
    }
    let resp_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| OsirError::Ingest(format!("missing response column '{response}'")))?;
    let columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != resp_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row_idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = row_idx + 1;
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                OsirError::Ingest(format!(
                    "non-numeric cell '{cell}' at row {row}, column '{}'",
                    headers[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(OsirError::Ingest(format!(
                    "non-finite cell at row {row}, column '{}'",
                    headers[j]
                )));
            }
            if j == resp_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(OsirError::Ingest("file has no data rows".into()));
    }
    let n = ys.len();
    let x = DMatrix::from_row_slice(n, columns.len(), &xs);
    Dataset::with_names(x, DVector::from_vec(ys), columns, response.to_string())
}

/// Writes predictors followed by the response column. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = ds.columns.clone();
    header.push(ds.response.clone());
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.x.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.y[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Column checks for data that must carry particular named attributes.
pub fn require_columns(ds: &Dataset, names: &[&str]) -> Result<()> {
    for name in names {
        if ds.column_index(name).is_none() && ds.response != *name {
            return Err(OsirError::Ingest(format!("missing column '{name}'")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_matrix, random_vector, rng};

    #[test]
    fn three_rows() {
        let csv = "a,b,y\n1,2,3\n4,5,6\n7,8,9\n";
        let ds = read_csv(csv.as_bytes(), "y").unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 2));
        assert_eq!(ds.columns, vec!["a", "b"]);
        assert_eq!(ds.y.as_slice(), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.x[(2, 1)], 8.0);
    }

    #[test]
    fn response_in_the_middle() {
        let ds = read_csv("a,y,b\n1,2,3\n".as_bytes(), "y").unwrap();
        assert_eq!(ds.x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 3.0]);
        assert_eq!(ds.y[0], 2.0);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let csv = "crim,nox,medv\n0.1,0.5,24\n0.2,abc,21\n";
        let err = read_csv(csv.as_bytes(), "medv").unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("'nox'"), "{err}");
    }

    #[test]
    fn missing_response_and_empty_file() {
        let err = read_csv("a,b\n1,2\n".as_bytes(), "medv").unwrap_err().to_string();
        assert!(err.contains("medv"));
        assert!(read_csv("".as_bytes(), "y").is_err());
        assert!(read_csv("a,y\n".as_bytes(), "y").is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut r = rng(4);
        let x = random_matrix(&mut r, 25, 5);
        let y = random_vector(&mut r, 25);
        let ds = Dataset::new(x, y).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "y").unwrap();
        assert!((&back.x - &ds.x).amax() <= 1e-15);
        assert_eq!(back, ds);
    }

    #[test]
    fn require_columns_reports_missing_name() {
        let ds = read_csv("a,y\n1,2\n".as_bytes(), "y").unwrap();
        assert!(require_columns(&ds, &["a", "y"]).is_ok());
        let err = require_columns(&ds, &["a", "zn"]).unwrap_err().to_string();
        assert!(err.contains("'zn'"));
    }
}
