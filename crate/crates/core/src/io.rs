//! Headerless CSV matrices and JSON documents.
//!
//! Graphs are `N x N`, action and benefit matrices `N x K` (one column per
//! game), cluster labels a single column. Numbers are written in Rust's
//! shortest round-trip form, so a write/read cycle is lossless.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{ActionMatrix, BenefitMatrix};
use crate::graphs::Graph;

/// Symmetry tolerance applied when loading graphs.
pub const GRAPH_SYMMETRY_TOL: f64 = 1e-9;

pub fn parse_matrix_csv(reader: impl Read) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", r + 1)))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("row {}, column {}: `{field}` is not a number", r + 1, c + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} columns, expected {}",
                    r + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_matrix_csv(file).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(format_matrix_csv(m).as_bytes())?;
    Ok(())
}

/// Loads an adjacency matrix, rejecting asymmetry above
/// [`GRAPH_SYMMETRY_TOL`] and averaging away the rest.
pub fn read_graph_csv(path: impl AsRef<Path>) -> Result<Graph> {
    let m = read_matrix_csv(path)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Parse(format!(
            "graph CSV must be square, got {} rows x {} columns",
            m.nrows(),
            m.ncols()
        )));
    }
    Graph::symmetrized(&m, GRAPH_SYMMETRY_TOL)
}

pub fn read_actions_csv(path: impl AsRef<Path>) -> Result<ActionMatrix> {
    let m = read_matrix_csv(path)?;
    if m.nrows() == 0 {
        return Err(Error::Parse("action CSV is empty".into()));
    }
    ActionMatrix::new(m)
}

pub fn read_benefits_csv(path: impl AsRef<Path>) -> Result<BenefitMatrix> {
    Ok(BenefitMatrix::new(read_matrix_csv(path)?))
}

pub fn write_labels_csv(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut f = File::create(path)?;
    for l in labels {
        writeln!(f, "{l}")?;
    }
    Ok(())
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_reports_row_and_column() {
        let err = parse_matrix_csv("1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 2, column 2"), "{err}");
        let err = parse_matrix_csv("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn graph_loader_symmetrizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        std::fs::write(&p, "0,1,0\n1.0000000001,0,2\n0,2,0\n").unwrap();
        let g = read_graph_csv(&p).unwrap();
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
        assert!((g.weight(0, 1) - 1.0).abs() < 1e-9);

        std::fs::write(&p, "0,1\n2,0\n").unwrap();
        assert!(matches!(read_graph_csv(&p), Err(Error::NotSymmetric(_))));
        std::fs::write(&p, "0,1,2\n1,0,2\n").unwrap();
        assert!(matches!(read_graph_csv(&p), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(vals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 12)) {
            let m = DMatrix::from_row_slice(3, 4, &vals);
            let back = parse_matrix_csv(format_matrix_csv(&m).as_bytes()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
