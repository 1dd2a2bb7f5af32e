use std::fs;
use std::path::Path;

use altdesign_core::{Design, Matrix};

use crate::error::CliError;

/// Writes one run per line under a header `x1,…,xk`; values keep 17 significant digits.
pub fn write_design_csv(path: &Path, design: &Design) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Csv { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = (1..=design.k()).map(|j| format!("x{j}")).collect();
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..design.n() {
        w.write_record(design.run(i).iter().map(|v| format!("{v:.16e}"))).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Reads a design written by [`write_design_csv`] and checks it against the expected shape.
pub fn read_design_csv(path: &Path, n: usize, bounds: &[(f64, f64)]) -> Result<Design, CliError> {
    let csv_err = |message: String| CliError::Csv { path: path.to_path_buf(), message };
    let k = bounds.len();
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) },
        _ => csv_err(e.to_string()),
    })?;
    let header = r.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    let expected: Vec<String> = (1..=k).map(|j| format!("x{j}")).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::Shape(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| csv_err(format!("line {}: not a number: {field:?}", rows + 2)))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(CliError::Shape(format!("{}: {rows} runs, expected {n}", path.display())));
    }
    let points = Matrix::from_row_major(n, k, values).map_err(|e| CliError::Shape(format!("{}: {e}", path.display())))?;
    Design::new(points, bounds.to_vec()).map_err(|e| CliError::Shape(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}
