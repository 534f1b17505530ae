//! CSV ingestion. Training files have a header row, feature columns
//! `x1..xd` and the label `y` last; test files are the same without `y`.

use std::fs::File;
use std::path::Path;

use krrpm::kernels::Objects;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

fn read_rows(path: &Path, has_header: bool) -> CliResult<(Vec<Vec<f64>>, Vec<u64>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Csv {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Csv {
                        path: path.to_path_buf(),
                        line,
                        message: format!("column {}: {field:?} is not a finite number", col + 1),
                    })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
        lines.push(line);
    }
    Ok((rows, lines))
}

pub struct Training {
    pub objects: Objects,
    pub labels: Vec<f64>,
}

pub fn read_training(path: &Path) -> CliResult<Training> {
    let (rows, lines) = read_rows(path, true)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: no training rows", path.display())));
    }
    if rows[0].len() < 2 {
        return Err(CliError::Csv {
            path: path.to_path_buf(),
            line: lines[0],
            message: "need at least one feature column and the label column".into(),
        });
    }
    let labels = rows.iter().map(|r| r[r.len() - 1]).collect();
    let features: Vec<&[f64]> = rows.iter().map(|r| &r[..r.len() - 1]).collect();
    Ok(Training {
        objects: Objects::from_rows(&features)?,
        labels,
    })
}

pub fn read_tests(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let (rows, _) = read_rows(path, true)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: no test rows", path.display())));
    }
    Ok(rows)
}

/// `"x1,x2,..."` from the command line.
pub fn parse_inline(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--at {text:?}: {f:?} is not a finite number")))
        })
        .collect()
}

/// Headerless square matrix for the precomputed kernel.
pub fn read_gram(path: &Path) -> CliResult<DMatrix<f64>> {
    let (rows, _) = read_rows(path, false)?;
    let size = rows.len();
    if size == 0 {
        return Err(CliError::Usage(format!("{}: empty kernel matrix", path.display())));
    }
    if rows[0].len() != size {
        return Err(CliError::Usage(format!(
            "{}: kernel matrix has {size} rows but {} columns",
            path.display(),
            rows[0].len()
        )));
    }
    Ok(DMatrix::from_fn(size, size, |i, j| rows[i][j]))
}
