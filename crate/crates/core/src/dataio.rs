//! CSV ingestion.
//!
//! Response files have a single `y` column, covariate files the columns
//! `x1..xd`, matched files `y,x1..xd`. Missing or non-numeric cells are
//! rejected with the offending line number.

use std::path::Path;

use crate::empirical::{matrix_from_rows, MatchedSample, UnmatchedSample};
use crate::error::{Error, Result};

struct Table {
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path, expect: impl Fn(&[String]) -> Result<()>) -> Result<Table> {
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: shown.clone(),
                source,
            },
            other => Error::Data(format!("{shown}: {other:?}")),
        })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{shown}: unreadable header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    expect(&header).map_err(|e| Error::Data(format!("{shown}: {e}")))?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Data(format!("{shown}: line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Data(format!(
                "{shown}: line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (field, name) in rec.iter().zip(&header) {
            let v: f64 = field.parse().map_err(|_| {
                Error::Data(format!("{shown}: line {line}: column `{name}`: cannot parse `{field}`"))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{shown}: line {line}: column `{name}`: non-finite value `{field}`"
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{shown}: no data rows")));
    }
    Ok(Table { rows })
}

fn check_x_headers(cols: &[String]) -> Result<()> {
    for (j, c) in cols.iter().enumerate() {
        if *c != format!("x{}", j + 1) {
            return Err(Error::Data(format!(
                "expected header `x{}` in column {}, found `{c}`",
                j + 1,
                j + 1
            )));
        }
    }
    Ok(())
}

pub fn read_responses(path: &Path) -> Result<Vec<f64>> {
    let t = read_table(path, |h| {
        if h.len() == 1 && h[0] == "y" {
            Ok(())
        } else {
            Err(Error::Data(format!("expected single header `y`, found {h:?}")))
        }
    })?;
    Ok(t.rows.into_iter().map(|r| r[0]).collect())
}

pub fn read_covariates(path: &Path) -> Result<nalgebra::DMatrix<f64>> {
    let t = read_table(path, |h| {
        if h.is_empty() {
            return Err(Error::Data("no covariate columns".into()));
        }
        check_x_headers(h)
    })?;
    matrix_from_rows(&t.rows)
}

pub fn read_unmatched(y_path: &Path, x_path: &Path) -> Result<UnmatchedSample> {
    UnmatchedSample::new(read_responses(y_path)?, read_covariates(x_path)?)
}

pub fn read_matched(path: &Path) -> Result<MatchedSample> {
    let t = read_table(path, |h| {
        if h.len() < 2 || h[0] != "y" {
            return Err(Error::Data(format!("expected header `y,x1,..,xd`, found {h:?}")));
        }
        check_x_headers(&h[1..])
    })?;
    let ys = t.rows.iter().map(|r| r[0]).collect();
    let xs: Vec<Vec<f64>> = t.rows.iter().map(|r| r[1..].to_vec()).collect();
    MatchedSample::from_rows(ys, &xs)
}

pub fn write_responses(path: &Path, ys: &[f64]) -> Result<()> {
    let mut s = String::from("y\n");
    for y in ys {
        s.push_str(&format!("{y}\n"));
    }
    write_file(path, &s)
}

pub fn write_covariates(path: &Path, xs: &nalgebra::DMatrix<f64>) -> Result<()> {
    let mut s = x_header(xs.ncols());
    s.push('\n');
    for row in xs.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    write_file(path, &s)
}

pub fn write_matched(path: &Path, m: &MatchedSample) -> Result<()> {
    let mut s = format!("y,{}\n", x_header(m.dim()));
    for (y, row) in m.ys().iter().zip(m.xs().row_iter()) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("{y},{}\n", cells.join(",")));
    }
    write_file(path, &s)
}

fn x_header(d: usize) -> String {
    (1..=d).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
