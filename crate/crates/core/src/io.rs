//! Plain-text formats.
//!
//! Matrices and point sets are comma-separated floats, one row per line.
//! Matrix entries are squared dissimilarities. Edge lists hold `u v [w]` per
//! line with 0-based node ids and an optional weight (default 1). Blank lines
//! and lines starting with `#` are skipped everywhere. Writes go to a
//! temporary file in the target directory and are renamed into place.

use crate::decomp::DecompositionRow;
use crate::error::{Error, Result};
use crate::eval::{KnnReport, SweepReport};
use crate::metrics::Edge;
use crate::scalar::Real;
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

pub const DECOMPOSITION_HEADER: &str =
    "r,c1,c2,c2_squared,c3,total_predicted,total_measured,lower_bound,c4_formula,c4_measured";
pub const SWEEP_HEADER: &str = "method,r,objective,rel_err_input,rel_err_original,wall_ms";
pub const KNN_HEADER: &str = "method,r,n_train,n_test,accuracy";

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Numbered lines that carry data.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_float(source: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(source, line, format!("'{}' is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(source, line, format!("non-finite value '{}'", field.trim())));
    }
    Ok(v)
}

/// Parses a rectangular table of comma-separated floats.
pub fn parse_table(text: &str, source: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, content) in data_lines(text) {
        let row = content
            .split(',')
            .map(|f| parse_float(source, line, f))
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    source,
                    line,
                    format!("row has {} fields, expected {w}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    let w = width.ok_or_else(|| parse_err(source, 0, "no data rows"))?;
    Ok(DMatrix::from_fn(rows.len(), w, |i, j| rows[i][j]))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads a square matrix file. Structural checks (symmetry, hollowness)
/// are left to [`crate::SquaredDissimilarityMatrix::new`].
pub fn read_matrix<T: Real>(path: &Path) -> Result<DMatrix<T>> {
    let source = path.display().to_string();
    let m = parse_table(&read_text(path)?, &source)?;
    if m.nrows() != m.ncols() {
        return Err(parse_err(
            &source,
            0,
            format!("{} rows of {} entries is not square", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.map(T::lit))
}

/// Reads an `m x d` points file.
pub fn read_points<T: Real>(path: &Path) -> Result<DMatrix<T>> {
    let source = path.display().to_string();
    Ok(parse_table(&read_text(path)?, &source)?.map(T::lit))
}

/// One nonnegative integer label per line.
pub fn parse_labels(text: &str, source: &str) -> Result<Vec<usize>> {
    data_lines(text)
        .map(|(line, content)| {
            content
                .parse()
                .map_err(|_| parse_err(source, line, format!("'{content}' is not a label")))
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&read_text(path)?, &path.display().to_string())
}

/// Parses an edge list; the node count is one more than the largest id.
pub fn parse_edges(text: &str, source: &str) -> Result<(Vec<Edge<f64>>, usize)> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(source, line, "expected 'u v [w]'"));
        }
        let node = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| parse_err(source, line, format!("'{f}' is not a node id")))
        };
        let (u, v) = (node(fields[0])?, node(fields[1])?);
        let w = match fields.get(2) {
            Some(f) => parse_float(source, line, f)?,
            None => 1.0,
        };
        if w <= 0.0 {
            return Err(parse_err(source, line, format!("weight {w} is not positive")));
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    Ok((edges, n))
}

pub fn read_edges(path: &Path) -> Result<(Vec<Edge<f64>>, usize)> {
    parse_edges(&read_text(path)?, &path.display().to_string())
}

/// Writes `contents` to `path` via a temporary sibling and a rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::Io(format!("{}: {e}", path.display())));
    }
    Ok(())
}

/// CSV text of a matrix; `f64` values print in shortest round-trip form.
pub fn format_table<T: Real>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)].as_f64()).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix<T: Real>(path: &Path, m: &DMatrix<T>) -> Result<()> {
    atomic_write(path, format_table(m).as_bytes())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_decomposition<T: Real>(rows: &[DecompositionRow<T>]) -> String {
    let mut out = format!("{DECOMPOSITION_HEADER}\n");
    for row in rows {
        let d = &row.decomposition;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            d.r,
            d.c1.as_f64(),
            d.c2.as_f64(),
            d.c2_squared().as_f64(),
            d.c3.as_f64(),
            d.total.as_f64(),
            row.total_measured.as_f64(),
            d.lower_bound.as_f64(),
            row.c4.formula.as_f64(),
            row.c4.measured.as_f64()
        )
        .unwrap();
    }
    out
}

pub fn format_sweep(report: &SweepReport) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.method,
            row.r,
            opt(row.objective),
            opt(row.rel_err_input),
            opt(row.rel_err_original),
            row.wall_ms
        )
        .unwrap();
    }
    out
}

pub fn format_knn(report: &KnnReport) -> String {
    let mut out = format!("{KNN_HEADER}\n");
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.method, row.r, row.n_train, row.n_test, row.accuracy
        )
        .unwrap();
    }
    out
}
