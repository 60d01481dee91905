//! File formats: MatrixMarket for matrices and graphs, CSV for vectors and
//! tables, a plain `u v w` edge list for graphs.

use std::fs;
use std::path::Path;

use nalgebra_sparse::io::{load_coo_from_matrix_market_str, save_to_matrix_market_file};
use nalgebra_sparse::CooMatrix;

use crate::dense::{Matrix, Vector};
use crate::laplacian::{Edge, WeightedMultigraph};

use super::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {msg}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let coo: CooMatrix<f64> = load_coo_from_matrix_market_str(&read(path)?).map_err(|e| bad(path, e))?;
    Ok(Matrix::from(&coo))
}

/// Writes every entry (zeros included) in coordinate format. Values are
/// printed as the shortest decimal that round-trips, so reading the file
/// back gives the same doubles.
pub fn write_matrix(path: &Path, a: &Matrix) -> Result<(), CliError> {
    let mut coo = CooMatrix::new(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            coo.push(i, j, a[(i, j)]);
        }
    }
    save_to_matrix_market_file(&coo, path).map_err(|e| bad(path, e))
}

pub fn write_sparse(path: &Path, rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<(), CliError> {
    let mut coo = CooMatrix::new(rows, cols);
    for &(i, j, v) in triplets {
        coo.push(i, j, v);
    }
    save_to_matrix_market_file(&coo, path).map_err(|e| bad(path, e))
}

/// All numeric fields of a headerless CSV, row by row.
pub fn read_vector(path: &Path) -> Result<Vector, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path).map_err(|e| bad(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        for field in rec.map_err(|e| bad(path, e))?.iter() {
            let field = field.trim();
            if !field.is_empty() {
                out.push(field.parse::<f64>().map_err(|e| bad(path, format!("{field:?}: {e}")))?);
            }
        }
    }
    Ok(Vector::from_vec(out))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| bad(path, e))?;
    for x in v {
        w.write_record([x.to_string()]).map_err(|e| bad(path, e))?;
    }
    w.flush().map_err(|e| bad(path, e))
}

pub fn write_indices(path: &Path, v: &[usize]) -> Result<(), CliError> {
    write_vector(path, &v.iter().map(|&i| i as f64).collect::<Vec<_>>())
}

/// Graph from a MatrixMarket file or an edge list.
///
/// MatrixMarket input lists each edge once, in either triangle; symmetric
/// headers are accepted with entries above the diagonal. Diagonal entries are
/// ignored and negative off-diagonal values are read as Laplacian entries
/// (weight `-v`). The edge list has one `u v w` line per multiedge, 0-based,
/// with `#` or `%` comments.
pub fn read_graph(path: &Path) -> Result<WeightedMultigraph, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with("%%") {
        read_graph_mtx(path, &text)
    } else {
        read_edge_list(path, &text)
    }
}

fn read_graph_mtx(path: &Path, text: &str) -> Result<WeightedMultigraph, CliError> {
    // nalgebra-sparse expects symmetric storage in the lower triangle; store
    // every entry there and read the file as general.
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_lowercase();
    if !header.contains("coordinate") {
        return Err(bad(path, "graph files must use coordinate format"));
    }
    let mut body = String::from(&header.replace("symmetric", "general"));
    body.push('\n');
    let mut size_seen = false;
    for line in lines {
        let t = line.trim();
        if t.starts_with('%') || t.is_empty() || !size_seen {
            size_seen |= !(t.starts_with('%') || t.is_empty());
            body.push_str(line);
        } else {
            let parts: Vec<&str> = t.split_whitespace().collect();
            match parts.as_slice() {
                [i, j, rest @ ..] => {
                    let (a, b): (usize, usize) = (i.parse().map_err(|e| bad(path, e))?, j.parse().map_err(|e| bad(path, e))?);
                    body.push_str(&format!("{} {} {}", a.max(b), a.min(b), rest.join(" ")));
                }
                _ => return Err(bad(path, format!("malformed entry {t:?}"))),
            }
        }
        body.push('\n');
    }
    let coo: CooMatrix<f64> = load_coo_from_matrix_market_str(&body).map_err(|e| bad(path, e))?;
    if coo.nrows() != coo.ncols() {
        return Err(bad(path, format!("graph matrix must be square, got {}x{}", coo.nrows(), coo.ncols())));
    }
    let edges = coo
        .triplet_iter()
        .filter(|(i, j, _)| i != j)
        .map(|(i, j, &v)| Edge { u: j, v: i, w: v.abs() })
        .collect();
    WeightedMultigraph::new(coo.nrows(), edges).map_err(|e| bad(path, e))
}

fn read_edge_list(path: &Path, text: &str) -> Result<WeightedMultigraph, CliError> {
    let mut triples = Vec::new();
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        let parse_err = |e: &dyn std::fmt::Display| bad(path, format!("line {}: {e}", lineno + 1));
        let (u, v, w) = match parts.as_slice() {
            [u, v] => (u, v, "1"),
            [u, v, w] => (u, v, *w),
            _ => return Err(parse_err(&"expected `u v w`")),
        };
        let u: usize = u.parse().map_err(|e| parse_err(&e))?;
        let v: usize = v.parse().map_err(|e| parse_err(&e))?;
        let w: f64 = w.parse().map_err(|e| parse_err(&e))?;
        n = n.max(u + 1).max(v + 1);
        triples.push((u, v, w));
    }
    WeightedMultigraph::from_triples(n, &triples).map_err(|e| bad(path, e))
}

pub fn write_edge_list(path: &Path, g: &WeightedMultigraph) -> Result<(), CliError> {
    let mut s = format!("# {} vertices, {} multiedges\n", g.n(), g.edges().len());
    for e in g.edges() {
        s.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
    }
    fs::write(path, s).map_err(|e| bad(path, e))
}
