//! Matrix Market coordinate files (`real symmetric`, lower triangle, 1-based).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hamiltonian::CsrMatrix;
use crate::spin::LocalOperator;

/// Writes the lower triangle of a symmetric CSR matrix.
///
/// Values use Rust's shortest round-trip formatting, so reading the file back
/// reproduces every entry bit for bit.
pub fn write_csr(m: &CsrMatrix, comment: &str, mut w: impl Write) -> Result<()> {
    let entries: Vec<(usize, usize, f64)> =
        (0..m.dim).flat_map(|i| m.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v))).collect();
    write_header(&mut w, comment, m.dim, entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Writes a dense local operator, skipping exact zeros.
pub fn write_local(op: &LocalOperator, comment: &str, mut w: impl Write) -> Result<()> {
    let d = op.dim();
    let entries: Vec<(usize, usize, f64)> = (0..d)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, op.get(i, j)))
        .filter(|&(_, _, v)| v != 0.0)
        .collect();
    write_header(&mut w, comment, d, entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

fn write_header(w: &mut impl Write, comment: &str, dim: usize, nnz: usize) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    for line in comment.lines() {
        writeln!(w, "% {line}")?;
    }
    writeln!(w, "{dim} {dim} {nnz}")?;
    Ok(())
}

/// Reads a `real symmetric` coordinate file back into full CSR form.
pub fn read_symmetric(r: impl BufRead) -> Result<CsrMatrix> {
    let bad = |msg: &str| Error::Structure(format!("matrix market: {msg}"));
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))??;
    if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real symmetric") {
        return Err(bad("expected a real symmetric coordinate header"));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                let [rows, cols, nnz] = fields[..] else { return Err(bad("bad size line")) };
                let rows: usize = rows.parse().map_err(|_| bad("bad size line"))?;
                let cols: usize = cols.parse().map_err(|_| bad("bad size line"))?;
                if rows != cols {
                    return Err(bad("not square"));
                }
                size = Some((rows, nnz.parse().map_err(|_| bad("bad size line"))?));
            }
            Some((dim, _)) => {
                let [i, j, v] = fields[..] else { return Err(bad("bad entry line")) };
                let i: usize = i.parse().map_err(|_| bad("bad row index"))?;
                let j: usize = j.parse().map_err(|_| bad("bad column index"))?;
                let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
                if i == 0 || j == 0 || i > dim || j > dim {
                    return Err(bad("index out of range"));
                }
                triples.push((i - 1, j - 1, v));
                if i != j {
                    triples.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (dim, nnz) = size.ok_or_else(|| bad("missing size line"))?;
    let stored = triples.iter().filter(|(i, j, _)| i >= j).count();
    if stored != nnz {
        return Err(bad(&format!("expected {nnz} entries, found {stored}")));
    }
    triples.sort_by_key(|&(i, j, _)| (i, j));
    let mut row_ptr = vec![0usize; dim + 1];
    for &(i, _, _) in &triples {
        row_ptr[i + 1] += 1;
    }
    for i in 0..dim {
        row_ptr[i + 1] += row_ptr[i];
    }
    Ok(CsrMatrix {
        dim,
        row_ptr,
        cols: triples.iter().map(|&(_, j, _)| j as u32).collect(),
        vals: triples.iter().map(|&(_, _, v)| v).collect(),
    })
}
