//! Matrix Market coordinate files (`real general`).

use std::io::{BufRead, Write};

use richards_core::SparseMatrix;

use crate::KitError;

pub fn write_matrix<W: Write>(a: &SparseMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<SparseMatrix, KitError> {
    let bad = |line: usize, what: &str| KitError::Parse(format!("line {line}: {what}"));
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let header = header.map_err(|e| KitError::Io(e.to_string()))?;
    if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real general") {
        return Err(bad(1, "expected a real general coordinate header"));
    }
    let mut size = None;
    let mut triplets = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| KitError::Io(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                let nums: Result<Vec<usize>, _> = fields.iter().map(|f| f.parse()).collect();
                match nums.as_deref() {
                    Ok([m, n, nnz]) => {
                        size = Some((*m, *n));
                        triplets.reserve(*nnz);
                    }
                    _ => return Err(bad(i + 1, "bad size line")),
                }
            }
            Some(_) => {
                let [r, c, v] = fields[..] else { return Err(bad(i + 1, "expected `row col value`")) };
                let r: usize = r.parse().map_err(|_| bad(i + 1, "bad row index"))?;
                let c: usize = c.parse().map_err(|_| bad(i + 1, "bad column index"))?;
                let v: f64 = v.parse().map_err(|_| bad(i + 1, "bad value"))?;
                if r == 0 || c == 0 {
                    return Err(bad(i + 1, "indices are 1-based"));
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (m, n) = size.ok_or_else(|| bad(2, "missing size line"))?;
    SparseMatrix::from_triplets(m, n, &triplets).map_err(|e| KitError::Parse(e.to_string()))
}
