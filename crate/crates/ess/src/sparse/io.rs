//! Matrix Market coordinate I/O.
//!
//! Reads `matrix coordinate real` in `general` or `symmetric` form; symmetric
//! files are expanded to full storage and duplicate entries are summed, per
//! the format's conventions. The writer always emits `general` with one-based
//! indices and 17 significant digits, which round-trips f64 exactly.
//!
//! Right-hand sides and solutions travel as n-by-1 coordinate files through
//! [`load_vector`] / [`save_vector`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CscMatrix;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    symmetry: Symmetry,
}

fn parse_header(line: &str) -> Result<Header> {
    let fields: Vec<String> = line.split_whitespace().map(|f| f.to_lowercase()).collect();
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    if fields.len() != 5 || fields[0] != "%%matrixmarket" {
        return Err(bad("expected '%%MatrixMarket matrix coordinate real <symmetry>'"));
    }
    if fields[1] != "matrix" {
        return Err(bad("only 'matrix' objects are supported"));
    }
    if fields[2] != "coordinate" {
        return Err(bad("only 'coordinate' format is supported"));
    }
    if fields[3] != "real" {
        return Err(bad("only 'real' values are supported"));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => {
            return Err(bad(&format!(
                "unsupported symmetry '{other}' (general or symmetric)"
            )))
        }
    };
    Ok(Header { symmetry })
}

struct RawCoord {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

fn read_coordinate<R: BufRead>(reader: R) -> Result<RawCoord> {
    let mut lines = reader.lines().enumerate();

    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = parse_header(&first?)?;

    let mut size_line = None;
    for (idx, line) in &mut lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, line));
        break;
    }
    let (size_lineno, size_line) = size_line.ok_or(Error::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    let dims: Vec<&str> = size_line.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(Error::Parse {
            line: size_lineno,
            msg: "size line must be 'nrows ncols nnz'".into(),
        });
    }
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse {
            line: size_lineno,
            msg: format!("bad integer '{s}' in size line"),
        })
    };
    let nrows = parse_dim(dims[0])?;
    let ncols = parse_dim(dims[1])?;
    let nnz = parse_dim(dims[2])?;

    let mut entries = Vec::with_capacity(nnz);
    for (idx, line) in &mut lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: "entry line must be 'row col value'".into(),
            });
        }
        let i: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad row index '{}'", fields[0]),
        })?;
        let j: usize = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad column index '{}'", fields[1]),
        })?;
        let v: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad value '{}'", fields[2]),
        })?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("index ({i}, {j}) outside {nrows}x{ncols} (one-based)"),
            });
        }
        entries.push((i - 1, j - 1, v));
        if header.symmetry == Symmetry::Symmetric && i != j {
            entries.push((j - 1, i - 1, v));
        }
    }
    Ok(RawCoord {
        nrows,
        ncols,
        entries,
    })
}

/// Reads a square sparse matrix from Matrix Market coordinate text.
pub fn read_matrix_market<T: Scalar, R: BufRead>(reader: R) -> Result<CscMatrix<T>> {
    let raw = read_coordinate(reader)?;
    if raw.nrows != raw.ncols {
        return Err(Error::InvalidMatrix(format!(
            "matrix must be square, got {}x{}",
            raw.nrows, raw.ncols
        )));
    }
    let triplets: Vec<(usize, usize, T)> = raw
        .entries
        .iter()
        .map(|&(i, j, v)| (i, j, T::from_f64_lossy(v)))
        .collect();
    CscMatrix::from_triplets(raw.nrows, &triplets)
}

/// Reads a square sparse matrix from a Matrix Market file on disk.
pub fn load_matrix_market<T: Scalar, P: AsRef<Path>>(path: P) -> Result<CscMatrix<T>> {
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file))
}

/// Writes coordinate/real/general with one-based indices, column-major entry
/// order and 17 significant digits.
pub fn write_matrix_market<T: Scalar, W: Write>(a: &CscMatrix<T>, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz())?;
    for j in 0..a.n() {
        let (rows, vals) = a.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

pub fn save_matrix_market<T: Scalar, P: AsRef<Path>>(a: &CscMatrix<T>, path: P) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a dense vector stored as an n-by-1 coordinate file; absent rows are
/// zero.
pub fn read_vector<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let raw = read_coordinate(reader)?;
    if raw.ncols != 1 {
        return Err(Error::InvalidMatrix(format!(
            "vector file must have one column, got {}",
            raw.ncols
        )));
    }
    let mut v = vec![T::zero(); raw.nrows];
    for &(i, _, x) in &raw.entries {
        v[i] += T::from_f64_lossy(x);
    }
    Ok(v)
}

pub fn load_vector<T: Scalar, P: AsRef<Path>>(path: P) -> Result<Vec<T>> {
    let file = File::open(path)?;
    read_vector(BufReader::new(file))
}

/// Writes every component of `v` (zeros included) as an n-by-1 coordinate
/// file, so the round trip reproduces the vector exactly.
pub fn write_vector<T: Scalar, W: Write>(v: &[T], mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} 1 {}", v.len(), v.len())?;
    for (i, x) in v.iter().enumerate() {
        writeln!(w, "{} 1 {:.16e}", i + 1, x)?;
    }
    Ok(())
}

pub fn save_vector<T: Scalar, P: AsRef<Path>>(v: &[T], path: P) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_vector(v, &mut w)?;
    w.flush()?;
    Ok(())
}
