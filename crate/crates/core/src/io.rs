//! Matrix and table serialization.
//!
//! Binary matrix layout, all little endian: `u64 n`, `u64 tag` (0 real
//! symmetric, 1 Hermitian), then the `n × n` entries in row-major order as
//! `f64` (real) or `(re, im)` `f64` pairs (Hermitian).

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::ensemble::{HermitianMatrix, Symmetry};
use crate::error::{Error, Result};

const TAG_REAL: u64 = 0;
const TAG_HERMITIAN: u64 = 1;
const MAX_BINARY_DIM: u64 = 1 << 16;

pub fn write_matrix_binary<W: Write>(mut w: W, m: &HermitianMatrix) -> Result<()> {
    let n = m.dim();
    w.write_all(&(n as u64).to_le_bytes())?;
    match m {
        HermitianMatrix::Real(a) => {
            w.write_all(&TAG_REAL.to_le_bytes())?;
            for i in 0..n {
                for j in 0..n {
                    w.write_all(&a[(i, j)].to_le_bytes())?;
                }
            }
        }
        HermitianMatrix::Complex(a) => {
            w.write_all(&TAG_HERMITIAN.to_le_bytes())?;
            for i in 0..n {
                for j in 0..n {
                    w.write_all(&a[(i, j)].re.to_le_bytes())?;
                    w.write_all(&a[(i, j)].im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads the binary layout and checks the result is Hermitian within
/// `1e-12·‖M‖_F`.
pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<HermitianMatrix> {
    let n = read_u64(&mut r)?;
    if n == 0 || n > MAX_BINARY_DIM {
        return Err(Error::InvalidArgument(format!(
            "implausible matrix dimension {n}"
        )));
    }
    let n = n as usize;
    let m = match read_u64(&mut r)? {
        TAG_REAL => {
            let mut data = Vec::with_capacity(n * n);
            for _ in 0..n * n {
                data.push(read_f64(&mut r)?);
            }
            HermitianMatrix::Real(DMatrix::from_row_slice(n, n, &data))
        }
        TAG_HERMITIAN => {
            let mut data = Vec::with_capacity(n * n);
            for _ in 0..n * n {
                let re = read_f64(&mut r)?;
                data.push(Complex64::new(re, read_f64(&mut r)?));
            }
            HermitianMatrix::Complex(DMatrix::from_row_slice(n, n, &data))
        }
        tag => {
            return Err(Error::InvalidArgument(format!(
                "unknown symmetry tag {tag}"
            )))
        }
    };
    check_hermitian(&m)?;
    Ok(m)
}

fn check_hermitian(m: &HermitianMatrix) -> Result<()> {
    let tolerance = 1e-12 * m.frobenius_norm();
    let defect = m.hermitian_defect();
    if defect > tolerance {
        return Err(Error::NotHermitian { defect, tolerance });
    }
    Ok(())
}

/// Dense CSV: one matrix row per line. Hermitian entries take two columns,
/// real part then imaginary part.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &HermitianMatrix) -> Result<()> {
    let n = m.dim();
    for i in 0..n {
        let cells: Vec<String> = (0..n)
            .map(|j| match m {
                HermitianMatrix::Real(a) => a[(i, j)].to_string(),
                HermitianMatrix::Complex(a) => format!("{},{}", a[(i, j)].re, a[(i, j)].im),
            })
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(r: R, symmetry: Symmetry) -> Result<HermitianMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad CSV cell {c:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let width = match symmetry {
        Symmetry::RealSymmetric => n,
        Symmetry::Hermitian => 2 * n,
    };
    if n == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidArgument(format!(
            "CSV matrix must have {n} rows of {width} cells"
        )));
    }
    let m = match symmetry {
        Symmetry::RealSymmetric => HermitianMatrix::Real(DMatrix::from_fn(n, n, |i, j| rows[i][j])),
        Symmetry::Hermitian => HermitianMatrix::Complex(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][2 * j], rows[i][2 * j + 1])
        })),
    };
    check_hermitian(&m)?;
    Ok(m)
}

/// Table cell: integers (seeds, indices) are kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Self::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as u64)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Int(x) => write!(f, "{x}"),
            Self::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Numeric table with a header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// ECDF plot data: `value,ecdf,reference_cdf`.
    pub fn ecdf(rows: &[(f64, f64, f64)]) -> Self {
        let mut t = Self::new(&["value", "ecdf", "reference_cdf"]);
        t.rows = rows
            .iter()
            .map(|&(a, b, c)| vec![a.into(), b.into(), c.into()])
            .collect();
        t
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}
