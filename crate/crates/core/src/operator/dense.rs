use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major complex matrix: a finite section of a change-of-basis operator
/// or a plain measurement matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseBlock {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} entries do not fill a {rows}x{cols} block",
                data.len()
            )));
        }
        Ok(DenseBlock { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseBlock {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = Self::zeros(n, n);
        for i in 0..n {
            b.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        b
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64 + Sync) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
        if cols > 0 {
            data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(i, j);
                }
            });
        }
        DenseBlock { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<Complex64>()
    }

    /// Entry at 0-based (i, j).
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The rows listed in `rows` (0-based), in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<DenseBlock> {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::invalid(format!(
                    "row {r} outside {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(r));
        }
        Ok(DenseBlock {
            rows: rows.len(),
            cols: self.cols,
            data,
        })
    }

    /// The leading `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> DenseBlock {
        let cols = cols.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..cols]);
        }
        DenseBlock {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Columns permuted: column j of the result is column perm[j] of self.
    pub fn permute_columns(&self, perm: &[usize]) -> DenseBlock {
        DenseBlock::from_fn(self.rows, perm.len(), |i, j| self.get(i, perm[j]))
    }

    /// y = A x. Each output entry is a sequential sum, so the result does not
    /// depend on the number of threads.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "vector of length {} applied to {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// x = A* y.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows {
            return Err(Error::invalid(format!(
                "vector of length {} applied to the adjoint of {} rows",
                y.len(),
                self.rows
            )));
        }
        Ok((0..self.cols)
            .into_par_iter()
            .map(|j| (0..self.rows).map(|i| self.get(i, j).conj() * y[i]).sum())
            .collect())
    }

    /// Euclidean norms of the columns.
    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.get(i, j).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// max_{i,j} |(A*A - I)_{ij}|.
    pub fn gram_deviation(&self) -> f64 {
        (0..self.cols)
            .into_par_iter()
            .map(|a| {
                let mut worst = 0.0f64;
                for b in a..self.cols {
                    let g: Complex64 = (0..self.rows)
                        .map(|i| self.get(i, a).conj() * self.get(i, b))
                        .sum();
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((g - target).norm());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// CSV with header `m,n,re,im`, one entry per line in row-major order,
    /// positions 1-based.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "m,n,re,im")?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self.get(i, j);
                writeln!(w, "{},{},{:e},{:e}", i + 1, j + 1, z.re, z.im)?;
            }
        }
        w.flush()
    }
}
