//! Compressed sparse rows and a banded LU factorization without pivoting.

use std::io::Write;

use crate::error::{Error, Result};

/// Real sparse matrix in compressed row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_start: Vec<usize>,
    pub columns: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        let n = rows.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut columns = Vec::new();
        let mut values = Vec::new();
        row_start.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    columns.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_start.push(columns.len());
        }
        CsrMatrix { n, row_start, columns, values }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_start[i]..self.row_start[i + 1]).map(move |k| (self.columns[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map(|e| e.1).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            *out = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// Writes one `row col value` line per stored entry.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// LU factors of `A - shift*I` in band storage, computed without pivoting.
///
/// Safe for nonsingular M-matrices (and diagonally dominant matrices), where every pivot
/// stays positive.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    band: usize,
    /// Row `i` holds columns `i - band ..= i + band` at offsets `0 ..= 2*band`.
    data: Vec<f64>,
}

impl BandedLu {
    pub fn factor(matrix: &CsrMatrix, shift: f64) -> Result<BandedLu> {
        let n = matrix.n;
        let band = matrix.bandwidth();
        let width = 2 * band + 1;
        let mut data = vec![0.0; n * width];
        for i in 0..n {
            for (j, v) in matrix.row(i) {
                data[i * width + j + band - i] += v;
            }
            data[i * width + band] -= shift;
        }
        for k in 0..n {
            let pivot = data[k * width + band];
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::SingularPivot { row: k, pivot });
            }
            let last = (k + band).min(n - 1);
            for i in k + 1..=last {
                let ik = i * width + k + band - i;
                let factor = data[ik] / pivot;
                if factor == 0.0 {
                    continue;
                }
                data[ik] = factor;
                for j in k + 1..=last {
                    let kj = data[k * width + j + band - k];
                    if kj != 0.0 {
                        data[i * width + j + band - i] -= factor * kj;
                    }
                }
            }
        }
        Ok(BandedLu { n, band, data })
    }

    /// Solves `(A - shift*I) x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let (n, band, width) = (self.n, self.band, 2 * self.band + 1);
        for i in 0..n {
            let first = i.saturating_sub(band);
            let mut sum = x[i];
            for j in first..i {
                sum -= self.data[i * width + j + band - i] * x[j];
            }
            x[i] = sum;
        }
        for i in (0..n).rev() {
            let last = (i + band).min(n - 1);
            let mut sum = x[i];
            for j in i + 1..=last {
                sum -= self.data[i * width + j + band - i] * x[j];
            }
            x[i] = sum / self.data[i * width + band];
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}
