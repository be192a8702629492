//! Dense row-major matrices and a cyclic Jacobi symmetric eigensolver.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Rows per block when accumulating `X^T X`. Fixed so the summation order
/// does not depend on the thread count.
const GRAM_BLOCK_ROWS: usize = 256;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
const SYMMETRY_REL_TOL: f64 = 1e-9;

/// Dense real matrix stored row-major. All entries are finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<Matrix> for RawMatrix {
    fn from(m: Matrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Matrix::new(n, n, data)
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Matrix::new(values.len(), 1, values.to_vec())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let cols = columns.len();
        let mut m = Matrix::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, v) in c.iter().enumerate() {
                m.data[i * cols + j] = *v;
            }
        }
        Matrix::new(rows, cols, m.data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Copies the listed rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        let k = k.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * k);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..k]);
        }
        Matrix {
            rows: self.rows,
            cols: k,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Entrywise `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Matrix, b: f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.axpby(1.0, other, -1.0)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm_sq(self).sqrt()
    }

    /// `max |U^T U - I|` over all entries.
    pub fn orthonormality_deviation(&self) -> f64 {
        let k = self.cols;
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in a..k {
                let dot: f64 = (0..self.rows).map(|i| self.get(i, a) * self.get(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// The orthogonal projector `U U^T` onto the column span.
    pub fn projector(&self) -> Matrix {
        let d = self.rows;
        let mut p = Matrix::zeros(d, d);
        for i in 0..d {
            let ri = self.row(i);
            for j in i..d {
                let rj = self.row(j);
                let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                p.data[i * d + j] = v;
                p.data[j * d + i] = v;
            }
        }
        p
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Sum of squared entries.
pub fn frobenius_norm_sq(a: &Matrix) -> f64 {
    a.data.iter().map(|v| v * v).sum()
}

/// `X^T X / divisor`, exactly symmetric.
pub fn scaled_gram(x: &Matrix, divisor: usize) -> Result<Matrix> {
    scaled_gram_with(x, divisor, Exec::default())
}

pub fn scaled_gram_with(x: &Matrix, divisor: usize, exec: Exec) -> Result<Matrix> {
    if divisor == 0 {
        return Err(Error::ZeroDivisor);
    }
    let d = x.cols;
    let blocks = x.rows.div_ceil(GRAM_BLOCK_ROWS);
    let partials = exec.map_range(blocks, |b| {
        let start = b * GRAM_BLOCK_ROWS;
        let end = (start + GRAM_BLOCK_ROWS).min(x.rows);
        let mut acc = vec![0.0; d * d];
        for i in start..end {
            let row = x.row(i);
            for (p, &xp) in row.iter().enumerate() {
                if xp == 0.0 {
                    continue;
                }
                let acc_row = &mut acc[p * d + p..(p + 1) * d];
                for (a, &xq) in acc_row.iter_mut().zip(&row[p..]) {
                    *a += xp * xq;
                }
            }
        }
        acc
    });

    let mut upper = vec![0.0; d * d];
    for partial in &partials {
        for (u, v) in upper.iter_mut().zip(partial) {
            *u += v;
        }
    }
    let inv = 1.0 / divisor as f64;
    let mut g = Matrix::zeros(d, d);
    for p in 0..d {
        for q in p..d {
            let v = upper[p * d + q] * inv;
            g.data[p * d + q] = v;
            g.data[q * d + p] = v;
        }
    }
    Ok(g)
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_symmetric(c: &Matrix) -> Result<()> {
    if !c.is_square() {
        return Err(Error::NotSquare {
            rows: c.rows,
            cols: c.cols,
        });
    }
    let n = c.rows;
    let mut skew_sq = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = c.get(i, j) - c.get(j, i);
            skew_sq += 2.0 * diff * diff;
        }
    }
    let norm = c.frobenius_norm();
    let skew = if norm > 0.0 { skew_sq.sqrt() / norm } else { 0.0 };
    if skew > SYMMETRY_REL_TOL {
        return Err(Error::NotSymmetric { skew });
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(c: &Matrix) -> Result<EigenPairs> {
    check_symmetric(c)?;
    let n = c.rows;
    let mut a = c.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    // rows of `vt` are the eigenvectors
    let mut vt = Matrix::identity(n);
    jacobi_sweeps(&mut a, &mut vt);

    let raw: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their Jacobi order
    order.sort_by(|&x, &y| raw[y].total_cmp(&raw[x]));

    let values = order.iter().map(|&k| raw[k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vt.row(src).to_vec();
        orient(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vectors.set(i, dst, x);
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// The `r` eigenpairs with algebraically largest eigenvalues.
pub fn sym_eig_top_r(c: &Matrix, r: usize) -> Result<EigenPairs> {
    if !c.is_square() {
        return Err(Error::NotSquare {
            rows: c.rows,
            cols: c.cols,
        });
    }
    if r == 0 || r > c.rows {
        return Err(Error::RankOutOfRange { rank: r, max: c.rows });
    }
    let full = sym_eig(c)?;
    Ok(EigenPairs {
        values: full.values[..r].to_vec(),
        vectors: full.vectors.leading_columns(r),
    })
}

/// Largest-magnitude component made positive; ties go to the lowest index.
fn orient(col: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[pivot].abs() {
            pivot = i;
        }
    }
    if col.get(pivot).is_some_and(|&p| p < 0.0) {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for (i, row) in a.data.chunks_exact(n).enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j {
                s += x * x;
            }
        }
    }
    s.sqrt()
}

fn jacobi_sweeps(a: &mut Matrix, vt: &mut Matrix) {
    let n = a.rows;
    let target = JACOBI_REL_TOL * a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(a) <= target {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_rows(&mut a.data, n, p, q, c, s);
                // a stays symmetric: mirror the rotated rows into columns p, q
                for k in 0..n {
                    a.data[k * n + p] = a.data[p * n + k];
                    a.data[k * n + q] = a.data[q * n + k];
                }
                rotate_rows(&mut vt.data, n, p, q, c, s);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
            }
        }
    }
}

/// Rows p < q of a row-major `n`-column buffer become
/// (c·row_p − s·row_q, s·row_p + c·row_q).
fn rotate_rows(data: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}
