//! Dense quaternion matrices stored as four real planes.
//!
//! `A = A0 + A1 i + A2 j + A3 k` where each plane is an `m × n` row-major
//! array of `f64`. Products are evaluated as sixteen real matrix products
//! combined with the sign pattern of the Hamilton multiplication table.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};

use crate::error::{QError, Result};
use crate::quaternion::Quaternion;

/// Magic prefix of the `.qmat` binary format.
pub const QMAT_MAGIC: &[u8; 6] = b"QMAT1\0";

/// `(lhs plane, rhs plane, sign)` triples producing each output plane.
const HAMILTON: [[(usize, usize, f64); 4]; 4] = [
    [(0, 0, 1.0), (1, 1, -1.0), (2, 2, -1.0), (3, 3, -1.0)],
    [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, -1.0)],
    [(0, 2, 1.0), (1, 3, -1.0), (2, 0, 1.0), (3, 1, 1.0)],
    [(0, 3, 1.0), (1, 2, 1.0), (2, 1, -1.0), (3, 0, 1.0)],
];

/// Dense `m × n` quaternion matrix. Both dimensions are at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    planes: [Vec<f64>; 4],
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(QError::Parameter(format!(
            "degenerate {rows}x{cols} quaternion matrix"
        )));
    }
    Ok(())
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        let len = rows * cols;
        Ok(Self {
            rows,
            cols,
            planes: std::array::from_fn(|_| vec![0.0; len]),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.planes[0][i * n + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from four row-major planes `(A0, A1, A2, A3)`.
    pub fn from_planes(rows: usize, cols: usize, planes: [Vec<f64>; 4]) -> Result<Self> {
        check_dims(rows, cols)?;
        if planes.iter().any(|p| p.len() != rows * cols) {
            return Err(QError::Parameter(format!(
                "plane lengths do not match {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols, planes })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Quaternion,
    ) -> Result<Self> {
        let mut m = Self::zeros(rows, cols)?;
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        Ok(m)
    }

    /// Real diagonal matrix with the given entries (square).
    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut m = Self::zeros(n, n)?;
        for (i, &d) in diag.iter().enumerate() {
            m.planes[0][i * n + i] = d;
        }
        Ok(m)
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<Quaternion>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols)?;
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(QError::Parameter("ragged column list".into()));
            }
            for (i, &q) in c.iter().enumerate() {
                m.set(i, j, q);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Real plane `p` (0 = real part, 1..=3 = i, j, k), row-major.
    pub fn plane(&self, p: usize) -> &[f64] {
        &self.planes[p]
    }

    pub fn plane_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.planes[p]
    }

    pub fn planes(&self) -> &[Vec<f64>; 4] {
        &self.planes
    }

    pub fn into_planes(self) -> [Vec<f64>; 4] {
        self.planes
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Quaternion {
        let idx = i * self.cols + j;
        Quaternion::new(
            self.planes[0][idx],
            self.planes[1][idx],
            self.planes[2][idx],
            self.planes[3][idx],
        )
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, q: Quaternion) {
        let idx = i * self.cols + j;
        self.planes[0][idx] = q.a0;
        self.planes[1][idx] = q.a1;
        self.planes[2][idx] = q.a2;
        self.planes[3][idx] = q.a3;
    }

    pub fn column(&self, j: usize) -> Vec<Quaternion> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Quaternion>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn is_pure(&self) -> bool {
        self.planes[0].iter().all(|&x| x == 0.0)
    }

    fn plane_ref(&self, p: usize) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.planes[p], self.rows, self.cols)
    }

    /// Quaternion matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &QMatrix) -> Result<QMatrix> {
        if self.cols != rhs.rows {
            return Err(QError::Shape {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = QMatrix::zeros(self.rows, rhs.cols)?;
        let (m, n) = (self.rows, rhs.cols);
        for (target, terms) in HAMILTON.iter().enumerate() {
            let dst = &mut out.planes[target];
            for (t, &(lp, rp, sign)) in terms.iter().enumerate() {
                let accum = if t == 0 { Accum::Replace } else { Accum::Add };
                matmul(
                    MatMut::from_row_major_slice_mut(dst, m, n),
                    accum,
                    self.plane_ref(lp),
                    rhs.plane_ref(rp),
                    sign,
                    Par::Seq,
                );
            }
        }
        Ok(out)
    }

    /// Conjugate transpose `A^H`, with `(A^H)(t, s) = conj(A(s, t))`.
    pub fn conj_transpose(&self) -> QMatrix {
        let (m, n) = self.shape();
        let planes = std::array::from_fn(|p| {
            let src = &self.planes[p];
            let sign = if p == 0 { 1.0 } else { -1.0 };
            let mut dst = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    dst[j * m + i] = sign * src[i * n + j];
                }
            }
            dst
        });
        QMatrix {
            rows: n,
            cols: m,
            planes,
        }
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.planes
            .iter()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    fn zip_with(&self, rhs: &QMatrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<QMatrix> {
        if self.shape() != rhs.shape() {
            return Err(QError::Shape {
                op,
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let planes = std::array::from_fn(|p| {
            self.planes[p]
                .iter()
                .zip(&rhs.planes[p])
                .map(|(&a, &b)| f(a, b))
                .collect()
        });
        Ok(QMatrix {
            rows: self.rows,
            cols: self.cols,
            planes,
        })
    }

    pub fn add(&self, rhs: &QMatrix) -> Result<QMatrix> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &QMatrix) -> Result<QMatrix> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// Multiplies every entry by a real scalar.
    pub fn scale(&self, s: f64) -> QMatrix {
        let planes = std::array::from_fn(|p| self.planes[p].iter().map(|x| x * s).collect());
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            planes,
        }
    }

    /// `A · diag(d)` for a real vector `d` of length `cols`.
    pub fn scale_columns(&self, d: &[f64]) -> Result<QMatrix> {
        if d.len() != self.cols {
            return Err(QError::Parameter(format!(
                "column scale length {} for {} columns",
                d.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for plane in &mut out.planes {
            for row in plane.chunks_exact_mut(self.cols) {
                for (x, s) in row.iter_mut().zip(d) {
                    *x *= s;
                }
            }
        }
        Ok(out)
    }

    /// Submatrix `A(I, :)`, rows in the order given.
    pub fn select_rows(&self, idx: &[usize]) -> Result<QMatrix> {
        self.check_indices(idx, self.rows, "row")?;
        let n = self.cols;
        let planes = std::array::from_fn(|p| {
            let mut dst = Vec::with_capacity(idx.len() * n);
            for &i in idx {
                dst.extend_from_slice(&self.planes[p][i * n..(i + 1) * n]);
            }
            dst
        });
        QMatrix::from_planes(idx.len(), n, planes)
    }

    /// Submatrix `A(:, J)`, columns in the order given.
    pub fn select_cols(&self, idx: &[usize]) -> Result<QMatrix> {
        self.check_indices(idx, self.cols, "column")?;
        let n = self.cols;
        let planes = std::array::from_fn(|p| {
            let mut dst = Vec::with_capacity(idx.len() * self.rows);
            for row in self.planes[p].chunks_exact(n) {
                dst.extend(idx.iter().map(|&j| row[j]));
            }
            dst
        });
        QMatrix::from_planes(self.rows, idx.len(), planes)
    }

    /// First `k` columns.
    pub fn leading_cols(&self, k: usize) -> Result<QMatrix> {
        self.select_cols(&(0..k).collect::<Vec<_>>())
    }

    fn check_indices(&self, idx: &[usize], bound: usize, what: &str) -> Result<()> {
        if idx.is_empty() {
            return Err(QError::Parameter(format!("empty {what} index set")));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= bound) {
            return Err(QError::Parameter(format!(
                "{what} index {bad} out of range for dimension {bound}"
            )));
        }
        Ok(())
    }

    /// Squared Euclidean norm of every column.
    pub fn column_norms_sqr(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for plane in &self.planes {
            for row in plane.chunks_exact(self.cols) {
                for (acc, x) in out.iter_mut().zip(row) {
                    *acc += x * x;
                }
            }
        }
        out
    }

    /// Squared Euclidean norm of every row.
    pub fn row_norms_sqr(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for plane in &self.planes {
            for (acc, row) in out.iter_mut().zip(plane.chunks_exact(self.cols)) {
                *acc += row.iter().map(|x| x * x).sum::<f64>();
            }
        }
        out
    }

    /// Largest entrywise modulus of `self − rhs`.
    pub fn max_abs_diff(&self, rhs: &QMatrix) -> Result<f64> {
        let d = self.sub(rhs)?;
        Ok((0..d.rows)
            .flat_map(|i| (0..d.cols).map(move |j| (i, j)))
            .map(|(i, j)| d.get(i, j).modulus())
            .fold(0.0, f64::max))
    }

    /// Serializes in the `.qmat` layout: magic, `m` and `n` as little-endian
    /// `u64`, then the planes `A0..A3` row-major as little-endian `f64`.
    pub fn write_qmat<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(QMAT_MAGIC)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for plane in &self.planes {
            for x in plane {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_qmat<R: Read>(mut r: R) -> Result<QMatrix> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)
            .map_err(|e| QError::Format(format!("truncated header: {e}")))?;
        if &magic != QMAT_MAGIC {
            return Err(QError::Format("bad .qmat magic".into()));
        }
        let mut word = [0u8; 8];
        let mut dims = [0usize; 2];
        for d in &mut dims {
            r.read_exact(&mut word)
                .map_err(|e| QError::Format(format!("truncated header: {e}")))?;
            *d = usize::try_from(u64::from_le_bytes(word))
                .map_err(|_| QError::Format("dimension overflows usize".into()))?;
        }
        let [rows, cols] = dims;
        if rows == 0 || cols == 0 {
            return Err(QError::Format(format!("degenerate dimensions {rows}x{cols}")));
        }
        let len = rows
            .checked_mul(cols)
            .filter(|l| l.checked_mul(32).is_some())
            .ok_or_else(|| QError::Format("dimensions too large".into()))?;
        let mut planes: [Vec<f64>; 4] = Default::default();
        let mut buf = vec![0u8; len * 8];
        for plane in &mut planes {
            r.read_exact(&mut buf)
                .map_err(|e| QError::Format(format!("truncated plane data: {e}")))?;
            *plane = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(QError::Format("trailing bytes after plane data".into()));
        }
        QMatrix::from_planes(rows, cols, planes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_qmat(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<QMatrix> {
        QMatrix::read_qmat(BufReader::new(File::open(path)?))
    }
}

/// Matrix product; shape error when inner dimensions differ.
pub fn qmat_matmul(a: &QMatrix, b: &QMatrix) -> Result<QMatrix> {
    a.matmul(b)
}

pub fn qmat_conj_transpose(a: &QMatrix) -> QMatrix {
    a.conj_transpose()
}

pub fn qmat_frobenius_norm(a: &QMatrix) -> f64 {
    a.frobenius_norm()
}
