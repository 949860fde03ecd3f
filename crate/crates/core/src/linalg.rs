//! QSVD, spectral norm, numerical rank and Moore–Penrose pseudoinverse of
//! quaternion matrices, computed through the complex adjoint
//!
//! ```text
//! χ(A) = [  A_a       A_b     ]     A = A_a + A_b j,
//!        [ -conj(A_b) conj(A_a) ]   A_a = A0 + A1 i,  A_b = A2 + A3 i.
//! ```
//!
//! `χ` is multiplicative and maps `A^H` to `χ(A)^H`, so every singular value
//! of `A` appears twice among those of `χ(A)`. A complex singular vector
//! `[u1; u2]` corresponds to the quaternion vector `u1 − conj(u2) j`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{svd, svd_scratch, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{c64, Mat, MatRef, Par};

use crate::error::{param_err, QError, Result};
use crate::qmatrix::QMatrix;
use crate::quaternion::Quaternion;

/// Two neighbouring quaternion singular values closer than this (relative to
/// the largest) are treated as one cluster when rebuilding singular vectors.
const CLUSTER_GAP: f64 = 1e-8;

/// Orthonormality defect above which the re-orthonormalization pass runs.
const REORTH_DEFECT: f64 = 1e-13;

/// The `2m × 2n` complex adjoint `χ(A)` of an `m × n` quaternion matrix.
#[derive(Debug, Clone)]
pub struct ComplexAdjoint {
    mat: Mat<c64>,
}

impl ComplexAdjoint {
    pub fn from_qmatrix(a: &QMatrix) -> Self {
        let (m, n) = a.shape();
        let [p0, p1, p2, p3] = a.planes();
        let mat = Mat::from_fn(2 * m, 2 * n, |r, c| {
            let (i, top) = if r < m { (r, true) } else { (r - m, false) };
            let (j, left) = if c < n { (c, true) } else { (c - n, false) };
            let idx = i * n + j;
            let aa = c64::new(p0[idx], p1[idx]);
            let ab = c64::new(p2[idx], p3[idx]);
            match (top, left) {
                (true, true) => aa,
                (true, false) => ab,
                (false, true) => -ab.conj(),
                (false, false) => aa.conj(),
            }
        });
        Self { mat }
    }

    /// Wraps a complex matrix, checking the adjoint block structure exactly.
    pub fn from_complex(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() % 2 != 0 || mat.ncols() % 2 != 0 || mat.nrows() == 0 || mat.ncols() == 0 {
            return Err(QError::Format(format!(
                "complex adjoint must have even positive dimensions, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let adj = Self { mat };
        if !adj.has_adjoint_structure() {
            return Err(QError::Format("matrix lacks complex adjoint block structure".into()));
        }
        Ok(adj)
    }

    pub fn nrows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    /// Lower-left equals `−conj` of upper-right and lower-right equals
    /// `conj` of upper-left, compared bitwise.
    pub fn has_adjoint_structure(&self) -> bool {
        let (m, n) = (self.nrows() / 2, self.ncols() / 2);
        (0..m).all(|i| {
            (0..n).all(|j| {
                let aa = self.mat[(i, j)];
                let ab = self.mat[(i, j + n)];
                self.mat[(i + m, j)] == -ab.conj() && self.mat[(i + m, j + n)] == aa.conj()
            })
        })
    }

    /// Inverse map, read from the top block row.
    pub fn to_qmatrix(&self) -> Result<QMatrix> {
        let (m, n) = (self.nrows() / 2, self.ncols() / 2);
        QMatrix::from_fn(m, n, |i, j| {
            let aa = self.mat[(i, j)];
            let ab = self.mat[(i, j + n)];
            Quaternion::new(aa.re, aa.im, ab.re, ab.im)
        })
    }
}

pub fn to_complex_adjoint(a: &QMatrix) -> ComplexAdjoint {
    ComplexAdjoint::from_qmatrix(a)
}

/// Quaternion SVD factors `A ≈ W · diag(sigma) · V^H`.
#[derive(Debug, Clone)]
pub struct QsvdResult {
    /// `m × r`, orthonormal columns.
    pub w: QMatrix,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub v: QMatrix,
}

impl QsvdResult {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `W · diag(sigma) · V^H`.
    pub fn reconstruct(&self) -> Result<QMatrix> {
        self.w.scale_columns(&self.sigma)?.matmul(&self.v.conj_transpose())
    }

    /// Leading `k` singular triplets.
    pub fn truncate(&self, k: usize) -> Result<QsvdResult> {
        if k == 0 || k > self.len() {
            return param_err(format!("truncation rank {k} outside 1..={}", self.len()));
        }
        Ok(QsvdResult {
            w: self.w.leading_cols(k)?,
            sigma: self.sigma[..k].to_vec(),
            v: self.v.leading_cols(k)?,
        })
    }
}

struct ComplexSvd {
    s: Vec<f64>,
    u: Mat<c64>,
    v: Mat<c64>,
}

fn complex_svd(a: MatRef<'_, c64>, vectors: bool) -> Result<ComplexSvd> {
    let (m, n) = a.shape();
    let size = m.min(n);
    let mode = if vectors {
        ComputeSvdVectors::Thin
    } else {
        ComputeSvdVectors::No
    };
    let mut s = Diag::<c64>::zeros(size);
    let mut u = Mat::<c64>::zeros(if vectors { m } else { 0 }, size);
    let mut v = Mat::<c64>::zeros(if vectors { n } else { 0 }, size);
    let mut buf = MemBuffer::new(svd_scratch::<c64>(m, n, mode, mode, Par::Seq, Default::default()));
    let stack = MemStack::new(&mut buf);
    svd(
        a,
        s.as_mut(),
        vectors.then(|| u.as_mut()),
        vectors.then(|| v.as_mut()),
        Par::Seq,
        stack,
        Default::default(),
    )
    .map_err(|_| QError::SvdConvergence)?;
    let s = s.column_vector().iter().map(|x| x.re.max(0.0)).collect();
    Ok(ComplexSvd { s, u, v })
}

/// All `2·min(m,n)` singular values of `χ(A)`, nonincreasing.
pub fn adjoint_singular_values(a: &QMatrix) -> Result<Vec<f64>> {
    Ok(complex_svd(to_complex_adjoint(a).as_mat(), false)?.s)
}

/// Singular values of `A` (one from each pair of `χ(A)`), nonincreasing.
pub fn singular_values(a: &QMatrix) -> Result<Vec<f64>> {
    Ok(adjoint_singular_values(a)?.into_iter().step_by(2).collect())
}

type QVec = Vec<Quaternion>;

/// `a^H b` for column vectors.
fn qdot(a: &[Quaternion], b: &[Quaternion]) -> Quaternion {
    a.iter()
        .zip(b)
        .fold(Quaternion::ZERO, |acc, (&x, &y)| acc + x.conj() * y)
}

/// `r ← r − q·c`.
fn sub_scaled(r: &mut [Quaternion], q: &[Quaternion], c: Quaternion) {
    for (ri, &qi) in r.iter_mut().zip(q) {
        *ri = *ri - qi * c;
    }
}

fn scale_vec(r: &mut [Quaternion], s: f64) {
    for x in r {
        *x = x.scale(s);
    }
}

fn vec_norm(r: &[Quaternion]) -> f64 {
    r.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
}

fn complex_column_to_quaternion(mat: MatRef<'_, c64>, col: usize) -> QVec {
    let half = mat.nrows() / 2;
    (0..half)
        .map(|i| {
            let u1 = mat[(i, col)];
            let u2 = mat[(i + half, col)];
            Quaternion::new(u1.re, u1.im, -u2.re, u2.im)
        })
        .collect()
}

struct Triplet {
    sigma: f64,
    w: QVec,
    v: QVec,
}

/// Pivoted Gram–Schmidt over one cluster of nonzero singular values: picks
/// the candidate with the largest left residual, and applies the same
/// quaternion combination to its right partner so `A v = σ w` is kept.
fn select_coupled(mut pool: Vec<Triplet>, need: usize) -> Vec<Triplet> {
    let mut out: Vec<Triplet> = Vec::with_capacity(need);
    while out.len() < need && !pool.is_empty() {
        let best = pool
            .iter()
            .enumerate()
            .map(|(i, t)| (i, vec_norm(&t.w)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        let mut t = pool.remove(best);
        for o in &out {
            let c = qdot(&o.w, &t.w);
            sub_scaled(&mut t.w, &o.w, c);
            sub_scaled(&mut t.v, &o.v, c);
        }
        let nrm = vec_norm(&t.w);
        if nrm == 0.0 {
            break;
        }
        scale_vec(&mut t.w, 1.0 / nrm);
        scale_vec(&mut t.v, 1.0 / nrm);
        for r in &mut pool {
            let c = qdot(&t.w, &r.w);
            sub_scaled(&mut r.w, &t.w, c);
            sub_scaled(&mut r.v, &t.v, c);
        }
        out.push(t);
    }
    out
}

/// Pivoted Gram–Schmidt producing `need` unit vectors orthogonal to `basis`
/// and to each other. Falls back to coordinate vectors when the candidates
/// do not span enough directions.
fn select_independent(mut pool: Vec<QVec>, basis: &[QVec], need: usize, dim: usize) -> Vec<QVec> {
    let project = |r: &mut QVec, against: &[QVec]| {
        for _ in 0..2 {
            for b in against {
                let c = qdot(b, r);
                sub_scaled(r, b, c);
            }
        }
    };
    for r in &mut pool {
        project(r, basis);
    }
    let mut out: Vec<QVec> = Vec::with_capacity(need);
    let mut next_unit = 0;
    while out.len() < need {
        let best = pool
            .iter()
            .enumerate()
            .map(|(i, r)| (i, vec_norm(r)))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best.0 == usize::MAX || best.1 < 1e-8 {
            // Candidates exhausted: try the next coordinate vector.
            if next_unit >= dim {
                break;
            }
            let mut e = vec![Quaternion::ZERO; dim];
            e[next_unit] = Quaternion::ONE;
            next_unit += 1;
            project(&mut e, basis);
            project(&mut e, &out);
            pool.push(e);
            continue;
        }
        let mut r = pool.remove(best.0);
        project(&mut r, &out);
        let nrm = vec_norm(&r);
        if nrm < 1e-8 {
            continue;
        }
        scale_vec(&mut r, 1.0 / nrm);
        for p in &mut pool {
            let c = qdot(&r, p);
            sub_scaled(p, &r, c);
        }
        out.push(r);
    }
    out
}

fn max_orthonormality_defect(cols: &[QVec]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in cols.iter().enumerate() {
        for (j, b) in cols.iter().enumerate().skip(i) {
            let g = qdot(a, b);
            let target = if i == j { Quaternion::ONE } else { Quaternion::ZERO };
            worst = worst.max((g - target).modulus());
        }
    }
    worst
}

fn defect_via_gram(cols: &[QVec]) -> Result<f64> {
    if cols.is_empty() {
        return Ok(0.0);
    }
    // Large factors go through the fast matmul; small ones directly.
    if cols.len() * cols[0].len() < 4096 {
        return Ok(max_orthonormality_defect(cols));
    }
    let q = QMatrix::from_columns(cols)?;
    let g = q.conj_transpose().matmul(&q)?;
    let eye = QMatrix::identity(cols.len())?;
    g.max_abs_diff(&eye)
}

/// Modified Gram–Schmidt on `w` (two passes). Columns below `coupled` apply
/// the same coefficients to `v`.
fn mgs_coupled(w: &mut [QVec], v: &mut [QVec], coupled: usize) {
    for _ in 0..2 {
        for j in 0..w.len() {
            let (done, rest) = w.split_at_mut(j);
            let wj = &mut rest[0];
            let (vdone, vrest) = v.split_at_mut(j);
            let vj = &mut vrest[0];
            for (l, wl) in done.iter().enumerate() {
                let c = qdot(wl, wj);
                sub_scaled(wj, wl, c);
                if j < coupled && l < coupled {
                    sub_scaled(vj, &vdone[l], c);
                }
            }
            let nrm = vec_norm(wj);
            if nrm > 0.0 {
                scale_vec(wj, 1.0 / nrm);
                if j < coupled {
                    scale_vec(vj, 1.0 / nrm);
                }
            }
        }
    }
}

fn mgs(cols: &mut [QVec]) {
    for _ in 0..2 {
        for j in 0..cols.len() {
            let (done, rest) = cols.split_at_mut(j);
            let cj = &mut rest[0];
            for cl in done.iter() {
                let c = qdot(cl, cj);
                sub_scaled(cj, cl, c);
            }
            let nrm = vec_norm(cj);
            if nrm > 0.0 {
                scale_vec(cj, 1.0 / nrm);
            }
        }
    }
}

enum Truncation {
    Full,
    Rank(usize),
    AboveTolerance(Option<f64>),
}

/// Default cutoff `eps · max(m, n) · sigma_max`.
pub fn default_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    f64::EPSILON * rows.max(cols) as f64 * sigma_max
}

fn qsvd_impl(a: &QMatrix, trunc: Truncation) -> Result<QsvdResult> {
    let (m, n) = a.shape();
    let r = m.min(n);
    let adj = to_complex_adjoint(a);
    let csvd = complex_svd(adj.as_mat(), true)?;
    let pair_sigma: Vec<f64> = csvd.s.iter().copied().step_by(2).collect();
    let smax = pair_sigma[0];
    let null_tol = f64::EPSILON * (2 * m.max(n)) as f64 * smax;

    let slots = match trunc {
        Truncation::Full => r,
        Truncation::Rank(k) => k,
        Truncation::AboveTolerance(tol) => {
            let tol = tol.unwrap_or_else(|| default_tolerance(m, n, smax));
            pair_sigma.iter().filter(|&&s| s > tol).count()
        }
    };
    if slots == 0 {
        return QsvdResult::empty(m, n);
    }

    let triplet = |c: usize| Triplet {
        sigma: csvd.s[c],
        w: complex_column_to_quaternion(csvd.u.as_ref(), c),
        v: complex_column_to_quaternion(csvd.v.as_ref(), c),
    };

    let mut positive: Vec<Triplet> = Vec::with_capacity(slots);
    let mut p = 0;
    while p < r && positive.len() < slots && pair_sigma[p] > null_tol {
        let start = p;
        while p + 1 < r
            && pair_sigma[p + 1] > null_tol
            && pair_sigma[p] - pair_sigma[p + 1] <= CLUSTER_GAP * smax
        {
            p += 1;
        }
        p += 1;
        let need = (p - start).min(slots - positive.len());
        if p - start == 1 {
            // Isolated pair: both candidates span the same quaternion direction.
            positive.push(triplet(2 * start));
        } else {
            let pool = (2 * start..2 * p).map(triplet).collect();
            positive.extend(select_coupled(pool, need));
        }
    }
    positive.sort_by(|x, y| y.sigma.total_cmp(&x.sigma));

    let n_pos = positive.len();
    let mut sigma: Vec<f64> = positive.iter().map(|t| t.sigma).collect();
    let (mut ws, mut vs): (Vec<QVec>, Vec<QVec>) = positive.into_iter().map(|t| (t.w, t.v)).unzip();

    if n_pos < slots {
        // Remaining directions belong to (numerically) zero singular values;
        // left and right bases are chosen independently.
        let need = slots - n_pos;
        let first = 2 * p;
        let wpool = (first..2 * r)
            .map(|c| complex_column_to_quaternion(csvd.u.as_ref(), c))
            .collect();
        let vpool = (first..2 * r)
            .map(|c| complex_column_to_quaternion(csvd.v.as_ref(), c))
            .collect();
        let wnull = select_independent(wpool, &ws, need, m);
        let vnull = select_independent(vpool, &vs, need, n);
        if wnull.len() < need || vnull.len() < need {
            return Err(QError::SvdConvergence);
        }
        sigma.extend((first..first + 2 * need).step_by(2).map(|c| csvd.s[c]));
        ws.extend(wnull);
        vs.extend(vnull);
    }

    if defect_via_gram(&ws)? > REORTH_DEFECT {
        mgs_coupled(&mut ws, &mut vs, n_pos);
    }
    if defect_via_gram(&vs)? > REORTH_DEFECT {
        mgs(&mut vs);
    }

    Ok(QsvdResult {
        w: QMatrix::from_columns(&ws)?,
        sigma,
        v: QMatrix::from_columns(&vs)?,
    })
}

impl QsvdResult {
    fn empty(m: usize, n: usize) -> Result<QsvdResult> {
        // Zero-rank result: factors are placeholders with no columns in use.
        Ok(QsvdResult {
            w: QMatrix::zeros(m, 1)?,
            sigma: vec![0.0],
            v: QMatrix::zeros(n, 1)?,
        })
    }
}

/// Quaternion SVD. With `k`, returns the leading-`k` truncation.
pub fn qsvd(a: &QMatrix, k: Option<usize>) -> Result<QsvdResult> {
    let r = a.rows().min(a.cols());
    match k {
        None => qsvd_impl(a, Truncation::Full),
        Some(k) if k == 0 || k > r => param_err(format!(
            "truncation rank k = {k} must satisfy 1 <= k <= min(m, n) = {r}"
        )),
        Some(k) => qsvd_impl(a, Truncation::Rank(k)),
    }
}

/// Largest singular value, `‖A‖_2`.
pub fn spectral_norm(a: &QMatrix) -> Result<f64> {
    Ok(adjoint_singular_values(a)?[0])
}

fn check_tol(tol: Option<f64>) -> Result<()> {
    match tol {
        Some(t) if !(t >= 0.0) => param_err(format!("tolerance must be nonnegative, got {t}")),
        _ => Ok(()),
    }
}

/// Count of singular values above `tol` (default `eps · max(m,n) · σ_max`).
pub fn numerical_rank(a: &QMatrix, tol: Option<f64>) -> Result<usize> {
    check_tol(tol)?;
    let s = singular_values(a)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(a.rows(), a.cols(), s[0]));
    Ok(s.iter().filter(|&&x| x > tol).count())
}

/// Moore–Penrose pseudoinverse `V · diag(1/σ_i for σ_i > tol) · W^H`.
pub fn pseudoinverse(a: &QMatrix, tol: Option<f64>) -> Result<QMatrix> {
    check_tol(tol)?;
    let (m, n) = a.shape();
    let f = qsvd_impl(a, Truncation::AboveTolerance(tol))?;
    if f.sigma.iter().all(|&s| s == 0.0) {
        return QMatrix::zeros(n, m);
    }
    let inv: Vec<f64> = f.sigma.iter().map(|s| 1.0 / s).collect();
    f.v.scale_columns(&inv)?.matmul(&f.w.conj_transpose())
}

/// Rank-`k` truncated QSVD reconstruction `W_k Σ_k V_k^H`.
pub fn lowrank_truncate(a: &QMatrix, k: usize) -> Result<QMatrix> {
    qsvd(a, Some(k))?.reconstruct()
}

/// Orthonormalizes the columns of `a` (right-module Gram–Schmidt with
/// re-orthogonalization). Fails if the columns are numerically dependent.
pub fn orthonormalize_columns(a: &QMatrix) -> Result<QMatrix> {
    if a.cols() > a.rows() {
        return param_err(format!(
            "cannot orthonormalize {} columns of length {}",
            a.cols(),
            a.rows()
        ));
    }
    let mut cols = a.columns();
    let scale = a.frobenius_norm();
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let cj = &mut rest[0];
        let before = vec_norm(cj);
        for _ in 0..2 {
            for cl in done.iter() {
                let c = qdot(cl, cj);
                sub_scaled(cj, cl, c);
            }
        }
        let nrm = vec_norm(cj);
        if nrm <= 1e-10 * before.max(f64::EPSILON * scale) {
            return Err(QError::DegenerateSampling(format!(
                "column {j} is numerically dependent on its predecessors"
            )));
        }
        scale_vec(cj, 1.0 / nrm);
    }
    QMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_qmatrix;

    fn diag(entries: &[Quaternion]) -> QMatrix {
        let n = entries.len();
        QMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { Quaternion::ZERO }).unwrap()
    }

    fn assert_orthonormal(q: &QMatrix, tol: f64) {
        let g = q.conj_transpose().matmul(q).unwrap();
        let d = g.max_abs_diff(&QMatrix::identity(q.cols()).unwrap()).unwrap();
        assert!(d <= tol, "orthonormality defect {d}");
    }

    fn rel_err(a: &QMatrix, b: &QMatrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    fn low_rank(m: usize, n: usize, k: usize, seed: u64) -> QMatrix {
        random_qmatrix(m, k, seed)
            .matmul(&random_qmatrix(k, n, seed + 1))
            .unwrap()
    }

    #[test]
    fn adjoint_of_real_matrix_is_block_diagonal() {
        let a = QMatrix::from_fn(2, 3, |i, j| Quaternion::real((i * 3 + j) as f64 + 1.0)).unwrap();
        let x = to_complex_adjoint(&a);
        assert_eq!((x.nrows(), x.ncols()), (4, 6));
        for i in 0..2 {
            for j in 0..3 {
                let v = c64::new(a.get(i, j).a0, 0.0);
                assert_eq!(x.get(i, j), v);
                assert_eq!(x.get(i + 2, j + 3), v);
                assert_eq!(x.get(i, j + 3), c64::new(0.0, 0.0));
                assert_eq!(x.get(i + 2, j), c64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn adjoint_of_j() {
        let a = QMatrix::from_fn(1, 1, |_, _| Quaternion::J).unwrap();
        let x = to_complex_adjoint(&a);
        assert_eq!(x.get(0, 0), c64::new(0.0, 0.0));
        assert_eq!(x.get(0, 1), c64::new(1.0, 0.0));
        assert_eq!(x.get(1, 0), c64::new(-1.0, 0.0));
        assert_eq!(x.get(1, 1), c64::new(0.0, 0.0));
    }

    #[test]
    fn adjoint_structure_and_inverse_map() {
        let a = random_qmatrix(4, 3, 1);
        let x = to_complex_adjoint(&a);
        assert!(x.has_adjoint_structure());
        assert_eq!(x.to_qmatrix().unwrap(), a);
        // χ(A)^H = χ(A^H), entry by entry.
        let xh = to_complex_adjoint(&a.conj_transpose());
        for i in 0..x.ncols() {
            for j in 0..x.nrows() {
                assert_eq!(xh.get(i, j), x.get(j, i).conj());
            }
        }
        let mut broken = x.clone().into_mat();
        broken[(5, 0)] += c64::new(1e-9, 0.0);
        assert!(ComplexAdjoint::from_complex(broken).is_err());
        assert!(ComplexAdjoint::from_complex(x.into_mat()).is_ok());
    }

    #[test]
    fn adjoint_is_multiplicative() {
        let a = random_qmatrix(3, 4, 2);
        let b = random_qmatrix(4, 2, 3);
        let lhs = to_complex_adjoint(&a.matmul(&b).unwrap());
        let rhs = to_complex_adjoint(&a).as_mat() * to_complex_adjoint(&b).as_mat();
        let scale = lhs.as_mat().norm_l2();
        let diff = (lhs.as_mat() - rhs.as_ref()).norm_l2();
        assert!(diff <= 1e-12 * scale);
    }

    #[test]
    fn qsvd_identity() {
        let f = qsvd(&QMatrix::identity(3).unwrap(), None).unwrap();
        for s in &f.sigma {
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert_orthonormal(&f.w, 1e-12);
        assert_orthonormal(&f.v, 1e-12);
        assert!(rel_err(&f.reconstruct().unwrap(), &QMatrix::identity(3).unwrap()) < 1e-14);
    }

    #[test]
    fn qsvd_of_quaternion_diagonal() {
        let a = diag(&[Quaternion::pure(2.0, 0.0, 0.0), Quaternion::J]);
        let f = qsvd(&a, None).unwrap();
        assert!((f.sigma[0] - 2.0).abs() < 1e-14);
        assert!((f.sigma[1] - 1.0).abs() < 1e-14);
        let x = adjoint_singular_values(&a).unwrap();
        assert!((x[0] - x[1]).abs() < 1e-14 && (x[2] - x[3]).abs() < 1e-14);
        assert!(rel_err(&f.reconstruct().unwrap(), &a) < 1e-14);
    }

    #[test]
    fn qsvd_rectangular_and_rank_deficient() {
        for &(m, n, k) in &[(7, 4, 4), (4, 7, 4), (8, 6, 2), (5, 9, 1), (6, 6, 3)] {
            let a = if k == m.min(n) { random_qmatrix(m, n, 10) } else { low_rank(m, n, k, 11) };
            let f = qsvd(&a, None).unwrap();
            assert_eq!(f.len(), m.min(n));
            assert!(f.sigma.windows(2).all(|p| p[0] >= p[1]));
            assert!(f.sigma.iter().all(|&s| s >= 0.0));
            assert_orthonormal(&f.w, 1e-10);
            assert_orthonormal(&f.v, 1e-10);
            assert!(rel_err(&f.reconstruct().unwrap(), &a) <= 1e-10, "{m}x{n} rank {k}");
        }
    }

    #[test]
    fn qsvd_rejects_bad_truncation() {
        let a = random_qmatrix(3, 5, 1);
        assert!(qsvd(&a, Some(4)).is_err());
        assert!(qsvd(&a, Some(0)).is_err());
        assert!(lowrank_truncate(&a, 4).is_err());
        assert_eq!(qsvd(&a, Some(2)).unwrap().len(), 2);
    }

    #[test]
    fn qsvd_of_zero_matrix() {
        let z = QMatrix::zeros(3, 2).unwrap();
        let f = qsvd(&z, None).unwrap();
        assert_eq!(f.sigma, vec![0.0, 0.0]);
        assert_orthonormal(&f.w, 1e-12);
        assert_orthonormal(&f.v, 1e-12);
    }

    #[test]
    fn degenerate_spectrum_is_handled() {
        // Unitary-times-scalar input has a fully degenerate spectrum.
        let q = orthonormalize_columns(&random_qmatrix(9, 9, 4)).unwrap();
        let a = q.scale(3.0);
        let f = qsvd(&a, None).unwrap();
        assert!(f.sigma.iter().all(|s| (s - 3.0).abs() < 1e-12));
        assert_orthonormal(&f.w, 1e-10);
        assert_orthonormal(&f.v, 1e-10);
        assert!(rel_err(&f.reconstruct().unwrap(), &a) < 1e-10);
        let f5 = qsvd(&a, Some(5)).unwrap();
        assert_orthonormal(&f5.w, 1e-10);
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&QMatrix::identity(4).unwrap()).unwrap() - 1.0).abs() < 1e-14);
        let a = diag(&[Quaternion::pure(0.0, 3.0, 0.0), Quaternion::ONE]);
        assert!((spectral_norm(&a).unwrap() - 3.0).abs() < 1e-14);
        let b = random_qmatrix(8, 5, 7);
        assert!(spectral_norm(&b).unwrap() <= b.frobenius_norm());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&QMatrix::zeros(3, 4).unwrap(), None).unwrap(), 0);
        assert_eq!(numerical_rank(&QMatrix::identity(5).unwrap(), None).unwrap(), 5);
        assert_eq!(numerical_rank(&low_rank(9, 7, 3, 20), None).unwrap(), 3);
        assert!(numerical_rank(&QMatrix::identity(2).unwrap(), Some(-1.0)).is_err());
        assert_eq!(numerical_rank(&QMatrix::identity(2).unwrap(), Some(1.0)).unwrap(), 0);
    }

    #[test]
    fn pseudoinverse_examples() {
        let i4 = QMatrix::identity(4).unwrap();
        assert!(rel_err(&pseudoinverse(&i4, None).unwrap(), &i4) < 1e-14);
        let z = pseudoinverse(&QMatrix::zeros(3, 2).unwrap(), None).unwrap();
        assert_eq!(z, QMatrix::zeros(2, 3).unwrap());

        // Rank-one u v^H with unit u, v has pseudoinverse v u^H.
        let unit = |m: usize, seed: u64| {
            let x = random_qmatrix(m, 1, seed);
            x.scale(1.0 / x.frobenius_norm())
        };
        let u = unit(4, 30);
        let v = unit(3, 31);
        let a = u.matmul(&v.conj_transpose()).unwrap();
        let expect = v.matmul(&u.conj_transpose()).unwrap();
        assert!(rel_err(&pseudoinverse(&a, None).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn lowrank_truncate_examples() {
        let a = random_qmatrix(6, 5, 40);
        assert!(rel_err(&lowrank_truncate(&a, 5).unwrap(), &a) < 1e-10);
        let b = low_rank(8, 8, 2, 41);
        assert!(rel_err(&lowrank_truncate(&b, 2).unwrap(), &b) < 1e-10);

        let c = random_qmatrix(20, 20, 42);
        let s = singular_values(&c).unwrap();
        let tail: f64 = s[5..].iter().map(|x| x * x).sum();
        let resid = c.sub(&lowrank_truncate(&c, 5).unwrap()).unwrap().frobenius_norm_sqr();
        assert!((resid - tail).abs() <= 1e-8 * tail);
    }

    #[test]
    fn orthonormalize_rejects_dependent_columns() {
        let a = random_qmatrix(5, 2, 50);
        let dup = QMatrix::from_columns(&[a.column(0), a.column(1), a.column(0)]).unwrap();
        assert!(orthonormalize_columns(&dup).is_err());
        assert!(orthonormalize_columns(&random_qmatrix(2, 3, 1)).is_err());
        assert_orthonormal(&orthonormalize_columns(&a).unwrap(), 1e-13);
    }
}
