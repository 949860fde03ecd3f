//! CUR approximation of quaternion matrices built from actual columns and
//! rows, `X ≈ C U R` with `C = X(:, J)`, `R = X(I, :)` and the least-squares
//! core `U = C† X R†`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{param_err, QError, Result};
use crate::linalg::{numerical_rank, pseudoinverse, qsvd, spectral_norm};
use crate::qmatrix::QMatrix;
use crate::rng::{stream, StreamRng};

/// Column/row sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Probabilities proportional to squared Euclidean norms.
    Length,
    /// Constant probabilities `1/n`, `1/m`.
    Uniform,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Length => "length",
            Strategy::Uniform => "uniform",
        })
    }
}

impl FromStr for Strategy {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(Strategy::Length),
            "uniform" => Ok(Strategy::Uniform),
            other => param_err(format!("unknown strategy {other:?} (expected length|uniform)")),
        }
    }
}

/// Column probabilities `p` (length `n`) and row probabilities `q` (length `m`).
#[derive(Debug, Clone, PartialEq)]
pub struct Distributions {
    pub cols: Vec<f64>,
    pub rows: Vec<f64>,
}

/// `p_j = ‖X(:,j)‖² / ‖X‖_F²`, `q_i = ‖X(i,:)‖² / ‖X‖_F²`.
pub fn length_distributions(x: &QMatrix) -> Result<Distributions> {
    let total = x.frobenius_norm_sqr();
    if !(total > 0.0) || !total.is_finite() {
        return Err(QError::DegenerateDistribution(format!(
            "squared Frobenius norm is {total}"
        )));
    }
    Ok(Distributions {
        cols: x.column_norms_sqr().into_iter().map(|c| c / total).collect(),
        rows: x.row_norms_sqr().into_iter().map(|r| r / total).collect(),
    })
}

pub fn uniform_distributions(m: usize, n: usize) -> Result<Distributions> {
    if m == 0 || n == 0 {
        return param_err(format!("uniform distribution over {m}x{n}"));
    }
    Ok(Distributions {
        cols: vec![1.0 / n as f64; n],
        rows: vec![1.0 / m as f64; m],
    })
}

/// `|I| = |J| = min(max(k, ⌈k ln max(k, 2)⌉), min(m, n))`, returned as
/// `(rows, cols)`.
pub fn default_sample_counts(k: usize, m: usize, n: usize) -> Result<(usize, usize)> {
    let limit = m.min(n);
    if k == 0 || k > limit {
        return param_err(format!(
            "target rank k = {k} must satisfy 1 <= k <= min(m, n) = {limit}"
        ));
    }
    let kf = k as f64;
    let c = ((kf * kf.max(2.0).ln()).ceil() as usize).max(k).min(limit);
    Ok((c, c))
}

/// Draws `count` distinct indices without replacement: each draw is weighted
/// by the remaining probabilities, renormalized. Indices are returned sorted.
pub fn draw_indices(probs: &[f64], count: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(QError::DegenerateDistribution(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let available = probs.iter().filter(|&&p| p > 0.0).count();
    if count == 0 || count > available {
        return Err(QError::Sampling {
            requested: count,
            available,
        });
    }
    let mut weights = probs.to_vec();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = weights.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if target < acc {
                break;
            }
        }
        let i = pick.expect("at least one positive weight remains");
        weights[i] = 0.0;
        chosen.push(i);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Convenience wrapper seeding a fresh stream.
pub fn draw_indices_seeded(probs: &[f64], count: usize, seed: u64) -> Result<Vec<usize>> {
    draw_indices(probs, count, &mut stream(seed, "draw-indices", &[]))
}

/// Inputs of one CUR approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub strategy: Strategy,
    pub target_rank: usize,
    pub num_rows: usize,
    pub num_cols: usize,
    pub seed: u64,
    pub col_probs: Vec<f64>,
    pub row_probs: Vec<f64>,
}

impl SamplingPlan {
    /// Plan with the default `k ln k` sample counts.
    pub fn new(x: &QMatrix, strategy: Strategy, k: usize, seed: u64) -> Result<Self> {
        let (rows, cols) = default_sample_counts(k, x.rows(), x.cols())?;
        Self::with_counts(x, strategy, k, rows, cols, seed)
    }

    pub fn with_counts(
        x: &QMatrix,
        strategy: Strategy,
        k: usize,
        num_rows: usize,
        num_cols: usize,
        seed: u64,
    ) -> Result<Self> {
        let d = match strategy {
            Strategy::Length => length_distributions(x)?,
            Strategy::Uniform => uniform_distributions(x.rows(), x.cols())?,
        };
        let plan = SamplingPlan {
            strategy,
            target_rank: k,
            num_rows,
            num_cols,
            seed,
            col_probs: d.cols,
            row_probs: d.rows,
        };
        plan.validate(x.rows(), x.cols())?;
        Ok(plan)
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let k = self.target_rank;
        if k == 0 {
            return param_err("target rank must be positive");
        }
        if self.num_rows < k || self.num_cols < k {
            return param_err(format!(
                "sample counts |I| = {}, |J| = {} must be at least k = {k}",
                self.num_rows, self.num_cols
            ));
        }
        if self.num_rows > m || self.num_cols > n {
            return param_err(format!(
                "sample counts |I| = {}, |J| = {} exceed matrix dimensions {m}x{n}",
                self.num_rows, self.num_cols
            ));
        }
        for (name, probs, len) in [("column", &self.col_probs, n), ("row", &self.row_probs, m)] {
            if probs.len() != len {
                return param_err(format!("{name} distribution has length {} not {len}", probs.len()));
            }
            if probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(QError::DegenerateDistribution(format!("negative {name} probability")));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(QError::DegenerateDistribution(format!(
                    "{name} probabilities sum to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// Draws `(I, J)` from the plan's seeded streams.
    pub fn draw(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let cols = draw_indices(&self.col_probs, self.num_cols, &mut stream(self.seed, "qmcur-cols", &[]))?;
        let rows = draw_indices(&self.row_probs, self.num_rows, &mut stream(self.seed, "qmcur-rows", &[]))?;
        Ok((rows, cols))
    }
}

/// Output of [`qmcur`]: sampled index sets and the factors `C`, `U`, `R`.
#[derive(Debug, Clone)]
pub struct CurFactors {
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
    /// `m × |J|`
    pub c: QMatrix,
    /// `|J| × |I|`
    pub u: QMatrix,
    /// `|I| × n`
    pub r: QMatrix,
}

/// Core matrix `C† X R†`.
pub fn core_matrix(c: &QMatrix, x: &QMatrix, r: &QMatrix) -> Result<QMatrix> {
    pseudoinverse(c, None)?
        .matmul(x)?
        .matmul(&pseudoinverse(r, None)?)
}

/// CUR approximation with sampled columns/rows and `U = C† X R†`.
pub fn qmcur(x: &QMatrix, plan: &SamplingPlan) -> Result<CurFactors> {
    plan.validate(x.rows(), x.cols())?;
    let (rows, cols) = plan.draw()?;
    cur_from_indices(x, rows, cols)
}

/// CUR factors for fixed index sets.
pub fn cur_from_indices(x: &QMatrix, rows: Vec<usize>, cols: Vec<usize>) -> Result<CurFactors> {
    let c = x.select_cols(&cols)?;
    let r = x.select_rows(&rows)?;
    let u = core_matrix(&c, x, &r)?;
    Ok(CurFactors {
        row_indices: rows,
        col_indices: cols,
        c,
        u,
        r,
    })
}

/// `C · U · R`.
pub fn cur_reconstruct(f: &CurFactors) -> Result<QMatrix> {
    f.c.matmul(&f.u)?.matmul(&f.r)
}

/// Projection form `C̃ C̃† X̃ R̃† R̃` with `C̃ = X̃(:, J)`, `R̃ = X̃(I, :)`.
pub fn stabilized_reconstruct(x: &QMatrix, rows: &[usize], cols: &[usize]) -> Result<QMatrix> {
    let c = x.select_cols(cols)?;
    let r = x.select_rows(rows)?;
    let cc = c.matmul(&pseudoinverse(&c, None)?)?;
    let rr = pseudoinverse(&r, None)?.matmul(&r)?;
    cc.matmul(x)?.matmul(&rr)
}

/// Norm in which perturbation bounds are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    #[default]
    Spectral,
    Frobenius,
}

impl NormKind {
    pub fn eval(self, a: &QMatrix) -> Result<f64> {
        match self {
            NormKind::Spectral => spectral_norm(a),
            NormKind::Frobenius => Ok(a.frobenius_norm()),
        }
    }
}

/// Error of the projection-form CUR of `X + E` against `X`, and the two
/// upper bounds for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBounds {
    /// `‖X − C̃C̃†X̃R̃†R̃‖`
    pub lhs: f64,
    /// `‖E_I‖‖XR†‖ + ‖E_J‖‖C†X‖ + 3‖E‖`
    pub bound_a: f64,
    /// `‖E‖(‖W_{k,I}†‖ + ‖V_{k,J}†‖ + 3)`
    pub bound_b: f64,
    pub noise: f64,
    pub noise_rows: f64,
    pub noise_cols: f64,
    /// `‖X R†‖`
    pub x_r_pinv: f64,
    /// `‖C† X‖`
    pub c_pinv_x: f64,
    /// `‖W_{k,I}†‖`
    pub w_rows_pinv: f64,
    /// `‖V_{k,J}†‖`
    pub v_cols_pinv: f64,
}

/// Spectral-norm perturbation bounds for a rank-`k` matrix `x` and noise `e`.
pub fn perturbation_bounds(
    x: &QMatrix,
    e: &QMatrix,
    rows: &[usize],
    cols: &[usize],
    k: usize,
) -> Result<PerturbationBounds> {
    perturbation_bounds_in(x, e, rows, cols, k, NormKind::Spectral)
}

pub fn perturbation_bounds_in(
    x: &QMatrix,
    e: &QMatrix,
    rows: &[usize],
    cols: &[usize],
    k: usize,
    norm: NormKind,
) -> Result<PerturbationBounds> {
    if x.shape() != e.shape() {
        return Err(QError::Shape {
            op: "perturbation_bounds",
            lhs: x.shape(),
            rhs: e.shape(),
        });
    }
    let rank = numerical_rank(x, None)?;
    if rank != k {
        return param_err(format!("matrix has numerical rank {rank}, expected {k}"));
    }
    let truth = qsvd(x, Some(k))?;
    let w_rows = truth.w.select_rows(rows)?;
    let v_cols = truth.v.select_rows(cols)?;
    for (name, sub) in [("W_k(I,:)", &w_rows), ("V_k(J,:)", &v_cols)] {
        let r = numerical_rank(sub, None)?;
        if r != k {
            return Err(QError::DegenerateSampling(format!(
                "{name} has rank {r}, needs full column rank {k}"
            )));
        }
    }

    let x_tilde = x.add(e)?;
    let approx = stabilized_reconstruct(&x_tilde, rows, cols)?;
    let lhs = norm.eval(&x.sub(&approx)?)?;

    let c = x.select_cols(cols)?;
    let r = x.select_rows(rows)?;
    let x_r_pinv = norm.eval(&x.matmul(&pseudoinverse(&r, None)?)?)?;
    let c_pinv_x = norm.eval(&pseudoinverse(&c, None)?.matmul(x)?)?;

    let noise = norm.eval(e)?;
    let noise_rows = norm.eval(&e.select_rows(rows)?)?;
    let noise_cols = norm.eval(&e.select_cols(cols)?)?;
    let w_rows_pinv = norm.eval(&pseudoinverse(&w_rows, None)?)?;
    let v_cols_pinv = norm.eval(&pseudoinverse(&v_cols, None)?)?;

    Ok(PerturbationBounds {
        lhs,
        bound_a: noise_rows * x_r_pinv + noise_cols * c_pinv_x + 3.0 * noise,
        bound_b: noise * (w_rows_pinv + v_cols_pinv + 3.0),
        noise,
        noise_rows,
        noise_cols,
        x_r_pinv,
        c_pinv_x,
        w_rows_pinv,
        v_cols_pinv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::Quaternion;
    use crate::rng::rng_from_seed;
    use crate::testutil::random_qmatrix;

    fn rel_err(a: &QMatrix, b: &QMatrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("length".parse::<Strategy>().unwrap(), Strategy::Length);
        assert_eq!("uniform".parse::<Strategy>().unwrap(), Strategy::Uniform);
        assert!("leverage".parse::<Strategy>().is_err());
        assert_eq!(Strategy::Uniform.to_string(), "uniform");
    }

    #[test]
    fn length_distribution_examples() {
        let x = QMatrix::from_fn(1, 2, |_, j| {
            if j == 0 {
                Quaternion::I
            } else {
                Quaternion::new(1.0, 1.0, 1.0, 0.0)
            }
        })
        .unwrap();
        let d = length_distributions(&x).unwrap();
        assert!((d.cols[0] - 0.25).abs() < 1e-15);
        assert!((d.cols[1] - 0.75).abs() < 1e-15);
        assert_eq!(d.rows, vec![1.0]);

        let eq = QMatrix::from_fn(3, 4, |i, j| if i == j % 3 { Quaternion::J } else { Quaternion::ZERO }).unwrap();
        let d = length_distributions(&eq).unwrap();
        assert!(d.cols.iter().all(|p| (p - 0.25).abs() < 1e-15));

        let mut z = random_qmatrix(3, 3, 1);
        for i in 0..3 {
            z.set(i, 1, Quaternion::ZERO);
        }
        assert_eq!(length_distributions(&z).unwrap().cols[1], 0.0);
        assert!(matches!(
            length_distributions(&QMatrix::zeros(2, 2).unwrap()),
            Err(QError::DegenerateDistribution(_))
        ));
    }

    #[test]
    fn uniform_distribution_examples() {
        let d = uniform_distributions(1, 4).unwrap();
        assert_eq!(d.cols, vec![0.25; 4]);
        assert_eq!(d.rows, vec![1.0]);
        let d3 = uniform_distributions(3, 3).unwrap();
        assert!((d3.cols.iter().sum::<f64>() - 1.0).abs() <= 1e-16);
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(default_sample_counts(50, 500, 500).unwrap(), (196, 196));
        assert_eq!(default_sample_counts(1, 10, 10).unwrap(), (1, 1));
        assert_eq!(default_sample_counts(10, 12, 30).unwrap(), (12, 12));
        assert_eq!(default_sample_counts(5, 100, 100).unwrap(), (9, 9));
        assert_eq!(default_sample_counts(25, 128, 128).unwrap(), (81, 81));
        assert!(default_sample_counts(0, 5, 5).is_err());
        assert!(default_sample_counts(6, 5, 9).is_err());
    }

    #[test]
    fn draw_examples() {
        let uniform = vec![0.25; 4];
        assert_eq!(draw_indices_seeded(&uniform, 4, 3).unwrap(), vec![0, 1, 2, 3]);

        let p = [0.5, 0.0, 0.25, 0.25];
        for seed in 0..50 {
            let idx = draw_indices_seeded(&p, 2, seed).unwrap();
            assert!(!idx.contains(&1));
            assert_eq!(idx.len(), 2);
        }
        assert_eq!(draw_indices_seeded(&p, 3, 9).unwrap(), vec![0, 2, 3]);
        assert!(matches!(
            draw_indices_seeded(&p, 4, 1),
            Err(QError::Sampling { requested: 4, available: 3 })
        ));
        assert_eq!(draw_indices_seeded(&[0.1; 10], 4, 77).unwrap(), draw_indices_seeded(&[0.1; 10], 4, 77).unwrap());
    }

    #[test]
    fn draw_frequencies_follow_weights() {
        // Single draws: empirical frequencies track the probabilities.
        let p = [0.1, 0.2, 0.3, 0.4];
        let mut rng = rng_from_seed(11);
        let mut hits = [0usize; 4];
        let trials = 20_000;
        for _ in 0..trials {
            hits[draw_indices(&p, 1, &mut rng).unwrap()[0]] += 1;
        }
        for (h, q) in hits.iter().zip(p) {
            assert!((*h as f64 / trials as f64 - q).abs() < 0.015);
        }
    }

    #[test]
    fn plan_validation() {
        let x = random_qmatrix(6, 5, 2);
        assert!(SamplingPlan::with_counts(&x, Strategy::Uniform, 3, 2, 3, 0).is_err());
        assert!(SamplingPlan::with_counts(&x, Strategy::Uniform, 3, 7, 3, 0).is_err());
        let mut plan = SamplingPlan::new(&x, Strategy::Length, 2, 0).unwrap();
        assert_eq!((plan.num_rows, plan.num_cols), (2, 2));
        plan.col_probs[0] += 1e-6;
        assert!(plan.validate(6, 5).is_err());
    }

    #[test]
    fn scalar_pipeline() {
        let x = QMatrix::from_fn(1, 1, |_, _| Quaternion::pure(2.0, 0.0, 0.0)).unwrap();
        let f = cur_from_indices(&x, vec![0], vec![0]).unwrap();
        let u = f.u.get(0, 0);
        assert!((u - Quaternion::pure(-0.5, 0.0, 0.0)).modulus() < 1e-15);
        assert!(rel_err(&cur_reconstruct(&f).unwrap(), &x) < 1e-15);
    }

    #[test]
    fn zero_core_gives_zero() {
        let x = random_qmatrix(4, 4, 3);
        let mut f = cur_from_indices(&x, vec![0, 1], vec![2, 3]).unwrap();
        f.u = QMatrix::zeros(2, 2).unwrap();
        assert_eq!(cur_reconstruct(&f).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn factors_are_exact_submatrices() {
        let x = random_qmatrix(8, 7, 4);
        let plan = SamplingPlan::new(&x, Strategy::Length, 3, 5).unwrap();
        let f = qmcur(&x, &plan).unwrap();
        assert_eq!(f.c.shape(), (8, f.col_indices.len()));
        assert_eq!(f.u.shape(), (f.col_indices.len(), f.row_indices.len()));
        assert_eq!(f.r.shape(), (f.row_indices.len(), 7));
        for (jj, &j) in f.col_indices.iter().enumerate() {
            for i in 0..8 {
                assert_eq!(f.c.get(i, jj), x.get(i, j));
            }
        }
        for (ii, &i) in f.row_indices.iter().enumerate() {
            for j in 0..7 {
                assert_eq!(f.r.get(ii, j), x.get(i, j));
            }
        }
        let u = core_matrix(&f.c, &x, &f.r).unwrap();
        assert!(rel_err(&f.u, &u) < 1e-8);
    }

    #[test]
    fn rank_one_exact_recovery() {
        let c = random_qmatrix(6, 1, 5);
        let r = random_qmatrix(1, 5, 6);
        let x = c.matmul(&r).unwrap();
        let f = cur_from_indices(&x, vec![3], vec![1]).unwrap();
        assert!(rel_err(&cur_reconstruct(&f).unwrap(), &x) <= 1e-10);
    }

    #[test]
    fn stabilized_full_index_sets_is_identity() {
        let x = random_qmatrix(5, 4, 7);
        let y = stabilized_reconstruct(&x, &[0, 1, 2, 3, 4], &[0, 1, 2, 3]).unwrap();
        assert!(rel_err(&y, &x) <= 1e-10);
    }

    #[test]
    fn stabilized_is_idempotent() {
        let x = random_qmatrix(10, 9, 8);
        let (rows, cols) = (vec![0, 3, 5, 7], vec![1, 2, 6]);
        let once = stabilized_reconstruct(&x, &rows, &cols).unwrap();
        let twice = stabilized_reconstruct(&once, &rows, &cols).unwrap();
        assert!(rel_err(&twice, &once) <= 1e-8);
    }

    #[test]
    fn stabilized_matches_cur_form() {
        let x = random_qmatrix(9, 8, 12);
        let f = cur_from_indices(&x, vec![1, 4, 6], vec![0, 5]).unwrap();
        let a = cur_reconstruct(&f).unwrap();
        let b = stabilized_reconstruct(&x, &f.row_indices, &f.col_indices).unwrap();
        assert!(rel_err(&a, &b) < 1e-10);
    }

    #[test]
    fn bounds_vanish_without_noise() {
        let x = random_qmatrix(12, 2, 9).matmul(&random_qmatrix(2, 10, 10)).unwrap();
        let e = QMatrix::zeros(12, 10).unwrap();
        let b = perturbation_bounds(&x, &e, &[0, 4, 7], &[1, 2, 8], 2).unwrap();
        assert!(b.lhs <= 1e-10);
        assert_eq!(b.bound_a, 0.0);
        assert_eq!(b.bound_b, 0.0);
        assert!((b.x_r_pinv - b.w_rows_pinv).abs() <= 1e-8 * b.w_rows_pinv);
        assert!((b.c_pinv_x - b.v_cols_pinv).abs() <= 1e-8 * b.v_cols_pinv);
    }

    #[test]
    fn bounds_hold_with_noise() {
        let x = random_qmatrix(20, 3, 13).matmul(&random_qmatrix(3, 16, 14)).unwrap();
        let e = crate::rng::gaussian_qmatrix(20, 16, 1e-3, &mut rng_from_seed(15)).unwrap();
        for norm in [NormKind::Spectral, NormKind::Frobenius] {
            let b = perturbation_bounds_in(&x, &e, &[0, 2, 5, 9, 13], &[1, 3, 4, 11], 3, norm).unwrap();
            if norm == NormKind::Spectral {
                assert!(b.lhs <= b.bound_a);
                assert!(b.bound_a <= b.bound_b * (1.0 + 1e-8));
            }
            assert!(b.lhs > 0.0 && b.bound_b.is_finite());
        }
    }

    #[test]
    fn bounds_reject_bad_inputs() {
        let x = random_qmatrix(8, 2, 16).matmul(&random_qmatrix(2, 8, 17)).unwrap();
        let e = QMatrix::zeros(8, 8).unwrap();
        assert!(perturbation_bounds(&x, &e, &[0, 1], &[0, 1], 3).is_err());
        assert!(matches!(
            perturbation_bounds(&x, &e, &[0], &[0, 1], 2),
            Err(QError::DegenerateSampling(_))
        ));
        assert!(perturbation_bounds(&x, &QMatrix::zeros(8, 7).unwrap(), &[0, 1], &[0, 1], 2).is_err());
    }
}
