//! Matrix completion by alternating a CUR low-rank step with re-imposing the
//! observed entries:
//!
//! ```text
//! M^t     = C U R  from X^t
//! X^{t+1} = Ω ⊛ Y + (1 − Ω) ⊛ M^t
//! ```
//!
//! until `‖X^{t+1} − X^t‖_F / ‖X^t‖_F` drops below a tolerance.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info};
use rand::seq::index;

use crate::cur::{cur_from_indices, cur_reconstruct, default_sample_counts, qmcur, SamplingPlan, Strategy};
use crate::error::{param_err, QError, Result};
use crate::qmatrix::QMatrix;
use crate::rng::{stream, substream_seed};

/// Set `Ω` of observed entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || observed.len() != rows * cols {
            return param_err(format!(
                "mask of {} entries does not match {rows}x{cols}",
                observed.len()
            ));
        }
        Ok(ObservationMask { rows, cols, observed })
    }

    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![true; rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let observed = (0..rows * cols).map(|p| f(p / cols, p % cols)).collect();
        Self::new(rows, cols, observed)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn missing_count(&self) -> usize {
        self.observed.len() - self.observed_count()
    }

    /// `1 − |Ω| / (m n)`
    pub fn missing_ratio(&self) -> f64 {
        self.missing_count() as f64 / self.observed.len() as f64
    }

    /// Single-channel PNG, 0 = missing, 255 = observed.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let px = self.observed.iter().map(|&o| if o { 255 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(self.cols as u32, self.rows as u32, px)
            .expect("buffer length matches dimensions");
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?;
        let gray = match img {
            image::DynamicImage::ImageLuma8(g) => g,
            other => {
                return Err(QError::Format(format!(
                    "mask must be an 8-bit single-channel image, got {:?}",
                    other.color()
                )))
            }
        };
        let (w, h) = gray.dimensions();
        let mut observed = Vec::with_capacity((w * h) as usize);
        for &v in gray.as_raw() {
            match v {
                0 => observed.push(false),
                255 => observed.push(true),
                _ => return Err(QError::Format(format!("mask value {v} is neither 0 nor 255"))),
            }
        }
        Self::new(h as usize, w as usize, observed)
    }
}

/// Mask with exactly `round(ratio · m · n)` missing entries, placed
/// uniformly without replacement.
pub fn random_mask(m: usize, n: usize, missing_ratio: f64, seed: u64) -> Result<ObservationMask> {
    if !(0.0..1.0).contains(&missing_ratio) {
        return param_err(format!("missing ratio must lie in [0, 1), got {missing_ratio}"));
    }
    let total = m * n;
    let missing = (missing_ratio * total as f64).round() as usize;
    let mut observed = vec![true; total];
    let mut rng = stream(seed, "random-mask", &[]);
    for p in index::sample(&mut rng, total, missing) {
        observed[p] = false;
    }
    ObservationMask::new(m, n, observed)
}

/// Entry `(i, j)` from `y` where observed, from `x` elsewhere.
pub fn project_observed(x: &QMatrix, mask: &ObservationMask, y: &QMatrix) -> Result<QMatrix> {
    if x.shape() != y.shape() {
        return Err(QError::Shape {
            op: "project_observed",
            lhs: x.shape(),
            rhs: y.shape(),
        });
    }
    if x.shape() != mask.shape() {
        return Err(QError::Shape {
            op: "project_observed (mask)",
            lhs: x.shape(),
            rhs: mask.shape(),
        });
    }
    let mut out = x.clone();
    for p in 0..4 {
        let src = y.plane(p);
        for ((o, &s), &obs) in out.plane_mut(p).iter_mut().zip(src).zip(mask.as_slice()) {
            if obs {
                *o = s;
            }
        }
    }
    Ok(out)
}

/// Whether sample indices are redrawn every iteration or drawn once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexPolicy {
    #[default]
    Resample,
    Fixed,
}

impl FromStr for IndexPolicy {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resample" => Ok(IndexPolicy::Resample),
            "fixed" => Ok(IndexPolicy::Fixed),
            other => param_err(format!("unknown index policy {other:?} (expected resample|fixed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionConfig {
    pub rank: usize,
    pub strategy: Strategy,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub index_policy: IndexPolicy,
    /// Rows and columns sampled per CUR step (`|I| = |J|`). `None` uses
    /// the CUR default `⌈k ln k⌉`. `Some(k)` keeps every low-rank iterate at
    /// rank at most `k`, which suits inputs that are far from low rank.
    pub samples: Option<usize>,
    pub seed: u64,
    /// Log one progress line per iteration at info level.
    pub verbose: bool,
}

impl CompletionConfig {
    pub fn new(rank: usize, strategy: Strategy, seed: u64) -> Self {
        CompletionConfig {
            rank,
            strategy,
            max_iters: 200,
            rel_tol: 1e-4,
            index_policy: IndexPolicy::Resample,
            samples: None,
            seed,
            verbose: false,
        }
    }

    pub fn sample_count(&self, m: usize, n: usize) -> Result<usize> {
        match self.samples {
            Some(c) => Ok(c),
            None => default_sample_counts(self.rank, m, n).map(|(c, _)| c),
        }
    }

    fn plan(&self, x: &QMatrix, seed: u64) -> Result<SamplingPlan> {
        let c = self.sample_count(x.rows(), x.cols())?;
        SamplingPlan::with_counts(x, self.strategy, self.rank, c, c, seed)
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.rank == 0 || self.rank > m.min(n) {
            return param_err(format!(
                "rank k = {} must satisfy 1 <= k <= min(m, n) = {}",
                self.rank,
                m.min(n)
            ));
        }
        let c = self.sample_count(m, n)?;
        if c < self.rank || c > m.min(n) {
            return param_err(format!(
                "sample count {c} must satisfy k = {} <= count <= min(m, n) = {}",
                self.rank,
                m.min(n)
            ));
        }
        if self.max_iters == 0 {
            return param_err("max_iters must be at least 1");
        }
        if !(self.rel_tol > 0.0) {
            return param_err(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub x_star: QMatrix,
    pub iterations_run: usize,
    pub rel_change_history: Vec<f64>,
    pub converged: bool,
}

pub fn complete(y: &QMatrix, mask: &ObservationMask, cfg: &CompletionConfig) -> Result<CompletionResult> {
    complete_with(y, mask, cfg, |_, _| {})
}

/// As [`complete`], calling `observe(t, X^{t+1})` after every iteration.
pub fn complete_with(
    y: &QMatrix,
    mask: &ObservationMask,
    cfg: &CompletionConfig,
    mut observe: impl FnMut(usize, &QMatrix),
) -> Result<CompletionResult> {
    let (m, n) = y.shape();
    cfg.validate(m, n)?;
    let mut x = project_observed(&QMatrix::zeros(m, n)?, mask, y)?;

    let fixed = match cfg.index_policy {
        IndexPolicy::Fixed if x.frobenius_norm_sqr() > 0.0 => {
            Some(cfg.plan(&x, cfg.seed)?.draw()?)
        }
        _ => None,
    };

    let t0 = Instant::now();
    let mut history = Vec::new();
    let mut converged = false;
    for t in 0..cfg.max_iters {
        let low_rank = if x.frobenius_norm_sqr() == 0.0 {
            QMatrix::zeros(m, n)?
        } else if let Some((rows, cols)) = &fixed {
            cur_reconstruct(&cur_from_indices(&x, rows.clone(), cols.clone())?)?
        } else {
            let seed = substream_seed(cfg.seed, "complete-iter", &[t as u64]);
            let plan = cfg.plan(&x, seed)?;
            cur_reconstruct(&qmcur(&x, &plan)?)?
        };
        let next = project_observed(&low_rank, mask, y)?;
        let num = next.sub(&x)?.frobenius_norm();
        let den = x.frobenius_norm();
        let rel = if den > 0.0 {
            num / den
        } else if num <= 1e-15 {
            0.0
        } else {
            f64::INFINITY
        };
        history.push(rel);
        x = next;
        observe(t, &x);

        let elapsed = t0.elapsed().as_secs_f64();
        if cfg.verbose {
            info!("iter {:>4}  rel_change {rel:.6e}  elapsed {elapsed:.3}s", t + 1);
        } else {
            debug!("iter {:>4}  rel_change {rel:.6e}  elapsed {elapsed:.3}s", t + 1);
        }
        if rel <= cfg.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(CompletionResult {
        x_star: x,
        iterations_run: history.len(),
        rel_change_history: history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::Quaternion;
    use crate::testutil::random_qmatrix;

    #[test]
    fn projection_examples() {
        let x = random_qmatrix(2, 2, 1);
        let y = random_qmatrix(2, 2, 2);
        assert_eq!(project_observed(&x, &ObservationMask::full(2, 2).unwrap(), &y).unwrap(), y);
        let none = ObservationMask::new(2, 2, vec![false; 4]).unwrap();
        assert_eq!(project_observed(&x, &none, &y).unwrap(), x);
        let checker = ObservationMask::from_fn(2, 2, |i, j| (i + j) % 2 == 0).unwrap();
        let z = project_observed(&x, &checker, &y).unwrap();
        assert_eq!(z.get(0, 0), y.get(0, 0));
        assert_eq!(z.get(0, 1), x.get(0, 1));
        assert_eq!(z.get(1, 0), x.get(1, 0));
        assert_eq!(z.get(1, 1), y.get(1, 1));
        assert!(project_observed(&x, &checker, &random_qmatrix(2, 3, 3)).is_err());
    }

    #[test]
    fn mask_examples() {
        assert_eq!(random_mask(5, 7, 0.0, 1).unwrap().missing_count(), 0);
        let big = random_mask(512, 768, 0.9, 4).unwrap();
        assert_eq!(big.missing_count(), 353_894);
        assert!((big.missing_ratio() - 353_894.0 / 393_216.0).abs() < 1e-12);
        assert_eq!(random_mask(20, 30, 0.4, 8).unwrap(), random_mask(20, 30, 0.4, 8).unwrap());
        assert_ne!(random_mask(20, 30, 0.4, 8).unwrap(), random_mask(20, 30, 0.4, 9).unwrap());
        assert!(random_mask(4, 4, 1.0, 0).is_err());
        assert!(random_mask(4, 4, -0.1, 0).is_err());
    }

    #[test]
    fn mask_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.png");
        let mask = random_mask(9, 13, 0.3, 2).unwrap();
        mask.save_png(&path).unwrap();
        assert_eq!(ObservationMask::load_png(&path).unwrap(), mask);
    }

    #[test]
    fn config_validation() {
        let mut cfg = CompletionConfig::new(3, Strategy::Uniform, 0);
        assert!(cfg.validate(5, 5).is_ok());
        assert!(cfg.validate(2, 5).is_err());
        cfg.samples = Some(2);
        assert!(cfg.validate(5, 5).is_err());
        cfg.samples = Some(6);
        assert!(cfg.validate(5, 5).is_err());
        cfg.samples = Some(5);
        assert!(cfg.validate(5, 5).is_ok());
        cfg.rel_tol = 0.0;
        assert!(cfg.validate(5, 5).is_err());
        assert_eq!("fixed".parse::<IndexPolicy>().unwrap(), IndexPolicy::Fixed);
        assert!("sometimes".parse::<IndexPolicy>().is_err());
    }

    #[test]
    fn fully_observed_converges_immediately() {
        let y = random_qmatrix(8, 6, 4);
        let res = complete(&y, &ObservationMask::full(8, 6).unwrap(), &CompletionConfig::new(2, Strategy::Length, 1)).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations_run, 1);
        assert_eq!(res.x_star, y);
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let y = QMatrix::zeros(6, 6).unwrap();
        let mask = random_mask(6, 6, 0.5, 3).unwrap();
        let res = complete(&y, &mask, &CompletionConfig::new(2, Strategy::Length, 1)).unwrap();
        assert!(res.converged);
        assert_eq!(res.x_star, y);
    }

    #[test]
    fn iteration_cap_and_fidelity() {
        let y = random_qmatrix(12, 10, 5);
        let mask = random_mask(12, 10, 0.4, 6).unwrap();
        for policy in [IndexPolicy::Resample, IndexPolicy::Fixed] {
            let cfg = CompletionConfig {
                max_iters: 4,
                rel_tol: 1e-300,
                index_policy: policy,
                ..CompletionConfig::new(2, Strategy::Uniform, 7)
            };
            let mut seen = 0;
            let res = complete_with(&y, &mask, &cfg, |_, x| {
                seen += 1;
                for i in 0..12 {
                    for j in 0..10 {
                        if mask.is_observed(i, j) {
                            assert_eq!(x.get(i, j), y.get(i, j));
                        }
                    }
                }
            })
            .unwrap();
            assert_eq!((res.iterations_run, seen), (4, 4));
            assert!(!res.converged);
            assert_eq!(res, complete(&y, &mask, &cfg).unwrap());
        }
    }

    #[test]
    fn unobserved_entries_start_at_zero() {
        let y = QMatrix::from_fn(3, 3, |_, _| Quaternion::ONE).unwrap();
        let mask = ObservationMask::from_fn(3, 3, |i, j| i != j).unwrap();
        let cfg = CompletionConfig {
            max_iters: 1,
            ..CompletionConfig::new(1, Strategy::Length, 0)
        };
        let res = complete(&y, &mask, &cfg).unwrap();
        // ‖X^1 − X^0‖ / ‖X^0‖ where X^0 has zero diagonal and X^1 fills it
        // with the rank-1 estimate.
        let diag: f64 = (0..3).map(|i| res.x_star.get(i, i).norm_sqr()).sum();
        assert!((res.rel_change_history[0] - (diag / 6.0).sqrt()).abs() < 1e-12);
    }
}
