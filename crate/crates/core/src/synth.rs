//! Synthetic low-rank quaternion data and the two benchmark grids: error of
//! CUR under additive noise, and accuracy/runtime of truncated QSVD against
//! CUR as the dimension grows.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use crate::cur::{cur_reconstruct, perturbation_bounds, qmcur, PerturbationBounds, SamplingPlan, Strategy};
use crate::error::{param_err, QError, Result};
use crate::linalg::{lowrank_truncate, orthonormalize_columns, spectral_norm, QsvdResult};
use crate::qmatrix::QMatrix;
use crate::rng::{gaussian_qmatrix, stream, substream_seed};

pub const DEFAULT_TRIALS: usize = 5;

/// How many fresh index draws a trial may use before giving up when the
/// sampled rows/columns miss part of the range of `X`.
pub const MAX_REDRAWS: u64 = 8;

/// Singular value profile of a synthetic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// `σ_i = 1`
    #[default]
    Unit,
    /// `σ_i = 1 − (i−1)/(2k)`, `i = 1..k`
    LinearDecay,
}

impl Profile {
    pub fn values(self, k: usize) -> Vec<f64> {
        match self {
            Profile::Unit => vec![1.0; k],
            Profile::LinearDecay => (0..k).map(|i| 1.0 - i as f64 / (2 * k) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Standard deviation of each real component of the noise.
    pub sigma: f64,
    pub seed: u64,
    pub profile: Profile,
}

impl SyntheticSpec {
    pub fn new(m: usize, n: usize, k: usize, seed: u64) -> Self {
        SyntheticSpec {
            m,
            n,
            k,
            sigma: 0.0,
            seed,
            profile: Profile::Unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.m.min(self.n) {
            return param_err(format!(
                "rank k = {} must satisfy 1 <= k <= min(m, n) = {}",
                self.k,
                self.m.min(self.n)
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return param_err(format!("sigma must be finite and nonnegative, got {}", self.sigma));
        }
        Ok(())
    }

    /// Noise matrix for this spec.
    pub fn noise(&self) -> Result<QMatrix> {
        gaussian_noise(self.m, self.n, self.sigma, substream_seed(self.seed, "noise", &[]))
    }
}

/// `X = W_k Σ_k V_k^H` with `W_k`, `V_k` orthonormalized Gaussian matrices.
/// Returns `X` and its exact factors.
pub fn random_lowrank(spec: &SyntheticSpec) -> Result<(QMatrix, QsvdResult)> {
    spec.validate()?;
    let mut rw = stream(spec.seed, "lowrank-w", &[]);
    let mut rv = stream(spec.seed, "lowrank-v", &[]);
    let w = orthonormalize_columns(&gaussian_qmatrix(spec.m, spec.k, 1.0, &mut rw)?)?;
    let v = orthonormalize_columns(&gaussian_qmatrix(spec.n, spec.k, 1.0, &mut rv)?)?;
    let truth = QsvdResult {
        w,
        sigma: spec.profile.values(spec.k),
        v,
    };
    Ok((truth.reconstruct()?, truth))
}

/// Four planes of i.i.d. `N(0, sigma²)` entries.
pub fn gaussian_noise(m: usize, n: usize, sigma: f64, seed: u64) -> Result<QMatrix> {
    gaussian_qmatrix(m, n, sigma, &mut stream(seed, "gaussian-noise", &[]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    QsvdTruncated,
    QmcurLength,
    QmcurUniform,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::QsvdTruncated, Method::QmcurLength, Method::QmcurUniform];

    pub fn strategy(self) -> Option<Strategy> {
        match self {
            Method::QsvdTruncated => None,
            Method::QmcurLength => Some(Strategy::Length),
            Method::QmcurUniform => Some(Strategy::Uniform),
        }
    }
}

impl From<Strategy> for Method {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Length => Method::QmcurLength,
            Strategy::Uniform => Method::QmcurUniform,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::QsvdTruncated => "qsvd_truncated",
            Method::QmcurLength => "qmcur_length",
            Method::QmcurUniform => "qmcur_uniform",
        })
    }
}

impl FromStr for Method {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| QError::Parameter(format!("unknown method {s:?}")))
    }
}

/// One trial of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    /// Seed of this trial's data.
    pub seed: u64,
    pub rel_err_fro: f64,
    pub err_spec: f64,
    pub bound_a: Option<f64>,
    pub bound_b: Option<f64>,
    pub time_s: f64,
    /// `‖E‖_2` of the trial's noise. Kept in memory for regressions; not
    /// part of the CSV schema.
    pub noise_spec: f64,
}

impl BenchRecord {
    fn sort_key(&self, other: &Self) -> Ordering {
        self.m
            .cmp(&other.m)
            .then(self.sigma.total_cmp(&other.sigma))
            .then(self.seed.cmp(&other.seed))
            .then(self.method.cmp(&other.method))
    }
}

pub fn sort_records(records: &mut [BenchRecord]) {
    records.sort_by(BenchRecord::sort_key);
}

pub const CSV_HEADER: &str = "method,m,n,k,sigma,seed,rel_err_fro,err_spec,bound_a,bound_b,time_s";

/// 17 significant digits; `inf`/`-inf`/`nan` spelled out.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Whether wall-clock columns are written. `Redacted` leaves them empty so
/// that files from repeated runs can be compared byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Timing {
    #[default]
    Measured,
    Redacted,
}

pub fn format_time(t: f64, timing: Timing) -> String {
    match timing {
        Timing::Measured => format_float(t),
        Timing::Redacted => String::new(),
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[BenchRecord], timing: Timing) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.m,
            r.n,
            r.k,
            format_float(r.sigma),
            r.seed,
            format_float(r.rel_err_fro),
            format_float(r.err_spec),
            opt(r.bound_a),
            opt(r.bound_b),
            format_time(r.time_s, timing),
        )?;
    }
    Ok(())
}

pub fn csv_string(records: &[BenchRecord], timing: Timing) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, records, timing)?;
    String::from_utf8(buf).map_err(|e| QError::Format(e.to_string()))
}

/// Runs `f` `repeats` times and returns the last result with the median
/// wall time.
pub fn timed_median<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(repeats.max(1));
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        out = Some(f()?);
        times.push(t0.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok((out.expect("at least one repeat"), times[times.len() / 2]))
}

const TIMING_REPEATS: usize = 3;

fn relative_fro(b: &QMatrix, x: &QMatrix) -> Result<f64> {
    Ok(b.sub(x)?.frobenius_norm() / x.frobenius_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbConfig {
    pub m: usize,
    pub k: usize,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl PerturbConfig {
    pub fn new(m: usize, k: usize, sigmas: Vec<f64>, trials: usize, seed: u64) -> Self {
        PerturbConfig {
            m,
            k,
            sigmas,
            trials,
            strategy: Strategy::Length,
            seed,
        }
    }

    /// Cells `(sigma index, trial)`.
    fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.sigmas.len())
            .flat_map(|s| (0..self.trials).map(move |t| (s, t)))
            .collect()
    }
}

/// Square `m × m` rank-`k` matrices plus Gaussian noise at each `sigma`,
/// `trials` times each. Every record carries the spectral error of the
/// projection-form CUR of `X + E` against `X` and both perturbation bounds.
pub fn perturbation_experiment(cfg: &PerturbConfig) -> Result<Vec<BenchRecord>> {
    if cfg.k == 0 || cfg.k > cfg.m {
        return param_err(format!("rank k = {} must satisfy 1 <= k <= m = {}", cfg.k, cfg.m));
    }
    if cfg.trials == 0 || cfg.sigmas.is_empty() {
        return param_err("need at least one trial and one sigma");
    }
    let mut records = cfg
        .cells()
        .into_par_iter()
        .map(|(s, t)| perturbation_cell(cfg, s, t))
        .collect::<Result<Vec<_>>>()?;
    sort_records(&mut records);
    Ok(records)
}

/// Single trial at `cfg.sigmas[s]`. Each trial's clean matrix depends only
/// on the trial number, so the sigma sweep reuses it.
pub fn perturbation_cell(cfg: &PerturbConfig, s: usize, t: usize) -> Result<BenchRecord> {
    perturbation_trial(cfg, s, t).map(|(r, _)| r)
}

/// As [`perturbation_cell`], also returning every term of the bounds.
pub fn perturbation_trial(cfg: &PerturbConfig, s: usize, t: usize) -> Result<(BenchRecord, PerturbationBounds)> {
    let sigma = cfg.sigmas[s];
    let trial_seed = substream_seed(cfg.seed, "perturb-trial", &[t as u64]);
    let spec = SyntheticSpec {
        sigma,
        ..SyntheticSpec::new(cfg.m, cfg.m, cfg.k, trial_seed)
    };
    let (x, _) = random_lowrank(&spec)?;
    let noise_seed = substream_seed(trial_seed, "perturb-noise", &[s as u64]);
    let e = gaussian_noise(cfg.m, cfg.m, sigma, noise_seed)?;
    let x_tilde = x.add(&e)?;

    for attempt in 0..MAX_REDRAWS {
        let plan_seed = substream_seed(noise_seed, "perturb-plan", &[attempt]);
        let plan = SamplingPlan::new(&x_tilde, cfg.strategy, cfg.k, plan_seed)?;
        let (f, time_s) = timed_median(TIMING_REPEATS, || qmcur(&x_tilde, &plan))?;
        match perturbation_bounds(&x, &e, &f.row_indices, &f.col_indices, cfg.k) {
            Ok(b) => {
                let approx = cur_reconstruct(&f)?;
                let record = BenchRecord {
                    method: cfg.strategy.into(),
                    m: cfg.m,
                    n: cfg.m,
                    k: cfg.k,
                    sigma,
                    seed: trial_seed,
                    rel_err_fro: relative_fro(&approx, &x)?,
                    err_spec: b.lhs,
                    bound_a: Some(b.bound_a),
                    bound_b: Some(b.bound_b),
                    time_s,
                    noise_spec: b.noise,
                };
                return Ok((record, b));
            }
            Err(QError::DegenerateSampling(msg)) => {
                warn!("sigma={sigma:e} trial={t} attempt={attempt}: {msg}; redrawing");
            }
            Err(e) => return Err(e),
        }
    }
    Err(QError::DegenerateSampling(format!(
        "sigma={sigma:e} trial={t}: no rank-preserving draw in {MAX_REDRAWS} attempts"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    pub ms: Vec<usize>,
    pub k: usize,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

/// For each `m`, times truncated QSVD and both CUR variants on the same
/// noisy `m × m` rank-`k` matrix. Errors are measured against the clean
/// matrix. Cells run one after another so timings are not skewed by
/// concurrent work.
pub fn scaling_experiment(cfg: &ScaleConfig) -> Result<Vec<BenchRecord>> {
    let min_m = cfg.ms.iter().copied().min().unwrap_or(0);
    if cfg.k == 0 || cfg.k > min_m {
        return param_err(format!(
            "rank k = {} must satisfy 1 <= k <= min(m_list) = {min_m}",
            cfg.k
        ));
    }
    if cfg.trials == 0 {
        return param_err("need at least one trial");
    }
    let mut records = Vec::new();
    for &m in &cfg.ms {
        for t in 0..cfg.trials {
            records.extend(scaling_cell(cfg, m, t)?);
        }
    }
    sort_records(&mut records);
    Ok(records)
}

pub fn scaling_cell(cfg: &ScaleConfig, m: usize, t: usize) -> Result<Vec<BenchRecord>> {
    let trial_seed = substream_seed(cfg.seed, "scale-trial", &[m as u64, t as u64]);
    let spec = SyntheticSpec {
        sigma: cfg.sigma,
        ..SyntheticSpec::new(m, m, cfg.k, trial_seed)
    };
    let (x, _) = random_lowrank(&spec)?;
    let e = spec.noise()?;
    let x_tilde = x.add(&e)?;
    let noise_spec = spectral_norm(&e)?;

    let mut out = Vec::with_capacity(3);
    for method in Method::ALL {
        let (approx, time_s) = match method.strategy() {
            None => timed_median(TIMING_REPEATS, || lowrank_truncate(&x_tilde, cfg.k))?,
            Some(strategy) => {
                let plan = SamplingPlan::new(&x_tilde, strategy, cfg.k, trial_seed)?;
                timed_median(TIMING_REPEATS, || cur_reconstruct(&qmcur(&x_tilde, &plan)?))?
            }
        };
        let diff = approx.sub(&x)?;
        out.push(BenchRecord {
            method,
            m,
            n: m,
            k: cfg.k,
            sigma: cfg.sigma,
            seed: trial_seed,
            rel_err_fro: diff.frobenius_norm() / x.frobenius_norm(),
            err_spec: spectral_norm(&diff)?,
            bound_a: None,
            bound_b: None,
            time_s,
            noise_spec,
        });
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return param_err("slope needs at least two points with positive coordinates");
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return param_err("slope undefined: all x values equal");
    }
    Ok(sxy / sxx)
}
