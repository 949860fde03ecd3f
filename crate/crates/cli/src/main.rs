use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use qmcur::completion::{random_mask, CompletionConfig, IndexPolicy, ObservationMask};
use qmcur::cur::{cur_reconstruct, qmcur, SamplingPlan, Strategy};
use qmcur::imaging::{image_to_qmat, inpaint, psnr, qmat_to_image, relative_error, RgbImage};
use qmcur::linalg::{lowrank_truncate, spectral_norm};
use qmcur::parallel::with_env_pool;
use qmcur::synth::{
    format_float as ff, format_time, perturbation_experiment, scaling_experiment, timed_median, write_csv,
    Method, PerturbConfig, ScaleConfig, Timing, DEFAULT_TRIALS,
};
use qmcur::{QError, QMatrix};

/// Quaternion CUR approximation, image compression and completion.
#[derive(Parser, Debug)]
#[command(name = "qmcur", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Log per-step progress
    #[arg(long, global = true)]
    verbose: bool,

    /// Leave wall-clock columns empty so repeated runs give identical CSV
    #[arg(long, global = true)]
    no_timing: bool,
}

impl Common {
    fn timing(&self) -> Timing {
        if self.no_timing {
            Timing::Redacted
        } else {
            Timing::Measured
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Length,
    Uniform,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Length => Strategy::Length,
            StrategyArg::Uniform => Strategy::Uniform,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Resample,
    Fixed,
}

impl From<PolicyArg> for IndexPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Resample => IndexPolicy::Resample,
            PolicyArg::Fixed => IndexPolicy::Fixed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CUR factors of a .qmat matrix
    Approx {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value = "length")]
        strategy: StrategyArg,
    },
    /// Rank-k compression of an RGB image by truncated QSVD and both CUR variants
    Compress {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
    },
    /// Fill in missing pixels of an RGB image
    Complete {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Observation mask PNG (0 = missing, 255 = observed)
        #[arg(long, conflicts_with = "missing_ratio")]
        mask: Option<PathBuf>,
        #[arg(long)]
        missing_ratio: Option<f64>,
        #[arg(long, value_enum, default_value = "uniform")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        rel_tol: f64,
        #[arg(long, value_enum, default_value = "resample")]
        index_policy: PolicyArg,
        /// Rows and columns sampled per iteration (default: ceil(k ln k))
        #[arg(long)]
        samples: Option<usize>,
    },
    /// CUR error against noise level
    BenchPerturb {
        #[arg(long, default_value_t = 500)]
        m: usize,
        #[arg(long, default_value_t = 50)]
        rank: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, value_enum, default_value = "length")]
        strategy: StrategyArg,
    },
    /// Accuracy and runtime of truncated QSVD and CUR against dimension
    BenchScale {
        #[arg(long, value_delimiter = ',', default_values_t = (1..=10).map(|i| 50 * i).collect::<Vec<usize>>())]
        ms: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        rank: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
}

fn check_rank(k: usize, m: usize, n: usize) -> Result<()> {
    if k == 0 || k > m.min(n) {
        return Err(QError::Parameter(format!(
            "rank k = {k} must satisfy 1 <= k <= min(m, n) = {} for a {m}x{n} input",
            m.min(n)
        ))
        .into());
    }
    Ok(())
}

fn approx(c: &Common, input: &Path, k: usize, strategy: Strategy) -> Result<()> {
    let x = QMatrix::load(input).with_context(|| format!("reading {}", input.display()))?;
    check_rank(k, x.rows(), x.cols())?;
    let plan = SamplingPlan::new(&x, strategy, k, c.seed)?;
    let (f, time_s) = timed_median(1, || qmcur(&x, &plan))?;
    let b = cur_reconstruct(&f)?;
    f.c.save(c.out.join("C.qmat"))?;
    f.u.save(c.out.join("U.qmat"))?;
    f.r.save(c.out.join("R.qmat"))?;
    b.save(c.out.join("reconstruction.qmat"))?;
    let rel = relative_error(&b, &x)?;
    let spec = spectral_norm(&b.sub(&x)?)?;
    fs::write(
        c.out.join("approx.csv"),
        format!("rel_err_fro,err_spec,time_s\n{},{},{}\n", ff(rel), ff(spec), format_time(time_s, c.timing())),
    )?;
    info!("rank {k}: |I| = {}, |J| = {}, relative error {rel:.3e}", f.row_indices.len(), f.col_indices.len());
    Ok(())
}

fn compress(c: &Common, input: &Path, k: usize) -> Result<()> {
    let img = RgbImage::load(input).with_context(|| format!("reading {}", input.display()))?;
    let x = image_to_qmat(&img);
    check_rank(k, x.rows(), x.cols())?;
    let mut csv = String::from("method,m,n,k,rel_err_fro,psnr,time_s\n");
    for method in Method::ALL {
        let (b, t) = match method.strategy() {
            None => timed_median(3, || lowrank_truncate(&x, k))?,
            Some(s) => {
                let plan = SamplingPlan::new(&x, s, k, c.seed)?;
                timed_median(3, || cur_reconstruct(&qmcur(&x, &plan)?))?
            }
        };
        let out = qmat_to_image(&b);
        out.save(c.out.join(format!("{method}.png")))?;
        let rel = relative_error(&b, &x)?;
        let p = psnr(&img, &out)?;
        csv.push_str(&format!(
            "{method},{},{},{k},{},{},{}\n",
            x.rows(),
            x.cols(),
            ff(rel),
            ff(p),
            format_time(t, c.timing())
        ));
        info!("{method}: relative error {rel:.4e}, PSNR {p:.2} dB");
    }
    fs::write(c.out.join("compress.csv"), csv)?;
    Ok(())
}

fn complete(c: &Common, input: &Path, mask: Option<&Path>, ratio: Option<f64>, cfg: CompletionConfig) -> Result<()> {
    let img = RgbImage::load(input).with_context(|| format!("reading {}", input.display()))?;
    let (h, w) = img.dims();
    check_rank(cfg.rank, h, w)?;
    let mask = match (mask, ratio) {
        (Some(p), _) => {
            let m = ObservationMask::load_png(p).with_context(|| format!("reading mask {}", p.display()))?;
            if m.shape() != (h, w) {
                return Err(QError::Shape {
                    op: "mask",
                    lhs: (h, w),
                    rhs: m.shape(),
                }
                .into());
            }
            m
        }
        (None, Some(r)) => {
            let m = random_mask(h, w, r, c.seed)?;
            m.save_png(c.out.join("mask.png"))?;
            m
        }
        (None, None) => return Err(QError::Parameter("either --mask or --missing-ratio is required".into()).into()),
    };
    let r = inpaint(&img, &mask, &cfg)?;
    r.observed.save(c.out.join("observed.png"))?;
    r.recovered.save(c.out.join("recovered.png"))?;
    fs::write(
        c.out.join("complete.csv"),
        format!(
            "psnr_observed,ssim_observed,psnr_recovered,ssim_recovered,iters,time_per_iter_s\n{},{},{},{},{},{}\n",
            ff(r.psnr_observed),
            ff(r.ssim_observed),
            ff(r.psnr_recovered),
            ff(r.ssim_recovered),
            r.completion.iterations_run,
            format_time(r.time_per_iter(), c.timing())
        ),
    )?;
    info!(
        "PSNR {:.2} -> {:.2} dB, SSIM {:.4} -> {:.4}, {} iterations",
        r.psnr_observed, r.psnr_recovered, r.ssim_observed, r.ssim_recovered, r.completion.iterations_run
    );
    Ok(())
}

fn write_records(c: &Common, name: &str, recs: &[qmcur::synth::BenchRecord]) -> Result<()> {
    let file = fs::File::create(c.out.join(name))?;
    write_csv(std::io::BufWriter::new(file), recs, c.timing())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    match cli.command {
        Command::Approx { input, rank, strategy } => approx(c, &input, rank, strategy.into()),
        Command::Compress { input, rank } => compress(c, &input, rank),
        Command::Complete {
            input,
            rank,
            mask,
            missing_ratio,
            strategy,
            max_iters,
            rel_tol,
            index_policy,
            samples,
        } => {
            let cfg = CompletionConfig {
                max_iters,
                rel_tol,
                index_policy: index_policy.into(),
                samples,
                verbose: c.verbose,
                ..CompletionConfig::new(rank, strategy.into(), c.seed)
            };
            complete(c, &input, mask.as_deref(), missing_ratio, cfg)
        }
        Command::BenchPerturb {
            m,
            rank,
            sigmas,
            trials,
            strategy,
        } => {
            let cfg = PerturbConfig {
                strategy: strategy.into(),
                ..PerturbConfig::new(m, rank, sigmas, trials, c.seed)
            };
            let recs = with_env_pool(|| perturbation_experiment(&cfg))??;
            write_records(c, "perturb.csv", &recs)
        }
        Command::BenchScale { ms, rank, sigma, trials } => {
            let cfg = ScaleConfig {
                ms,
                k: rank,
                sigma,
                trials,
                seed: c.seed,
            };
            let recs = with_env_pool(|| scaling_experiment(&cfg))??;
            write_records(c, "scale.csv", &recs)
        }
    }
}

/// Exit 2 for violated preconditions, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<QError>() {
        Some(QError::Parameter(_) | QError::Sampling { .. } | QError::Shape { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
