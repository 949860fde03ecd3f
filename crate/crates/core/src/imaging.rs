//! RGB images as pure quaternion matrices `R i + G j + B k`, image file I/O
//! and quality metrics.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::completion::{complete, project_observed, CompletionConfig, CompletionResult, ObservationMask};
use crate::error::{param_err, QError, Result};
use crate::qmatrix::QMatrix;

/// 8-bit RGB image stored as three row-major planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    planes: [Vec<u8>; 3],
}

impl RgbImage {
    pub fn new(height: usize, width: usize, planes: [Vec<u8>; 3]) -> Result<Self> {
        if height == 0 || width == 0 || planes.iter().any(|p| p.len() != height * width) {
            return param_err(format!("image planes do not match {height}x{width}"));
        }
        Ok(RgbImage { height, width, planes })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut planes = [Vec::new(), Vec::new(), Vec::new()];
        for p in &mut planes {
            p.reserve(height * width);
        }
        for i in 0..height {
            for j in 0..width {
                let px = f(i, j);
                for c in 0..3 {
                    planes[c].push(px[c]);
                }
            }
        }
        Self::new(height, width, planes)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Channel plane, 0 = R, 1 = G, 2 = B.
    pub fn channel(&self, c: usize) -> &[u8] {
        &self.planes[c]
    }

    pub fn pixel(&self, i: usize, j: usize) -> [u8; 3] {
        let p = i * self.width + j;
        [self.planes[0][p], self.planes[1][p], self.planes[2][p]]
    }

    fn to_image(&self) -> image::RgbImage {
        let mut raw = Vec::with_capacity(3 * self.height * self.width);
        for p in 0..self.height * self.width {
            raw.extend([self.planes[0][p], self.planes[1][p], self.planes[2][p]]);
        }
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    fn from_image(img: &image::RgbImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        let raw = img.as_raw();
        let planes = [0, 1, 2].map(|c| raw.iter().skip(c).step_by(3).copied().collect());
        Self::new(h as usize, w as usize, planes)
    }

    /// Reads an 8-bit RGB PNG or binary PPM (P6). Grayscale, alpha and
    /// 16-bit images are rejected.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = image::ImageReader::open(path)?;
        reader.set_format(file_format(path)?);
        let img = reader.decode()?;
        match img {
            DynamicImage::ImageRgb8(rgb) => Self::from_image(&rgb),
            other => Err(QError::Format(format!(
                "{}: expected 8-bit RGB without alpha, got {:?}",
                path.display(),
                other.color()
            ))),
        }
    }

    /// Writes PNG or binary PPM (P6), chosen by file extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let img = self.to_image();
        match file_format(path)? {
            ImageFormat::Pnm => {
                let out = BufWriter::new(File::create(path)?);
                PnmEncoder::new(out)
                    .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
                    .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::Rgb8)?;
            }
            format => img.save_with_format(path, format)?,
        }
        Ok(())
    }
}

fn file_format(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") => Ok(ImageFormat::Pnm),
        _ => Err(QError::Format(format!(
            "{}: unsupported image extension (expected .png or .ppm)",
            path.display()
        ))),
    }
}

/// `0 + R i + G j + B k`.
pub fn image_to_qmat(img: &RgbImage) -> QMatrix {
    let (h, w) = img.dims();
    let n = h * w;
    let to_f = |c: usize| img.channel(c).iter().map(|&v| f64::from(v)).collect();
    QMatrix::from_planes(h, w, [vec![0.0; n], to_f(0), to_f(1), to_f(2)])
        .expect("image dimensions are positive")
}

/// Drops the real part; each imaginary plane is clamped to `[0, 255]` and
/// rounded half to even.
pub fn qmat_to_image(a: &QMatrix) -> RgbImage {
    let (h, w) = a.shape();
    let to_u8 = |p: usize| {
        a.plane(p)
            .iter()
            .map(|&x| x.clamp(0.0, 255.0).round_ties_even() as u8)
            .collect()
    };
    RgbImage::new(h, w, [to_u8(1), to_u8(2), to_u8(3)]).expect("matrix dimensions are positive")
}

fn check_same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(QError::Shape {
            op: "image metric",
            lhs: a.dims(),
            rhs: b.dims(),
        });
    }
    Ok(())
}

/// `10 log10(255² / MSE)` with the MSE pooled over all three channels;
/// `+inf` for identical images.
pub fn psnr(reference: &RgbImage, test: &RgbImage) -> Result<f64> {
    check_same_dims(reference, test)?;
    let mut sse = 0.0;
    for c in 0..3 {
        for (&a, &b) in reference.channel(c).iter().zip(test.channel(c)) {
            let d = f64::from(a) - f64::from(b);
            sse += d * d;
        }
    }
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / (3 * reference.height * reference.width) as f64;
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

const SSIM_WIN: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn gaussian_taps() -> [f64; SSIM_WIN] {
    let half = (SSIM_WIN / 2) as f64;
    let mut g = [0.0; SSIM_WIN];
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.map(|v| v / s)
}

/// Separable Gaussian filter over every fully contained window.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WIN]) -> Vec<f64> {
    let (oh, ow) = (h - SSIM_WIN + 1, w - SSIM_WIN + 1);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = taps.iter().enumerate().map(|(t, g)| g * src[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = taps.iter().enumerate().map(|(t, g)| g * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

fn ssim_channel(a: &[u8], b: &[u8], h: usize, w: usize, taps: &[f64; SSIM_WIN]) -> f64 {
    let x: Vec<f64> = a.iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = b.iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let [mx, my, exx, eyy, exy] = [&x, &y, &xx, &yy, &xy].map(|s| filter_valid(s, h, w, taps));
    let total: f64 = (0..mx.len())
        .map(|p| {
            let (ux, uy) = (mx[p], my[p]);
            let vx = exx[p] - ux * ux;
            let vy = eyy[p] - uy * uy;
            let cov = exy[p] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum();
    total / mx.len() as f64
}

/// Single-scale SSIM with an 11×11 Gaussian window (σ = 1.5), computed per
/// channel and averaged.
pub fn ssim(reference: &RgbImage, test: &RgbImage) -> Result<f64> {
    check_same_dims(reference, test)?;
    let (h, w) = reference.dims();
    if h.min(w) < SSIM_WIN {
        return param_err(format!("SSIM needs images of at least {SSIM_WIN}x{SSIM_WIN}, got {h}x{w}"));
    }
    let taps = gaussian_taps();
    let sum: f64 = (0..3)
        .map(|c| ssim_channel(reference.channel(c), test.channel(c), h, w, &taps))
        .sum();
    Ok(sum / 3.0)
}

/// `‖B − X‖_F / ‖X‖_F`.
pub fn relative_error(b: &QMatrix, x: &QMatrix) -> Result<f64> {
    let denom = x.frobenius_norm();
    if denom == 0.0 {
        return param_err("relative error against a zero reference");
    }
    Ok(b.sub(x)?.frobenius_norm() / denom)
}

/// Outcome of completing a partially observed image.
#[derive(Debug, Clone)]
pub struct InpaintReport {
    /// Input with missing pixels set to zero.
    pub observed: RgbImage,
    pub recovered: RgbImage,
    pub psnr_observed: f64,
    pub ssim_observed: f64,
    pub psnr_recovered: f64,
    pub ssim_recovered: f64,
    pub completion: CompletionResult,
    /// Wall time of the completion loop.
    pub loop_seconds: f64,
}

impl InpaintReport {
    pub fn time_per_iter(&self) -> f64 {
        self.loop_seconds / self.completion.iterations_run as f64
    }
}

/// Completes `img` from the pixels in `mask` and scores both the observed
/// and the recovered image against `img`.
pub fn inpaint(img: &RgbImage, mask: &ObservationMask, cfg: &CompletionConfig) -> Result<InpaintReport> {
    let full = image_to_qmat(img);
    let y = project_observed(&QMatrix::zeros(img.height, img.width)?, mask, &full)?;
    let observed = qmat_to_image(&y);
    let t0 = Instant::now();
    let completion = complete(&y, mask, cfg)?;
    let loop_seconds = t0.elapsed().as_secs_f64();
    let recovered = qmat_to_image(&completion.x_star);
    Ok(InpaintReport {
        psnr_observed: psnr(img, &observed)?,
        ssim_observed: ssim(img, &observed)?,
        psnr_recovered: psnr(img, &recovered)?,
        ssim_recovered: ssim(img, &recovered)?,
        observed,
        recovered,
        completion,
        loop_seconds,
    })
}
