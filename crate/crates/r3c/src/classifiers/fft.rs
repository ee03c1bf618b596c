//! Blockwise FFT contextual enhancement with spectral root filtering.
//!
//! Overlapping blocks are transformed, each spectral coefficient is scaled
//! by `|F|^k` with the DC term removed, and the filtered blocks are blended
//! back with a raised-cosine window. Raising the magnitude spectrum to a
//! power emphasizes the dominant local frequency, which for fingerprints is
//! the ridge flow, so weak or broken ridges are reinforced before
//! binarization.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, ClassifierSpec, InputPolicy};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, Foreground, GrayImage};

/// Binarization rule for the filtered result (values normalized to `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FftThreshold {
    /// Otsu's method over a 256-bin histogram.
    Otsu,
    /// Fixed level in `[0, 1]`.
    Fixed(f64),
}

/// Tuning knobs of the spectral enhancement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FftParams {
    pub block_size: usize,
    pub overlap: usize,
    /// Exponent `k` of the `|F|^k` root filter.
    pub power_exponent: f64,
    pub threshold: FftThreshold,
}

impl Default for FftParams {
    fn default() -> FftParams {
        FftParams {
            block_size: 32,
            overlap: 8,
            power_exponent: 1.4,
            threshold: FftThreshold::Otsu,
        }
    }
}

impl FftParams {
    pub fn validate(&self) -> Result<()> {
        if self.overlap == 0 || self.overlap >= self.block_size {
            return Err(Error::InvalidConfig(format!(
                "fft overlap must satisfy 0 < overlap < block_size, got {} vs {}",
                self.overlap, self.block_size
            )));
        }
        if self.power_exponent <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "fft power exponent must be positive, got {}",
                self.power_exponent
            )));
        }
        Ok(())
    }
}

/// Blockwise FFT classifier. Emits white-ridge masks.
#[derive(Debug, Clone)]
pub struct FftClassifier {
    spec: ClassifierSpec,
    params: FftParams,
}

impl FftClassifier {
    /// Standard configuration with the strict 500x500 input requirement of
    /// the original implementation this method follows.
    pub fn new(params: FftParams) -> Result<FftClassifier> {
        FftClassifier::with_policy(
            params,
            InputPolicy::FixedShape {
                width: 500,
                height: 500,
            },
        )
    }

    pub fn with_policy(params: FftParams, policy: InputPolicy) -> Result<FftClassifier> {
        params.validate()?;
        Ok(FftClassifier {
            spec: ClassifierSpec {
                name: "fft".to_string(),
                output_polarity: Foreground::Ridge,
                input_policy: policy,
            },
            params,
        })
    }

    pub fn params(&self) -> &FftParams {
        &self.params
    }
}

impl Classifier for FftClassifier {
    fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    fn enhance(&self, img: &GrayImage) -> Result<BinaryMask> {
        fft_enhance(img, &self.params)
    }
}

/// Runs the spectral enhancement on an already-shaped image.
pub fn fft_enhance(img: &GrayImage, params: &FftParams) -> Result<BinaryMask> {
    params.validate()?;
    let bs = params.block_size;
    let (w, h) = (img.width(), img.height());
    if w < bs || h < bs {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min_width: bs,
            min_height: bs,
        });
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(bs);
    let inverse = planner.plan_fft_inverse(bs);

    let window = raised_cosine(bs);
    let mut numerator = vec![0.0f64; w * h];
    let mut denominator = vec![0.0f64; w * h];

    let stride = bs - params.overlap;
    for by in block_starts(h, bs, stride) {
        for bx in block_starts(w, bs, stride) {
            let filtered =
                root_filter_block(img, bx, by, bs, params.power_exponent, &forward, &inverse);
            for y in 0..bs {
                for x in 0..bs {
                    let wgt = window[x] * window[y];
                    let idx = (by + y) * w + (bx + x);
                    numerator[idx] += wgt * filtered[y * bs + x];
                    denominator[idx] += wgt;
                }
            }
        }
    }

    let blended: Vec<f64> = numerator
        .iter()
        .zip(&denominator)
        .map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 })
        .collect();

    // Min-max normalize; a flat result (e.g. constant input after DC
    // removal) has no ridge content at all.
    let lo = blended.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = blended.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo < 1e-12 {
        return BinaryMask::filled(w, h, false, Foreground::Ridge);
    }
    let normalized: Vec<f64> = blended.iter().map(|v| (v - lo) / (hi - lo)).collect();

    let level = match params.threshold {
        FftThreshold::Fixed(v) => v,
        FftThreshold::Otsu => otsu_level(&normalized),
    };
    // Ridges are the dark side of the filtered image.
    let data = normalized.iter().map(|&v| v < level).collect();
    BinaryMask::new(w, h, data, Foreground::Ridge)
}

/// Block start offsets covering `[0, extent)` with the given stride; the
/// last block is pinned to the right/bottom edge.
fn block_starts(extent: usize, block_size: usize, stride: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut pos = 0;
    loop {
        if pos + block_size >= extent {
            starts.push(extent - block_size);
            break;
        }
        starts.push(pos);
        pos += stride;
    }
    starts
}

fn raised_cosine(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos()))
        .collect()
}

fn root_filter_block(
    img: &GrayImage,
    bx: usize,
    by: usize,
    bs: usize,
    k: f64,
    forward: &Arc<dyn Fft<f64>>,
    inverse: &Arc<dyn Fft<f64>>,
) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(bs * bs);
    for y in 0..bs {
        for x in 0..bs {
            buf.push(Complex::new(img.get(bx + x, by + y) as f64, 0.0));
        }
    }

    fft_2d(&mut buf, bs, forward);

    // Root filtering: scale every coefficient by |F|^k, drop the DC term.
    buf[0] = Complex::new(0.0, 0.0);
    for c in buf.iter_mut().skip(1) {
        let mag = c.norm();
        if mag > 0.0 {
            *c *= mag.powf(k);
        }
    }

    fft_2d(&mut buf, bs, inverse);

    // rustfft is unnormalized; a forward+inverse round trip scales by bs^2.
    let scale = 1.0 / (bs * bs) as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// In-place 2-D transform: all rows, then all columns.
fn fft_2d(buf: &mut [Complex<f64>], n: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            column[y] = buf[y * n + x];
        }
        fft.process(&mut column);
        for y in 0..n {
            buf[y * n + x] = column[y];
        }
    }
}

/// Otsu's threshold over values in `[0, 1]`, returned on the same scale.
fn otsu_level(values: &[f64]) -> f64 {
    const BINS: usize = 256;
    let mut histogram = [0u64; BINS];
    for &v in values {
        let bin = ((v * (BINS - 1) as f64).round() as usize).min(BINS - 1);
        histogram[bin] += 1;
    }
    let total = values.len() as f64;
    let total_mean: f64 = histogram
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum::<f64>()
        / total;

    let mut best_level = 0.5;
    let mut best_variance = -1.0;
    let mut weight_bg = 0.0;
    let mut sum_bg = 0.0;
    for (i, &count) in histogram.iter().enumerate() {
        weight_bg += count as f64;
        if weight_bg == 0.0 {
            continue;
        }
        let weight_fg = total - weight_bg;
        if weight_fg == 0.0 {
            break;
        }
        sum_bg += i as f64 * count as f64;
        let mean_bg = sum_bg / weight_bg;
        let mean_fg = (total_mean * total - sum_bg) / weight_fg;
        let between = weight_bg * weight_fg * (mean_bg - mean_fg).powi(2);
        if between > best_variance {
            best_variance = between;
            // Split midway between this bin and the next.
            best_level = (i as f64 + 0.5) / (BINS - 1) as f64;
        }
    }
    best_level
}
