//! Contextual ridge enhancement with an even-symmetric Gabor filter bank,
//! in the style of classic fingerprint enhancement pipelines: blockwise
//! normalization, variance-based foreground segmentation, orientation and
//! ridge-frequency estimation, then per-block tuned filtering.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::classifiers::orientation::{estimate_orientation_field, OrientationField};
use crate::classifiers::{Classifier, ClassifierSpec, InputPolicy};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, Foreground, GrayImage};

/// Tuning knobs of the Gabor pipeline. Frequencies are in cycles per pixel,
/// sigmas of the filter envelope in pixels, the smoothing sigma in blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaborParams {
    pub block_size: usize,
    pub orientation_smoothing_sigma: f64,
    pub freq_min: f64,
    pub freq_max: f64,
    pub filter_sigma_x: f64,
    pub filter_sigma_y: f64,
    /// Blocks with intensity variance below this are background.
    pub segmentation_variance_threshold: f64,
}

impl Default for GaborParams {
    fn default() -> GaborParams {
        GaborParams {
            block_size: 16,
            orientation_smoothing_sigma: 1.0,
            freq_min: 1.0 / 25.0,
            freq_max: 1.0 / 3.0,
            filter_sigma_x: 4.0,
            filter_sigma_y: 4.0,
            segmentation_variance_threshold: 0.005,
        }
    }
}

impl GaborParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 8 {
            return Err(Error::InvalidConfig(format!(
                "gabor block_size must be at least 8, got {}",
                self.block_size
            )));
        }
        if !(self.freq_min > 0.0 && self.freq_min < self.freq_max && self.freq_max < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "gabor frequency band must satisfy 0 < min < max < 0.5, got [{}, {}]",
                self.freq_min, self.freq_max
            )));
        }
        Ok(())
    }
}

/// Gabor filter bank classifier. Emits white-ridge masks.
#[derive(Debug, Clone)]
pub struct GaborClassifier {
    spec: ClassifierSpec,
    params: GaborParams,
}

impl GaborClassifier {
    /// Standard configuration: prefers 350x350 inputs, the working
    /// resolution this filter bank is tuned for.
    pub fn new(params: GaborParams) -> Result<GaborClassifier> {
        GaborClassifier::with_policy(
            params,
            InputPolicy::PreferredShape {
                width: 350,
                height: 350,
            },
        )
    }

    pub fn with_policy(params: GaborParams, policy: InputPolicy) -> Result<GaborClassifier> {
        params.validate()?;
        Ok(GaborClassifier {
            spec: ClassifierSpec {
                name: "gabor".to_string(),
                output_polarity: Foreground::Ridge,
                input_policy: policy,
            },
            params,
        })
    }

    pub fn params(&self) -> &GaborParams {
        &self.params
    }
}

impl Classifier for GaborClassifier {
    fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    fn enhance(&self, img: &GrayImage) -> Result<BinaryMask> {
        gabor_enhance(img, &self.params)
    }
}

/// Runs the full Gabor pipeline on an already-shaped image.
pub fn gabor_enhance(img: &GrayImage, params: &GaborParams) -> Result<BinaryMask> {
    params.validate()?;
    let bs = params.block_size;
    if img.width() < bs || img.height() < bs {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: bs,
            min_height: bs,
        });
    }

    let grid = BlockGrid::new(img.width(), img.height(), bs);

    // Foreground segmentation and normalization share the block statistics.
    let stats = grid.block_stats(img);
    let foreground: Vec<bool> = stats
        .iter()
        .map(|s| s.variance >= params.segmentation_variance_threshold)
        .collect();
    if foreground.iter().all(|&f| !f) {
        return BinaryMask::filled(img.width(), img.height(), false, Foreground::Ridge);
    }

    let normalized = grid.normalize(img, &stats);
    let field = estimate_orientation_field(img, params)?;
    let freqs =
        estimate_block_frequencies(&normalized, img.width(), &grid, &field, &foreground, params);

    let mut data = vec![false; img.width() * img.height()];
    let radius = (3.0 * params.filter_sigma_x.max(params.filter_sigma_y)).ceil() as isize;
    for by in 0..grid.rows {
        for bx in 0..grid.cols {
            let b = by * grid.cols + bx;
            if !foreground[b] {
                continue;
            }
            let kernel = GaborKernel::even_symmetric(
                field.angle(bx, by),
                freqs[b],
                params.filter_sigma_x,
                params.filter_sigma_y,
                radius,
            );
            let (x0, x1, y0, y1) = grid.block_bounds(bx, by);
            for y in y0..y1 {
                for x in x0..x1 {
                    let response = kernel.apply(&normalized, img.width(), img.height(), x, y);
                    // Dark ridges drive the zero-mean filter response
                    // negative where the cosine crest aligns with them.
                    data[y * img.width() + x] = response < 0.0;
                }
            }
        }
    }
    BinaryMask::new(img.width(), img.height(), data, Foreground::Ridge)
}

/// Per-block ridge frequency estimates (cycles per pixel) on the same grid
/// as [`estimate_orientation_field`], including the neighbor fill for
/// blocks whose own estimate fell outside the configured band. Background
/// blocks carry the band midpoint.
pub fn ridge_frequencies(img: &GrayImage, params: &GaborParams) -> Result<Vec<f64>> {
    params.validate()?;
    let bs = params.block_size;
    if img.width() < bs || img.height() < bs {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: bs,
            min_height: bs,
        });
    }
    let grid = BlockGrid::new(img.width(), img.height(), bs);
    let stats = grid.block_stats(img);
    let foreground: Vec<bool> = stats
        .iter()
        .map(|s| s.variance >= params.segmentation_variance_threshold)
        .collect();
    let normalized = grid.normalize(img, &stats);
    let field = estimate_orientation_field(img, params)?;
    Ok(estimate_block_frequencies(
        &normalized,
        img.width(),
        &grid,
        &field,
        &foreground,
        params,
    ))
}

pub(crate) struct BlockGrid {
    pub cols: usize,
    pub rows: usize,
    width: usize,
    height: usize,
    block_size: usize,
}

pub(crate) struct BlockStats {
    pub mean: f64,
    pub variance: f64,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, block_size: usize) -> BlockGrid {
        BlockGrid {
            cols: width / block_size,
            rows: height / block_size,
            width,
            height,
            block_size,
        }
    }

    /// Pixel bounds of a block; the last row/column absorbs the margin.
    pub fn block_bounds(&self, bx: usize, by: usize) -> (usize, usize, usize, usize) {
        let x0 = bx * self.block_size;
        let y0 = by * self.block_size;
        let x1 = if bx + 1 == self.cols {
            self.width
        } else {
            x0 + self.block_size
        };
        let y1 = if by + 1 == self.rows {
            self.height
        } else {
            y0 + self.block_size
        };
        (x0, x1, y0, y1)
    }

    pub fn block_stats(&self, img: &GrayImage) -> Vec<BlockStats> {
        let mut stats = Vec::with_capacity(self.cols * self.rows);
        for by in 0..self.rows {
            for bx in 0..self.cols {
                let (x0, x1, y0, y1) = self.block_bounds(bx, by);
                let n = ((x1 - x0) * (y1 - y0)) as f64;
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let v = img.get(x, y) as f64;
                        sum += v;
                        sum_sq += v * v;
                    }
                }
                let mean = sum / n;
                stats.push(BlockStats {
                    mean,
                    variance: (sum_sq / n - mean * mean).max(0.0),
                });
            }
        }
        stats
    }

    /// Blockwise normalization to mean 0.5 and variance 0.01. Values are
    /// not clamped; the buffer is internal to the filtering stages.
    pub fn normalize(&self, img: &GrayImage, stats: &[BlockStats]) -> Vec<f64> {
        const TARGET_MEAN: f64 = 0.5;
        const TARGET_VARIANCE: f64 = 0.01;
        let mut out = vec![TARGET_MEAN; self.width * self.height];
        for by in 0..self.rows {
            for bx in 0..self.cols {
                let s = &stats[by * self.cols + bx];
                if s.variance <= 1e-12 {
                    continue;
                }
                let scale = (TARGET_VARIANCE / s.variance).sqrt();
                let (x0, x1, y0, y1) = self.block_bounds(bx, by);
                for y in y0..y1 {
                    for x in x0..x1 {
                        out[y * self.width + x] =
                            TARGET_MEAN + (img.get(x, y) as f64 - s.mean) * scale;
                    }
                }
            }
        }
        out
    }
}

struct GaborKernel {
    radius: isize,
    weights: Vec<f64>,
}

impl GaborKernel {
    /// Builds a zero-mean even-symmetric Gabor kernel tuned to ridge
    /// direction `theta` and frequency `freq`: a cosine wave along the
    /// ridge normal under an anisotropic Gaussian envelope.
    fn even_symmetric(
        theta: f64,
        freq: f64,
        sigma_x: f64,
        sigma_y: f64,
        radius: isize,
    ) -> GaborKernel {
        let side = (2 * radius + 1) as usize;
        let mut weights = Vec::with_capacity(side * side);
        // Ridge direction u, normal n; the cosine varies along n.
        let (n_x, n_y) = (-theta.sin(), theta.cos());
        let (u_x, u_y) = (theta.cos(), theta.sin());
        let mut sum = 0.0;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let s = dx as f64 * n_x + dy as f64 * n_y;
                let t = dx as f64 * u_x + dy as f64 * u_y;
                let envelope = (-0.5 * ((s / sigma_x).powi(2) + (t / sigma_y).powi(2))).exp();
                let w = envelope * (2.0 * PI * freq * s).cos();
                weights.push(w);
                sum += w;
            }
        }
        // Remove the DC component so flat regions respond with zero.
        let mean = sum / weights.len() as f64;
        for w in &mut weights {
            *w -= mean;
        }
        GaborKernel { radius, weights }
    }

    fn apply(&self, data: &[f64], width: usize, height: usize, x: usize, y: usize) -> f64 {
        let mut acc = 0.0;
        let mut i = 0;
        for dy in -self.radius..=self.radius {
            let sy = (y as isize + dy).clamp(0, height as isize - 1) as usize;
            for dx in -self.radius..=self.radius {
                let sx = (x as isize + dx).clamp(0, width as isize - 1) as usize;
                acc += self.weights[i] * data[sy * width + sx];
                i += 1;
            }
        }
        acc
    }
}

/// Per-block ridge frequency from the x-signature: project an oriented
/// window onto the ridge normal, then read the period off the mean peak
/// spacing. Blocks whose estimate falls outside the configured band borrow
/// the average of their valid neighbors.
fn estimate_block_frequencies(
    normalized: &[f64],
    width: usize,
    grid: &BlockGrid,
    field: &OrientationField,
    foreground: &[bool],
    params: &GaborParams,
) -> Vec<f64> {
    let height = normalized.len() / width;
    let mut freqs = vec![f64::NAN; grid.cols * grid.rows];

    for by in 0..grid.rows {
        for bx in 0..grid.cols {
            let b = by * grid.cols + bx;
            if !foreground[b] {
                continue;
            }
            if let Some(f) = block_frequency(normalized, width, height, field, bx, by, params) {
                freqs[b] = f;
            }
        }
    }

    // Iteratively fill invalid foreground blocks from valid neighbors.
    loop {
        let mut updates = Vec::new();
        for by in 0..grid.rows {
            for bx in 0..grid.cols {
                let b = by * grid.cols + bx;
                if !foreground[b] || !freqs[b].is_nan() {
                    continue;
                }
                let mut sum = 0.0;
                let mut count = 0;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let nx = bx as i64 + dx;
                        let ny = by as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= grid.cols as i64 || ny >= grid.rows as i64 {
                            continue;
                        }
                        let nb = ny as usize * grid.cols + nx as usize;
                        if !freqs[nb].is_nan() {
                            sum += freqs[nb];
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    updates.push((b, sum / count as f64));
                }
            }
        }
        if updates.is_empty() {
            break;
        }
        for (b, f) in updates {
            freqs[b] = f;
        }
    }

    // Nothing measurable anywhere: fall back to the band midpoint.
    let fallback = 0.5 * (params.freq_min + params.freq_max);
    for f in &mut freqs {
        if f.is_nan() {
            *f = fallback;
        }
    }
    freqs
}

fn block_frequency(
    normalized: &[f64],
    width: usize,
    height: usize,
    field: &OrientationField,
    bx: usize,
    by: usize,
    params: &GaborParams,
) -> Option<f64> {
    let bs = params.block_size;
    let theta = field.angle(bx, by);
    let (cx, cy) = field.block_center(bx, by);
    let (n_x, n_y) = (-theta.sin(), theta.cos());
    let (u_x, u_y) = (theta.cos(), theta.sin());

    // Signature length twice the block size to see a few periods.
    let len = 2 * bs;
    let lanes = bs;
    let mut signature = Vec::with_capacity(len);
    for k in 0..len {
        let offset = k as f64 - len as f64 / 2.0;
        let mut sum = 0.0;
        for l in 0..lanes {
            let lane = l as f64 - lanes as f64 / 2.0;
            let x = cx + offset * n_x + lane * u_x;
            let y = cy + offset * n_y + lane * u_y;
            sum += sample_bilinear(normalized, width, height, x, y);
        }
        signature.push(sum / lanes as f64);
    }

    let mean = signature.iter().sum::<f64>() / len as f64;
    let mut peaks = Vec::new();
    for k in 1..len - 1 {
        if signature[k] > signature[k - 1]
            && signature[k] >= signature[k + 1]
            && signature[k] > mean
        {
            peaks.push(k);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    let spacing = (peaks[peaks.len() - 1] - peaks[0]) as f64 / (peaks.len() - 1) as f64;
    let freq = 1.0 / spacing;
    if freq >= params.freq_min && freq <= params.freq_max {
        Some(freq)
    } else {
        None
    }
}

fn sample_bilinear(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let x0i = x0 as isize;
    let y0i = y0 as isize;
    let p00 = data[clamp(y0i, height) * width + clamp(x0i, width)];
    let p10 = data[clamp(y0i, height) * width + clamp(x0i + 1, width)];
    let p01 = data[clamp(y0i + 1, height) * width + clamp(x0i, width)];
    let p11 = data[clamp(y0i + 1, height) * width + clamp(x0i + 1, width)];
    let top = p00 + fx * (p10 - p00);
    let bottom = p01 + fx * (p11 - p01);
    top + fy * (bottom - top)
}
