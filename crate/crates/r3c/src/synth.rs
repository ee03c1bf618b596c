//! Ground-truthed synthetic ridge patterns and controlled degradation.
//!
//! The generator is a phase field: intensity follows a cosine along the
//! local ridge normal, dark ridges on bright valleys like a raw scan, with
//! the exact ridge mask and orientation known analytically. Degradation
//! models acquisition defects in order: missing-contact gaps, optical blur,
//! sensor noise. Everything is deterministic under a fixed seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, Foreground, GrayImage};

/// Orientation layout of the generated pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationMode {
    /// Parallel ridges along a single direction (radians, measured from the
    /// positive x axis).
    Constant { angle: f64 },
    /// Concentric arcs around a center below the frame; `curvature` bounds
    /// the ridge curvature (1/pixels) inside the image.
    Arch { curvature: f64 },
}

/// Parameters of the clean pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Ridge frequency in cycles per pixel.
    pub ridge_frequency: f64,
    pub orientation: OrientationMode,
    /// Peak-to-peak intensity amplitude, in [0, 1]; 0 renders flat gray
    /// while the ground truth stays phase-defined.
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_contrast() -> f64 {
    0.8
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min_width: 64,
                min_height: 64,
            });
        }
        if !(self.ridge_frequency > 0.0 && self.ridge_frequency < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "ridge_frequency must be in (0, 0.5), got {}",
                self.ridge_frequency
            )));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::InvalidConfig(format!(
                "contrast must be in [0, 1], got {}",
                self.contrast
            )));
        }
        if let OrientationMode::Arch { curvature } = self.orientation {
            if curvature <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "arch curvature must be positive, got {}",
                    curvature
                )));
            }
        }
        Ok(())
    }
}

/// Degradation applied on top of a clean pattern, in acquisition order:
/// gaps, then blur, then noise.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeParams {
    pub gap_count: usize,
    pub gap_radius: f64,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// A generated pattern with its analytic ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub image: GrayImage,
    /// Pixels on a ridge (the dark half of each period).
    pub ridge_mask: BinaryMask,
    /// Per-pixel ridge direction in `[0, pi)`, row major.
    pub orientation: Vec<f64>,
}

/// Generates a clean ridge pattern with analytic ground truth.
///
/// Intensity is `0.5 - (contrast / 2) * cos(2 pi f phi(x, y))` where `phi`
/// is the phase coordinate along the local ridge normal, so ridges (cosine
/// at or above zero) are dark and valleys bright. The ridge mask and
/// orientation come from the same phase field, not from the rendered image.
pub fn generate_ridge_pattern(params: &SynthParams) -> Result<SynthOutput> {
    params.validate()?;
    let (w, h) = (params.width, params.height);
    let mut intensities = Vec::with_capacity(w * h);
    let mut ridge = Vec::with_capacity(w * h);
    let mut orientation = Vec::with_capacity(w * h);

    for y in 0..h {
        for x in 0..w {
            let (phase, angle) = phase_and_angle(params, x as f64, y as f64);
            let c = (2.0 * PI * params.ridge_frequency * phase).cos();
            intensities.push((0.5 - 0.5 * params.contrast * c) as f32);
            ridge.push(c >= 0.0);
            orientation.push(angle);
        }
    }

    Ok(SynthOutput {
        image: GrayImage::new(w, h, intensities)?,
        ridge_mask: BinaryMask::new(w, h, ridge, Foreground::Ridge)?,
        orientation,
    })
}

/// Phase coordinate and ridge direction at a point. For constant mode the
/// phase is the signed distance along the ridge normal; for arch mode it is
/// the distance from the arc center, so the phase gradient has unit length
/// and the ridge frequency holds everywhere.
fn phase_and_angle(params: &SynthParams, x: f64, y: f64) -> (f64, f64) {
    match params.orientation {
        OrientationMode::Constant { angle } => {
            let phase = -x * angle.sin() + y * angle.cos();
            (phase, angle.rem_euclid(PI))
        }
        OrientationMode::Arch { curvature } => {
            let cx = params.width as f64 / 2.0;
            let cy = params.height as f64 - 1.0 + 1.0 / curvature;
            let dx = x - cx;
            let dy = y - cy;
            let radius = dx.hypot(dy).max(1e-9);
            // Ridges are tangent to the arc; the normal is radial.
            let angle = (-dx).atan2(dy).rem_euclid(PI);
            (radius, angle)
        }
    }
}

/// Applies gaps, blur, and noise in order; a parameter of zero skips its
/// stage, so all-zero parameters return the input unchanged.
pub fn degrade(img: &GrayImage, params: &DegradeParams) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (w, h) = (img.width(), img.height());
    let mut data: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();

    if params.gap_count > 0 && params.gap_radius > 0.0 {
        // Push circular patches toward the background (bright valley)
        // intensity, estimated as the 90th percentile of the image.
        let background = percentile(img.data(), 0.9) as f64;
        for _ in 0..params.gap_count {
            let cx = rng.gen_range(0.0..w as f64);
            let cy = rng.gen_range(0.0..h as f64);
            let r2 = params.gap_radius * params.gap_radius;
            let x_lo = ((cx - params.gap_radius).floor().max(0.0)) as usize;
            let x_hi = ((cx + params.gap_radius).ceil() as usize).min(w - 1);
            let y_lo = ((cy - params.gap_radius).floor().max(0.0)) as usize;
            let y_hi = ((cy + params.gap_radius).ceil() as usize).min(h - 1);
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let dx = x as f64 - cx;
                    let dy = y as f64 - cy;
                    if dx * dx + dy * dy <= r2 {
                        data[y * w + x] = background;
                    }
                }
            }
        }
    }

    if params.blur_sigma > 0.0 {
        data = gaussian_blur(&data, w, h, params.blur_sigma);
    }

    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma).map_err(|e| {
            Error::InvalidConfig(format!("noise_sigma {}: {}", params.noise_sigma, e))
        })?;
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }

    GrayImage::new(w, h, data.iter().map(|&v| v as f32).collect())
}

fn percentile(values: &[f32], q: f64) -> f32 {
    let mut sorted: Vec<f32> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Separable Gaussian blur with replicated borders.
fn gaussian_blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for d in -radius..=radius {
        kernel.push((-0.5 * (d as f64 / sigma).powi(2)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sx = (x as isize + i as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += k * data[y * w + sx];
            }
            horizontal[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sy = (y as isize + i as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += k * horizontal[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// One manifest entry: a clean pattern plus its degradation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCase {
    pub id: String,
    pub synth: SynthParams,
    #[serde(default)]
    pub degrade: DegradeParams,
}

/// A suite of generated cases, as stored in a JSON manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    pub cases: Vec<SynthCase>,
}

impl SuiteManifest {
    pub fn from_json(json: &str) -> std::result::Result<SuiteManifest, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Materializes one case: generate the clean pattern, then degrade the
/// image (the ground truth stays clean).
pub fn materialize_case(case: &SynthCase) -> Result<SynthOutput> {
    let mut out = generate_ridge_pattern(&case.synth)?;
    out.image = degrade(&out.image, &case.degrade)?;
    Ok(out)
}
