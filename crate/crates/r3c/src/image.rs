//! Raster types shared by every stage of the pipeline.
//!
//! Intensities live in `[0, 1]` regardless of the source bit depth, so the
//! composite blend `A + alpha * C` stays well defined under repeated
//! stacking. Binary masks carry a [`Foreground`] tag naming what the `true`
//! pixels mean (ridge or valley); polarity flips produce a new mask with the
//! tag toggled rather than mutating in place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic of the `true` pixels in a [`BinaryMask`].
///
/// Raw fingerprint scans show ridges dark (skin in contact with the sensor)
/// and valleys bright. Enhancement output is usually the opposite: white
/// ridges on black. Tracking which one a mask encodes keeps inversions
/// explicit and testable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Foreground {
    Ridge,
    Valley,
}

impl Foreground {
    pub fn toggled(self) -> Foreground {
        match self {
            Foreground::Ridge => Foreground::Valley,
            Foreground::Valley => Foreground::Ridge,
        }
    }
}

/// Continuous-intensity raster, row major, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    /// Builds an image from row-major intensities, clamping each value to
    /// `[0, 1]`. Fails if the dimensions are zero or do not match the data
    /// length.
    pub fn new(width: usize, height: usize, mut data: Vec<f32>) -> Result<GrayImage> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels ({}x{})", width * height, width, height),
                actual: format!("{} pixels", data.len()),
            });
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Constant-intensity image.
    pub fn filled(width: usize, height: usize, value: f32) -> Result<GrayImage> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` per pixel; values are clamped.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<GrayImage> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Samples with indices clamped to the image rectangle, the border
    /// convention used by the filtering stages.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn same_dimensions(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Two-class raster with a declared foreground semantic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
    foreground: Foreground,
}

impl BinaryMask {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<bool>,
        foreground: Foreground,
    ) -> Result<BinaryMask> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels ({}x{})", width * height, width, height),
                actual: format!("{} pixels", data.len()),
            });
        }
        Ok(BinaryMask {
            width,
            height,
            data,
            foreground,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        value: bool,
        foreground: Foreground,
    ) -> Result<BinaryMask> {
        BinaryMask::new(width, height, vec![value; width * height], foreground)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        foreground: Foreground,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<BinaryMask> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        BinaryMask::new(width, height, data, foreground)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn foreground(&self) -> Foreground {
        self.foreground
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_padded(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            return false;
        }
        self.data[y as usize * self.width + x as usize]
    }

    /// Number of foreground (`true`) pixels.
    pub fn count_foreground(&self) -> u64 {
        self.data.iter().filter(|&&v| v).count() as u64
    }

    /// Toggles every pixel and the foreground tag.
    pub fn inverted(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
            foreground: self.foreground.toggled(),
        }
    }

    /// The same pixel set reinterpreted so `true` means ridge: a no-op for
    /// ridge-tagged masks, a full inversion for valley-tagged ones.
    pub fn to_ridge_polarity(&self) -> BinaryMask {
        match self.foreground {
            Foreground::Ridge => self.clone(),
            Foreground::Valley => self.inverted(),
        }
    }

    pub fn same_dimensions(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Toggles every pixel of `mask` and flips its foreground tag.
pub fn invert_mask(mask: &BinaryMask) -> BinaryMask {
    mask.inverted()
}

/// Bilinear resampling with the half-pixel-center convention: output pixel
/// `(i, j)` reads the source at `((j + 0.5) * w_in / w_out - 0.5,
/// (i + 0.5) * h_in / h_out - 0.5)` with edge clamping. Resizing to the
/// source dimensions reproduces it pixel for pixel.
pub fn resize_bilinear(img: &GrayImage, new_width: usize, new_height: usize) -> Result<GrayImage> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::EmptyImage);
    }
    if new_width == img.width() && new_height == img.height() {
        return Ok(img.clone());
    }

    let sx = img.width() as f64 / new_width as f64;
    let sy = img.height() as f64 / new_height as f64;
    let mut data = Vec::with_capacity(new_width * new_height);
    for oy in 0..new_height {
        let y = (oy as f64 + 0.5) * sy - 0.5;
        let y0 = y.floor();
        let fy = y - y0;
        let y0 = y0 as isize;
        for ox in 0..new_width {
            let x = (ox as f64 + 0.5) * sx - 0.5;
            let x0 = x.floor();
            let fx = x - x0;
            let x0 = x0 as isize;

            let p00 = img.get_clamped(x0, y0) as f64;
            let p10 = img.get_clamped(x0 + 1, y0) as f64;
            let p01 = img.get_clamped(x0, y0 + 1) as f64;
            let p11 = img.get_clamped(x0 + 1, y0 + 1) as f64;

            let top = p00 + fx * (p10 - p00);
            let bottom = p01 + fx * (p11 - p01);
            data.push((top + fy * (bottom - top)) as f32);
        }
    }
    GrayImage::new(new_width, new_height, data)
}
