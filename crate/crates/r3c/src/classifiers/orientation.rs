//! Blockwise ridge orientation estimation from image gradients.
//!
//! Each block gets the dominant orientation of its intensity gradients,
//! computed from the classic second-moment averages: with Sobel gradients
//! `(gx, gy)` summed over the block,
//!
//! ```text
//! theta = 0.5 * atan2(sum 2*gx*gy, sum gx^2 - gy^2) + pi/2
//! ```
//!
//! is the ridge flow direction (perpendicular to the mean gradient), and
//!
//! ```text
//! coherence = |(sum 2*gx*gy, sum gx^2 - gy^2)| / sum (gx^2 + gy^2)
//! ```
//!
//! measures how strongly the gradients agree, 1 for perfectly parallel
//! ridges, 0 for isotropic texture or flat blocks. Because orientation is
//! periodic in pi, smoothing averages `(cos 2theta, sin 2theta)` vectors
//! weighted by coherence rather than raw angles.

use std::f64::consts::PI;

use crate::classifiers::gabor::GaborParams;
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Per-block ridge orientation and coherence over a square block grid.
#[derive(Debug, Clone)]
pub struct OrientationField {
    block_size: usize,
    grid_width: usize,
    grid_height: usize,
    angles: Vec<f64>,
    coherences: Vec<f64>,
}

impl OrientationField {
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Blocks per row.
    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    /// Blocks per column.
    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    /// Ridge direction of a block, in `[0, pi)`.
    pub fn angle(&self, bx: usize, by: usize) -> f64 {
        self.angles[by * self.grid_width + bx]
    }

    /// Gradient agreement of a block, in `[0, 1]`.
    pub fn coherence(&self, bx: usize, by: usize) -> f64 {
        self.coherences[by * self.grid_width + bx]
    }

    /// Pixel coordinates of a block center.
    pub fn block_center(&self, bx: usize, by: usize) -> (f64, f64) {
        (
            bx as f64 * self.block_size as f64 + self.block_size as f64 / 2.0,
            by as f64 * self.block_size as f64 + self.block_size as f64 / 2.0,
        )
    }

    /// True for blocks not on the grid boundary; border blocks see the
    /// image edge through the gradient window and are usually excluded
    /// from accuracy statistics.
    pub fn is_interior(&self, bx: usize, by: usize) -> bool {
        bx > 0 && by > 0 && bx + 1 < self.grid_width && by + 1 < self.grid_height
    }
}

/// Smallest angular distance between two orientations, respecting the
/// pi-periodicity of undirected lines. Result in `[0, pi/2]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(PI);
    if d > PI / 2.0 {
        d = PI - d;
    }
    d
}

/// Estimates the blockwise orientation field of `img` using the block size
/// and smoothing sigma from `params`.
pub fn estimate_orientation_field(
    img: &GrayImage,
    params: &GaborParams,
) -> Result<OrientationField> {
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
    let grid_width = img.width() / bs;
    let grid_height = img.height() / bs;

    let (gx, gy) = sobel_gradients(img);
    let mut angles = vec![0.0; grid_width * grid_height];
    let mut coherences = vec![0.0; grid_width * grid_height];

    for by in 0..grid_height {
        for bx in 0..grid_width {
            // The last block row/column absorbs the trailing margin so every
            // pixel belongs to exactly one block.
            let x_end = if bx + 1 == grid_width {
                img.width()
            } else {
                (bx + 1) * bs
            };
            let y_end = if by + 1 == grid_height {
                img.height()
            } else {
                (by + 1) * bs
            };
            let mut sum_cross = 0.0;
            let mut sum_diff = 0.0;
            let mut sum_mag = 0.0;
            for y in by * bs..y_end {
                for x in bx * bs..x_end {
                    let gxv = gx[y * img.width() + x];
                    let gyv = gy[y * img.width() + x];
                    sum_cross += 2.0 * gxv * gyv;
                    sum_diff += gxv * gxv - gyv * gyv;
                    sum_mag += gxv * gxv + gyv * gyv;
                }
            }
            let idx = by * grid_width + bx;
            if sum_mag > 1e-12 {
                let theta = 0.5 * sum_cross.atan2(sum_diff) + PI / 2.0;
                angles[idx] = theta.rem_euclid(PI);
                coherences[idx] = (sum_cross.hypot(sum_diff) / sum_mag).min(1.0);
            }
        }
    }

    let mut field = OrientationField {
        block_size: bs,
        grid_width,
        grid_height,
        angles,
        coherences,
    };
    if params.orientation_smoothing_sigma > 0.0 {
        smooth_doubled_angles(&mut field, params.orientation_smoothing_sigma);
    }
    Ok(field)
}

fn sobel_gradients(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let s = |dx: isize, dy: isize| img.get_clamped(x as isize + dx, y as isize + dy) as f64;
            gx[y * w + x] =
                (s(1, -1) + 2.0 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2.0 * s(-1, 0) + s(-1, 1));
            gy[y * w + x] =
                (s(-1, 1) + 2.0 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2.0 * s(0, -1) + s(1, -1));
        }
    }
    (gx, gy)
}

/// Gaussian-smooths the field as coherence-weighted `(cos 2t, sin 2t)`
/// vectors; sigma is in block units. Blocks outside the grid replicate the
/// nearest block.
fn smooth_doubled_angles(field: &mut OrientationField, sigma: f64) {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for d in -radius..=radius {
        kernel.push((-0.5 * (d as f64 / sigma).powi(2)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let gw = field.grid_width as isize;
    let gh = field.grid_height as isize;
    let vec_at = |angles: &[f64], coh: &[f64], bx: isize, by: isize| -> (f64, f64) {
        let bx = bx.clamp(0, gw - 1) as usize;
        let by = by.clamp(0, gh - 1) as usize;
        let idx = by * field.grid_width + bx;
        let c = coh[idx];
        (c * (2.0 * angles[idx]).cos(), c * (2.0 * angles[idx]).sin())
    };

    // Separable pass: horizontal, then vertical.
    let mut hx = vec![0.0; field.angles.len()];
    let mut hy = vec![0.0; field.angles.len()];
    for by in 0..gh {
        for bx in 0..gw {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let (vx, vy) = vec_at(
                    &field.angles,
                    &field.coherences,
                    bx + i as isize - radius,
                    by,
                );
                sx += k * vx;
                sy += k * vy;
            }
            hx[(by * gw + bx) as usize] = sx;
            hy[(by * gw + bx) as usize] = sy;
        }
    }
    let mut angles = vec![0.0; field.angles.len()];
    let mut coherences = vec![0.0; field.angles.len()];
    for by in 0..gh {
        for bx in 0..gw {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let ny = (by + i as isize - radius).clamp(0, gh - 1);
                let idx = (ny * gw + bx) as usize;
                sx += k * hx[idx];
                sy += k * hy[idx];
            }
            let idx = (by * gw + bx) as usize;
            if sx.hypot(sy) > 1e-12 {
                angles[idx] = (0.5 * sy.atan2(sx)).rem_euclid(PI);
                coherences[idx] = sx.hypot(sy).min(1.0);
            }
        }
    }
    field.angles = angles;
    field.coherences = coherences;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_coherence() {
        let img = GrayImage::filled(64, 64, 0.6).unwrap();
        let field = estimate_orientation_field(&img, &GaborParams::default()).unwrap();
        for by in 0..field.grid_height() {
            for bx in 0..field.grid_width() {
                assert_eq!(field.coherence(bx, by), 0.0);
            }
        }
    }

    #[test]
    fn too_small_image_is_rejected() {
        let img = GrayImage::filled(8, 8, 0.5).unwrap();
        assert!(matches!(
            estimate_orientation_field(&img, &GaborParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn angle_distance_wraps_at_pi() {
        assert!(angle_distance(0.05, PI - 0.05) < 0.11);
        assert!((angle_distance(0.0, PI / 2.0) - PI / 2.0).abs() < 1e-12);
        assert_eq!(angle_distance(1.0, 1.0), 0.0);
    }
}
