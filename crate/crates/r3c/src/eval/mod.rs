//! Segmentation quality metrics and connectivity measures.
//!
//! All mask comparisons happen in ridge polarity: valley-tagged masks are
//! inverted before counting, so a prediction and a ground truth can be
//! compared regardless of which class their `true` pixels encode.

pub mod sweep;

pub use sweep::{alpha_sweep, MetricsRow, SweepOptions, SweepReport};

use crate::error::{Error, Result};
use crate::image::BinaryMask;
use crate::thinning::zhang_suen_thin;

/// Pixel adjacency rule for component counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Intersection-over-union and Dice coefficient of two masks, compared in
/// ridge polarity. Both are 1 when both masks are empty, and Dice >= IoU
/// always.
pub fn overlap_metrics(pred: &BinaryMask, gt: &BinaryMask) -> Result<(f64, f64)> {
    if !pred.same_dimensions(gt) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", gt.width(), gt.height()),
            actual: format!("{}x{}", pred.width(), pred.height()),
        });
    }
    let p = pred.to_ridge_polarity();
    let g = gt.to_ridge_polarity();
    let mut intersection = 0u64;
    let mut p_count = 0u64;
    let mut g_count = 0u64;
    for (a, b) in p.data().iter().zip(g.data()) {
        p_count += *a as u64;
        g_count += *b as u64;
        intersection += (*a && *b) as u64;
    }
    let union = p_count + g_count - intersection;
    let iou = if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    };
    let dice = if p_count + g_count == 0 {
        1.0
    } else {
        2.0 * intersection as f64 / (p_count + g_count) as f64
    };
    Ok((iou, dice))
}

/// Number of connected foreground components under the given adjacency,
/// by flood labeling. Foreground means the mask's own `true` pixels.
pub fn count_components(mask: &BinaryMask, connectivity: Connectivity) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut visited = vec![false; w * h];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut components = 0;

    let neighbors: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    };

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || visited[y * w + x] {
                continue;
            }
            components += 1;
            visited[y * w + x] = true;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for &(dx, dy) in neighbors {
                    let nx = cx as isize + dx;
                    let ny = cy as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if mask.get(nx, ny) && !visited[ny * w + nx] {
                        visited[ny * w + nx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    components
}

/// Fraction of ground-truth skeleton pixels that have a predicted ridge
/// pixel within the given Chebyshev radius. The ground truth is thinned
/// first so the measure rewards covering ridge lines, not ridge width.
/// Returns 1 when the skeleton is empty.
pub fn skeleton_recall(pred: &BinaryMask, gt: &BinaryMask, radius: usize) -> Result<f64> {
    if !pred.same_dimensions(gt) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", gt.width(), gt.height()),
            actual: format!("{}x{}", pred.width(), pred.height()),
        });
    }
    let skeleton = zhang_suen_thin(&gt.to_ridge_polarity());
    let pred_ridge = pred.to_ridge_polarity();
    let r = radius as isize;

    let mut total = 0u64;
    let mut hit = 0u64;
    for y in 0..skeleton.height() {
        for x in 0..skeleton.width() {
            if !skeleton.get(x, y) {
                continue;
            }
            total += 1;
            'search: for dy in -r..=r {
                for dx in -r..=r {
                    if pred_ridge.get_padded(x as isize + dx, y as isize + dy) {
                        hit += 1;
                        break 'search;
                    }
                }
            }
        }
    }
    if total == 0 {
        Ok(1.0)
    } else {
        Ok(hit as f64 / total as f64)
    }
}
