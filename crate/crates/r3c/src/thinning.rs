//! Zhang-Suen parallel thinning (Zhang & Suen, CACM 1984).
//!
//! Two subiterations per pass, deletions flagged first and applied
//! simultaneously, repeated until a full pass deletes nothing. Pixels
//! outside the raster read as background, so skeletons never hug the frame.

use crate::image::BinaryMask;

/// Thins the mask foreground to a one-pixel-wide skeleton.
///
/// A foreground pixel p with 8-neighborhood p2..p9 (clockwise from north)
/// is deleted in subiteration 1 when `2 <= B(p) <= 6`, `A(p) == 1`,
/// `p2*p4*p6 == 0` and `p4*p6*p8 == 0`, where B counts foreground neighbors
/// and A counts 0->1 transitions around the ring. Subiteration 2 swaps the
/// last two conditions for `p2*p4*p8 == 0` and `p2*p6*p8 == 0`. The
/// foreground tag is preserved.
pub fn zhang_suen_thin(mask: &BinaryMask) -> BinaryMask {
    let width = mask.width();
    let height = mask.height();
    let mut data: Vec<bool> = mask.data().to_vec();
    let mut flagged: Vec<usize> = Vec::new();

    loop {
        let mut deleted = false;
        for sub in 0..2 {
            flagged.clear();
            for y in 0..height {
                for x in 0..width {
                    let idx = y * width + x;
                    if data[idx] && deletable(&data, width, height, x, y, sub) {
                        flagged.push(idx);
                    }
                }
            }
            for &idx in &flagged {
                data[idx] = false;
            }
            deleted |= !flagged.is_empty();
        }
        if !deleted {
            break;
        }
    }

    BinaryMask::new(width, height, data, mask.foreground()).expect("dimensions preserved")
}

#[inline]
fn deletable(data: &[bool], width: usize, height: usize, x: usize, y: usize, sub: usize) -> bool {
    let at = |dx: isize, dy: isize| -> bool {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
            return false;
        }
        data[ny as usize * width + nx as usize]
    };
    // p2..p9 clockwise from north.
    let p = [
        at(0, -1),
        at(1, -1),
        at(1, 0),
        at(1, 1),
        at(0, 1),
        at(-1, 1),
        at(-1, 0),
        at(-1, -1),
    ];

    let b = p.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
    if sub == 0 {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}
