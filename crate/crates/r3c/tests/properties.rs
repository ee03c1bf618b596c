//! Property tests over randomized inputs: thinning invariants on blob
//! masks, metric identities, difference-rate bounds, and I/O round trips.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use r3c::eval::{count_components, overlap_metrics, Connectivity};
use r3c::image::{invert_mask, resize_bilinear, BinaryMask, Foreground, GrayImage};
use r3c::thinning::zhang_suen_thin;

/// Random blobs built from 1..=3 elongated capsules (line segments dilated
/// by radius 2..=4), kept fully inside the frame with length at least
/// `2r + 3`. Isolated 2x2 squares and round even-diameter cores are
/// excluded on purpose: the parallel thinning rules erase those entirely
/// (the classic counterexample), so component preservation is stated over
/// elongated, ridge-fragment-like foregrounds.
pub fn blob_mask(seed: u64) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = rng.gen_range(28..48usize);
    let height = rng.gen_range(28..48usize);
    let capsules = rng.gen_range(1..=3usize);
    let mut data = vec![false; width * height];
    for _ in 0..capsules {
        let r = rng.gen_range(2..=4) as f64;
        let margin = r + 1.0;
        let min_len = 2.0 * r + 3.0;
        let len: f64 = rng.gen_range(min_len..min_len + 14.0);
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let x0: f64 = rng.gen_range(margin..width as f64 - margin);
        let y0: f64 = rng.gen_range(margin..height as f64 - margin);
        let clamp = |v: f64, hi: usize| v.clamp(margin, hi as f64 - 1.0 - margin);
        let mut x1 = clamp(x0 + len * angle.cos(), width);
        let mut y1 = clamp(y0 + len * angle.sin(), height);
        if (x1 - x0).hypot(y1 - y0) < min_len {
            x1 = clamp(x0 - len * angle.cos(), width);
            y1 = clamp(y0 - len * angle.sin(), height);
        }
        for y in 0..height {
            for x in 0..width {
                let dx = x1 - x0;
                let dy = y1 - y0;
                let l2 = dx * dx + dy * dy;
                let t = if l2 == 0.0 {
                    0.0
                } else {
                    (((x as f64 - x0) * dx + (y as f64 - y0) * dy) / l2).clamp(0.0, 1.0)
                };
                let px = x0 + t * dx;
                let py = y0 + t * dy;
                if (x as f64 - px).powi(2) + (y as f64 - py).powi(2) <= r * r {
                    data[y * width + x] = true;
                }
            }
        }
    }
    BinaryMask::new(width, height, data, Foreground::Ridge).unwrap()
}

/// Independent transcription of the two-subiteration deletion rules, used
/// as the oracle for the library implementation. Kept deliberately naive.
fn reference_thin(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut data: Vec<u8> = mask.data().iter().map(|&v| v as u8).collect();
    let get = |data: &[u8], x: isize, y: isize| -> u8 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            data[y as usize * w + x as usize]
        }
    };
    loop {
        let mut any = false;
        for pass in [1u8, 2] {
            let mut kill = Vec::new();
            for y in 0..h as isize {
                for x in 0..w as isize {
                    if get(&data, x, y) == 0 {
                        continue;
                    }
                    let p = [
                        get(&data, x, y - 1),
                        get(&data, x + 1, y - 1),
                        get(&data, x + 1, y),
                        get(&data, x + 1, y + 1),
                        get(&data, x, y + 1),
                        get(&data, x - 1, y + 1),
                        get(&data, x - 1, y),
                        get(&data, x - 1, y - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let mut a = 0;
                    for i in 0..8 {
                        if p[i] == 0 && p[(i + 1) % 8] == 1 {
                            a += 1;
                        }
                    }
                    if a != 1 {
                        continue;
                    }
                    let ok = if pass == 1 {
                        p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0
                    } else {
                        p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0
                    };
                    if ok {
                        kill.push((x as usize, y as usize));
                    }
                }
            }
            any |= !kill.is_empty();
            for (x, y) in kill {
                data[y * w + x] = 0;
            }
        }
        if !any {
            break;
        }
    }
    BinaryMask::new(
        w,
        h,
        data.iter().map(|&v| v == 1).collect(),
        mask.foreground(),
    )
    .unwrap()
}

/// Independent union-find component counter used as the oracle for the
/// flood-labeling implementation.
fn union_find_components(mask: &BinaryMask, eight: bool) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let union = |parent: &mut [usize], a: usize, b: usize| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent[ra] = rb;
        }
    };
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let idx = y * w + x;
            let mut neighbors = vec![(1isize, 0isize), (0, 1)];
            if eight {
                neighbors.push((1, 1));
                neighbors.push((-1, 1));
            }
            for (dx, dy) in neighbors {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                if mask.get(nx as usize, ny as usize) {
                    union(&mut parent, idx, ny as usize * w + nx as usize);
                }
            }
        }
    }
    let mut roots = std::collections::HashSet::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                let r = find(&mut parent, y * w + x);
                roots.insert(r);
            }
        }
    }
    roots.len()
}

proptest! {
    #[test]
    fn thinning_invariants_on_blobs(seed in 0u64..500) {
        let mask = blob_mask(seed);
        let thinned = zhang_suen_thin(&mask);

        // Subset: the skeleton never adds pixels.
        for (skel, src) in thinned.data().iter().zip(mask.data()) {
            prop_assert!(!skel || *src);
        }

        // Idempotence.
        prop_assert_eq!(zhang_suen_thin(&thinned), thinned.clone());

        // 8-connected component count is preserved.
        prop_assert_eq!(
            count_components(&thinned, Connectivity::Eight),
            count_components(&mask, Connectivity::Eight)
        );
    }

    #[test]
    fn thinning_matches_reference_on_arbitrary_masks(seed in 0u64..300) {
        // Not just blobs: any pixel soup must thin identically to the
        // independent transcription of the published rules.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.gen_range(4..32usize);
        let h = rng.gen_range(4..32usize);
        let density: f64 = rng.gen_range(0.1..0.9);
        let mask = BinaryMask::from_fn(w, h, Foreground::Ridge, |_, _| {
            rng.gen_bool(density)
        })
        .unwrap();
        prop_assert_eq!(zhang_suen_thin(&mask), reference_thin(&mask));
    }

    #[test]
    fn component_counts_match_union_find(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density: f64 = rng.gen_range(0.2..0.8);
        let mask = BinaryMask::from_fn(32, 32, Foreground::Ridge, |_, _| {
            rng.gen_bool(density)
        })
        .unwrap();
        prop_assert_eq!(
            count_components(&mask, Connectivity::Eight),
            union_find_components(&mask, true)
        );
        prop_assert_eq!(
            count_components(&mask, Connectivity::Four),
            union_find_components(&mask, false)
        );
    }

    #[test]
    fn dice_dominates_iou(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let da: f64 = rng.gen_range(0.1..0.9);
        let db: f64 = rng.gen_range(0.1..0.9);
        let a = BinaryMask::from_fn(24, 24, Foreground::Ridge, |_, _| rng.gen_bool(da)).unwrap();
        let b = BinaryMask::from_fn(24, 24, Foreground::Ridge, |_, _| rng.gen_bool(db)).unwrap();
        let (iou, dice) = overlap_metrics(&a, &b).unwrap();
        prop_assert!(dice >= iou - 1e-15);
        prop_assert!((0.0..=1.0).contains(&iou));
        prop_assert!((0.0..=1.0).contains(&dice));
    }

    #[test]
    fn invert_is_involution(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.gen_range(1..20usize);
        let h = rng.gen_range(1..20usize);
        let mask = BinaryMask::from_fn(w, h, Foreground::Ridge, |_, _| rng.gen_bool(0.5)).unwrap();
        let inv = invert_mask(&mask);
        prop_assert_eq!(
            inv.count_foreground() + mask.count_foreground(),
            (w * h) as u64
        );
        prop_assert_eq!(invert_mask(&inv), mask);
    }

    #[test]
    fn resize_respects_input_bounds(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.gen_range(2..30usize);
        let h = rng.gen_range(2..30usize);
        let img = GrayImage::from_fn(w, h, |_, _| rng.gen_range(0.0f32..1.0)).unwrap();
        let lo = img.data().iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = img.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let nw = rng.gen_range(1..40usize);
        let nh = rng.gen_range(1..40usize);
        let out = resize_bilinear(&img, nw, nh).unwrap();
        for &v in out.data() {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }

    #[test]
    fn pgm_round_trip_preserves_bytes(seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.gen_range(1..24usize);
        let h = rng.gen_range(1..24usize);
        let pixels: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
        let mut bytes = format!("P5\n{} {}\n255\n", w, h).into_bytes();
        bytes.extend(&pixels);

        let dir = std::env::temp_dir().join(format!("r3c-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let src = dir.join(format!("src-{}.pgm", seed));
        let dst = dir.join(format!("dst-{}.pgm", seed));
        std::fs::write(&src, &bytes).unwrap();

        let img = r3c::io::load_image(&src, r3c::io::ImageFormat::Pgm).unwrap();
        r3c::io::save_image(&img, &dst, r3c::io::ImageFormat::Pgm).unwrap();
        prop_assert_eq!(std::fs::read(&dst).unwrap(), bytes);
    }

    #[test]
    fn diff_rate_is_bounded_above_by_one(ca in 0u64..400, cb in 0u64..400) {
        let mk = |count: u64| {
            BinaryMask::from_fn(20, 20, Foreground::Ridge, |x, y| {
                ((y * 20 + x) as u64) < count
            })
            .unwrap()
        };
        let d = r3c::engine::diff_rate(&mk(ca), &mk(cb)).unwrap();
        prop_assert!(d <= 1.0);
        if ca == 0 {
            prop_assert_eq!(d, 0.0);
        }
    }
}
