//! Loop dynamics against an independent simulation: with the raw overlay
//! and a dilating stub, each round re-detects the previous prediction plus
//! the seed and dilates it once more, so the prediction is exactly the
//! iterated dilation of the seed. The difference rates decline as the frame
//! saturates and the run converges on two consecutive quiet rounds.

use r3c::classifiers::StubClassifier;
use r3c::engine::{run_r3c, BlendOverlay, R3CConfig, Termination};
use r3c::image::{BinaryMask, Foreground, GrayImage};

const SIDE: usize = 24;
const SEED_LO: usize = 11;
const SEED_HI: usize = 14; // exclusive

fn seed_image() -> GrayImage {
    GrayImage::from_fn(SIDE, SIDE, |x, y| {
        if (SEED_LO..SEED_HI).contains(&x) && (SEED_LO..SEED_HI).contains(&y) {
            0.85
        } else {
            0.25
        }
    })
    .unwrap()
}

/// Independent dilation-growth simulation: plain set dilation, no engine
/// code, no thinning.
fn simulated_counts_and_rates(
    radius: usize,
    max_calls: usize,
    epsilon: f64,
) -> (Vec<u64>, Vec<f64>, usize) {
    let mut cells = vec![false; SIDE * SIDE];
    for y in SEED_LO..SEED_HI {
        for x in SEED_LO..SEED_HI {
            cells[y * SIDE + x] = true;
        }
    }
    let dilate = |cells: &[bool]| -> Vec<bool> {
        let mut out = vec![false; SIDE * SIDE];
        let r = radius as isize;
        for y in 0..SIDE as isize {
            for x in 0..SIDE as isize {
                'scan: for dy in -r..=r {
                    for dx in -r..=r {
                        let nx = x + dx;
                        let ny = y + dy;
                        if nx >= 0
                            && ny >= 0
                            && nx < SIDE as isize
                            && ny < SIDE as isize
                            && cells[ny as usize * SIDE + nx as usize]
                        {
                            out[y as usize * SIDE + x as usize] = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
        out
    };

    let mut current = dilate(&cells);
    let mut counts = vec![current.iter().filter(|&&v| v).count() as u64];
    let mut rates = Vec::new();
    let mut calls = 1;
    let mut quiet = 0;
    while calls < max_calls {
        let next = dilate(&current);
        let count = next.iter().filter(|&&v| v).count() as u64;
        let prev = *counts.last().unwrap();
        let d = if count == 0 {
            0.0
        } else {
            (count as f64 - prev as f64) / count as f64
        };
        counts.push(count);
        rates.push(d);
        calls += 1;
        quiet = if d <= epsilon { quiet + 1 } else { 0 };
        current = next;
        if quiet >= 2 {
            break;
        }
    }
    (counts, rates, calls)
}

#[test]
fn dilating_stub_follows_pinned_dilation_growth() {
    let config = R3CConfig {
        alpha: 0.5,
        epsilon: 0.01,
        overlay: BlendOverlay::Raw,
        ..R3CConfig::default()
    };
    let stub = StubClassifier::dilating(0.5, 1);
    let (mask, trace) = run_r3c(&seed_image(), &stub, &config).unwrap();

    let (counts, rates, calls) =
        simulated_counts_and_rates(1, config.max_iterations, config.epsilon);

    assert_eq!(trace.terminated_by, Termination::Converged);
    assert_eq!(trace.classifier_calls, calls);
    let trace_counts: Vec<u64> = trace.records.iter().map(|r| r.foreground_count).collect();
    assert_eq!(trace_counts, counts);
    let trace_rates: Vec<f64> = trace
        .records
        .iter()
        .skip(1)
        .map(|r| r.diff_rate.unwrap())
        .collect();
    assert_eq!(trace_rates.len(), rates.len());
    for (got, want) in trace_rates.iter().zip(&rates) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    // Frozen values from the simulation: the seed dilates from 25 pixels
    // through (2k + 5)^2 until the frame clips it at 576; rates fall
    // strictly until then.
    assert_eq!(counts.first(), Some(&25));
    assert_eq!(counts.last(), Some(&576));
    assert_eq!(calls, 13);
    assert!((rates[0] - 24.0 / 49.0).abs() < 1e-12);
    assert!((rates[1] - 32.0 / 81.0).abs() < 1e-12);
    assert!((rates[2] - 40.0 / 121.0).abs() < 1e-12);
    let growth = &rates[..rates.len() - 2];
    for pair in growth.windows(2) {
        assert!(pair[0] > pair[1], "rates must decline: {:?}", pair);
    }
    for d in growth {
        assert!(*d > 0.0);
    }
    assert_eq!(&rates[rates.len() - 2..], &[0.0, 0.0]);

    // The final mask is the saturated frame, in the stub's native polarity.
    assert_eq!(mask.foreground(), Foreground::Valley);
    assert_eq!(mask.count_foreground(), (SIDE * SIDE) as u64);
}

#[test]
fn trace_rates_recompute_from_counts() {
    let config = R3CConfig {
        alpha: 0.5,
        epsilon: 0.01,
        overlay: BlendOverlay::Raw,
        ..R3CConfig::default()
    };
    let stub = StubClassifier::dilating(0.5, 2);
    let (_, trace) = run_r3c(&seed_image(), &stub, &config).unwrap();

    for pair in trace.records.windows(2) {
        let prev = pair[0].foreground_count as f64;
        let cur = pair[1].foreground_count as f64;
        let expected = if cur == 0.0 { 0.0 } else { (cur - prev) / cur };
        let got = pair[1].diff_rate.unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert_eq!(pair[1].stop_vote, got <= config.epsilon);
    }
    assert!(trace.records[0].diff_rate.is_none());
    assert!(!trace.records[0].stop_vote);

    if trace.terminated_by == Termination::Converged {
        let tail = &trace.records[trace.records.len() - config.consecutive_stops_required..];
        assert!(tail.iter().all(|r| r.stop_vote));
    }
}

#[test]
fn minimum_calls_holds_across_stub_family() {
    let input = seed_image();
    let fixed_mask = BinaryMask::from_fn(SIDE, SIDE, Foreground::Ridge, |x, y| x + y < 20).unwrap();
    let stubs: Vec<StubClassifier> = vec![
        StubClassifier::fixed(fixed_mask),
        StubClassifier::threshold(0.5),
        StubClassifier::dilating(0.5, 1),
    ];
    for stub in &stubs {
        for alpha in [0.0, 0.25, 1.0] {
            for overlay in [BlendOverlay::Skeleton, BlendOverlay::Raw] {
                let config = R3CConfig {
                    alpha,
                    overlay,
                    ..R3CConfig::default()
                };
                let (_, trace) = run_r3c(&input, stub, &config).unwrap();
                assert!(
                    trace.classifier_calls >= 3,
                    "calls = {} with alpha {alpha}",
                    trace.classifier_calls
                );
                assert_eq!(trace.records.len(), trace.classifier_calls);
            }
        }
    }
}
