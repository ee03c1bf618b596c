//! The recursive refinement loop.
//!
//! Starting from a classifier's prediction `C_0 = f(M)`, each round blends
//! the (polarity-corrected, skeletonized) prediction into a composite
//! `A_i = A_{i-1} + alpha_i * overlay(C_i)` and re-classifies it. The loop
//! watches the difference rate
//!
//! ```text
//! d_i = (sum C_i - sum C_{i-1}) / sum C_i
//! ```
//!
//! the fraction of segmented pixels added at iteration `i`, and stops once
//! `d <= epsilon` has held for a configured number of consecutive
//! iterations. The first classification is unconditional, so any run makes
//! at least `1 + consecutive_stops_required` classifier calls.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, Foreground, GrayImage};
use crate::thinning::zhang_suen_thin;

/// Overlay blended into the composite each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendOverlay {
    /// The polarity-corrected prediction thinned to its skeleton (default).
    /// Keeps repeated stacking from widening structures.
    Skeleton,
    /// The polarity-corrected prediction as-is. Lets the composite carry the
    /// full prediction footprint, so region growth compounds round over
    /// round.
    Raw,
}

/// Parameters of the refinement loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct R3CConfig {
    /// Blend weight of the overlay, in `[0, 1]`.
    pub alpha: f64,
    /// Stopping threshold on the difference rate.
    pub epsilon: f64,
    /// Optional per-iteration decay of alpha: round `i` blends with
    /// `alpha * gamma^i`. 1.0 disables decay.
    pub gamma: f64,
    /// How many consecutive iterations must satisfy `d <= epsilon`.
    pub consecutive_stops_required: usize,
    /// Safety cap on classifier calls.
    pub max_iterations: usize,
    pub overlay: BlendOverlay,
}

impl Default for R3CConfig {
    fn default() -> R3CConfig {
        R3CConfig {
            alpha: 0.25,
            epsilon: 0.01,
            gamma: 1.0,
            consecutive_stops_required: 2,
            max_iterations: 50,
            overlay: BlendOverlay::Skeleton,
        }
    }
}

impl R3CConfig {
    pub fn with_alpha(alpha: f64) -> R3CConfig {
        R3CConfig {
            alpha,
            ..R3CConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.consecutive_stops_required < 1 {
            return Err(Error::InvalidConfig(
                "consecutive_stops_required must be at least 1".to_string(),
            ));
        }
        if self.max_iterations < self.consecutive_stops_required + 1 {
            return Err(Error::InvalidConfig(format!(
                "max_iterations ({}) must be at least consecutive_stops_required + 1 ({})",
                self.max_iterations,
                self.consecutive_stops_required + 1
            )));
        }
        Ok(())
    }
}

/// One loop iteration as recorded in the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Iteration index, 0 for the initial classification.
    #[serde(rename = "i")]
    pub index: usize,
    /// Foreground pixels of the raw prediction, in the classifier's native
    /// polarity.
    pub foreground_count: u64,
    /// Difference rate against the previous prediction; absent at index 0,
    /// where the stopping criterion is not applied.
    pub diff_rate: Option<f64>,
    /// Whether this iteration voted to stop (`diff_rate <= epsilon`).
    pub stop_vote: bool,
    /// Blend weight `alpha * gamma^i` associated with this iteration's
    /// overlay (unused when the loop stops here).
    pub alpha_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// Full observability record of a refinement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R3CTrace {
    pub records: Vec<IterationRecord>,
    pub classifier_calls: usize,
    pub terminated_by: Termination,
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    classifier_calls: usize,
    terminated_by: &'a Termination,
}

impl R3CTrace {
    /// Writes the trace as JSON lines: one object per iteration followed by
    /// a summary object.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut writer, record)?;
            writeln!(writer)?;
        }
        serde_json::to_writer(
            &mut writer,
            &TraceSummary {
                classifier_calls: self.classifier_calls,
                terminated_by: &self.terminated_by,
            },
        )?;
        writeln!(writer)
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits utf-8")
    }
}

/// Converts a raw prediction into the valley-polarity blend overlay:
/// white-ridge output is inverted so foreground means valley (matching the
/// bright valleys of a raw scan), then thinned to a one-pixel skeleton so
/// repeated blending cannot widen structures.
pub fn regularize_for_blend(prediction: &BinaryMask) -> BinaryMask {
    let valley = match prediction.foreground() {
        Foreground::Ridge => prediction.inverted(),
        Foreground::Valley => prediction.clone(),
    };
    zhang_suen_thin(&valley)
}

/// Brightens the overlay's foreground pixels into the composite:
/// `out = clamp(a_prev + alpha * [overlay], 0, 1)` per pixel.
pub fn blend_composite(a_prev: &GrayImage, overlay: &BinaryMask, alpha: f64) -> Result<GrayImage> {
    if a_prev.width() != overlay.width() || a_prev.height() != overlay.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a_prev.width(), a_prev.height()),
            actual: format!("{}x{}", overlay.width(), overlay.height()),
        });
    }
    let data = a_prev
        .data()
        .iter()
        .zip(overlay.data())
        .map(|(&v, &on)| {
            if on {
                (v as f64 + alpha).clamp(0.0, 1.0) as f32
            } else {
                v
            }
        })
        .collect();
    GrayImage::new(a_prev.width(), a_prev.height(), data)
}

/// Fraction of segmented pixels added at this iteration:
/// `(sum C_i - sum C_prev) / sum C_i`, counted in the masks' native
/// polarity. Defined as 0 when `sum C_i` is 0 (an empty segmentation that
/// stays empty has converged), and negative when the segmentation shrinks.
pub fn diff_rate(current: &BinaryMask, previous: &BinaryMask) -> Result<f64> {
    if !current.same_dimensions(previous) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", previous.width(), previous.height()),
            actual: format!("{}x{}", current.width(), current.height()),
        });
    }
    let count_current = current.count_foreground();
    if count_current == 0 {
        return Ok(0.0);
    }
    let count_previous = previous.count_foreground();
    Ok((count_current as f64 - count_previous as f64) / count_current as f64)
}

/// True when the last `required` difference rates all satisfy
/// `d <= epsilon`. The history holds only rates from iterations `i >= 1`.
pub fn should_stop(history: &[f64], epsilon: f64, required: usize) -> bool {
    history.len() >= required
        && history[history.len() - required..]
            .iter()
            .all(|&d| d <= epsilon)
}

/// Runs the refinement loop and returns the final prediction (in the
/// classifier's native polarity) with its trace.
///
/// The classifier's input policy is applied to `input` once, up front; the
/// composite keeps that shape for the whole run.
pub fn run_r3c(
    input: &GrayImage,
    classifier: &dyn Classifier,
    config: &R3CConfig,
) -> Result<(BinaryMask, R3CTrace)> {
    config.validate()?;

    let shaped = crate::classifiers::apply_input_policy(input, classifier.spec())?;

    let mut records = Vec::new();
    let mut history: Vec<f64> = Vec::new();

    // i = 0: unconditional initial classification; no stop vote.
    let mut current = classifier.enhance(&shaped)?;
    let mut alpha_i = config.alpha;
    records.push(IterationRecord {
        index: 0,
        foreground_count: current.count_foreground(),
        diff_rate: None,
        stop_vote: false,
        alpha_used: alpha_i,
    });
    let mut composite = blend_composite(&shaped, &overlay_for(&current, config), alpha_i)?;

    while records.len() < config.max_iterations {
        let index = records.len();
        let prediction = classifier.enhance(&composite)?;
        let d = diff_rate(&prediction, &current)?;
        history.push(d);
        let stop_vote = d <= config.epsilon;
        alpha_i = config.alpha * config.gamma.powi(index as i32);
        records.push(IterationRecord {
            index,
            foreground_count: prediction.count_foreground(),
            diff_rate: Some(d),
            stop_vote,
            alpha_used: alpha_i,
        });
        current = prediction;

        if should_stop(&history, config.epsilon, config.consecutive_stops_required) {
            let calls = records.len();
            return Ok((
                current,
                R3CTrace {
                    records,
                    classifier_calls: calls,
                    terminated_by: Termination::Converged,
                },
            ));
        }
        composite = blend_composite(&composite, &overlay_for(&current, config), alpha_i)?;
    }

    let calls = records.len();
    Ok((
        current,
        R3CTrace {
            records,
            classifier_calls: calls,
            terminated_by: Termination::MaxIterations,
        },
    ))
}

fn overlay_for(prediction: &BinaryMask, config: &R3CConfig) -> BinaryMask {
    match config.overlay {
        BlendOverlay::Skeleton => regularize_for_blend(prediction),
        BlendOverlay::Raw => prediction.to_ridge_polarity().inverted(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::StubClassifier;

    #[test]
    fn blend_arithmetic() {
        let a = GrayImage::new(3, 1, vec![0.4, 0.9, 0.3]).unwrap();
        let overlay = BinaryMask::new(3, 1, vec![true, true, false], Foreground::Valley).unwrap();
        let out = blend_composite(&a, &overlay, 0.25).unwrap();
        assert!((out.data()[0] - 0.65).abs() < 1e-6);
        assert_eq!(out.data()[1], 1.0, "0.9 + 0.25 clamps to 1");
        assert_eq!(out.data()[2], 0.3);
    }

    #[test]
    fn blend_with_zero_alpha_is_identity() {
        let a = GrayImage::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let overlay = BinaryMask::filled(2, 2, true, Foreground::Valley).unwrap();
        assert_eq!(blend_composite(&a, &overlay, 0.0).unwrap(), a);
    }

    #[test]
    fn blend_rejects_mismatched_dimensions() {
        let a = GrayImage::filled(2, 2, 0.5).unwrap();
        let overlay = BinaryMask::filled(3, 2, true, Foreground::Valley).unwrap();
        assert!(matches!(
            blend_composite(&a, &overlay, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn diff_rate_hand_computed_cases() {
        let make = |count: usize| {
            BinaryMask::from_fn(16, 16, Foreground::Ridge, |x, y| y * 16 + x < count).unwrap()
        };
        // 110 vs 100 foreground pixels: 10/110.
        let d = diff_rate(&make(110), &make(100)).unwrap();
        assert!((d - 10.0 / 110.0).abs() < 1e-12);

        // Identical masks: zero.
        assert_eq!(diff_rate(&make(42), &make(42)).unwrap(), 0.0);

        // Empty current segmentation: defined as zero.
        assert_eq!(diff_rate(&make(0), &make(90)).unwrap(), 0.0);

        // Shrinking segmentation: negative, no absolute value taken.
        let d = diff_rate(&make(80), &make(100)).unwrap();
        assert!((d - (-20.0 / 80.0)).abs() < 1e-12);
    }

    #[test]
    fn stop_rule_needs_consecutive_votes() {
        assert!(!should_stop(&[0.005], 0.01, 2));
        assert!(should_stop(&[0.02, 0.005, 0.003], 0.01, 2));
        assert!(!should_stop(&[0.005, 0.02], 0.01, 2));
        assert!(should_stop(&[0.5, 0.0], 0.01, 1));
        assert!(!should_stop(&[], 0.01, 1));
    }

    #[test]
    fn regularize_inverts_ridge_predictions_then_thins() {
        // An empty ridge prediction becomes an all-valley mask, whose
        // skeleton is pinned by the thinning rules.
        let empty_ridge = BinaryMask::filled(5, 5, false, Foreground::Ridge).unwrap();
        let overlay = regularize_for_blend(&empty_ridge);
        assert_eq!(overlay.foreground(), Foreground::Valley);
        let expected =
            zhang_suen_thin(&BinaryMask::filled(5, 5, true, Foreground::Valley).unwrap());
        assert_eq!(overlay, expected);
    }

    #[test]
    fn regularize_skips_inversion_for_valley_predictions() {
        let valley = BinaryMask::from_fn(7, 7, Foreground::Valley, |x, y| {
            (2..5).contains(&x) && (2..5).contains(&y)
        })
        .unwrap();
        let overlay = regularize_for_blend(&valley);
        assert_eq!(overlay.foreground(), Foreground::Valley);
        // Subset of the input foreground: thinning only deletes.
        for (got, src) in overlay.data().iter().zip(valley.data()) {
            assert!(!got || *src);
        }
    }

    #[test]
    fn regularize_is_idempotent() {
        let valley = BinaryMask::from_fn(9, 9, Foreground::Valley, |x, y| {
            (1..8).contains(&x) && (3..7).contains(&y)
        })
        .unwrap();
        let once = regularize_for_blend(&valley);
        assert_eq!(regularize_for_blend(&once), once);
    }

    #[test]
    fn fixed_mask_stub_converges_in_three_calls() {
        let mask = BinaryMask::from_fn(16, 16, Foreground::Ridge, |x, y| x == y).unwrap();
        let stub = StubClassifier::fixed(mask.clone());
        let input = GrayImage::filled(16, 16, 0.5).unwrap();
        let (out, trace) = run_r3c(&input, &stub, &R3CConfig::with_alpha(0.25)).unwrap();
        assert_eq!(out, mask);
        assert_eq!(trace.classifier_calls, 3);
        assert_eq!(trace.terminated_by, Termination::Converged);
        assert_eq!(trace.records.len(), 3);
        assert_eq!(trace.records[0].diff_rate, None);
        assert_eq!(trace.records[1].diff_rate, Some(0.0));
        assert_eq!(trace.records[2].diff_rate, Some(0.0));
    }

    #[test]
    fn zero_alpha_reproduces_standalone_output() {
        let input = GrayImage::from_fn(24, 24, |x, y| ((x * y) % 13) as f32 / 13.0).unwrap();
        let stub = StubClassifier::threshold(0.5);
        let standalone = stub.enhance(&input).unwrap();
        let (out, trace) = run_r3c(&input, &stub, &R3CConfig::with_alpha(0.0)).unwrap();
        assert_eq!(out, standalone);
        assert_eq!(trace.classifier_calls, 3);
    }

    #[test]
    fn epsilon_at_least_one_forces_three_calls() {
        // d = (sum C_i - sum C_prev) / sum C_i <= 1 always, so every
        // iteration votes to stop.
        let input = GrayImage::from_fn(24, 24, |x, _| if x < 4 { 0.1 } else { 0.9 }).unwrap();
        for classifier in [
            StubClassifier::threshold(0.5),
            StubClassifier::dilating(0.5, 2),
        ] {
            let config = R3CConfig {
                alpha: 1.0,
                epsilon: 1.0,
                ..R3CConfig::default()
            };
            let (_, trace) = run_r3c(&input, &classifier, &config).unwrap();
            assert_eq!(trace.classifier_calls, 3);
            assert_eq!(trace.terminated_by, Termination::Converged);
        }
    }

    #[test]
    fn max_iterations_caps_runaway_loops() {
        // With the raw overlay a dilating stub grows every round, so
        // epsilon 0 never collects a stop vote before the frame saturates.
        let input =
            GrayImage::from_fn(16, 16, |x, y| if x == 8 && y == 8 { 0.9 } else { 0.1 }).unwrap();
        let config = R3CConfig {
            alpha: 1.0,
            epsilon: 0.0,
            max_iterations: 6,
            overlay: BlendOverlay::Raw,
            ..R3CConfig::default()
        };
        let stub = StubClassifier::dilating(0.5, 1);
        let (_, trace) = run_r3c(&input, &stub, &config).unwrap();
        assert_eq!(trace.classifier_calls, 6);
        assert_eq!(trace.terminated_by, Termination::MaxIterations);
    }

    #[test]
    fn gamma_decays_alpha_per_iteration() {
        let input = GrayImage::from_fn(16, 16, |x, y| {
            if (7..10).contains(&x) && (7..10).contains(&y) {
                0.9
            } else {
                0.1
            }
        })
        .unwrap();
        let config = R3CConfig {
            alpha: 0.8,
            gamma: 0.5,
            epsilon: 0.0,
            max_iterations: 4,
            overlay: BlendOverlay::Raw,
            ..R3CConfig::default()
        };
        let stub = StubClassifier::dilating(0.5, 1);
        let (_, trace) = run_r3c(&input, &stub, &config).unwrap();
        let alphas: Vec<f64> = trace.records.iter().map(|r| r.alpha_used).collect();
        assert_eq!(alphas, vec![0.8, 0.4, 0.2, 0.1]);
    }

    #[test]
    fn trace_jsonl_shape() {
        let mask = BinaryMask::filled(8, 8, true, Foreground::Ridge).unwrap();
        let stub = StubClassifier::fixed(mask);
        let input = GrayImage::filled(8, 8, 0.5).unwrap();
        let (_, trace) = run_r3c(&input, &stub, &R3CConfig::with_alpha(0.5)).unwrap();
        let jsonl = trace.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("\"i\":0"));
        assert!(lines[0].contains("\"diff_rate\":null"));
        assert!(lines[3].contains("\"classifier_calls\":3"));
        assert!(lines[3].contains("\"terminated_by\":\"Converged\""));
    }
}
