//! Recursive class connectivity classification (R3C) for binary image
//! segmentation.
//!
//! R3C refines the output of any binary classifier without touching the
//! classifier itself: each round blends the previous prediction back into
//! the input image as a faint overlay and classifies the composite again.
//! Structure the classifier already found reinforces itself, fragmented
//! regions reconnect, and the loop stops once the segmentation stabilizes.
//! The crate ships the loop together with everything needed to exercise it
//! at desk scale:
//!
//! - [`image`]: grayscale/binary rasters with bit-exact PGM and PNG I/O
//!   (module [`io`]).
//! - [`thinning`]: Zhang-Suen skeletonization, used to regularize overlays.
//! - [`classifiers`]: the enhancement contract, a Gabor filter bank, a
//!   blockwise-FFT enhancer, and scripted stubs for testing.
//! - [`engine`]: the refinement loop, its stopping rule, and run traces.
//! - [`synth`]: ground-truthed synthetic ridge patterns and degradation.
//! - [`eval`]: overlap/connectivity metrics and the alpha grid search.
//!
//! ```
//! use r3c::classifiers::StubClassifier;
//! use r3c::engine::{run_r3c, R3CConfig};
//! use r3c::image::GrayImage;
//!
//! // A dark 3x3 patch on a bright field, and a classifier that marks
//! // dark pixels as ridge.
//! let input = GrayImage::from_fn(64, 64, |x, y| {
//!     if (30..33).contains(&x) && (30..33).contains(&y) { 0.1 } else { 0.9 }
//! })?;
//! let classifier = StubClassifier::threshold(0.5);
//!
//! let (mask, trace) = run_r3c(&input, &classifier, &R3CConfig::with_alpha(0.25))?;
//! assert_eq!(mask.count_foreground(), 9);
//! assert!(trace.classifier_calls >= 3);
//! # Ok::<(), r3c::Error>(())
//! ```

pub mod classifiers;
pub mod engine;
mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod synth;
pub mod thinning;

pub use error::{Error, Result};
