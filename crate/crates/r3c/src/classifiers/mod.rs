//! The pluggable enhancement contract and its reference implementations.
//!
//! A classifier maps a grayscale image to a binary segmentation of the same
//! dimensions. Each one declares what its white pixels mean (ridge or
//! valley) and what input shape it wants, so callers can normalize inputs
//! and interpret outputs without knowing which method is behind the trait.

pub mod fft;
pub mod gabor;
pub mod orientation;
mod stub;

pub use fft::{FftClassifier, FftParams, FftThreshold};
pub use gabor::{GaborClassifier, GaborParams};
pub use orientation::{estimate_orientation_field, OrientationField};
pub use stub::{StubBehavior, StubClassifier};

use crate::error::Result;
use crate::image::{resize_bilinear, BinaryMask, Foreground, GrayImage};

/// Input-shape policy of a classifier, mirroring the constraints real
/// enhancement methods impose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputPolicy {
    /// Accepts any dimensions unchanged.
    AnyShape,
    /// Requires exactly this shape; inputs are resized to it.
    FixedShape { width: usize, height: usize },
    /// Performs best at this shape; inputs are resized to it, but callers
    /// may opt out by constructing the classifier with [`InputPolicy::AnyShape`].
    PreferredShape { width: usize, height: usize },
}

/// Declared identity and contracts of an enhancement method.
#[derive(Debug, Clone)]
pub struct ClassifierSpec {
    pub name: String,
    /// Semantic of the white/foreground class in the raw output.
    pub output_polarity: Foreground,
    pub input_policy: InputPolicy,
}

/// A deterministic enhancement function `f(M) -> C`.
///
/// Implementations must be pure: identical input produces an identical
/// mask, and the output dimensions equal the input dimensions (after the
/// input policy has been applied by the caller).
pub trait Classifier: Sync {
    fn spec(&self) -> &ClassifierSpec;
    fn enhance(&self, img: &GrayImage) -> Result<BinaryMask>;
}

/// Resizes `img` according to the classifier's input policy. `AnyShape`
/// passes through untouched; the shaped policies resize bilinearly.
pub fn apply_input_policy(img: &GrayImage, spec: &ClassifierSpec) -> Result<GrayImage> {
    match spec.input_policy {
        InputPolicy::AnyShape => Ok(img.clone()),
        InputPolicy::FixedShape { width, height }
        | InputPolicy::PreferredShape { width, height } => resize_bilinear(img, width, height),
    }
}

/// Applies the input policy and runs the classifier once: the standalone
/// (non-recursive) enhancement path.
pub fn enhance_with_policy(classifier: &dyn Classifier, img: &GrayImage) -> Result<BinaryMask> {
    let shaped = apply_input_policy(img, classifier.spec())?;
    classifier.enhance(&shaped)
}
