//! Deterministic test doubles for exercising the recursion engine without
//! a real filter bank behind it.

use crate::classifiers::{Classifier, ClassifierSpec, InputPolicy};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, Foreground, GrayImage};

/// What the stub does with its input.
#[derive(Debug, Clone)]
pub enum StubBehavior {
    /// Returns this mask regardless of input (dimensions must match).
    FixedMask(BinaryMask),
    /// Marks pixels darker than the threshold as ridge foreground.
    Threshold(f32),
    /// Marks pixels at or above the threshold as valley foreground and
    /// dilates the result by a Chebyshev radius. Because the recursion
    /// brightens its overlay into the composite, this stub re-detects and
    /// expands its own previous prediction: a controllable classifier whose
    /// output grows each iteration until it saturates the frame.
    Dilating { threshold: f32, radius: usize },
}

/// A classifier with fully scripted behavior.
#[derive(Debug, Clone)]
pub struct StubClassifier {
    spec: ClassifierSpec,
    behavior: StubBehavior,
}

impl StubClassifier {
    pub fn new(behavior: StubBehavior) -> StubClassifier {
        let (name, polarity) = match &behavior {
            StubBehavior::FixedMask(mask) => ("stub-fixed", mask.foreground()),
            StubBehavior::Threshold(_) => ("stub-threshold", Foreground::Ridge),
            StubBehavior::Dilating { .. } => ("stub-dilating", Foreground::Valley),
        };
        StubClassifier {
            spec: ClassifierSpec {
                name: name.to_string(),
                output_polarity: polarity,
                input_policy: InputPolicy::AnyShape,
            },
            behavior,
        }
    }

    pub fn fixed(mask: BinaryMask) -> StubClassifier {
        StubClassifier::new(StubBehavior::FixedMask(mask))
    }

    pub fn threshold(t: f32) -> StubClassifier {
        StubClassifier::new(StubBehavior::Threshold(t))
    }

    pub fn dilating(threshold: f32, radius: usize) -> StubClassifier {
        StubClassifier::new(StubBehavior::Dilating { threshold, radius })
    }
}

impl Classifier for StubClassifier {
    fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    fn enhance(&self, img: &GrayImage) -> Result<BinaryMask> {
        match &self.behavior {
            StubBehavior::FixedMask(mask) => {
                if mask.width() != img.width() || mask.height() != img.height() {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{}x{}", mask.width(), mask.height()),
                        actual: format!("{}x{}", img.width(), img.height()),
                    });
                }
                Ok(mask.clone())
            }
            StubBehavior::Threshold(t) => {
                BinaryMask::from_fn(img.width(), img.height(), Foreground::Ridge, |x, y| {
                    img.get(x, y) < *t
                })
            }
            StubBehavior::Dilating { threshold, radius } => {
                let seed =
                    BinaryMask::from_fn(img.width(), img.height(), Foreground::Valley, |x, y| {
                        img.get(x, y) >= *threshold
                    })?;
                Ok(dilate_chebyshev(&seed, *radius))
            }
        }
    }
}

/// Morphological dilation with a `(2r+1) x (2r+1)` square element.
fn dilate_chebyshev(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let r = radius as isize;
    BinaryMask::from_fn(mask.width(), mask.height(), mask.foreground(), |x, y| {
        for dy in -r..=r {
            for dx in -r..=r {
                if mask.get_padded(x as isize + dx, y as isize + dy) {
                    return true;
                }
            }
        }
        false
    })
    .expect("dimensions preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_mask_ignores_input() {
        let mask = BinaryMask::from_fn(3, 3, Foreground::Ridge, |x, y| x == y).unwrap();
        let stub = StubClassifier::fixed(mask.clone());
        let img = GrayImage::filled(3, 3, 0.9).unwrap();
        assert_eq!(stub.enhance(&img).unwrap(), mask);
    }

    #[test]
    fn fixed_mask_rejects_mismatched_input() {
        let mask = BinaryMask::filled(3, 3, true, Foreground::Ridge).unwrap();
        let stub = StubClassifier::fixed(mask);
        let img = GrayImage::filled(4, 3, 0.5).unwrap();
        assert!(matches!(
            stub.enhance(&img),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn threshold_marks_dark_pixels_as_ridge() {
        let img = GrayImage::new(2, 1, vec![0.2, 0.8]).unwrap();
        let stub = StubClassifier::threshold(0.5);
        let mask = stub.enhance(&img).unwrap();
        assert_eq!(mask.data(), &[true, false]);
        assert_eq!(mask.foreground(), Foreground::Ridge);
    }

    #[test]
    fn dilating_output_contains_its_seed() {
        let img = GrayImage::from_fn(9, 9, |x, y| {
            if (3..6).contains(&x) && (3..6).contains(&y) {
                0.9
            } else {
                0.1
            }
        })
        .unwrap();
        let seed = StubClassifier::dilating(0.5, 0).enhance(&img).unwrap();
        let grown = StubClassifier::dilating(0.5, 1).enhance(&img).unwrap();
        let wider = StubClassifier::dilating(0.5, 2).enhance(&img).unwrap();
        assert_eq!(seed.count_foreground(), 9);
        assert_eq!(grown.count_foreground(), 25);
        assert_eq!(wider.count_foreground(), 49);
        for i in 0..seed.data().len() {
            assert!(
                !seed.data()[i] || grown.data()[i],
                "dilation must be extensive"
            );
            assert!(!grown.data()[i] || wider.data()[i]);
        }
    }
}
