//! Every chapter of the book (`book/src/*.md`) is included here as a doc
//! comment, so `cargo test --doc` compiles and runs the book's code
//! blocks against the current library. mdbook itself cannot run examples
//! that depend on external crates; this shim closes that gap, one module
//! per chapter so a failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/rasters.md")]
pub mod rasters {}

#[doc = include_str!("../../../book/src/thinning.md")]
pub mod thinning {}

#[doc = include_str!("../../../book/src/classifiers.md")]
pub mod classifiers {}

#[doc = include_str!("../../../book/src/recursion.md")]
pub mod recursion {}

#[doc = include_str!("../../../book/src/synthesis.md")]
pub mod synthesis {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
