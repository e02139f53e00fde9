//! Recapture-artifact augmentation for face anti-spoofing data.
//!
//! The crate simulates what happens to a face image when it is captured by a
//! camera, printed or replayed on a screen, and captured again: color gamut
//! shifts, hand-trembling blur, resolution loss, specular reflection, moiré,
//! halftone noise and press color distortion. Operations are grouped into
//! AutoAugment-style policies that also track the bona fide / spoof label.
//!
//! The [`sare`] module holds the spoof-risk equalization objective used to
//! train on the augmented domains.

pub mod banks;
pub mod capture;
pub mod error;
pub mod icc;
pub mod image;
pub mod policy;
pub mod print;
pub mod replay;
pub mod rng;
pub mod sare;
pub mod spectral;

pub use error::{Error, Result};
pub use image::{ColorMode, ImageBuffer, Kernel};

/// Result of an operation that draws assets from a bank.
#[derive(Debug, Clone, PartialEq)]
pub struct OpOutput {
    pub image: ImageBuffer,
    /// Identifiers of the assets drawn, in draw order.
    pub assets: Vec<String>,
}
