//! Camera capture simulation: hand-trembling motion blur and low resolution.
//!
//! Both operations keep the input label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{convolve, resize_nearest, ColorMode, ImageBuffer, Kernel};

pub const MAX_BLUR_SIZE: usize = 16;
pub const MIN_RESOLUTION_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlurDirection {
    Horizontal,
    Vertical,
    Diagonal,
    AntiDiagonal,
}

impl BlurDirection {
    pub const ALL: [BlurDirection; 4] = [
        BlurDirection::Horizontal,
        BlurDirection::Vertical,
        BlurDirection::Diagonal,
        BlurDirection::AntiDiagonal,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlurSpec {
    pub size: usize,
    pub direction: BlurDirection,
}

impl BlurSpec {
    pub fn new(size: usize, direction: BlurDirection) -> Result<Self> {
        if !(1..=MAX_BLUR_SIZE).contains(&size) {
            return Err(Error::Range(format!(
                "blur kernel size {size} outside [1, {MAX_BLUR_SIZE}]"
            )));
        }
        Ok(Self { size, direction })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionSpec {
    pub scale: f64,
}

impl ResolutionSpec {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Range(format!("resolution scale {scale} outside (0, 1]")));
        }
        Ok(Self { scale })
    }
}

/// Line kernel of `size` taps, each `1/size`.
///
/// With `i` the horizontal and `j` the vertical index (both 1-based), the taps
/// are: horizontal `j = floor((k+1)/2)`, vertical `i = floor((k+1)/2)`,
/// diagonal `j = i`, anti-diagonal `j = k + 1 - i`.
pub fn motion_kernel(spec: BlurSpec) -> Result<Kernel> {
    let BlurSpec { size: k, direction } = BlurSpec::new(spec.size, spec.direction)?;
    let mid = k.div_ceil(2);
    let mut weights = vec![0.0; k * k];
    for t in 1..=k {
        let (i, j) = match direction {
            BlurDirection::Horizontal => (t, mid),
            BlurDirection::Vertical => (mid, t),
            BlurDirection::Diagonal => (t, t),
            BlurDirection::AntiDiagonal => (t, k + 1 - t),
        };
        weights[(j - 1) * k + (i - 1)] = 1.0;
    }
    Kernel::normalized(k, weights)
}

pub fn hand_trembling(img: &ImageBuffer, spec: BlurSpec) -> Result<ImageBuffer> {
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("motion blur expects RGB, got {}", img.mode())));
    }
    convolve(img, &motion_kernel(spec)?)
}

/// Nearest down-sampling to `floor(s * size)` and back up to the input size.
pub fn low_resolution(img: &ImageBuffer, spec: ResolutionSpec) -> Result<ImageBuffer> {
    let ResolutionSpec { scale } = ResolutionSpec::new(spec.scale)?;
    // tolerate representation error in scales like 1/3
    let w = (scale * img.width() as f64 + 1e-9).floor() as usize;
    let h = (scale * img.height() as f64 + 1e-9).floor() as usize;
    if w == 0 || h == 0 {
        return Err(Error::Range(format!(
            "scale {scale} collapses {}x{} to zero pixels",
            img.width(),
            img.height()
        )));
    }
    let small = resize_nearest(img, w, h)?;
    resize_nearest(&small, img.width(), img.height())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel_for_every_direction() {
        for d in BlurDirection::ALL {
            let k = motion_kernel(BlurSpec { size: 1, direction: d }).unwrap();
            assert_eq!(k.weights(), &[1.0]);
        }
    }

    #[test]
    fn three_tap_horizontal_is_middle_row() {
        let k = motion_kernel(BlurSpec::new(3, BlurDirection::Horizontal).unwrap()).unwrap();
        let t = 1.0 / 3.0;
        assert_eq!(k.weights(), &[0.0, 0.0, 0.0, t, t, t, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn kernel_shapes() {
        let v = motion_kernel(BlurSpec::new(4, BlurDirection::Vertical).unwrap()).unwrap();
        // mid = floor(5/2) = 2 → second column
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(v.at(x, y) != 0.0, x == 1);
            }
        }
        let a = motion_kernel(BlurSpec::new(5, BlurDirection::AntiDiagonal).unwrap()).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(a.at(x, y) != 0.0, x + y == 4);
            }
        }
        let d = motion_kernel(BlurSpec::new(5, BlurDirection::Diagonal).unwrap()).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(d.at(x, y) != 0.0, x == y);
            }
        }
    }

    #[test]
    fn kernels_sum_to_one_with_k_taps() {
        for size in 1..=MAX_BLUR_SIZE {
            for d in BlurDirection::ALL {
                let k = motion_kernel(BlurSpec::new(size, d).unwrap()).unwrap();
                let sum: f64 = k.weights().iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert_eq!(k.weights().iter().filter(|w| **w != 0.0).count(), size);
                assert!(k.weights().iter().all(|&w| w == 0.0 || (w - 1.0 / size as f64).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn size_bounds() {
        assert!(matches!(BlurSpec::new(0, BlurDirection::Vertical), Err(Error::Range(_))));
        assert!(matches!(BlurSpec::new(17, BlurDirection::Vertical), Err(Error::Range(_))));
        let bad = BlurSpec {
            size: 40,
            direction: BlurDirection::Horizontal,
        };
        assert!(matches!(motion_kernel(bad), Err(Error::Range(_))));
    }

    #[test]
    fn blur_identity_and_constant() {
        let img = ImageBuffer::from_fn(9, 7, ColorMode::RGB, |x, y, c| ((x * 3 + y * 5 + c) % 11) as f32 / 10.0);
        assert_eq!(hand_trembling(&img, BlurSpec::new(1, BlurDirection::Diagonal).unwrap()).unwrap(), img);
        let flat = ImageBuffer::filled(20, 20, ColorMode::RGB, &[0.2, 0.55, 0.9]).unwrap();
        for d in BlurDirection::ALL {
            assert_eq!(hand_trembling(&flat, BlurSpec::new(14, d).unwrap()).unwrap(), flat);
        }
    }

    #[test]
    fn resolution_identity_and_errors() {
        let img = ImageBuffer::from_fn(10, 6, ColorMode::RGB, |x, y, _| ((x + y) % 4) as f32 / 3.0);
        assert_eq!(low_resolution(&img, ResolutionSpec::new(1.0).unwrap()).unwrap(), img);
        assert!(matches!(ResolutionSpec::new(0.0), Err(Error::Range(_))));
        assert!(matches!(ResolutionSpec::new(1.2), Err(Error::Range(_))));
        assert!(matches!(
            low_resolution(&img, ResolutionSpec::new(0.05).unwrap()),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn resolution_is_idempotent_when_the_grid_divides() {
        // floor-index nearest sampling is only a fixpoint when the decimated
        // size divides the original
        let img = ImageBuffer::from_fn(48, 48, ColorMode::RGB, |x, y, c| ((x * 7 + y * 13 + c * 5) % 17) as f32 / 16.0);
        for s in [0.5, 1.0 / 3.0, 0.25, 1.0 / 6.0] {
            let spec = ResolutionSpec::new(s).unwrap();
            let once = low_resolution(&img, spec).unwrap();
            let twice = low_resolution(&once, spec).unwrap();
            assert_eq!(once, twice, "s = {s}");
        }
    }
}
