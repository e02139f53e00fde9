//! Task-independent geometric and photometric operations.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::Rng;

pub fn horizontal_flip(img: &ImageBuffer) -> ImageBuffer {
    let (w, c) = (img.width(), img.channels());
    ImageBuffer::from_fn(w, img.height(), img.mode(), |x, y, ch| img.data()[(y * w + (w - 1 - x)) * c + ch])
}

/// Rotation about the center by `degrees`, nearest sampling, edges clamped.
pub fn rotate(img: &ImageBuffer, degrees: f64) -> ImageBuffer {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    ImageBuffer::from_fn(w, h, img.mode(), |x, y, ch| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let sx = (cos * dx + sin * dy + cx).round().clamp(0.0, w as f64 - 1.0) as usize;
        let sy = (-sin * dx + cos * dy + cy).round().clamp(0.0, h as f64 - 1.0) as usize;
        img.data()[(sy * w + sx) * c + ch]
    })
}

pub fn brightness(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(Error::Range(format!("brightness factor {factor} must be non-negative")));
    }
    Ok(ImageBuffer::from_fn(img.width(), img.height(), img.mode(), |x, y, ch| {
        (f64::from(img.get(x, y, ch)) * factor) as f32
    }))
}

/// Fills a square of side `fraction * min(w, h)` at `(x0, y0)` with mid-gray.
pub fn cutout(img: &ImageBuffer, fraction: f64, x0: usize, y0: usize) -> ImageBuffer {
    let side = (fraction * img.width().min(img.height()) as f64).round() as usize;
    ImageBuffer::from_fn(img.width(), img.height(), img.mode(), |x, y, ch| {
        if x >= x0 && x < x0 + side && y >= y0 && y < y0 + side {
            0.5
        } else {
            img.get(x, y, ch)
        }
    })
}

/// Random sign for symmetric magnitudes.
pub(crate) fn signed(rng: &mut Rng, m: f64) -> f64 {
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorMode;

    fn ramp() -> ImageBuffer {
        ImageBuffer::from_fn(5, 4, ColorMode::RGB, |x, y, c| ((x + 5 * y) * 3 + c) as f32 / 60.0)
    }

    #[test]
    fn flip_twice_is_identity() {
        let img = ramp();
        let once = horizontal_flip(&img);
        assert_eq!(once.get(0, 2, 1), img.get(4, 2, 1));
        assert_eq!(horizontal_flip(&once), img);
    }

    #[test]
    fn zero_magnitudes_are_identities() {
        let img = ramp();
        assert_eq!(rotate(&img, 0.0), img);
        assert_eq!(brightness(&img, 1.0).unwrap(), img);
        assert_eq!(cutout(&img, 0.0, 1, 1), img);
    }

    #[test]
    fn half_turn_reverses_both_axes() {
        let img = ramp();
        let r = rotate(&img, 180.0);
        assert_eq!(r.get(0, 0, 0), img.get(4, 3, 0));
    }
}
