//! The `preview` command: a contact sheet of every registered operation
//! at every magnitude level.

use recapture::banks::AssetBanks;
use recapture::policy::{apply_op, Registry, MAGNITUDE_LEVELS};
use recapture::rng::rng_from;
use recapture::{ColorMode, ImageBuffer, Result};

/// Rows follow the registry order, columns the magnitude levels.
pub fn contact_sheet(img: &ImageBuffer, registry: &Registry, banks: &AssetBanks, seed: u64) -> Result<ImageBuffer> {
    let img = img.to_rgb()?;
    let (w, h) = (img.width(), img.height());
    let rows = registry.len();
    let mut sheet = vec![0.0f32; w * MAGNITUDE_LEVELS * h * rows * 3];
    let stride = w * MAGNITUDE_LEVELS * 3;
    for (row, spec) in registry.ops().iter().enumerate() {
        for level in 0..MAGNITUDE_LEVELS {
            let magnitude = registry.magnitude(spec.kind, level)?;
            let mut rng = rng_from(&[seed, spec.kind.code(), level as u64]);
            let tile = apply_op(&img, spec.kind, magnitude, banks, &mut rng)?.image;
            for y in 0..h {
                let dst = (row * h + y) * stride + level * w * 3;
                sheet[dst..dst + w * 3].copy_from_slice(&tile.data()[y * w * 3..(y + 1) * w * 3]);
            }
        }
    }
    ImageBuffer::new(w * MAGNITUDE_LEVELS, h * rows, ColorMode::RGB, sheet)
}
