//! Clustered-dot halftoning with 3×3 dot clusters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{check_ratio, convex_blend, resize_nearest, to_grayscale, ColorMode, ImageBuffer};

pub const SFC_GAMMA: (f64, f64) = (0.01, 0.2);
pub const LEVELS: usize = 10;
pub const CLUSTER_TABLE_VERSION: u32 = 1;

/// Cell fill order `(x, y)`: center, the four edge neighbours clockwise from
/// the top, then the corners clockwise from the top-left.
pub const FILL_ORDER: [(usize, usize); 9] = [
    (1, 1),
    (1, 0),
    (2, 1),
    (1, 2),
    (0, 1),
    (0, 0),
    (2, 0),
    (2, 2),
    (0, 2),
];

/// Ten nested 3×3 ink masks, indexed by quantization level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DotClusterTable {
    pub version: u32,
    /// `clusters[level][y][x]` is true where ink is laid down.
    pub clusters: Vec<[[bool; 3]; 3]>,
}

impl DotClusterTable {
    /// Level `l` inks the first `l` cells of [`FILL_ORDER`].
    pub fn spiral() -> Self {
        let clusters = (0..LEVELS)
            .map(|level| {
                let mut mask = [[false; 3]; 3];
                for &(x, y) in &FILL_ORDER[..level] {
                    mask[y][x] = true;
                }
                mask
            })
            .collect();
        Self {
            version: CLUSTER_TABLE_VERSION,
            clusters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CLUSTER_TABLE_VERSION {
            return Err(Error::Config(format!("unsupported dot-cluster table version {}", self.version)));
        }
        if self.clusters.len() != LEVELS {
            return Err(Error::Validation(format!("expected {LEVELS} clusters, got {}", self.clusters.len())));
        }
        for (l, pair) in self.clusters.windows(2).enumerate() {
            let nested = (0..3).all(|y| (0..3).all(|x| !pair[0][y][x] || pair[1][y][x]));
            if !nested {
                return Err(Error::Validation(format!("cluster {l} is not contained in cluster {}", l + 1)));
            }
        }
        Ok(())
    }

    pub fn ink_count(&self, level: usize) -> usize {
        self.clusters[level].iter().flatten().filter(|&&b| b).count()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cluster table serializes")
    }
}

/// Darker gray means a higher level and more ink.
pub fn quantize_level(gray: f64) -> usize {
    (((1.0 - gray) * LEVELS as f64).floor().max(0.0) as usize).min(LEVELS - 1)
}

/// Binary halftone of `img` (RGB or L) returned as RGB at the input size.
pub fn sfc_halftone_image(img: &ImageBuffer) -> Result<ImageBuffer> {
    sfc_halftone_with(img, &DotClusterTable::spiral())
}

pub fn sfc_halftone_with(img: &ImageBuffer, table: &DotClusterTable) -> Result<ImageBuffer> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::Range(format!("halftoning needs at least 3x3 pixels, got {w}x{h}")));
    }
    let gray = match img.mode() {
        ColorMode::L => img.clone(),
        ColorMode::RGB => to_grayscale(img)?,
        m => return Err(Error::Mode(format!("halftoning expects RGB or L, got {m}"))),
    };
    let (bw, bh) = (w / 3, h / 3);
    let small = resize_nearest(&gray, bw, bh)?;
    let mut stamped = vec![0.0f32; bw * 3 * bh * 3];
    for by in 0..bh {
        for bx in 0..bw {
            let mask = &table.clusters[quantize_level(f64::from(small.get(bx, by, 0)))];
            for (dy, row) in mask.iter().enumerate() {
                for (dx, &ink) in row.iter().enumerate() {
                    stamped[(by * 3 + dy) * bw * 3 + bx * 3 + dx] = if ink { 0.0 } else { 1.0 };
                }
            }
        }
    }
    let stamped = ImageBuffer::new(bw * 3, bh * 3, ColorMode::L, stamped)?;
    resize_nearest(&stamped, w, h)?.gray_to_rgb()
}

pub fn sfc_halftone(img: &ImageBuffer, gamma: f64) -> Result<ImageBuffer> {
    check_ratio("sfc halftone", gamma, SFC_GAMMA.0, SFC_GAMMA.1)?;
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("halftone compositing expects RGB, got {}", img.mode())));
    }
    convex_blend(img, &sfc_halftone_image(img)?, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_nested_and_monotone() {
        let t = DotClusterTable::spiral();
        t.validate().unwrap();
        for l in 0..LEVELS {
            assert_eq!(t.ink_count(l), l);
        }
        assert!(t.clusters[1][1][1], "first dot sits in the center");
    }

    #[test]
    fn checked_in_fixture_matches_builder() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/dot_clusters.json");
        assert_eq!(DotClusterTable::load(&path).unwrap(), DotClusterTable::spiral());
    }

    #[test]
    fn polarity_anchors() {
        let white = ImageBuffer::filled(9, 9, ColorMode::RGB, &[1.0; 3]).unwrap();
        assert!(sfc_halftone_image(&white).unwrap().data().iter().all(|&v| v == 1.0));
        let black = ImageBuffer::filled(9, 9, ColorMode::RGB, &[0.0; 3]).unwrap();
        assert!(sfc_halftone_image(&black).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn broken_nesting_is_rejected() {
        let mut t = DotClusterTable::spiral();
        t.clusters[5] = [[false; 3]; 3];
        assert!(matches!(t.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn too_small_is_a_range_error() {
        let img = ImageBuffer::filled(2, 5, ColorMode::RGB, &[0.5; 3]).unwrap();
        assert!(matches!(sfc_halftone_image(&img), Err(Error::Range(_))));
    }

    #[test]
    fn ragged_sizes_keep_the_input_size() {
        let img = ImageBuffer::from_fn(10, 7, ColorMode::RGB, |x, _, _| x as f32 / 9.0);
        let out = sfc_halftone_image(&img).unwrap();
        assert_eq!((out.width(), out.height(), out.mode()), (10, 7, ColorMode::RGB));
    }
}
