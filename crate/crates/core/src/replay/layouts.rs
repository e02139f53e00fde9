//! Display subpixel layouts used as moiré sources.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TILE: usize = 12;
pub const LAYOUT_SCHEMA_VERSION: u32 = 1;

/// A 12×12 RGB tile describing one period of a display's subpixel grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpixelLayout {
    pub name: String,
    /// `TILE` rows of `TILE` pixels of `[r, g, b]` bytes.
    pub tile: Vec<Vec<[u8; 3]>>,
}

impl SubpixelLayout {
    pub fn validate(&self) -> Result<()> {
        if self.tile.len() != TILE || self.tile.iter().any(|row| row.len() != TILE) {
            return Err(Error::Shape(format!("layout '{}' is not {TILE}x{TILE}", self.name)));
        }
        if self.tile.iter().flatten().all(|px| *px == [0, 0, 0]) {
            return Err(Error::Validation(format!("layout '{}' has no lit subpixel", self.name)));
        }
        Ok(())
    }

    /// Normalized intensity of channel `c` at tile coordinates (wrapped).
    pub fn sample(&self, x: usize, y: usize, c: usize) -> f32 {
        f32::from(self.tile[y % TILE][x % TILE][c]) / 255.0
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LayoutFile {
    version: u32,
    layouts: Vec<SubpixelLayout>,
}

pub fn layouts_to_json(layouts: &[SubpixelLayout]) -> String {
    serde_json::to_string(&LayoutFile {
        version: LAYOUT_SCHEMA_VERSION,
        layouts: layouts.to_vec(),
    })
    .expect("layouts serialize")
}

pub fn layouts_from_json(text: &str, origin: &Path) -> Result<Vec<SubpixelLayout>> {
    let file: LayoutFile = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    if file.version != LAYOUT_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported layout schema version {}",
            origin.display(),
            file.version
        )));
    }
    for l in &file.layouts {
        l.validate()?;
    }
    Ok(file.layouts)
}

pub fn load_layouts(path: &Path) -> Result<Vec<SubpixelLayout>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    layouts_from_json(&text, path)
}

pub fn save_layouts(layouts: &[SubpixelLayout], path: &Path) -> Result<()> {
    fs::write(path, layouts_to_json(layouts)).map_err(|e| Error::io(path, e))
}

const R: [u8; 3] = [255, 0, 0];
const G: [u8; 3] = [0, 255, 0];
const B: [u8; 3] = [0, 0, 255];
const W: [u8; 3] = [255, 255, 255];
const Y: [u8; 3] = [255, 255, 0];

struct Painter {
    tile: [[[u8; 3]; TILE]; TILE],
}

impl Painter {
    fn new() -> Self {
        Self {
            tile: [[[0; 3]; TILE]; TILE],
        }
    }

    fn paint(mut self, color: [u8; 3], inside: impl Fn(f64, f64) -> bool) -> Self {
        for (y, row) in self.tile.iter_mut().enumerate() {
            for (x, px) in row.iter_mut().enumerate() {
                if inside(x as f64 + 0.5, y as f64 + 0.5) {
                    *px = color;
                }
            }
        }
        self
    }

    /// Axis-aligned rectangle `[x0, x1) × [y0, y1)` in pixel units.
    fn rect(self, color: [u8; 3], x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        self.paint(color, move |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
    }

    fn disc(self, color: [u8; 3], cx: f64, cy: f64, r: f64) -> Self {
        self.paint(color, move |x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r)
    }

    fn diamond(self, color: [u8; 3], cx: f64, cy: f64, r: f64) -> Self {
        self.paint(color, move |x, y| (x - cx).abs() + (y - cy).abs() <= r)
    }

    fn build(self, name: &str) -> SubpixelLayout {
        SubpixelLayout {
            name: name.to_string(),
            tile: self.tile.iter().map(|row| row.to_vec()).collect(),
        }
    }
}

fn stripes(name: &str, colors: &[[u8; 3]], vertical: bool, lit: f64) -> SubpixelLayout {
    let pitch = TILE as f64 / colors.len() as f64;
    let mut p = Painter::new();
    for (i, &c) in colors.iter().enumerate() {
        let a = i as f64 * pitch;
        p = if vertical {
            p.rect(c, a, 0.0, a + lit, 11.0)
        } else {
            p.rect(c, 0.0, a, 11.0, a + lit)
        };
    }
    p.build(name)
}

/// The 19 built-in layouts: stripes, PenTile, diamond and other geometric
/// arrangements.
pub fn default_layouts() -> Vec<SubpixelLayout> {
    vec![
        stripes("rgb-stripe", &[R, G, B], true, 3.0),
        stripes("bgr-stripe", &[B, G, R], true, 3.0),
        stripes("rgb-stripe-horizontal", &[R, G, B], false, 3.0),
        stripes("bgr-stripe-horizontal", &[B, G, R], false, 3.0),
        stripes("rgb-stripe-narrow", &[R, G, B], true, 2.0),
        stripes("rgbw-stripe", &[R, G, B, W], true, 2.0),
        stripes("rgby-stripe", &[R, G, B, Y], true, 2.0),
        Painter::new()
            .rect(R, 0.0, 0.0, 5.0, 5.0)
            .rect(G, 6.0, 0.0, 11.0, 5.0)
            .rect(B, 0.0, 6.0, 5.0, 11.0)
            .rect(W, 6.0, 6.0, 11.0, 11.0)
            .build("rgbw-quad"),
        Painter::new()
            .rect(R, 0.0, 0.0, 3.0, 5.0)
            .rect(G, 3.5, 0.0, 5.5, 5.0)
            .rect(B, 6.0, 0.0, 9.0, 5.0)
            .rect(G, 9.5, 0.0, 11.5, 5.0)
            .rect(B, 0.0, 6.0, 3.0, 11.0)
            .rect(G, 3.5, 6.0, 5.5, 11.0)
            .rect(R, 6.0, 6.0, 9.0, 11.0)
            .rect(G, 9.5, 6.0, 11.5, 11.0)
            .build("pentile-rgbg"),
        Painter::new()
            .diamond(R, 3.0, 3.0, 2.6)
            .diamond(B, 9.0, 9.0, 2.6)
            .disc(G, 9.0, 3.0, 1.6)
            .disc(G, 3.0, 9.0, 1.6)
            .build("diamond-pentile"),
        Painter::new()
            .rect(R, 0.0, 0.0, 4.0, 12.0)
            .rect(G, 4.0, 0.0, 8.0, 12.0)
            .rect(B, 8.0, 0.0, 12.0, 12.0)
            .build("rgb-stripe-wide"),
        Painter::new()
            .rect(R, 0.0, 0.0, 3.0, 5.0)
            .rect(G, 4.0, 0.0, 7.0, 5.0)
            .rect(B, 8.0, 0.0, 11.0, 5.0)
            .rect(B, 2.0, 6.0, 5.0, 11.0)
            .rect(R, 6.0, 6.0, 9.0, 11.0)
            .rect(G, 10.0, 6.0, 12.0, 11.0)
            .rect(G, 0.0, 6.0, 1.0, 11.0)
            .build("rgb-delta"),
        Painter::new()
            .rect(R, 0.0, 0.0, 5.0, 5.0)
            .rect(G, 0.0, 6.0, 5.0, 11.0)
            .rect(B, 6.0, 0.0, 11.0, 11.0)
            .build("s-stripe"),
        Painter::new()
            .rect(R, 0.0, 0.0, 5.0, 5.0)
            .rect(G, 6.0, 0.0, 11.0, 5.0)
            .rect(G, 0.0, 6.0, 5.0, 11.0)
            .rect(B, 6.0, 6.0, 11.0, 11.0)
            .build("rggb-mosaic"),
        Painter::new()
            .disc(R, 3.0, 3.0, 2.2)
            .disc(G, 9.0, 3.0, 2.2)
            .disc(B, 6.0, 8.5, 2.2)
            .build("rgb-triad-dots"),
        Painter::new()
            .paint(R, |x, y| ((x + y) as usize / 2).is_multiple_of(3))
            .paint(G, |x, y| ((x + y) as usize / 2) % 3 == 1)
            .paint(B, |x, y| ((x + y) as usize / 2) % 3 == 2)
            .build("rgb-diagonal"),
        Painter::new()
            .paint(R, |x, y| ((x + (y - 6.0).abs()) as usize / 2).is_multiple_of(3))
            .paint(G, |x, y| ((x + (y - 6.0).abs()) as usize / 2) % 3 == 1)
            .paint(B, |x, y| ((x + (y - 6.0).abs()) as usize / 2) % 3 == 2)
            .build("rgb-chevron"),
        Painter::new()
            .rect(R, 0.0, 0.0, 5.0, 5.0)
            .rect(G, 6.0, 0.0, 11.0, 5.0)
            .rect(B, 0.0, 6.0, 5.0, 11.0)
            .rect(Y, 6.0, 6.0, 11.0, 11.0)
            .build("rgby-quad"),
        Painter::new()
            .disc(R, 2.0, 6.0, 1.8)
            .disc(G, 6.0, 6.0, 1.8)
            .disc(B, 10.0, 6.0, 1.8)
            .disc(R, 0.0, 0.0, 1.8)
            .disc(G, 4.0, 0.0, 1.8)
            .disc(B, 8.0, 0.0, 1.8)
            .disc(R, 12.0, 0.0, 1.8)
            .disc(R, 0.0, 12.0, 1.8)
            .disc(G, 4.0, 12.0, 1.8)
            .disc(B, 8.0, 12.0, 1.8)
            .disc(R, 12.0, 12.0, 1.8)
            .build("crt-shadow-mask"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nineteen_distinct_valid_layouts() {
        let layouts = default_layouts();
        assert_eq!(layouts.len(), 19);
        for (i, a) in layouts.iter().enumerate() {
            a.validate().unwrap();
            for b in &layouts[i + 1..] {
                assert_ne!(a.name, b.name);
                assert_ne!(a.tile, b.tile, "{} duplicates {}", a.name, b.name);
            }
        }
    }

    #[test]
    fn bgr_mirrors_rgb_channel_order() {
        let layouts = default_layouts();
        let rgb = &layouts[0];
        let bgr = &layouts[1];
        assert_eq!(rgb.tile[0][0], R);
        assert_eq!(bgr.tile[0][0], B);
        assert_eq!(rgb.tile[0][8], B);
        assert_eq!(bgr.tile[0][8], R);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let layouts = default_layouts();
        let back = layouts_from_json(&layouts_to_json(&layouts), Path::new("l.json")).unwrap();
        assert_eq!(back, layouts);
        let mut dark = layouts[0].clone();
        dark.tile = vec![vec![[0; 3]; TILE]; TILE];
        assert!(matches!(dark.validate(), Err(Error::Validation(_))));
        let mut small = layouts[0].clone();
        small.tile.pop();
        assert!(matches!(small.validate(), Err(Error::Shape(_))));
    }

    #[test]
    fn checked_in_fixture_matches_builder() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/subpixel_layouts.json");
        assert_eq!(load_layouts(&path).unwrap(), default_layouts());
    }
}
