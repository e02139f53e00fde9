//! RGB→CMYK separation, a parametric press model and the printer
//! color-distortion operation.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gamut::{gamut_map, ProfileBank};
use super::primaries::WORKING_SPACES;
use super::profile::IccProfile;
use crate::error::{Error, Result};
use crate::image::{ColorMode, ImageBuffer};
use crate::rng::Rng;
use crate::OpOutput;

pub const PRESET_SCHEMA_VERSION: u32 = 1;

/// Naive separation of one pixel. Pure black maps to `(0, 0, 0, 1)`.
pub fn rgb_to_cmyk_pixel(rgb: [f64; 3]) -> [f64; 4] {
    let k = 1.0 - rgb[0].max(rgb[1]).max(rgb[2]);
    if k >= 1.0 {
        return [0.0, 0.0, 0.0, 1.0];
    }
    let d = 1.0 - k;
    [
        (1.0 - rgb[0] - k) / d,
        (1.0 - rgb[1] - k) / d,
        (1.0 - rgb[2] - k) / d,
        k,
    ]
}

/// Inverse of [`rgb_to_cmyk_pixel`] for an ideal press.
pub fn cmyk_to_rgb_pixel(cmyk: [f64; 4]) -> [f64; 3] {
    let k = 1.0 - cmyk[3];
    [(1.0 - cmyk[0]) * k, (1.0 - cmyk[1]) * k, (1.0 - cmyk[2]) * k]
}

pub fn rgb_to_cmyk(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("CMYK separation needs RGB, got {}", img.mode())));
    }
    Ok(img.map_pixels(ColorMode::CMYK, |s, d| {
        let cmyk = rgb_to_cmyk_pixel([f64::from(s[0]), f64::from(s[1]), f64::from(s[2])]);
        for (o, v) in d.iter_mut().zip(cmyk) {
            *o = v as f32;
        }
    }))
}

/// A printing condition: per-ink dot gain and RGB absorption of each ink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressPreset {
    pub name: String,
    /// Dot gain per ink (C, M, Y, K), each in `[0, 0.5]`.
    pub dot_gain: [f64; 4],
    /// RGB absorption of full coverage of each ink (rows C, M, Y, K).
    pub ink_tint: [[f64; 3]; 4],
}

impl PressPreset {
    /// Identity-like inks with no dot gain.
    pub fn neutral() -> Self {
        Self {
            name: "neutral".into(),
            dot_gain: [0.0; 4],
            ink_tint: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.dot_gain.iter().find(|g| !(0.0..=0.5).contains(*g)) {
            return Err(Error::Validation(format!("{}: dot gain {g} outside [0, 0.5]", self.name)));
        }
        if self.ink_tint.iter().flatten().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Validation(format!("{}: ink tints must be non-negative", self.name)));
        }
        let black = self.render_pixel([0.0, 0.0, 0.0, 1.0]);
        if black.iter().any(|&v| v > 0.1) {
            return Err(Error::Validation(format!(
                "{}: full black ink renders to {black:?}, expected every channel <= 0.1",
                self.name
            )));
        }
        Ok(())
    }

    /// Renders one CMYK pixel to RGB.
    pub fn render_pixel(&self, cmyk: [f64; 4]) -> [f64; 3] {
        let mut rgb = [1.0; 3];
        for (ink, &c) in cmyk.iter().enumerate() {
            let coverage = c.clamp(0.0, 1.0).powf(1.0 / (1.0 + self.dot_gain[ink]));
            for (out, tint) in rgb.iter_mut().zip(self.ink_tint[ink]) {
                *out -= tint * coverage;
            }
        }
        rgb.map(|v| v.clamp(0.0, 1.0))
    }
}

/// The seven default printing conditions.
pub fn default_presets() -> Vec<PressPreset> {
    let p = |name: &str, dot_gain: [f64; 4], ink_tint: [[f64; 3]; 4]| PressPreset {
        name: name.into(),
        dot_gain,
        ink_tint,
    };
    vec![
        p(
            "sheetfed-coated",
            [0.12, 0.12, 0.10, 0.14],
            [[0.88, 0.32, 0.08], [0.12, 0.86, 0.42], [0.02, 0.10, 0.92], [0.94, 0.94, 0.92]],
        ),
        p(
            "sheetfed-uncoated",
            [0.22, 0.22, 0.20, 0.25],
            [[0.78, 0.30, 0.12], [0.14, 0.76, 0.40], [0.04, 0.10, 0.82], [0.90, 0.90, 0.90]],
        ),
        p(
            "newsprint",
            [0.32, 0.32, 0.30, 0.36],
            [[0.70, 0.28, 0.15], [0.16, 0.68, 0.38], [0.06, 0.12, 0.74], [0.91, 0.91, 0.90]],
        ),
        p(
            "web-coated",
            [0.16, 0.16, 0.14, 0.18],
            [[0.86, 0.28, 0.06], [0.10, 0.84, 0.45], [0.03, 0.08, 0.90], [0.95, 0.95, 0.94]],
        ),
        p(
            "commercial-gloss",
            [0.08, 0.08, 0.07, 0.10],
            [[0.90, 0.35, 0.10], [0.08, 0.88, 0.38], [0.02, 0.06, 0.94], [0.96, 0.96, 0.95]],
        ),
        p(
            "offset-matte",
            [0.19, 0.18, 0.16, 0.20],
            [[0.84, 0.30, 0.04], [0.12, 0.80, 0.30], [0.01, 0.09, 0.88], [0.93, 0.93, 0.93]],
        ),
        p(
            "inkjet-photo",
            [0.03, 0.03, 0.03, 0.04],
            [[0.95, 0.20, 0.05], [0.05, 0.95, 0.20], [0.00, 0.05, 0.97], [0.97, 0.97, 0.97]],
        ),
    ]
}

#[derive(Debug, Serialize, Deserialize)]
struct PresetFile {
    version: u32,
    presets: Vec<PressPreset>,
}

/// An immutable, indexed collection of press presets.
#[derive(Debug, Clone)]
pub struct PresetBank {
    presets: Vec<PressPreset>,
}

impl PresetBank {
    pub fn new(presets: Vec<PressPreset>) -> Result<Self> {
        if presets.is_empty() {
            return Err(Error::Config("press preset bank is empty".into()));
        }
        for p in &presets {
            p.validate()?;
        }
        Ok(Self { presets })
    }

    pub fn standard() -> Self {
        Self::new(default_presets()).expect("default presets are valid")
    }

    pub fn len(&self) -> usize {
        self.presets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.presets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PressPreset> {
        self.presets.iter()
    }

    pub fn draw(&self, rng: &mut Rng) -> &PressPreset {
        &self.presets[rng.gen_range(0..self.presets.len())]
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let file: PresetFile = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
        if file.version != PRESET_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported preset schema version {}",
                origin.display(),
                file.version
            )));
        }
        Self::new(file.presets)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PresetFile {
            version: PRESET_SCHEMA_VERSION,
            presets: self.presets.clone(),
        })
        .expect("presets serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub fn cmyk_render(img: &ImageBuffer, preset: &PressPreset) -> Result<ImageBuffer> {
    if img.mode() != ColorMode::CMYK {
        return Err(Error::Mode(format!("press rendering needs CMYK, got {}", img.mode())));
    }
    Ok(img.map_pixels(ColorMode::RGB, |s, d| {
        let rgb = preset.render_pixel([
            f64::from(s[0]),
            f64::from(s[1]),
            f64::from(s[2]),
            f64::from(s[3]),
        ]);
        for (o, v) in d.iter_mut().zip(rgb) {
            *o = v as f32;
        }
    }))
}

/// The sRGB profile that press renders are interpreted in.
pub fn reference_srgb() -> &'static IccProfile {
    static SRGB: OnceLock<IccProfile> = OnceLock::new();
    SRGB.get_or_init(|| {
        IccProfile::parse(&WORKING_SPACES[0].icc_bytes().expect("sRGB encodes")).expect("sRGB parses")
    })
}

/// Separates to CMYK, prints with a drawn preset, and maps the print into a
/// drawn RGB profile.
pub fn color_distortion(
    img: &ImageBuffer,
    rng: &mut Rng,
    presets: &PresetBank,
    profiles: &ProfileBank,
) -> Result<OpOutput> {
    if presets.is_empty() || profiles.is_empty() {
        return Err(Error::Config("color distortion needs preset and profile banks".into()));
    }
    let cmyk = rgb_to_cmyk(img)?;
    let preset = presets.draw(rng);
    let dst = profiles.draw(rng);
    let printed = cmyk_render(&cmyk, preset)?;
    let image = gamut_map(&printed, reference_srgb(), dst)?;
    Ok(OpOutput {
        image,
        assets: vec![format!("press:{}", preset.name), format!("icc:{}", dst.name())],
    })
}
