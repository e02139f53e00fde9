//! Specular reflection from a bank of background scenes.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::image::{check_ratio, convex_blend, resize_nearest, ColorMode, ImageBuffer};
use crate::rng::Rng;
use crate::OpOutput;

pub const REFLECTION_GAMMA: (f64, f64) = (0.03, 0.2);
pub const PROCEDURAL_BACKGROUNDS: usize = 16;
const PROCEDURAL_SIZE: usize = 256;

#[derive(Debug, Clone)]
pub struct Background {
    pub name: String,
    pub image: Arc<ImageBuffer>,
}

#[derive(Debug, Clone)]
pub struct BackgroundBank {
    images: Vec<Background>,
}

impl BackgroundBank {
    pub fn new(images: Vec<Background>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::Config("background bank is empty".into()));
        }
        for b in &images {
            if b.image.mode() != ColorMode::RGB || b.image.is_empty() {
                return Err(Error::Mode(format!("background '{}' must be a non-empty RGB image", b.name)));
            }
        }
        Ok(Self { images })
    }

    /// Loads every `*.png`/`*.jpg`/`*.jpeg` in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
            })
            .collect();
        paths.sort();
        let images = paths
            .iter()
            .map(|p| {
                Ok(Background {
                    name: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                    image: Arc::new(ImageBuffer::load(p)?.to_rgb()?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(images)
    }

    /// Uses `dir` when it exists and holds images, otherwise the procedural set.
    pub fn load_or_procedural(dir: &Path) -> Result<Self> {
        if dir.is_dir() {
            match Self::load_dir(dir) {
                Err(Error::Config(_)) => {}
                other => return other,
            }
        }
        Ok(Self::procedural())
    }

    /// Sixteen synthetic scenes: gradients, stripes, discs and window grids.
    pub fn procedural() -> Self {
        let images = (0..PROCEDURAL_BACKGROUNDS)
            .map(|i| Background {
                name: format!("procedural-{i:02}"),
                image: Arc::new(procedural_scene(i, PROCEDURAL_SIZE)),
            })
            .collect();
        Self { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, i: usize) -> &Background {
        &self.images[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Background> {
        self.images.iter()
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for b in &self.images {
            let stem = Path::new(&b.name).file_stem().unwrap_or_default().to_string_lossy().into_owned();
            b.image.save(dir.join(format!("{stem}.png")))?;
        }
        Ok(())
    }
}

fn procedural_scene(i: usize, size: usize) -> ImageBuffer {
    let hue = |t: f64| {
        let a = std::f64::consts::TAU * t;
        [0.5 + 0.4 * a.cos(), 0.5 + 0.4 * (a - 2.1).cos(), 0.5 + 0.4 * (a + 2.1).cos()]
    };
    let c0 = hue(i as f64 / PROCEDURAL_BACKGROUNDS as f64);
    let c1 = hue(i as f64 / PROCEDURAL_BACKGROUNDS as f64 + 0.37);
    let s = size as f64;
    ImageBuffer::from_fn(size, size, ColorMode::RGB, move |x, y, c| {
        let (u, v) = (x as f64 / s, y as f64 / s);
        let t = match i % 4 {
            0 => u,
            1 => 0.5 * (u + v),
            2 => {
                let r = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
                (r * 1.8).min(1.0)
            }
            _ => v,
        };
        let mut px = c0[c] * (1.0 - t) + c1[c] * t;
        match (i / 4) % 4 {
            // light fixture: a bright disc
            0 => {
                let (cx, cy) = (0.3 + 0.05 * (i % 5) as f64, 0.35);
                if (u - cx).powi(2) + (v - cy).powi(2) < 0.02 {
                    px = 0.95;
                }
            }
            // window panes
            1 => {
                if u > 0.2 && u < 0.8 && v > 0.15 && v < 0.7 && ((u * 10.0).fract() > 0.1 && (v * 10.0).fract() > 0.1) {
                    px = 0.6 + 0.35 * px;
                }
            }
            // blinds
            2 => {
                if ((v * 24.0) as usize).is_multiple_of(2) {
                    px *= 0.7;
                }
            }
            // soft highlight band
            _ => {
                let d = (u - v + 0.1 * (i % 3) as f64).abs();
                px += 0.4 * (-d * d * 60.0).exp();
            }
        }
        px.clamp(0.0, 1.0) as f32
    })
}

/// Blends a random crop of a randomly chosen background into the image.
pub fn specular_reflection(img: &ImageBuffer, rng: &mut Rng, bank: &BackgroundBank, gamma: f64) -> Result<OpOutput> {
    check_ratio("reflection", gamma, REFLECTION_GAMMA.0, REFLECTION_GAMMA.1)?;
    if bank.is_empty() {
        return Err(Error::Config("background bank is empty".into()));
    }
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("reflection expects RGB, got {}", img.mode())));
    }
    let index = rng.gen_range(0..bank.len());
    let bg = &bank.images[index];
    let (w, h) = (img.width(), img.height());
    let source = if bg.image.width() < w || bg.image.height() < h {
        // smallest aspect-preserving upscale that covers the image
        let f = (w as f64 / bg.image.width() as f64).max(h as f64 / bg.image.height() as f64);
        let nw = ((bg.image.width() as f64 * f).ceil() as usize).max(w);
        let nh = ((bg.image.height() as f64 * f).ceil() as usize).max(h);
        resize_nearest(&bg.image, nw, nh)?
    } else {
        (*bg.image).clone()
    };
    let x0 = rng.gen_range(0..=source.width() - w);
    let y0 = rng.gen_range(0..=source.height() - h);
    let crop = source.crop(x0, y0, w, h)?;
    Ok(OpOutput {
        image: convex_blend(img, &crop, gamma)?,
        assets: vec![format!("background:{}@{x0},{y0}", bg.name)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn white_bank() -> BackgroundBank {
        BackgroundBank::new(vec![Background {
            name: "white".into(),
            image: Arc::new(ImageBuffer::filled(8, 8, ColorMode::RGB, &[1.0; 3]).unwrap()),
        }])
        .unwrap()
    }

    #[test]
    fn minimum_ratio_over_white() {
        let img = ImageBuffer::filled(20, 12, ColorMode::RGB, &[0.0; 3]).unwrap();
        let out = specular_reflection(&img, &mut rng_from(&[1]), &white_bank(), 0.03).unwrap();
        assert!(out.image.to_u8().iter().all(|&v| (i32::from(v) - 8).abs() <= 1));
        assert!(out.image.data().iter().all(|&v| (f64::from(v) - 0.03).abs() <= 1.0 / 255.0));
    }

    #[test]
    fn procedural_fallback_has_sixteen_distinct_scenes() {
        let bank = BackgroundBank::procedural();
        assert_eq!(bank.len(), 16);
        for i in 0..16 {
            for j in i + 1..16 {
                assert_ne!(bank.get(i).image, bank.get(j).image);
            }
        }
        let missing = BackgroundBank::load_or_procedural(Path::new("/nonexistent/backgrounds")).unwrap();
        assert_eq!(missing.len(), 16);
    }

    #[test]
    fn reproducible_and_convex() {
        let bank = BackgroundBank::procedural();
        let img = ImageBuffer::from_fn(300, 90, ColorMode::RGB, |x, y, c| ((x + 2 * y + c) % 9) as f32 / 8.0);
        let a = specular_reflection(&img, &mut rng_from(&[4]), &bank, 0.2).unwrap();
        let b = specular_reflection(&img, &mut rng_from(&[4]), &bank, 0.2).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.image.width(), a.image.height()), (300, 90));
    }

    #[test]
    fn ratio_and_mode_checks() {
        let img = ImageBuffer::filled(4, 4, ColorMode::RGB, &[0.5; 3]).unwrap();
        assert!(matches!(
            specular_reflection(&img, &mut rng_from(&[0]), &white_bank(), 0.5),
            Err(Error::Range(_))
        ));
        let gray = ImageBuffer::filled(4, 4, ColorMode::L, &[0.5]).unwrap();
        assert!(matches!(
            specular_reflection(&gray, &mut rng_from(&[0]), &white_bank(), 0.1),
            Err(Error::Mode(_))
        ));
        assert!(matches!(BackgroundBank::new(vec![]), Err(Error::Config(_))));
    }

    #[test]
    fn directory_round_trip_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        BackgroundBank::procedural().write_dir(dir.path()).unwrap();
        let loaded = BackgroundBank::load_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 16);
        assert_eq!(loaded.get(0).name, "procedural-00.png");
        assert_eq!(loaded.get(3).image.to_u8(), BackgroundBank::procedural().get(3).image.to_u8());
    }
}
