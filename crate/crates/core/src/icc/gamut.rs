//! Profile-to-profile gamut mapping and the camera color-diversity operation.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::primaries::WORKING_SPACES;
use super::profile::IccProfile;
use crate::error::{Error, Result};
use crate::image::{ColorMode, ImageBuffer};
use crate::rng::Rng;
use crate::OpOutput;

pub const PROFILE_BANK_VERSION: u32 = 1;

/// Relative-colorimetric transform from `src` to `dst` with clipping.
pub fn gamut_map(img: &ImageBuffer, src: &IccProfile, dst: &IccProfile) -> Result<ImageBuffer> {
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("gamut mapping needs RGB, got {}", img.mode())));
    }
    Ok(img.map_pixels(ColorMode::RGB, |s, d| {
        let out = map_pixel([f64::from(s[0]), f64::from(s[1]), f64::from(s[2])], src, dst);
        for (o, v) in d.iter_mut().zip(out) {
            *o = v as f32;
        }
    }))
}

pub fn map_pixel(rgb: [f64; 3], src: &IccProfile, dst: &IccProfile) -> [f64; 3] {
    dst.from_pcs(src.to_pcs(rgb))
}

/// An immutable, indexed collection of RGB profiles.
#[derive(Debug, Clone)]
pub struct ProfileBank {
    profiles: Vec<Arc<IccProfile>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BankIndex {
    version: u32,
    profiles: Vec<BankEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BankEntry {
    name: String,
    file: String,
}

impl ProfileBank {
    pub fn new(profiles: Vec<IccProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Config("profile bank is empty".into()));
        }
        Ok(Self {
            profiles: profiles.into_iter().map(Arc::new).collect(),
        })
    }

    /// The 11 synthesized working spaces, each encoded and re-parsed so the
    /// bank holds exactly what a profile file would yield.
    pub fn standard() -> Self {
        let profiles = WORKING_SPACES
            .iter()
            .map(|ws| IccProfile::parse(&ws.icc_bytes()?))
            .collect::<Result<Vec<_>>>()
            .expect("built-in working spaces are valid");
        Self::new(profiles).expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, i: usize) -> &IccProfile {
        &self.profiles[i]
    }

    pub fn by_name(&self, name: &str) -> Option<&IccProfile> {
        self.profiles.iter().find(|p| p.name() == name).map(|p| &**p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &IccProfile> {
        self.profiles.iter().map(|p| &**p)
    }

    pub fn draw(&self, rng: &mut Rng) -> &IccProfile {
        &self.profiles[rng.gen_range(0..self.profiles.len())]
    }

    /// Reads `bank.json` and the `profiles/*.icc` files it lists.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let index_path = dir.join("bank.json");
        let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: BankIndex = serde_json::from_str(&text).map_err(|e| Error::json(&index_path, e))?;
        if index.version != PROFILE_BANK_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported bank version {}",
                index_path.display(),
                index.version
            )));
        }
        let profiles = index
            .profiles
            .iter()
            .map(|entry| {
                let path = dir.join(&entry.file);
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                IccProfile::parse(&bytes)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(profiles)
    }

    /// Writes every profile to `profiles/{name}.icc` and the `bank.json` index.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let profile_dir = dir.join("profiles");
        fs::create_dir_all(&profile_dir).map_err(|e| Error::io(&profile_dir, e))?;
        let mut entries = Vec::new();
        for p in self.iter() {
            let file = format!("profiles/{}.icc", p.name());
            let path = dir.join(&file);
            fs::write(&path, p.to_bytes()).map_err(|e| Error::io(&path, e))?;
            entries.push(BankEntry {
                name: p.name().to_string(),
                file,
            });
        }
        let index = BankIndex {
            version: PROFILE_BANK_VERSION,
            profiles: entries,
        };
        let path = dir.join("bank.json");
        let json = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

/// Maps the image between two independently drawn profiles.
pub fn color_diversity(img: &ImageBuffer, rng: &mut Rng, bank: &ProfileBank) -> Result<OpOutput> {
    if bank.is_empty() {
        return Err(Error::Config("color diversity needs a non-empty profile bank".into()));
    }
    let src = bank.draw(rng);
    let dst = bank.draw(rng);
    let image = gamut_map(img, src, dst)?;
    Ok(OpOutput {
        image,
        assets: vec![format!("icc:{}", src.name()), format!("icc:{}", dst.name())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn palette() -> ImageBuffer {
        ImageBuffer::from_fn(16, 16, ColorMode::RGB, |x, y, c| {
            [x as f32 / 15.0, y as f32 / 15.0, ((x * 7 + y * 3) % 16) as f32 / 15.0][c]
        })
    }

    #[test]
    fn same_profile_is_identity_within_one_step() {
        let img = palette();
        for p in ProfileBank::standard().iter() {
            let out = gamut_map(&img, p, p).unwrap();
            let worst = img
                .data()
                .iter()
                .zip(out.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f32, f32::max);
            assert!(worst <= 1.0 / 255.0, "{}: {worst}", p.name());
        }
    }

    #[test]
    fn white_is_preserved_for_every_pair() {
        let bank = ProfileBank::standard();
        for a in bank.iter() {
            for b in bank.iter() {
                let w = map_pixel([1.0, 1.0, 1.0], a, b);
                assert!(w.iter().all(|v| (v - 1.0).abs() <= 1.0 / 255.0), "{} -> {}: {w:?}", a.name(), b.name());
            }
        }
    }

    #[test]
    fn non_rgb_is_rejected() {
        let bank = ProfileBank::standard();
        let l = ImageBuffer::filled(2, 2, ColorMode::L, &[0.5]).unwrap();
        assert!(matches!(gamut_map(&l, bank.get(0), bank.get(1)), Err(Error::Mode(_))));
    }

    #[test]
    fn single_profile_bank_is_identity() {
        let bank = ProfileBank::new(vec![ProfileBank::standard().get(3).clone()]).unwrap();
        let img = palette();
        let out = color_diversity(&img, &mut rng_from(&[5]), &bank).unwrap();
        assert!(img.data().iter().zip(out.image.data()).all(|(a, b)| (a - b).abs() <= 1.0 / 255.0));
    }

    #[test]
    fn empty_bank_is_a_configuration_error() {
        assert!(matches!(ProfileBank::new(vec![]), Err(Error::Config(_))));
    }

    #[test]
    fn draws_are_reproducible() {
        let bank = ProfileBank::standard();
        let img = palette();
        let a = color_diversity(&img, &mut rng_from(&[9, 9]), &bank).unwrap();
        let b = color_diversity(&img, &mut rng_from(&[9, 9]), &bank).unwrap();
        assert_eq!(a.assets, b.assets);
        assert_eq!(a.image, b.image);
    }

    #[test]
    fn source_draw_frequencies_are_uniform() {
        let bank = ProfileBank::standard();
        let mut rng = rng_from(&[2024]);
        let mut counts = vec![0usize; bank.len()];
        for _ in 0..10_000 {
            let src = bank.draw(&mut rng).name().to_string();
            bank.draw(&mut rng);
            counts[bank.iter().position(|p| p.name() == src).unwrap()] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 1.0 / 11.0).abs() <= 0.01, "frequency {f}");
        }
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bank = ProfileBank::standard();
        bank.write_dir(dir.path()).unwrap();
        let loaded = ProfileBank::load_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 11);
        for (a, b) in bank.iter().zip(loaded.iter()) {
            assert_eq!(a, b);
        }
    }
}
