//! The asset banks that operations draw from, and their on-disk layout.
//!
//! ```text
//! banks.json                  counts and seed
//! icc/bank.json, icc/profiles/*.icc
//! presets.json
//! moire/index.json, moire/layouts.json, moire/{layout}_{warp}.png
//! bluenoise/index.json, bluenoise/{mode}_{instance}.png
//! backgrounds/*.{png,jpg}     optional; a procedural set is used otherwise
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icc::{PresetBank, ProfileBank};
use crate::print::{build_bluenoise_bank_with, load_bluenoise_bank, save_bluenoise_bank, BlueNoiseTexture, BN_SIZE};
use crate::replay::{
    default_layouts, load_moire_bank, save_moire_bank, synth_moire_bank, BackgroundBank, MoireSynthConfig,
    MoireTexture,
};

/// Environment variable naming the default bank directory.
pub const BANKS_ENV: &str = "RECAPTURE_BANKS";
pub const BANKS_INDEX_VERSION: u32 = 1;

/// Bank directory from `BANKS_ENV`, if set.
pub fn default_bank_dir() -> Option<PathBuf> {
    std::env::var_os(BANKS_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankSizes {
    pub moire: usize,
    pub bluenoise: usize,
}

impl Default for BankSizes {
    fn default() -> Self {
        Self {
            moire: MoireSynthConfig::default().size,
            bluenoise: BN_SIZE,
        }
    }
}

/// Every bank an augmentation policy may draw from. A missing bank only
/// fails when an operation needs it.
#[derive(Debug, Clone, Default)]
pub struct AssetBanks {
    pub profiles: Option<ProfileBank>,
    pub presets: Option<PresetBank>,
    pub moire: Option<Arc<Vec<MoireTexture>>>,
    pub bluenoise: Option<Arc<Vec<BlueNoiseTexture>>>,
    pub backgrounds: Option<BackgroundBank>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BanksIndex {
    version: u32,
    seed: u64,
    profiles: usize,
    presets: usize,
    moire: usize,
    bluenoise: usize,
}

fn missing(name: &str) -> Error {
    Error::MissingBank(format!("{name} bank not loaded; run `gen-banks` first"))
}

impl AssetBanks {
    /// Builds every bank in memory from `seed`.
    pub fn generate(seed: u64, sizes: BankSizes) -> Result<Self> {
        let moire = synth_moire_bank(
            &default_layouts(),
            seed,
            MoireSynthConfig {
                size: sizes.moire,
                ..MoireSynthConfig::default()
            },
        )?;
        let bluenoise = build_bluenoise_bank_with(seed, sizes.bluenoise)?;
        Ok(Self {
            profiles: Some(ProfileBank::standard()),
            presets: Some(PresetBank::standard()),
            moire: Some(Arc::new(moire)),
            bluenoise: Some(Arc::new(bluenoise)),
            backgrounds: Some(BackgroundBank::procedural()),
        })
    }

    /// Writes every loaded bank under `dir`. Backgrounds are not written.
    pub fn write_dir(&self, dir: &Path, seed: u64) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let profiles = self.profiles()?;
        profiles.write_dir(&dir.join("icc"))?;
        let presets = self.presets()?;
        presets.save(&dir.join("presets.json"))?;
        let moire = self.moire()?;
        save_moire_bank(moire, seed, dir, true)?;
        let bluenoise = self.bluenoise()?;
        save_bluenoise_bank(bluenoise, seed, dir)?;
        let index = BanksIndex {
            version: BANKS_INDEX_VERSION,
            seed,
            profiles: profiles.len(),
            presets: presets.len(),
            moire: moire.len(),
            bluenoise: bluenoise.len(),
        };
        let path = dir.join("banks.json");
        let json = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    /// Loads a directory written by [`AssetBanks::write_dir`].
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let index_path = dir.join("banks.json");
        if !index_path.is_file() {
            return Err(Error::MissingBank(format!(
                "{} not found; run `gen-banks --out {}` first",
                index_path.display(),
                dir.display()
            )));
        }
        let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: BanksIndex = serde_json::from_str(&text).map_err(|e| Error::json(&index_path, e))?;
        if index.version != BANKS_INDEX_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported bank index version {}",
                index_path.display(),
                index.version
            )));
        }
        let moire = load_moire_bank(dir)?;
        for t in &moire {
            let png = dir.join("moire").join(format!("{}.png", t.id()));
            if !png.is_file() {
                return Err(Error::MissingBank(format!("{} not found", png.display())));
            }
        }
        let bluenoise = load_bluenoise_bank(dir)?;
        let counts = [
            ("moire", moire.len(), index.moire),
            ("blue-noise", bluenoise.len(), index.bluenoise),
        ];
        for (name, got, want) in counts {
            if got != want {
                return Err(Error::Validation(format!("{name} bank has {got} entries, index says {want}")));
            }
        }
        Ok(Self {
            profiles: Some(ProfileBank::load_dir(&dir.join("icc"))?),
            presets: Some(PresetBank::load(&dir.join("presets.json"))?),
            moire: Some(Arc::new(moire)),
            bluenoise: Some(Arc::new(bluenoise)),
            backgrounds: Some(BackgroundBank::load_or_procedural(&dir.join("backgrounds"))?),
        })
    }

    pub fn profiles(&self) -> Result<&ProfileBank> {
        self.profiles.as_ref().ok_or_else(|| missing("ICC profile"))
    }

    pub fn presets(&self) -> Result<&PresetBank> {
        self.presets.as_ref().ok_or_else(|| missing("press preset"))
    }

    pub fn moire(&self) -> Result<&[MoireTexture]> {
        self.moire.as_deref().map(Vec::as_slice).ok_or_else(|| missing("moiré"))
    }

    pub fn bluenoise(&self) -> Result<&[BlueNoiseTexture]> {
        self.bluenoise.as_deref().map(Vec::as_slice).ok_or_else(|| missing("blue-noise"))
    }

    pub fn backgrounds(&self) -> Result<&BackgroundBank> {
        self.backgrounds.as_ref().ok_or_else(|| missing("background"))
    }
}
