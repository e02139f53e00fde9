//! Browser demo bindings. Images cross the boundary as RGBA bytes, the
//! layout of a canvas `ImageData`.

use recapture::banks::{AssetBanks, BankSizes};
use recapture::policy::{apply_op, augment_sample, sample_policy, AugOpKind, Label, Registry, Sample};
use recapture::rng::{rng_from, sample_rng};
use recapture::{ColorMode, ImageBuffer};
use wasm_bindgen::prelude::*;

/// Small banks keep start-up under a second in the browser.
pub const DEMO_SIZES: BankSizes = BankSizes { moire: 128, bluenoise: 32 };

fn to_rgb(rgba: &[u8], width: usize, height: usize) -> Result<ImageBuffer, String> {
    ImageBuffer::from_u8(width, height, ColorMode::RGBA, rgba)
        .and_then(|img| img.to_rgb())
        .map_err(|e| e.to_string())
}

fn to_rgba(img: &ImageBuffer) -> Vec<u8> {
    img.to_u8().chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

pub struct Core {
    banks: AssetBanks,
    registry: Registry,
}

impl Core {
    pub fn new(seed: u64) -> Result<Self, String> {
        Ok(Self {
            banks: AssetBanks::generate(seed, DEMO_SIZES).map_err(|e| e.to_string())?,
            registry: Registry::standard(),
        })
    }

    pub fn op_names(&self) -> Vec<String> {
        self.registry.ops().iter().map(|s| s.kind.to_string()).collect()
    }

    /// One operation at magnitude level `level`.
    pub fn apply(&self, op: &str, level: usize, seed: u64, rgba: &[u8], width: usize, height: usize) -> Result<Vec<u8>, String> {
        let kind = AugOpKind::parse(op).map_err(|e| e.to_string())?;
        let img = to_rgb(rgba, width, height)?;
        let magnitude = self.registry.magnitude(kind, level).map_err(|e| e.to_string())?;
        let mut rng = rng_from(&[seed, kind.code(), level as u64]);
        let out = apply_op(&img, kind, magnitude, &self.banks, &mut rng).map_err(|e| e.to_string())?;
        Ok(to_rgba(&out.image))
    }

    /// Samples the policy for `(seed, epoch)` and augments the image with it.
    /// Returns the RGBA result and a JSON description of what was applied.
    pub fn augment(&self, seed: u64, epoch: u64, rgba: &[u8], width: usize, height: usize) -> Result<(Vec<u8>, String), String> {
        let policy = sample_policy(seed, epoch);
        let sample = Sample::new(to_rgb(rgba, width, height)?, Label::Bonafide, 0);
        let mut rng = sample_rng(seed, epoch, 0);
        let (choice, out) =
            augment_sample(sample, &policy, &self.registry, &self.banks, &mut rng).map_err(|e| e.to_string())?;
        let info = serde_json::json!({
            "policy": policy,
            "sub_policy_index": choice,
            "label": out.label,
            "ops": out.provenance,
        })
        .to_string();
        Ok((to_rgba(&out.image), info))
    }
}

#[wasm_bindgen]
pub struct Demo {
    core: Core,
    info: String,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        Ok(Demo {
            core: Core::new(seed.into()).map_err(|e| JsError::new(&e))?,
            info: String::new(),
        })
    }

    #[wasm_bindgen(js_name = opNames)]
    pub fn op_names(&self) -> Vec<String> {
        self.core.op_names()
    }

    pub fn apply(&self, op: &str, level: u32, seed: u32, rgba: &[u8], width: u32, height: u32) -> Result<Vec<u8>, JsError> {
        self.core
            .apply(op, level as usize, seed.into(), rgba, width as usize, height as usize)
            .map_err(|e| JsError::new(&e))
    }

    pub fn augment(&mut self, seed: u32, epoch: u32, rgba: &[u8], width: u32, height: u32) -> Result<Vec<u8>, JsError> {
        let (out, info) = self
            .core
            .augment(seed.into(), epoch.into(), rgba, width as usize, height as usize)
            .map_err(|e| JsError::new(&e))?;
        self.info = info;
        Ok(out)
    }

    /// Description of the last `augment` call as JSON.
    #[wasm_bindgen(getter)]
    pub fn info(&self) -> String {
        self.info.clone()
    }
}
