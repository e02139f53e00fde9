//! Policy sampling, operation dispatch and spoof-label bookkeeping.
//!
//! A policy holds five sub-policies of two `(operation, magnitude index)`
//! pairs. Each image draws one sub-policy and applies both operations in
//! order. Some operations force the spoof label; labels never move back.

pub mod extra;
pub mod registry;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use registry::{magnitude_value, AugOpKind, MagnitudeRange, OpSpec, PolicyConfig, Registry, MAGNITUDE_LEVELS};

use crate::banks::AssetBanks;
use crate::capture::{hand_trembling, low_resolution, BlurDirection, BlurSpec, ResolutionSpec};
use crate::error::{Error, Result};
use crate::icc::{color_distortion, color_diversity};
use crate::image::{ColorMode, ImageBuffer};
use crate::print::{bn_halftone, sfc_halftone};
use crate::replay::{moire, specular_reflection};
use crate::rng::{derive_seed, fnv1a, rng_from, Rng};
use crate::OpOutput;

pub const SUB_POLICIES: usize = 5;
pub const OPS_PER_SUB_POLICY: usize = 2;
const POLICY_STREAM: u64 = 0x706f_6c69_6379;
const DOMAIN_STREAM: u64 = 0x646f_6d61_696e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpChoice {
    pub kind: AugOpKind,
    pub magnitude_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubPolicy {
    pub ops: [OpChoice; OPS_PER_SUB_POLICY],
}

impl SubPolicy {
    pub fn new(a: OpChoice, b: OpChoice) -> Self {
        Self { ops: [a, b] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub seed: u64,
    pub epoch: u64,
    pub sub_policies: [SubPolicy; SUB_POLICIES],
}

impl Policy {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("<policy>", e))
    }

    /// Checks every choice against `registry`.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        for op in self.sub_policies.iter().flat_map(|s| &s.ops) {
            registry.magnitude(op.kind, op.magnitude_index)?;
        }
        Ok(())
    }
}

/// The epoch's policy under the default registry.
pub fn sample_policy(seed: u64, epoch: u64) -> Policy {
    sample_policy_with(&Registry::standard(), seed, epoch)
}

/// Five sub-policies, each op drawn uniformly over the registry and the ten
/// magnitude levels, from a stream keyed by `(seed, epoch)`.
pub fn sample_policy_with(registry: &Registry, seed: u64, epoch: u64) -> Policy {
    let mut rng = rng_from(&[POLICY_STREAM, seed, epoch]);
    let mut draw = || OpChoice {
        kind: registry.ops()[rng.gen_range(0..registry.len())].kind,
        magnitude_index: rng.gen_range(0..MAGNITUDE_LEVELS),
    };
    let sub_policies = std::array::from_fn(|_| SubPolicy::new(draw(), draw()));
    Policy {
        seed,
        epoch,
        sub_policies,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

impl Label {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bonafide" | "bona-fide" | "bona_fide" | "real" | "live" => Ok(Label::Bonafide),
            "spoof" | "fake" | "attack" => Ok(Label::Spoof),
            other => Err(Error::Validation(format!("unknown label '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        }
    }
}

/// One applied operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpRecord {
    pub kind: AugOpKind,
    pub magnitude_index: usize,
    /// `None` for categorical operations.
    pub magnitude: Option<f64>,
    pub assets: Vec<String>,
    /// 32-bit words consumed from the sample's random stream.
    pub rng_words: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: ImageBuffer,
    pub label: Label,
    pub domain_id: u64,
    pub provenance: Vec<OpRecord>,
}

impl Sample {
    pub fn new(image: ImageBuffer, label: Label, domain_id: u64) -> Self {
        Self {
            image,
            label,
            domain_id,
            provenance: Vec::new(),
        }
    }
}

/// Stable identifier for a named source domain.
pub fn domain_id(name: &str) -> u64 {
    fnv1a(name.as_bytes())
}

/// Identifier of the synthetic domain spawned from `source` by `sub`.
pub fn derive_domain(source: u64, sub: &SubPolicy) -> u64 {
    let mut parts = vec![DOMAIN_STREAM, source];
    parts.extend(sub.ops.iter().map(|o| o.kind.code()));
    derive_seed(&parts)
}

fn real(kind: AugOpKind, m: Option<f64>) -> Result<f64> {
    m.ok_or_else(|| Error::Config(format!("{kind} needs a numeric magnitude")))
}

/// Applies a single operation at a resolved magnitude.
pub fn apply_op(
    img: &ImageBuffer,
    kind: AugOpKind,
    magnitude: Option<f64>,
    banks: &AssetBanks,
    rng: &mut Rng,
) -> Result<OpOutput> {
    let plain = |image| Ok(OpOutput { image, assets: Vec::new() });
    match kind {
        AugOpKind::ColorDiversity => color_diversity(img, rng, banks.profiles()?),
        AugOpKind::LowResolution => plain(low_resolution(img, ResolutionSpec::new(real(kind, magnitude)?)?)?),
        AugOpKind::HandTrembling => {
            let direction = BlurDirection::ALL[rng.gen_range(0..BlurDirection::ALL.len())];
            let spec = BlurSpec::new(real(kind, magnitude)? as usize, direction)?;
            Ok(OpOutput {
                image: hand_trembling(img, spec)?,
                assets: vec![format!("direction:{direction:?}")],
            })
        }
        AugOpKind::SpecularReflection => specular_reflection(img, rng, banks.backgrounds()?, real(kind, magnitude)?),
        AugOpKind::MoirePattern => moire(img, rng, banks.moire()?, real(kind, magnitude)?),
        AugOpKind::SFCHalftone => plain(sfc_halftone(img, real(kind, magnitude)?)?),
        AugOpKind::BNHalftone => bn_halftone(img, rng, banks.bluenoise()?, real(kind, magnitude)?),
        AugOpKind::ColorDistortion => color_distortion(img, rng, banks.presets()?, banks.profiles()?),
        AugOpKind::HorizontalFlip => plain(extra::horizontal_flip(img)),
        AugOpKind::Rotate => {
            let deg = extra::signed(rng, real(kind, magnitude)?);
            Ok(OpOutput {
                image: extra::rotate(img, deg),
                assets: vec![format!("angle:{deg}")],
            })
        }
        AugOpKind::Brightness => {
            let shift = extra::signed(rng, real(kind, magnitude)?);
            Ok(OpOutput {
                image: extra::brightness(img, 1.0 + shift)?,
                assets: vec![format!("factor:{}", 1.0 + shift)],
            })
        }
        AugOpKind::Cutout => {
            let fraction = real(kind, magnitude)?;
            let side = (fraction * img.width().min(img.height()) as f64).round() as usize;
            let x0 = rng.gen_range(0..=img.width() - side);
            let y0 = rng.gen_range(0..=img.height() - side);
            Ok(OpOutput {
                image: extra::cutout(img, fraction, x0, y0),
                assets: vec![format!("cutout@{x0},{y0}")],
            })
        }
    }
}

/// Applies both operations of `sub` in order and updates label, domain and
/// provenance.
pub fn apply_subpolicy(
    sample: Sample,
    sub: &SubPolicy,
    registry: &Registry,
    banks: &AssetBanks,
    rng: &mut Rng,
) -> Result<Sample> {
    if sample.image.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("augmentation expects RGB, got {}", sample.image.mode())));
    }
    let Sample {
        mut image,
        mut label,
        domain_id,
        mut provenance,
    } = sample;
    for op in &sub.ops {
        let magnitude = registry.magnitude(op.kind, op.magnitude_index)?;
        let start = rng.get_word_pos();
        let out = apply_op(&image, op.kind, magnitude, banks, rng)?;
        image = out.image;
        if op.kind.spoof_forcing() {
            label = Label::Spoof;
        }
        provenance.push(OpRecord {
            kind: op.kind,
            magnitude_index: op.magnitude_index,
            magnitude,
            assets: out.assets,
            rng_words: (rng.get_word_pos() - start) as u64,
        });
    }
    Ok(Sample {
        image,
        label,
        domain_id: derive_domain(domain_id, sub),
        provenance,
    })
}

/// Draws one of the policy's sub-policies uniformly and applies it.
pub fn augment_sample(
    sample: Sample,
    policy: &Policy,
    registry: &Registry,
    banks: &AssetBanks,
    rng: &mut Rng,
) -> Result<(usize, Sample)> {
    let choice = rng.gen_range(0..SUB_POLICIES);
    let out = apply_subpolicy(sample, &policy.sub_policies[choice], registry, banks, rng)?;
    Ok((choice, out))
}
