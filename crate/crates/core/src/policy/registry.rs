//! Operation kinds, magnitude ranges and the registry that policies sample.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGNITUDE_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AugOpKind {
    ColorDiversity,
    LowResolution,
    HandTrembling,
    SpecularReflection,
    MoirePattern,
    SFCHalftone,
    BNHalftone,
    ColorDistortion,
    // task-independent extras, off unless enabled by configuration
    HorizontalFlip,
    Rotate,
    Brightness,
    Cutout,
}

impl AugOpKind {
    /// The recapture operations, in registry order.
    pub const RECAPTURE: [AugOpKind; 8] = [
        AugOpKind::ColorDiversity,
        AugOpKind::LowResolution,
        AugOpKind::HandTrembling,
        AugOpKind::SpecularReflection,
        AugOpKind::MoirePattern,
        AugOpKind::SFCHalftone,
        AugOpKind::BNHalftone,
        AugOpKind::ColorDistortion,
    ];

    pub const EXTRA: [AugOpKind; 4] = [
        AugOpKind::HorizontalFlip,
        AugOpKind::Rotate,
        AugOpKind::Brightness,
        AugOpKind::Cutout,
    ];

    /// Whether applying the operation turns a bona fide sample into a spoof.
    pub fn spoof_forcing(self) -> bool {
        matches!(
            self,
            AugOpKind::SpecularReflection
                | AugOpKind::MoirePattern
                | AugOpKind::SFCHalftone
                | AugOpKind::BNHalftone
                | AugOpKind::ColorDistortion
        )
    }

    pub fn code(self) -> u64 {
        self as u64
    }

    /// Default magnitude range. Index 0 is the mildest setting.
    pub fn default_range(self) -> MagnitudeRange {
        use MagnitudeRange::*;
        match self {
            AugOpKind::ColorDiversity | AugOpKind::ColorDistortion | AugOpKind::HorizontalFlip => Categorical,
            // the grid runs from no down-sampling to 1/6
            AugOpKind::LowResolution => Real { from: 1.0, to: 1.0 / 6.0 },
            AugOpKind::HandTrembling => Integer { from: 1, to: 16 },
            AugOpKind::SpecularReflection => Real { from: 0.03, to: 0.2 },
            AugOpKind::MoirePattern => Real { from: 0.01, to: 0.3 },
            AugOpKind::SFCHalftone => Real { from: 0.01, to: 0.2 },
            AugOpKind::BNHalftone => Real { from: 0.01, to: 0.4 },
            AugOpKind::Rotate => Real { from: 0.0, to: 30.0 },
            AugOpKind::Brightness => Real { from: 0.0, to: 0.3 },
            AugOpKind::Cutout => Real { from: 0.0, to: 0.3 },
        }
    }

    /// Hard limits any configured range must respect.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            AugOpKind::LowResolution => (0.01, 1.0),
            AugOpKind::HandTrembling => (1.0, 16.0),
            AugOpKind::Rotate => (0.0, 180.0),
            AugOpKind::SpecularReflection => (0.03, 0.2),
            AugOpKind::MoirePattern => (0.01, 0.3),
            AugOpKind::SFCHalftone => (0.01, 0.2),
            AugOpKind::BNHalftone => (0.01, 0.4),
            _ => (0.0, 1.0),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::Config(format!("unknown operation '{name}'")))
    }
}

impl fmt::Display for AugOpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Ten-level magnitude grid: `from + i * (to - from) / 9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MagnitudeRange {
    Real { from: f64, to: f64 },
    /// Grid values rounded to the nearest integer.
    Integer { from: i64, to: i64 },
    /// The index is ignored and assets are drawn uniformly.
    Categorical,
}

impl MagnitudeRange {
    pub fn value(&self, index: usize) -> Result<Option<f64>> {
        if index >= MAGNITUDE_LEVELS {
            return Err(Error::Range(format!(
                "magnitude index {index} outside [0, {}]",
                MAGNITUDE_LEVELS - 1
            )));
        }
        let t = index as f64 / (MAGNITUDE_LEVELS - 1) as f64;
        Ok(match *self {
            // endpoints come out exact because t is exactly 0 or 1 there
            MagnitudeRange::Real { from, to } => Some(if index == MAGNITUDE_LEVELS - 1 { to } else { from + t * (to - from) }),
            MagnitudeRange::Integer { from, to } => Some((from as f64 + t * (to - from) as f64).round()),
            MagnitudeRange::Categorical => None,
        })
    }

    fn endpoints(&self) -> Option<(f64, f64)> {
        match *self {
            MagnitudeRange::Real { from, to } => Some((from, to)),
            MagnitudeRange::Integer { from, to } => Some((from as f64, to as f64)),
            MagnitudeRange::Categorical => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpSpec {
    pub kind: AugOpKind,
    pub range: MagnitudeRange,
    pub spoof_forcing: bool,
}

/// Registry overrides read from a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Extra operations to register alongside the recapture operations.
    pub extra_ops: Vec<String>,
    /// Replacement ranges keyed by operation name.
    pub ranges: BTreeMap<String, MagnitudeRange>,
    /// Restrict sampling to these operations (all registered when empty).
    pub only: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    ops: Vec<OpSpec>,
}

impl Registry {
    pub fn standard() -> Self {
        Self {
            ops: AugOpKind::RECAPTURE.iter().map(|&k| Self::spec_for(k)).collect(),
        }
    }

    fn spec_for(kind: AugOpKind) -> OpSpec {
        OpSpec {
            kind,
            range: kind.default_range(),
            spoof_forcing: kind.spoof_forcing(),
        }
    }

    pub fn from_config(config: &PolicyConfig) -> Result<Self> {
        let mut reg = Self::standard();
        for name in &config.extra_ops {
            let kind = AugOpKind::parse(name)?;
            if !reg.ops.iter().any(|o| o.kind == kind) {
                reg.ops.push(Self::spec_for(kind));
            }
        }
        for (name, range) in &config.ranges {
            let kind = AugOpKind::parse(name)?;
            let spec = reg
                .ops
                .iter_mut()
                .find(|o| o.kind == kind)
                .ok_or_else(|| Error::Config(format!("range given for unregistered operation '{name}'")))?;
            let categorical = spec.range == MagnitudeRange::Categorical;
            match range.endpoints() {
                None if categorical => {}
                Some((a, b)) if !categorical => {
                    let (lo, hi) = kind.bounds();
                    if !(a.is_finite() && b.is_finite() && a.min(b) >= lo && a.max(b) <= hi) {
                        return Err(Error::Config(format!(
                            "range [{a}, {b}] for {name} leaves the admissible [{lo}, {hi}]"
                        )));
                    }
                    if matches!(spec.range, MagnitudeRange::Integer { .. }) != matches!(range, MagnitudeRange::Integer { .. }) {
                        return Err(Error::Config(format!("{name} needs an {} range", type_name(&spec.range))));
                    }
                }
                _ => return Err(Error::Config(format!("{name} needs a {} range", type_name(&spec.range)))),
            }
            spec.range = *range;
        }
        if !config.only.is_empty() {
            let keep = config
                .only
                .iter()
                .map(|n| AugOpKind::parse(n))
                .collect::<Result<Vec<_>>>()?;
            reg.ops.retain(|o| keep.contains(&o.kind));
            if reg.ops.is_empty() {
                return Err(Error::Config("no registered operation left to sample".into()));
            }
        }
        Ok(reg)
    }

    pub fn ops(&self) -> &[OpSpec] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn spec(&self, kind: AugOpKind) -> Option<&OpSpec> {
        self.ops.iter().find(|o| o.kind == kind)
    }

    /// Resolved magnitude for `(kind, index)`; `None` for categorical kinds.
    pub fn magnitude(&self, kind: AugOpKind, index: usize) -> Result<Option<f64>> {
        let spec = self
            .spec(kind)
            .ok_or_else(|| Error::Config(format!("operation {kind} is not registered")))?;
        spec.range.value(index)
    }
}

fn type_name(r: &MagnitudeRange) -> &'static str {
    match r {
        MagnitudeRange::Real { .. } => "real",
        MagnitudeRange::Integer { .. } => "integer",
        MagnitudeRange::Categorical => "categorical",
    }
}

/// Magnitude of `kind` at `index` under the default ranges.
pub fn magnitude_value(kind: AugOpKind, index: usize) -> Result<Option<f64>> {
    kind.default_range().value(index)
}
