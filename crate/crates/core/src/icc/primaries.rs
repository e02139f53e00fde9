//! Synthesized RGB working-space profiles built from published primaries.

use super::curve::{srgb_parameters, ToneCurve};
use super::matrix::{bradford_adaptation, primaries_to_xyz, xy_to_xyz, D50};
use super::profile::IccProfile;
use crate::error::Result;

const D65_XY: (f64, f64) = (0.3127, 0.3290);
const D50_XY: (f64, f64) = (0.3457, 0.3585);

#[derive(Debug, Clone, Copy)]
pub enum Transfer {
    Gamma(f64),
    Srgb,
    Rec709,
    LStar,
}

/// Chromaticities and transfer function of a working space.
#[derive(Debug, Clone, Copy)]
pub struct WorkingSpace {
    pub name: &'static str,
    pub red: (f64, f64),
    pub green: (f64, f64),
    pub blue: (f64, f64),
    pub white: (f64, f64),
    pub transfer: Transfer,
}

pub const WORKING_SPACES: [WorkingSpace; 11] = [
    WorkingSpace {
        name: "sRGB",
        red: (0.64, 0.33),
        green: (0.30, 0.60),
        blue: (0.15, 0.06),
        white: D65_XY,
        transfer: Transfer::Srgb,
    },
    WorkingSpace {
        name: "AdobeRGB1998",
        red: (0.64, 0.33),
        green: (0.21, 0.71),
        blue: (0.15, 0.06),
        white: D65_XY,
        transfer: Transfer::Gamma(563.0 / 256.0),
    },
    WorkingSpace {
        name: "DisplayP3",
        red: (0.680, 0.320),
        green: (0.265, 0.690),
        blue: (0.150, 0.060),
        white: D65_XY,
        transfer: Transfer::Srgb,
    },
    WorkingSpace {
        name: "ProPhotoRGB",
        red: (0.7347, 0.2653),
        green: (0.1596, 0.8404),
        blue: (0.0366, 0.0001),
        white: D50_XY,
        transfer: Transfer::Gamma(1.8),
    },
    WorkingSpace {
        name: "Rec2020",
        red: (0.708, 0.292),
        green: (0.170, 0.797),
        blue: (0.131, 0.046),
        white: D65_XY,
        transfer: Transfer::Rec709,
    },
    WorkingSpace {
        name: "AppleRGB",
        red: (0.625, 0.340),
        green: (0.280, 0.595),
        blue: (0.155, 0.070),
        white: D65_XY,
        transfer: Transfer::Gamma(1.8),
    },
    WorkingSpace {
        name: "ColorMatchRGB",
        red: (0.630, 0.340),
        green: (0.295, 0.605),
        blue: (0.150, 0.075),
        white: D50_XY,
        transfer: Transfer::Gamma(1.8),
    },
    WorkingSpace {
        name: "WideGamutRGB",
        red: (0.735, 0.265),
        green: (0.115, 0.826),
        blue: (0.157, 0.018),
        white: D50_XY,
        transfer: Transfer::Gamma(563.0 / 256.0),
    },
    WorkingSpace {
        name: "ECI-RGBv2",
        red: (0.670, 0.330),
        green: (0.210, 0.710),
        blue: (0.140, 0.080),
        white: D50_XY,
        transfer: Transfer::LStar,
    },
    WorkingSpace {
        name: "BestRGB",
        red: (0.7347, 0.2653),
        green: (0.2150, 0.7750),
        blue: (0.1300, 0.0350),
        white: D50_XY,
        transfer: Transfer::Gamma(563.0 / 256.0),
    },
    WorkingSpace {
        name: "BruceRGB",
        red: (0.64, 0.33),
        green: (0.28, 0.65),
        blue: (0.15, 0.06),
        white: D65_XY,
        transfer: Transfer::Gamma(563.0 / 256.0),
    },
];

const SAMPLED_POINTS: usize = 1024;

fn sampled(f: impl Fn(f64) -> f64) -> Result<ToneCurve> {
    ToneCurve::sampled(
        (0..SAMPLED_POINTS)
            .map(|i| f(i as f64 / (SAMPLED_POINTS - 1) as f64))
            .collect(),
    )
}

impl Transfer {
    pub fn curve(self) -> Result<ToneCurve> {
        match self {
            Transfer::Gamma(g) => ToneCurve::gamma(g),
            Transfer::Srgb => ToneCurve::parametric(3, srgb_parameters()),
            Transfer::Rec709 => sampled(|v| {
                const ALPHA: f64 = 1.099_296_826_809_44;
                const BETA: f64 = 0.018_053_968_510_807;
                if v < 4.5 * BETA {
                    v / 4.5
                } else {
                    ((v + ALPHA - 1.0) / ALPHA).powf(1.0 / 0.45)
                }
            }),
            Transfer::LStar => sampled(|v| {
                let l = v * 100.0;
                if l <= 8.0 {
                    l / 903.2963
                } else {
                    ((l + 16.0) / 116.0).powi(3)
                }
            }),
        }
    }
}

impl WorkingSpace {
    /// Profile with D50-adapted colorants, as stored in an ICC container.
    pub fn profile(&self) -> Result<IccProfile> {
        let native = primaries_to_xyz(self.red, self.green, self.blue, self.white)
            .expect("published primaries are linearly independent");
        let adapt = bradford_adaptation(xy_to_xyz(self.white.0, self.white.1), D50);
        let curve = self.transfer.curve()?;
        IccProfile::from_parts(
            self.name,
            D50,
            adapt.mul(&native),
            [curve.clone(), curve.clone(), curve],
        )
    }

    /// The encoded ICC bytes, as written by the fixture generator.
    pub fn icc_bytes(&self) -> Result<Vec<u8>> {
        Ok(self.profile()?.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_spaces_encode_and_parse() {
        for ws in WORKING_SPACES {
            let parsed = IccProfile::parse(&ws.icc_bytes().unwrap()).unwrap();
            assert_eq!(parsed.name(), ws.name);
            let white = parsed.to_pcs([1.0, 1.0, 1.0]);
            for i in 0..3 {
                assert!((white[i] - D50[i]).abs() < 1e-3, "{} white {:?}", ws.name, white);
            }
        }
    }
}
