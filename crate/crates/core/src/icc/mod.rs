//! ICC matrix/TRC color management: profile parsing, gamut mapping, camera
//! color diversity and printer color distortion.

mod cmyk;
mod curve;
mod gamut;
pub mod matrix;
mod primaries;
mod profile;

pub use cmyk::{
    cmyk_render, cmyk_to_rgb_pixel, color_distortion, default_presets, reference_srgb, rgb_to_cmyk, rgb_to_cmyk_pixel,
    PresetBank, PressPreset, PRESET_SCHEMA_VERSION,
};
pub use curve::{srgb_parameters, ToneCurve};
pub use gamut::{color_diversity, gamut_map, map_pixel, ProfileBank, PROFILE_BANK_VERSION};
pub use primaries::{Transfer, WorkingSpace, WORKING_SPACES};
pub use profile::{from_s15_fixed16, s15_fixed16, IccProfile, REQUIRED_TAGS};
