//! Printed-photo simulation: clustered-dot and blue-noise halftoning.

pub mod bluenoise;
pub mod sfc;

pub use bluenoise::{
    bn_halftone, build_bluenoise_bank, build_bluenoise_bank_with, generate_blue_noise, load_bluenoise_bank,
    save_bluenoise_bank, BlueNoiseTexture, BN_GAMMA, BN_INSTANCES, BN_SIZE,
};
pub use sfc::{quantize_level, sfc_halftone, sfc_halftone_image, sfc_halftone_with, DotClusterTable, SFC_GAMMA};
