//! Replay-attack simulation: screen reflections and moiré.

pub mod homography;
pub mod layouts;
pub mod moire;
pub mod reflection;

pub use homography::{is_convex, Homography, Point};
pub use layouts::{default_layouts, load_layouts, save_layouts, SubpixelLayout, TILE};
pub use moire::{
    load_moire_bank, moire, save_moire_bank, synth_moire_bank, MoireSynthConfig, MoireTexture, MOIRE_GAMMA,
    TEXTURE_SIZE, WARPS_PER_LAYOUT,
};
pub use reflection::{specular_reflection, Background, BackgroundBank, REFLECTION_GAMMA};
