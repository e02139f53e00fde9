//! Moiré texture synthesis and compositing.
//!
//! A texture is a subpixel layout tiled over a square canvas and warped by a
//! random projective transform. Textures are evaluated lazily: a texture
//! stores its layout and the inverse transform, and any region can be rendered
//! on demand with bilinear sampling of the periodic tiling.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::homography::{is_convex, Homography, Point};
use super::layouts::{load_layouts, save_layouts, SubpixelLayout, TILE};
use crate::error::{Error, Result};
use crate::image::{check_ratio, convex_blend, ColorMode, ImageBuffer};
use crate::rng::{rng_from, Rng};
use crate::OpOutput;

pub const TEXTURE_SIZE: usize = 1024;
pub const WARPS_PER_LAYOUT: usize = 10;
pub const CORNER_RADIUS_FRACTION: f64 = 0.1;
const MAX_CORNER_RETRIES: usize = 32;
pub const MOIRE_INDEX_VERSION: u32 = 1;
pub const MOIRE_GAMMA: (f64, f64) = (0.01, 0.3);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoireSynthConfig {
    pub size: usize,
    pub warps_per_layout: usize,
    /// Corner offsets are drawn from `[-r, r]²` with `r = radius_fraction * size`.
    pub radius_fraction: f64,
}

impl Default for MoireSynthConfig {
    fn default() -> Self {
        Self {
            size: TEXTURE_SIZE,
            warps_per_layout: WARPS_PER_LAYOUT,
            radius_fraction: CORNER_RADIUS_FRACTION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MoireTexture {
    layout: Arc<SubpixelLayout>,
    warp_index: usize,
    size: usize,
    corners: [Point; 4],
    forward: Homography,
    inverse: Homography,
}

impl MoireTexture {
    pub fn new(layout: Arc<SubpixelLayout>, warp_index: usize, size: usize, corners: [Point; 4]) -> Result<Self> {
        let s = size as f64;
        let square = [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)];
        if !is_convex(&corners) {
            return Err(Error::Numeric("warped corners do not form a convex quadrilateral".into()));
        }
        let forward = Homography::from_correspondences(&square, &corners)?;
        let inverse = forward.inverse()?;
        Ok(Self {
            layout,
            warp_index,
            size,
            corners,
            forward,
            inverse,
        })
    }

    pub fn layout(&self) -> &SubpixelLayout {
        &self.layout
    }

    pub fn source_layout(&self) -> &str {
        &self.layout.name
    }

    pub fn warp_index(&self) -> usize {
        self.warp_index
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn corners(&self) -> &[Point; 4] {
        &self.corners
    }

    pub fn homography(&self) -> &Homography {
        &self.forward
    }

    pub fn id(&self) -> String {
        format!("{}_{}", self.layout.name, self.warp_index)
    }

    /// Renders a `width`×`height` region starting at `(x0, y0)`. Coordinates
    /// past the texture edge wrap around, so regions may exceed the texture.
    pub fn render_region(&self, x0: usize, y0: usize, width: usize, height: usize) -> ImageBuffer {
        let mut data = vec![0.0f32; width * height * 3];
        data.par_chunks_mut((width * 3).max(1)).enumerate().for_each(|(row, out)| {
            let y = ((y0 + row) % self.size) as f64;
            for col in 0..width {
                let x = ((x0 + col) % self.size) as f64;
                let (sx, sy) = self.inverse.apply((x, y));
                let px = bilinear(&self.layout, sx, sy);
                out[col * 3..col * 3 + 3].copy_from_slice(&px);
            }
        });
        ImageBuffer::from_raw_clamped(width, height, ColorMode::RGB, data)
    }

    pub fn render(&self) -> ImageBuffer {
        self.render_region(0, 0, self.size, self.size)
    }
}

/// Bilinear sample of the infinite periodic tiling of `layout`.
fn bilinear(layout: &SubpixelLayout, x: f64, y: f64) -> [f32; 3] {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = ((x - fx) as f32, (y - fy) as f32);
    let wrap = |v: f64| v.rem_euclid(TILE as f64) as usize;
    let (x0, y0) = (wrap(fx), wrap(fy));
    let (x1, y1) = ((x0 + 1) % TILE, (y0 + 1) % TILE);
    let mut out = [0.0f32; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let top = layout.sample(x0, y0, c) * (1.0 - tx) + layout.sample(x1, y0, c) * tx;
        let bottom = layout.sample(x0, y1, c) * (1.0 - tx) + layout.sample(x1, y1, c) * tx;
        *o = top * (1.0 - ty) + bottom * ty;
    }
    out
}

fn draw_corners(rng: &mut Rng, size: usize, radius: f64) -> [Point; 4] {
    let s = size as f64;
    let mut offset = || {
        if radius > 0.0 {
            rng.gen_range(-radius..=radius)
        } else {
            0.0
        }
    };
    [
        (offset(), offset()),
        (s + offset(), offset()),
        (s + offset(), s + offset()),
        (offset(), s + offset()),
    ]
}

/// Synthesizes `warps_per_layout` textures per layout, deterministically
/// from `seed`. Output order is layout-major, then warp index.
pub fn synth_moire_bank(
    layouts: &[SubpixelLayout],
    seed: u64,
    config: MoireSynthConfig,
) -> Result<Vec<MoireTexture>> {
    if layouts.is_empty() {
        return Err(Error::Config("moiré synthesis needs at least one layout".into()));
    }
    let radius = config.radius_fraction * config.size as f64;
    let mut bank = Vec::with_capacity(layouts.len() * config.warps_per_layout);
    for (li, layout) in layouts.iter().enumerate() {
        layout.validate()?;
        let layout = Arc::new(layout.clone());
        for warp in 0..config.warps_per_layout {
            let mut rng = rng_from(&[seed, li as u64, warp as u64]);
            let mut attempt = 0;
            let texture = loop {
                let corners = draw_corners(&mut rng, config.size, radius);
                match MoireTexture::new(layout.clone(), warp, config.size, corners) {
                    Ok(t) => break t,
                    Err(e) if attempt + 1 >= MAX_CORNER_RETRIES => return Err(e),
                    Err(_) => attempt += 1,
                }
            };
            bank.push(texture);
        }
    }
    Ok(bank)
}

/// Blends a randomly chosen, randomly cropped texture into the image.
pub fn moire(img: &ImageBuffer, rng: &mut Rng, bank: &[MoireTexture], gamma: f64) -> Result<OpOutput> {
    check_ratio("moire", gamma, MOIRE_GAMMA.0, MOIRE_GAMMA.1)?;
    if bank.is_empty() {
        return Err(Error::Config("moiré texture bank is empty".into()));
    }
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("moiré compositing expects RGB, got {}", img.mode())));
    }
    let texture = &bank[rng.gen_range(0..bank.len())];
    let x0 = rng.gen_range(0..=texture.size().saturating_sub(img.width()));
    let y0 = rng.gen_range(0..=texture.size().saturating_sub(img.height()));
    let crop = texture.render_region(x0, y0, img.width(), img.height());
    Ok(OpOutput {
        image: convex_blend(img, &crop, gamma)?,
        assets: vec![format!("moire:{}@{x0},{y0}", texture.id())],
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct MoireIndex {
    version: u32,
    seed: u64,
    size: usize,
    layouts_file: String,
    textures: Vec<MoireEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MoireEntry {
    layout: String,
    warp: usize,
    file: String,
    corners: [[f64; 2]; 4],
}

/// Persists a bank as `moire/{layout}_{warp}.png`, `moire/layouts.json` and
/// `moire/index.json` under `dir`. When `write_png` is false only the index
/// and layouts are written.
pub fn save_moire_bank(bank: &[MoireTexture], seed: u64, dir: &Path, write_png: bool) -> Result<()> {
    let root = dir.join("moire");
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let mut layouts: Vec<SubpixelLayout> = Vec::new();
    for t in bank {
        if !layouts.iter().any(|l| l.name == t.source_layout()) {
            layouts.push(t.layout().clone());
        }
    }
    save_layouts(&layouts, &root.join("layouts.json"))?;
    let mut entries = Vec::with_capacity(bank.len());
    for t in bank {
        let file = format!("{}.png", t.id());
        if write_png {
            t.render().save(root.join(&file))?;
        }
        entries.push(MoireEntry {
            layout: t.source_layout().to_string(),
            warp: t.warp_index(),
            file,
            corners: t.corners().map(|(x, y)| [x, y]),
        });
    }
    let index = MoireIndex {
        version: MOIRE_INDEX_VERSION,
        seed,
        size: bank.first().map_or(TEXTURE_SIZE, |t| t.size()),
        layouts_file: "layouts.json".into(),
        textures: entries,
    };
    let path = root.join("index.json");
    let json = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Rebuilds a bank from `moire/index.json` and its layouts file.
pub fn load_moire_bank(dir: &Path) -> Result<Vec<MoireTexture>> {
    let root = dir.join("moire");
    let path = root.join("index.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: MoireIndex = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if index.version != MOIRE_INDEX_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported index version {}",
            path.display(),
            index.version
        )));
    }
    let layouts: Vec<Arc<SubpixelLayout>> = load_layouts(&root.join(&index.layouts_file))?
        .into_iter()
        .map(Arc::new)
        .collect();
    index
        .textures
        .iter()
        .map(|e| {
            let layout = layouts
                .iter()
                .find(|l| l.name == e.layout)
                .ok_or_else(|| Error::Config(format!("texture {} names unknown layout '{}'", e.file, e.layout)))?;
            MoireTexture::new(layout.clone(), e.warp, index.size, e.corners.map(|[x, y]| (x, y)))
        })
        .collect()
}
