//! Void-and-cluster blue-noise dither arrays and blue-noise halftoning.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icc::{cmyk_render, rgb_to_cmyk, PressPreset};
use crate::image::{check_ratio, convex_blend, convex_blend_weighted, resize_nearest, ColorMode, ImageBuffer};
use crate::rng::{derive_seed, rng_from, Rng};
use crate::OpOutput;

pub const BN_SIZE: usize = 256;
pub const BN_INSTANCES: usize = 8;
pub const BN_GAMMA: (f64, f64) = (0.01, 0.4);
pub const BLUENOISE_INDEX_VERSION: u32 = 1;
const SIGMA: f64 = 1.5;
const RADIUS: isize = 5;
const INITIAL_DENSITY: f64 = 0.1;
const BLOCK: usize = 16;
const MIN_SIZE: usize = 16;
const MAX_SIZE: usize = 1024;

#[derive(Clone, Copy)]
struct Extremum {
    value: f64,
    index: usize,
}

impl Extremum {
    const NONE: Self = Self {
        value: f64::NAN,
        index: usize::MAX,
    };

    fn is_none(&self) -> bool {
        self.index == usize::MAX
    }
}

/// Binary pattern with its wrapped Gaussian energy and per-block extrema.
#[derive(Clone)]
struct Field {
    w: usize,
    h: usize,
    bits: Vec<bool>,
    energy: Vec<f64>,
    taps: Arc<Vec<(isize, isize, f64)>>,
    blocks_x: usize,
    max_one: Vec<Extremum>,
    min_zero: Vec<Extremum>,
}

impl Field {
    fn new(w: usize, h: usize, bits: Vec<bool>) -> Self {
        let mut taps = Vec::new();
        for dy in -RADIUS..=RADIUS {
            for dx in -RADIUS..=RADIUS {
                let d2 = (dx * dx + dy * dy) as f64;
                taps.push((dx, dy, (-d2 / (2.0 * SIGMA * SIGMA)).exp()));
            }
        }
        let blocks_x = w.div_ceil(BLOCK);
        let blocks = blocks_x * h.div_ceil(BLOCK);
        let mut f = Self {
            w,
            h,
            bits: vec![false; w * h],
            energy: vec![0.0; w * h],
            taps: Arc::new(taps),
            blocks_x,
            max_one: vec![Extremum::NONE; blocks],
            min_zero: vec![Extremum::NONE; blocks],
        };
        for (i, &b) in bits.iter().enumerate() {
            if b {
                f.bits[i] = true;
                f.splat(i, 1.0);
            }
        }
        for b in 0..blocks {
            f.rescan(b);
        }
        f
    }

    fn wrap(v: isize, n: usize) -> usize {
        v.rem_euclid(n as isize) as usize
    }

    fn splat(&mut self, i: usize, sign: f64) {
        let (x, y) = ((i % self.w) as isize, (i / self.w) as isize);
        for &(dx, dy, wgt) in self.taps.iter() {
            let j = Self::wrap(y + dy, self.h) * self.w + Self::wrap(x + dx, self.w);
            self.energy[j] += sign * wgt;
        }
    }

    fn rescan(&mut self, b: usize) {
        let (bx, by) = (b % self.blocks_x, b / self.blocks_x);
        let (mut hi, mut lo) = (Extremum::NONE, Extremum::NONE);
        for y in by * BLOCK..((by + 1) * BLOCK).min(self.h) {
            for x in bx * BLOCK..((bx + 1) * BLOCK).min(self.w) {
                let i = y * self.w + x;
                let e = self.energy[i];
                if self.bits[i] {
                    if hi.is_none() || e > hi.value {
                        hi = Extremum { value: e, index: i };
                    }
                } else if lo.is_none() || e < lo.value {
                    lo = Extremum { value: e, index: i };
                }
            }
        }
        self.max_one[b] = hi;
        self.min_zero[b] = lo;
    }

    fn set(&mut self, i: usize, on: bool) {
        debug_assert_ne!(self.bits[i], on);
        self.bits[i] = on;
        self.splat(i, if on { 1.0 } else { -1.0 });
        let (x, y) = ((i % self.w) as isize, (i / self.w) as isize);
        let mut rows: Vec<usize> = (-RADIUS..=RADIUS).map(|d| Self::wrap(y + d, self.h) / BLOCK).collect();
        let mut cols: Vec<usize> = (-RADIUS..=RADIUS).map(|d| Self::wrap(x + d, self.w) / BLOCK).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        for &r in &rows {
            for &c in &cols {
                self.rescan(r * self.blocks_x + c);
            }
        }
    }

    /// Highest-energy 1; ties go to the lowest index.
    fn tightest_cluster(&self) -> usize {
        best(&self.max_one, |a, b| a > b)
    }

    /// Lowest-energy 0; ties go to the lowest index.
    fn largest_void(&self) -> usize {
        best(&self.min_zero, |a, b| a < b)
    }
}

fn best(candidates: &[Extremum], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut out = Extremum::NONE;
    for c in candidates.iter().filter(|c| !c.is_none()) {
        if out.is_none() || better(c.value, out.value) || (c.value == out.value && c.index < out.index) {
            out = *c;
        }
    }
    out.index
}

/// Rank-ordered dither array for one channel via void-and-cluster.
fn dither_ranks(w: usize, h: usize, rng: &mut Rng) -> Vec<usize> {
    let n = w * h;
    let ones = ((n as f64 * INITIAL_DENSITY).round() as usize).clamp(1, n - 1);
    let mut bits = vec![false; n];
    for i in sample(rng, n, ones) {
        bits[i] = true;
    }
    let mut proto = Field::new(w, h, bits);
    // move the tightest cluster into the largest void until that is a no-op
    for _ in 0..n * 4 {
        let c = proto.tightest_cluster();
        proto.set(c, false);
        let v = proto.largest_void();
        proto.set(v, true);
        if v == c {
            break;
        }
    }
    let mut rank = vec![0usize; n];
    let mut f = proto.clone();
    for r in (0..ones).rev() {
        let c = f.tightest_cluster();
        f.set(c, false);
        rank[c] = r;
    }
    // filling the largest void of the 1s is the same as removing the tightest
    // cluster of the 0s, so one pass covers the last two phases
    let mut f = proto;
    for r in ones..n {
        let v = f.largest_void();
        f.set(v, true);
        rank[v] = r;
    }
    rank
}

/// A `height`×`width` texture with `channels` independent blue-noise planes,
/// each holding every level `0..=255` equally often when `height * width` is
/// a multiple of 256.
pub fn generate_blue_noise(height: usize, width: usize, channels: usize, seed: u64) -> Result<ImageBuffer> {
    if !(MIN_SIZE..=MAX_SIZE).contains(&height) || !(MIN_SIZE..=MAX_SIZE).contains(&width) {
        return Err(Error::Range(format!(
            "blue-noise size {width}x{height} outside [{MIN_SIZE}, {MAX_SIZE}]"
        )));
    }
    let mode = match channels {
        1 => ColorMode::L,
        2 => ColorMode::LA,
        3 => ColorMode::RGB,
        4 => ColorMode::RGBA,
        _ => return Err(Error::Range(format!("blue noise needs 1 to 4 channels, got {channels}"))),
    };
    let n = width * height;
    let planes: Vec<Vec<usize>> = (0..channels)
        .into_par_iter()
        .map(|c| dither_ranks(width, height, &mut rng_from(&[seed, c as u64])))
        .collect();
    let mut data = vec![0.0f32; n * channels];
    for (c, ranks) in planes.iter().enumerate() {
        for (i, &r) in ranks.iter().enumerate() {
            data[i * channels + c] = (r * 256 / n) as f32 / 255.0;
        }
    }
    ImageBuffer::new(width, height, mode, data)
}

/// Number of independently generated planes behind each texture mode.
fn generated_channels(mode: ColorMode) -> usize {
    match mode {
        ColorMode::CMYK => 3,
        ColorMode::CMYKA => 4,
        m => m.channels(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlueNoiseTexture {
    pub mode: ColorMode,
    pub instance: usize,
    /// The generated planes: L, LA, RGB or RGBA. CMYK textures keep their
    /// RGB planes and CMYKA their RGBA planes.
    planes: Arc<ImageBuffer>,
}

impl BlueNoiseTexture {
    pub fn generate(mode: ColorMode, instance: usize, size: usize, seed: u64) -> Result<Self> {
        let planes = generate_blue_noise(size, size, generated_channels(mode), seed)?;
        Ok(Self {
            mode,
            instance,
            planes: Arc::new(planes),
        })
    }

    pub fn from_planes(mode: ColorMode, instance: usize, planes: ImageBuffer) -> Result<Self> {
        if planes.channels() != generated_channels(mode) {
            return Err(Error::Shape(format!(
                "{mode} texture needs {} planes, got {}",
                generated_channels(mode),
                planes.channels()
            )));
        }
        Ok(Self {
            mode,
            instance,
            planes: Arc::new(planes),
        })
    }

    pub fn id(&self) -> String {
        format!("{}_{}", self.mode, self.instance)
    }

    pub fn planes(&self) -> &ImageBuffer {
        &self.planes
    }

    pub fn size(&self) -> (usize, usize) {
        (self.planes.width(), self.planes.height())
    }

    /// The texture in its own color mode.
    pub fn raster(&self) -> Result<ImageBuffer> {
        match self.mode {
            ColorMode::CMYK => rgb_to_cmyk(&self.planes),
            ColorMode::CMYKA => {
                let (rgb, alpha) = split_alpha(&self.planes)?;
                let cmyk = rgb_to_cmyk(&rgb)?;
                let mut data = Vec::with_capacity(alpha.len() * 5);
                for (px, a) in cmyk.data().chunks(4).zip(&alpha) {
                    data.extend_from_slice(px);
                    data.push(*a);
                }
                ImageBuffer::new(cmyk.width(), cmyk.height(), ColorMode::CMYKA, data)
            }
            _ => Ok((*self.planes).clone()),
        }
    }

    /// The texture resized to `width`×`height` and expressed as RGB, plus its
    /// alpha plane when the mode has one.
    pub fn as_rgb(&self, width: usize, height: usize) -> Result<(ImageBuffer, Option<Vec<f32>>)> {
        let planes = resize_nearest(&self.planes, width, height)?;
        let (color, alpha) = if self.mode.has_alpha() {
            let (c, a) = split_alpha(&planes)?;
            (c, Some(a))
        } else {
            (planes, None)
        };
        let rgb = match self.mode {
            ColorMode::L | ColorMode::LA => color.gray_to_rgb()?,
            ColorMode::RGB | ColorMode::RGBA => color,
            ColorMode::CMYK | ColorMode::CMYKA => cmyk_render(&rgb_to_cmyk(&color)?, &PressPreset::neutral())?,
        };
        Ok((rgb, alpha))
    }
}

fn split_alpha(img: &ImageBuffer) -> Result<(ImageBuffer, Vec<f32>)> {
    let c = img.channels();
    let color_mode = match img.mode() {
        ColorMode::LA => ColorMode::L,
        ColorMode::RGBA => ColorMode::RGB,
        m => return Err(Error::Mode(format!("{m} has no alpha plane to split"))),
    };
    let mut color = Vec::with_capacity(img.data().len() / c * (c - 1));
    let mut alpha = Vec::with_capacity(img.data().len() / c);
    for px in img.data().chunks(c) {
        color.extend_from_slice(&px[..c - 1]);
        alpha.push(px[c - 1]);
    }
    Ok((ImageBuffer::new(img.width(), img.height(), color_mode, color)?, alpha))
}

/// Six color modes × eight instances of `BN_SIZE`² textures.
pub fn build_bluenoise_bank(seed: u64) -> Vec<BlueNoiseTexture> {
    build_bluenoise_bank_with(seed, BN_SIZE).expect("default blue-noise size is valid")
}

pub fn build_bluenoise_bank_with(seed: u64, size: usize) -> Result<Vec<BlueNoiseTexture>> {
    let jobs: Vec<(usize, ColorMode, usize)> = ColorMode::ALL
        .iter()
        .enumerate()
        .flat_map(|(m, &mode)| (0..BN_INSTANCES).map(move |i| (m, mode, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(m, mode, i)| BlueNoiseTexture::generate(mode, i, size, derive_seed(&[seed, m as u64, i as u64])))
        .collect()
}

/// Blends a random blue-noise texture into the image. Alpha planes scale the
/// blend ratio per pixel.
pub fn bn_halftone(img: &ImageBuffer, rng: &mut Rng, bank: &[BlueNoiseTexture], gamma: f64) -> Result<OpOutput> {
    check_ratio("blue-noise halftone", gamma, BN_GAMMA.0, BN_GAMMA.1)?;
    if bank.is_empty() {
        return Err(Error::Config("blue-noise bank is empty".into()));
    }
    if img.mode() != ColorMode::RGB {
        return Err(Error::Mode(format!("halftone compositing expects RGB, got {}", img.mode())));
    }
    let texture = &bank[rng.gen_range(0..bank.len())];
    let (overlay, alpha) = texture.as_rgb(img.width(), img.height())?;
    let image = match alpha {
        Some(a) => convex_blend_weighted(img, &overlay, gamma, &a)?,
        None => convex_blend(img, &overlay, gamma)?,
    };
    Ok(OpOutput {
        image,
        assets: vec![format!("bluenoise:{}", texture.id())],
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct BlueNoiseIndex {
    version: u32,
    seed: u64,
    textures: Vec<BlueNoiseEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlueNoiseEntry {
    mode: ColorMode,
    instance: usize,
    file: String,
}

/// Writes `bluenoise/{mode}_{instance}.png` (the generated planes) and
/// `bluenoise/index.json` under `dir`.
pub fn save_bluenoise_bank(bank: &[BlueNoiseTexture], seed: u64, dir: &Path) -> Result<()> {
    let root = dir.join("bluenoise");
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let mut textures = Vec::with_capacity(bank.len());
    for t in bank {
        let file = format!("{}.png", t.id());
        t.planes().save(root.join(&file))?;
        textures.push(BlueNoiseEntry {
            mode: t.mode,
            instance: t.instance,
            file,
        });
    }
    let index = BlueNoiseIndex {
        version: BLUENOISE_INDEX_VERSION,
        seed,
        textures,
    };
    let path = root.join("index.json");
    let json = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn load_bluenoise_bank(dir: &Path) -> Result<Vec<BlueNoiseTexture>> {
    let root = dir.join("bluenoise");
    let path = root.join("index.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: BlueNoiseIndex = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if index.version != BLUENOISE_INDEX_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported index version {}",
            path.display(),
            index.version
        )));
    }
    index
        .textures
        .par_iter()
        .map(|e| BlueNoiseTexture::from_planes(e.mode, e.instance, ImageBuffer::load(root.join(&e.file))?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn histogram(img: &ImageBuffer, c: usize) -> Vec<usize> {
        let mut h = vec![0; 256];
        for px in img.to_u8().chunks(img.channels()) {
            h[px[c] as usize] += 1;
        }
        h
    }

    #[test]
    fn ranks_are_a_permutation() {
        let mut ranks = dither_ranks(32, 16, &mut rng_from(&[1]));
        ranks.sort_unstable();
        assert!(ranks.iter().enumerate().all(|(i, &r)| i == r));
    }

    #[test]
    fn block_extrema_match_a_full_scan() {
        let mut rng = rng_from(&[7]);
        let bits: Vec<bool> = (0..48 * 40).map(|_| rng.gen_bool(0.2)).collect();
        let mut f = Field::new(48, 40, bits);
        for step in 0..200 {
            let i = rng.gen_range(0..48 * 40);
            f.set(i, !f.bits[i]);
            let mut hi = (f64::NEG_INFINITY, 0);
            let mut lo = (f64::INFINITY, 0);
            for (j, &e) in f.energy.iter().enumerate() {
                if f.bits[j] && e > hi.0 {
                    hi = (e, j);
                }
                if !f.bits[j] && e < lo.0 {
                    lo = (e, j);
                }
            }
            assert_eq!(f.tightest_cluster(), hi.1, "step {step}");
            assert_eq!(f.largest_void(), lo.1, "step {step}");
        }
    }

    #[test]
    fn energy_is_the_wrapped_gaussian_sum() {
        let mut bits = vec![false; 20 * 20];
        bits[0] = true;
        bits[19 * 20 + 19] = true;
        let f = Field::new(20, 20, bits);
        let g = |d2: f64| (-d2 / (2.0 * SIGMA * SIGMA)).exp();
        // (0,0) sees itself and the wrapped diagonal neighbour at (19,19)
        assert!((f.energy[0] - (1.0 + g(2.0))).abs() < 1e-12);
        assert!((f.energy[1] - (g(1.0) + g(5.0))).abs() < 1e-12);
    }

    #[test]
    fn histogram_is_uniform_and_seeded() {
        let a = generate_blue_noise(64, 64, 2, 5).unwrap();
        for c in 0..2 {
            assert!(histogram(&a, c).iter().all(|&n| n == 16));
        }
        assert_eq!(a, generate_blue_noise(64, 64, 2, 5).unwrap());
        assert_ne!(a, generate_blue_noise(64, 64, 2, 6).unwrap());
    }

    #[test]
    fn bad_shapes_are_range_errors() {
        assert!(matches!(generate_blue_noise(8, 64, 1, 0), Err(Error::Range(_))));
        assert!(matches!(generate_blue_noise(64, 64, 5, 0), Err(Error::Range(_))));
        assert!(matches!(generate_blue_noise(64, 64, 0, 0), Err(Error::Range(_))));
    }

    #[test]
    fn mid_gray_texture_blend() {
        let planes = ImageBuffer::filled(16, 16, ColorMode::L, &[0.5]).unwrap();
        let bank = vec![BlueNoiseTexture::from_planes(ColorMode::L, 0, planes).unwrap()];
        let img = ImageBuffer::from_fn(10, 6, ColorMode::RGB, |x, y, c| ((x + y + c) % 5) as f32 / 4.0);
        let out = bn_halftone(&img, &mut rng_from(&[1]), &bank, 0.01).unwrap().image;
        for (a, b) in img.data().iter().zip(out.data()) {
            let want = 0.99 * f64::from(*a) + 0.01 * 0.5;
            assert!((f64::from(*b) - want).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_alpha_leaves_the_image() {
        let planes = ImageBuffer::filled(16, 16, ColorMode::RGBA, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let bank = vec![BlueNoiseTexture::from_planes(ColorMode::CMYKA, 0, planes).unwrap()];
        let img = ImageBuffer::filled(5, 5, ColorMode::RGB, &[0.3, 0.6, 0.9]).unwrap();
        let out = bn_halftone(&img, &mut rng_from(&[1]), &bank, 0.4).unwrap().image;
        assert_eq!(out, img);
    }

    #[test]
    fn rasters_carry_their_mode() {
        for mode in ColorMode::ALL {
            let t = BlueNoiseTexture::generate(mode, 0, 16, 3).unwrap();
            let r = t.raster().unwrap();
            assert_eq!(r.mode(), mode);
            let (rgb, alpha) = t.as_rgb(7, 9).unwrap();
            assert_eq!((rgb.width(), rgb.height(), rgb.mode()), (7, 9, ColorMode::RGB));
            assert_eq!(alpha.is_some(), mode.has_alpha());
        }
    }

    #[test]
    fn bank_round_trip() {
        let bank = build_bluenoise_bank_with(9, 16).unwrap();
        assert_eq!(bank.len(), 48);
        let dir = tempfile::tempdir().unwrap();
        save_bluenoise_bank(&bank, 9, dir.path()).unwrap();
        assert!(dir.path().join("bluenoise/CMYKA_7.png").exists());
        assert_eq!(load_bluenoise_bank(dir.path()).unwrap(), bank);
    }
}
