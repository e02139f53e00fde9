//! Raster container and the pixel primitives shared by every simulation.
//!
//! Intensities are stored as normalized `f32` values in `[0, 1]`, row-major and
//! channel-interleaved. Quantization to 8 bits happens only when encoding to a
//! file format (round half up).

use std::fmt;
use std::path::Path;

use image::{DynamicImage, ImageBuffer as RasterBuffer, Luma, LumaA, Rgb, Rgba};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorMode {
    L,
    LA,
    RGB,
    RGBA,
    CMYK,
    CMYKA,
}

impl ColorMode {
    pub const ALL: [ColorMode; 6] = [
        ColorMode::L,
        ColorMode::LA,
        ColorMode::RGB,
        ColorMode::RGBA,
        ColorMode::CMYK,
        ColorMode::CMYKA,
    ];

    pub fn channels(self) -> usize {
        match self {
            ColorMode::L => 1,
            ColorMode::LA => 2,
            ColorMode::RGB => 3,
            ColorMode::RGBA | ColorMode::CMYK => 4,
            ColorMode::CMYKA => 5,
        }
    }

    pub fn has_alpha(self) -> bool {
        matches!(self, ColorMode::LA | ColorMode::RGBA | ColorMode::CMYKA)
    }

    /// Number of color (non-alpha) channels.
    pub fn color_channels(self) -> usize {
        self.channels() - usize::from(self.has_alpha())
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorMode::L => "L",
            ColorMode::LA => "LA",
            ColorMode::RGB => "RGB",
            ColorMode::RGBA => "RGBA",
            ColorMode::CMYK => "CMYK",
            ColorMode::CMYKA => "CMYKA",
        }
    }
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An H×W×C raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    mode: ColorMode,
    data: Vec<f32>,
}

impl ImageBuffer {
    /// Wraps `data`, validating its length and that every value lies in `[0, 1]`.
    pub fn new(width: usize, height: usize, mode: ColorMode, data: Vec<f32>) -> Result<Self> {
        let expected = width * height * mode.channels();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "{width}x{height} {mode} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Range(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            mode,
            data,
        })
    }

    /// Builds a buffer from values that are clamped into `[0, 1]`.
    pub(crate) fn from_raw_clamped(
        width: usize,
        height: usize,
        mode: ColorMode,
        mut data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * mode.channels());
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self {
            width,
            height,
            mode,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, mode: ColorMode, value: &[f32]) -> Result<Self> {
        if value.len() != mode.channels() {
            return Err(Error::Shape(format!(
                "fill value has {} channels, {mode} needs {}",
                value.len(),
                mode.channels()
            )));
        }
        let mut data = Vec::with_capacity(width * height * value.len());
        for _ in 0..width * height {
            data.extend_from_slice(value);
        }
        Self::new(width, height, mode, data)
    }

    /// Builds a buffer by evaluating `f(x, y, channel)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        mode: ColorMode,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let c = mode.channels();
        let mut data = Vec::with_capacity(width * height * c);
        for y in 0..height {
            for x in 0..width {
                for ch in 0..c {
                    data.push(f(x, y, ch));
                }
            }
        }
        Self::from_raw_clamped(width, height, mode, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.mode.channels()
    }

    pub fn mode(&self) -> ColorMode {
        self.mode
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let c = self.channels();
        let i = (y * self.width + x) * c;
        &self.data[i..i + c]
    }

    pub fn get(&self, x: usize, y: usize, channel: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels() + channel]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels() == other.channels()
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Shape(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels();
        let mut data = Vec::with_capacity(width * height * c);
        for y in y0..y0 + height {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + width * c]);
        }
        Ok(Self {
            width,
            height,
            mode: self.mode,
            data,
        })
    }

    /// Applies `f` to every pixel, producing an image in `mode`.
    pub(crate) fn map_pixels(
        &self,
        mode: ColorMode,
        f: impl Fn(&[f32], &mut [f32]) + Sync,
    ) -> ImageBuffer {
        let cin = self.channels();
        let cout = mode.channels();
        let mut out = vec![0.0f32; self.width * self.height * cout];
        let row_in = (self.width * cin).max(1);
        let row_out = (self.width * cout).max(1);
        out.par_chunks_mut(row_out)
            .zip(self.data.par_chunks(row_in))
            .for_each(|(dst, src)| {
                for (d, s) in dst.chunks_mut(cout).zip(src.chunks(cin)) {
                    f(s, d);
                }
            });
        ImageBuffer::from_raw_clamped(self.width, self.height, mode, out)
    }

    /// Drops the alpha channel of an RGBA image; RGB images are returned as is.
    pub fn to_rgb(&self) -> Result<ImageBuffer> {
        match self.mode {
            ColorMode::RGB => Ok(self.clone()),
            ColorMode::RGBA => Ok(self.map_pixels(ColorMode::RGB, |s, d| d.copy_from_slice(&s[..3]))),
            ColorMode::L | ColorMode::LA => Ok(self.map_pixels(ColorMode::RGB, |s, d| d.fill(s[0]))),
            m => Err(Error::Mode(format!("cannot convert {m} to RGB without a press model"))),
        }
    }

    /// Replicates a single-channel image into RGB.
    pub fn gray_to_rgb(&self) -> Result<ImageBuffer> {
        if self.mode != ColorMode::L {
            return Err(Error::Mode(format!("expected L, got {}", self.mode)));
        }
        Ok(self.map_pixels(ColorMode::RGB, |s, d| d.fill(s[0])))
    }

    /// 8-bit quantization with round-half-up.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_u8(width: usize, height: usize, mode: ColorMode, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * mode.channels() {
            return Err(Error::Shape(format!(
                "{width}x{height} {mode} needs {} bytes, got {}",
                width * height * mode.channels(),
                bytes.len()
            )));
        }
        Ok(Self {
            width,
            height,
            mode,
            data: bytes.iter().map(|&b| f32::from(b) / 255.0).collect(),
        })
    }

    pub fn from_dynamic(img: &DynamicImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            DynamicImage::ImageLuma8(b) => Self::from_u8(w, h, ColorMode::L, b.as_raw()),
            DynamicImage::ImageLumaA8(b) => Self::from_u8(w, h, ColorMode::LA, b.as_raw()),
            DynamicImage::ImageRgba8(b) => Self::from_u8(w, h, ColorMode::RGBA, b.as_raw()),
            other => Self::from_u8(w, h, ColorMode::RGB, other.to_rgb8().as_raw()),
        }
        .expect("decoded raster length matches its dimensions")
    }

    pub fn to_dynamic(&self) -> Result<DynamicImage> {
        let (w, h) = (self.width as u32, self.height as u32);
        let bytes = self.to_u8();
        let img = match self.mode {
            ColorMode::L => RasterBuffer::<Luma<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageLuma8),
            ColorMode::LA => RasterBuffer::<LumaA<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageLumaA8),
            ColorMode::RGB => RasterBuffer::<Rgb<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageRgb8),
            ColorMode::RGBA => RasterBuffer::<Rgba<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageRgba8),
            m => return Err(Error::Mode(format!("{m} has no direct file encoding"))),
        };
        img.ok_or_else(|| Error::Shape("raster size mismatch".into()))
    }

    /// Decodes a PNG or JPEG file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_dynamic(&img))
    }

    /// Encodes to PNG or JPEG, chosen by the file extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_dynamic()?.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Encodes to PNG in memory.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_dynamic()?
            .write_to(&mut out, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: "<memory>".into(),
                source,
            })?;
        Ok(out.into_inner())
    }
}

/// Round-half-up 8-bit quantization of a normalized intensity.
pub fn quantize(v: f32) -> u8 {
    (f64::from(v.clamp(0.0, 1.0)) * 255.0 + 0.5).floor() as u8
}

/// A square correlation kernel whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Normalizes `weights` (row-major, `size`×`size`) by their sum.
    pub fn normalized(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || weights.len() != size * size {
            return Err(Error::Shape(format!(
                "kernel of side {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum.abs() < 1e-12 {
            return Err(Error::Numeric(format!("kernel weights sum to {sum}")));
        }
        Ok(Self {
            size,
            weights: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn identity() -> Self {
        Self {
            size: 1,
            weights: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at column `x`, row `y`.
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.size + x]
    }
}

/// Checks an operation's blend ratio against its admissible range.
pub(crate) fn check_ratio(op: &str, gamma: f64, lo: f64, hi: f64) -> Result<()> {
    // magnitudes computed on a grid may land a hair outside the closed range
    let eps = 1e-9;
    if !(gamma >= lo - eps && gamma <= hi + eps) {
        return Err(Error::Range(format!("{op} ratio {gamma} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Per-pixel convex combination `(1 - gamma) * base + gamma * overlay`.
pub fn convex_blend(base: &ImageBuffer, overlay: &ImageBuffer, gamma: f64) -> Result<ImageBuffer> {
    check_blend_inputs(base, overlay)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Range(format!("blend ratio {gamma} outside [0, 1]")));
    }
    let keep = 1.0 - gamma;
    let data = base
        .data
        .par_iter()
        .zip(overlay.data.par_iter())
        .map(|(&b, &o)| (keep * f64::from(b) + gamma * f64::from(o)) as f32)
        .collect();
    Ok(ImageBuffer::from_raw_clamped(base.width, base.height, base.mode, data))
}

/// Convex blend whose ratio varies per pixel: `gamma * weights[p]`.
pub fn convex_blend_weighted(
    base: &ImageBuffer,
    overlay: &ImageBuffer,
    gamma: f64,
    weights: &[f32],
) -> Result<ImageBuffer> {
    check_blend_inputs(base, overlay)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Range(format!("blend ratio {gamma} outside [0, 1]")));
    }
    if weights.len() != base.width * base.height {
        return Err(Error::Shape("per-pixel weight map does not match the image".into()));
    }
    let c = base.channels();
    let mut data = vec![0.0f32; base.data.len()];
    data.par_chunks_mut(c)
        .zip(base.data.par_chunks(c).zip(overlay.data.par_chunks(c)))
        .zip(weights.par_iter())
        .for_each(|((d, (b, o)), &w)| {
            let g = gamma * f64::from(w.clamp(0.0, 1.0));
            for i in 0..c {
                d[i] = ((1.0 - g) * f64::from(b[i]) + g * f64::from(o[i])) as f32;
            }
        });
    Ok(ImageBuffer::from_raw_clamped(base.width, base.height, base.mode, data))
}

fn check_blend_inputs(base: &ImageBuffer, overlay: &ImageBuffer) -> Result<()> {
    if !base.same_shape(overlay) {
        return Err(Error::Shape(format!(
            "cannot blend {}x{}x{} with {}x{}x{}",
            base.width,
            base.height,
            base.channels(),
            overlay.width,
            overlay.height,
            overlay.channels()
        )));
    }
    Ok(())
}

/// Per-channel 2-D correlation with replicate-edge borders.
///
/// The kernel anchor sits at `size / 2` on both axes. Accumulation is done in
/// `f64` in row-major tap order, so constant images come back unchanged.
pub fn convolve(img: &ImageBuffer, kernel: &Kernel) -> Result<ImageBuffer> {
    if img.is_empty() {
        return Err(Error::Shape("cannot convolve an empty image".into()));
    }
    let (w, h, c) = (img.width as isize, img.height as isize, img.channels());
    let anchor = (kernel.size / 2) as isize;
    let taps: Vec<(isize, isize, f64)> = (0..kernel.size)
        .flat_map(|ky| (0..kernel.size).map(move |kx| (kx, ky)))
        .filter_map(|(kx, ky)| {
            let wgt = kernel.at(kx, ky);
            (wgt != 0.0).then_some((kx as isize - anchor, ky as isize - anchor, wgt))
        })
        .collect();

    let mut out = vec![0.0f32; img.data.len()];
    out.par_chunks_mut(img.width * c)
        .enumerate()
        .for_each(|(y, row)| {
            let y = y as isize;
            let mut acc = vec![0.0f64; c];
            for x in 0..w {
                acc.fill(0.0);
                for &(dx, dy, wgt) in &taps {
                    let sx = (x + dx).clamp(0, w - 1) as usize;
                    let sy = (y + dy).clamp(0, h - 1) as usize;
                    let src = img.pixel(sx, sy);
                    for (a, &s) in acc.iter_mut().zip(src) {
                        *a += wgt * f64::from(s);
                    }
                }
                let base = x as usize * c;
                for (o, a) in row[base..base + c].iter_mut().zip(&acc) {
                    *o = *a as f32;
                }
            }
        });
    Ok(ImageBuffer::from_raw_clamped(img.width, img.height, img.mode, out))
}

/// Nearest-neighbor resampling with `src = floor(dst * src_size / dst_size)`.
pub fn resize_nearest(img: &ImageBuffer, new_w: usize, new_h: usize) -> Result<ImageBuffer> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::Range(format!("target size {new_w}x{new_h} has no pixels")));
    }
    if img.is_empty() {
        return Err(Error::Shape("cannot resize an empty image".into()));
    }
    if new_w == img.width && new_h == img.height {
        return Ok(img.clone());
    }
    let c = img.channels();
    let cols: Vec<usize> = (0..new_w).map(|x| x * img.width / new_w).collect();
    let mut out = vec![0.0f32; new_w * new_h * c];
    out.par_chunks_mut(new_w * c).enumerate().for_each(|(y, row)| {
        let sy = y * img.height / new_h;
        for (x, &sx) in cols.iter().enumerate() {
            row[x * c..(x + 1) * c].copy_from_slice(img.pixel(sx, sy));
        }
    });
    Ok(ImageBuffer {
        width: new_w,
        height: new_h,
        mode: img.mode,
        data: out,
    })
}

/// BT.601 luma of an RGB or RGBA image (alpha is dropped).
pub fn to_grayscale(img: &ImageBuffer) -> Result<ImageBuffer> {
    match img.mode {
        ColorMode::RGB | ColorMode::RGBA => Ok(img.map_pixels(ColorMode::L, |s, d| {
            d[0] = luma(f64::from(s[0]), f64::from(s[1]), f64::from(s[2])) as f32;
        })),
        m => Err(Error::Mode(format!("grayscale conversion needs RGB or RGBA, got {m}"))),
    }
}

pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
}
