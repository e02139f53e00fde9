//! Radially averaged power spectra for texture analysis.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// In-place forward transform. Power-of-two lengths use iterative radix-2,
/// other lengths fall back to the direct sum.
pub fn fft(data: &mut [Complex]) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if !n.is_power_of_two() {
        let out = dft(data);
        data.copy_from_slice(&out);
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let step = Complex::new((TAU / len as f64).cos(), -(TAU / len as f64).sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = data[start + k];
                let b = data[start + k + len / 2].mul(w);
                data[start + k] = a.add(b);
                data[start + k + len / 2] = a.sub(b);
                w = w.mul(step);
            }
        }
        len <<= 1;
    }
}

/// Direct `O(n²)` discrete Fourier transform.
pub fn dft(data: &[Complex]) -> Vec<Complex> {
    let n = data.len();
    (0..n)
        .map(|k| {
            data.iter().enumerate().fold(Complex::default(), |acc, (t, &x)| {
                let angle = -TAU * ((k * t) % n) as f64 / n as f64;
                acc.add(x.mul(Complex::new(angle.cos(), angle.sin())))
            })
        })
        .collect()
}

/// 2-D transform of a row-major `n`×`n` grid.
pub fn fft2(values: &[f64], n: usize) -> Vec<Complex> {
    let mut grid: Vec<Complex> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    grid.par_chunks_mut(n).for_each(fft);
    let mut cols: Vec<Complex> = vec![Complex::default(); n * n];
    for y in 0..n {
        for x in 0..n {
            cols[x * n + y] = grid[y * n + x];
        }
    }
    cols.par_chunks_mut(n).for_each(fft);
    for x in 0..n {
        for y in 0..n {
            grid[y * n + x] = cols[x * n + y];
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBin {
    /// Radius band `[lo, hi)` as a fraction of the Nyquist radius.
    pub lo: f64,
    pub hi: f64,
    pub mean_power: f64,
    pub total_power: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub bins: Vec<SpectrumBin>,
    pub dc_power: f64,
    pub dc_excluded: bool,
}

impl RadialSpectrum {
    /// Count-weighted mean power over bins whose band lies within `[lo, hi]`
    /// (fractions of Nyquist).
    pub fn band_mean(&self, lo: f64, hi: f64) -> f64 {
        let eps = 1e-12;
        let (total, count) = self
            .bins
            .iter()
            .filter(|b| b.lo >= lo - eps && b.hi <= hi + eps)
            .fold((0.0, 0usize), |(t, c), b| (t + b.total_power, c + b.count));
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    pub fn binned_total(&self) -> f64 {
        self.bins.iter().map(|b| b.total_power).sum()
    }
}

/// Power `|X|² / N` of a square single-channel image, DC excluded, averaged
/// over `n_bins` equal-width annuli up to the Nyquist radius. Frequencies in
/// the corners beyond Nyquist are folded into the last bin, so the binned
/// total plus the DC power equals the image's energy `Σ x²`.
pub fn radial_power_spectrum(img: &ImageBuffer, n_bins: usize) -> Result<RadialSpectrum> {
    if img.channels() != 1 {
        return Err(Error::Shape(format!("spectrum needs one channel, got {}", img.channels())));
    }
    if img.width() != img.height() || img.is_empty() {
        return Err(Error::Shape(format!(
            "spectrum needs a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    if n_bins == 0 {
        return Err(Error::Range("spectrum needs at least one bin".into()));
    }
    let n = img.width();
    let values: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let spectrum = fft2(&values, n);
    let pixels = (n * n) as f64;
    let nyquist = n as f64 / 2.0;
    let signed = |k: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    let mut totals = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    let mut dc_power = 0.0;
    for v in 0..n {
        for u in 0..n {
            let p = spectrum[v * n + u].norm_sqr() / pixels;
            if u == 0 && v == 0 {
                dc_power = p;
                continue;
            }
            let r = signed(u).hypot(signed(v)) / nyquist;
            let b = ((r * n_bins as f64) as usize).min(n_bins - 1);
            totals[b] += p;
            counts[b] += 1;
        }
    }
    let bins = (0..n_bins)
        .map(|i| SpectrumBin {
            lo: i as f64 / n_bins as f64,
            hi: (i + 1) as f64 / n_bins as f64,
            mean_power: if counts[i] == 0 { 0.0 } else { totals[i] / counts[i] as f64 },
            total_power: totals[i],
            count: counts[i],
        })
        .collect();
    Ok(RadialSpectrum {
        bins,
        dc_power,
        dc_excluded: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorMode;
    use crate::rng::rng_from;
    use rand::Rng as _;

    #[test]
    fn fft_matches_direct_dft() {
        let mut rng = rng_from(&[3]);
        for n in [1, 2, 4, 8, 16, 32, 64, 12] {
            let x: Vec<Complex> = (0..n).map(|_| Complex::new(rng.gen(), rng.gen())).collect();
            let want = dft(&x);
            let mut got = x.clone();
            fft(&mut got);
            for (a, b) in got.iter().zip(&want) {
                assert!((a.re - b.re).abs() < 1e-9 && (a.im - b.im).abs() < 1e-9, "n = {n}");
            }
        }
    }

    #[test]
    fn constant_image_has_only_dc() {
        let img = ImageBuffer::filled(32, 32, ColorMode::L, &[0.7]).unwrap();
        let s = radial_power_spectrum(&img, 8).unwrap();
        assert!(s.bins.iter().all(|b| b.mean_power < 1e-20));
        assert!(s.dc_power > 0.0);
    }

    #[test]
    fn sinusoid_peaks_in_its_band() {
        let n = 64;
        let img = ImageBuffer::from_fn(n, n, ColorMode::L, |x, y, _| {
            (0.5 + 0.4 * (TAU * (8.0 * x as f64 + 6.0 * y as f64) / n as f64).cos()) as f32
        });
        let s = radial_power_spectrum(&img, 16).unwrap();
        // radius 10 of Nyquist 32 → 0.3125 → bin 5
        let peak = s.bins[5].mean_power;
        for (i, b) in s.bins.iter().enumerate() {
            if i != 5 {
                assert!(peak >= 10.0 * b.mean_power, "bin {i}");
            }
        }
    }

    #[test]
    fn parseval_holds() {
        let mut rng = rng_from(&[8]);
        let img = ImageBuffer::from_fn(64, 64, ColorMode::L, |_, _, _| rng.gen());
        let s = radial_power_spectrum(&img, 10).unwrap();
        let energy: f64 = img.data().iter().map(|&v| f64::from(v).powi(2)).sum();
        assert!(((s.binned_total() + s.dc_power) - energy).abs() <= 1e-6 * energy);
    }

    #[test]
    fn white_noise_is_flat() {
        let bins = 8;
        let mut avg = vec![0.0; bins];
        for seed in 0..10 {
            let mut rng = rng_from(&[seed]);
            let img = ImageBuffer::from_fn(64, 64, ColorMode::L, |_, _, _| rng.gen());
            for (a, b) in avg.iter_mut().zip(radial_power_spectrum(&img, bins).unwrap().bins) {
                *a += b.mean_power / 10.0;
            }
        }
        let mean = avg.iter().sum::<f64>() / bins as f64;
        assert!(avg.iter().all(|p| (p - mean).abs() <= 0.2 * mean), "{avg:?}");
    }

    #[test]
    fn shape_errors() {
        let rect = ImageBuffer::filled(8, 4, ColorMode::L, &[0.0]).unwrap();
        assert!(matches!(radial_power_spectrum(&rect, 4), Err(Error::Shape(_))));
        let rgb = ImageBuffer::filled(8, 8, ColorMode::RGB, &[0.0; 3]).unwrap();
        assert!(matches!(radial_power_spectrum(&rgb, 4), Err(Error::Shape(_))));
    }
}
