use std::collections::HashSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use recapture::capture::{hand_trembling, low_resolution, motion_kernel, BlurDirection, BlurSpec, ResolutionSpec};
use recapture::icc::{
    cmyk_render, cmyk_to_rgb_pixel, color_distortion, color_diversity, gamut_map, rgb_to_cmyk_pixel, PresetBank,
    ProfileBank,
};
use recapture::image::{convex_blend, convolve, resize_nearest, to_grayscale};
use recapture::print::{
    bn_halftone, build_bluenoise_bank_with, generate_blue_noise, sfc_halftone, sfc_halftone_image, BlueNoiseTexture,
    DotClusterTable,
};
use recapture::replay::{
    default_layouts, is_convex, moire, specular_reflection, synth_moire_bank, BackgroundBank, Homography,
    MoireSynthConfig, MoireTexture, Point,
};
use recapture::rng::rng_from;
use recapture::spectral::radial_power_spectrum;
use recapture::{ColorMode, ImageBuffer, Kernel};

fn image(mode: ColorMode, max: usize) -> impl Strategy<Value = ImageBuffer> {
    (1..=max, 1..=max).prop_flat_map(move |(w, h)| {
        prop::collection::vec(0.0f32..=1.0, w * h * mode.channels())
            .prop_map(move |data| ImageBuffer::new(w, h, mode, data).unwrap())
    })
}

fn pair(mode: ColorMode, max: usize) -> impl Strategy<Value = (ImageBuffer, ImageBuffer)> {
    (1..=max, 1..=max).prop_flat_map(move |(w, h)| {
        let n = w * h * mode.channels();
        (prop::collection::vec(0.0f32..=1.0, n), prop::collection::vec(0.0f32..=1.0, n)).prop_map(move |(a, b)| {
            (ImageBuffer::new(w, h, mode, a).unwrap(), ImageBuffer::new(w, h, mode, b).unwrap())
        })
    })
}

fn kernel() -> impl Strategy<Value = Kernel> {
    (1usize..=5).prop_flat_map(|k| {
        prop::collection::vec(0.01f64..1.0, k * k).prop_map(move |w| Kernel::normalized(k, w).unwrap())
    })
}

fn within_bounds(out: &ImageBuffer, a: &ImageBuffer, b: &ImageBuffer) -> bool {
    out.data().iter().zip(a.data().iter().zip(b.data())).all(|(&o, (&x, &y))| {
        o >= x.min(y) - 1e-6 && o <= x.max(y) + 1e-6
    })
}

fn in_unit_range(img: &ImageBuffer) -> bool {
    img.data().iter().all(|v| (0.0..=1.0).contains(v))
}

fn moire_bank() -> &'static [MoireTexture] {
    static BANK: OnceLock<Vec<MoireTexture>> = OnceLock::new();
    BANK.get_or_init(|| {
        synth_moire_bank(&default_layouts(), 3, MoireSynthConfig { size: 64, ..MoireSynthConfig::default() }).unwrap()
    })
}

fn bn_bank() -> &'static [BlueNoiseTexture] {
    static BANK: OnceLock<Vec<BlueNoiseTexture>> = OnceLock::new();
    BANK.get_or_init(|| build_bluenoise_bank_with(4, 32).unwrap())
}

/// `name@x,y` from an asset string.
fn parse_asset(asset: &str) -> (String, usize, usize) {
    let (name, pos) = asset.split_once(':').unwrap().1.rsplit_once('@').unwrap();
    let (x, y) = pos.split_once(',').unwrap();
    (name.to_string(), x.parse().unwrap(), y.parse().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn blend_stays_between_sources((a, b) in pair(ColorMode::RGB, 12), gamma in 0.0f64..=1.0) {
        let out = convex_blend(&a, &b, gamma).unwrap();
        prop_assert!(within_bounds(&out, &a, &b));
        prop_assert_eq!(out, convex_blend(&a, &b, gamma).unwrap());
    }

    #[test]
    fn blend_endpoints((a, b) in pair(ColorMode::RGBA, 8)) {
        prop_assert_eq!(convex_blend(&a, &b, 0.0).unwrap(), a.clone());
        prop_assert_eq!(convex_blend(&a, &b, 1.0).unwrap(), b);
    }

    #[test]
    fn convolution_keeps_constants(k in kernel(), v in 0.0f32..=1.0, w in 1usize..10, h in 1usize..10) {
        let img = ImageBuffer::filled(w, h, ColorMode::RGB, &[v, v, v]).unwrap();
        // taps are normalized in f64, so a constant survives up to f32 rounding
        let out = convolve(&img, &k).unwrap();
        prop_assert!(out.data().iter().all(|&o| (o - v).abs() <= 1e-7));
    }

    #[test]
    fn nearest_resize_adds_no_values(img in image(ColorMode::RGB, 10), w in 1usize..24, h in 1usize..24) {
        let before: HashSet<u32> = img.data().iter().map(|v| v.to_bits()).collect();
        let out = resize_nearest(&img, w, h).unwrap();
        prop_assert_eq!((out.width(), out.height()), (w, h));
        prop_assert!(out.data().iter().all(|v| before.contains(&v.to_bits())));
    }

    #[test]
    fn motion_kernels_have_k_equal_taps(k in 1usize..=16, d in 0usize..4) {
        let kernel = motion_kernel(BlurSpec::new(k, BlurDirection::ALL[d]).unwrap()).unwrap();
        let nonzero: Vec<f64> = kernel.weights().iter().copied().filter(|&w| w != 0.0).collect();
        prop_assert_eq!(nonzero.len(), k);
        prop_assert!(nonzero.iter().all(|&w| (w - 1.0 / k as f64).abs() < 1e-15));
    }

    #[test]
    fn capture_ops_keep_shape(img in image(ColorMode::RGB, 20), k in 1usize..=16, d in 0usize..4, s in 0.3f64..=1.0) {
        let blurred = hand_trembling(&img, BlurSpec::new(k, BlurDirection::ALL[d]).unwrap()).unwrap();
        prop_assert!(blurred.same_shape(&img));
        prop_assert!(in_unit_range(&blurred));
        if let Ok(low) = low_resolution(&img, ResolutionSpec::new(s).unwrap()) {
            prop_assert!(low.same_shape(&img));
        }
    }

    #[test]
    fn decimation_is_idempotent(img in image(ColorMode::RGB, 6), div in prop::sample::select(vec![2usize, 3, 4, 6])) {
        let big = resize_nearest(&img, 48, 48).unwrap();
        let spec = ResolutionSpec::new(1.0 / div as f64).unwrap();
        let once = low_resolution(&big, spec).unwrap();
        prop_assert_eq!(low_resolution(&once, spec).unwrap(), once);
    }

    #[test]
    fn same_profile_mapping_is_identity(img in image(ColorMode::RGB, 6), p in 0usize..11) {
        let bank = ProfileBank::standard();
        let out = gamut_map(&img, bank.get(p), bank.get(p)).unwrap();
        for (o, i) in out.data().iter().zip(img.data()) {
            prop_assert!((o - i).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn white_survives_every_profile_pair(a in 0usize..11, b in 0usize..11) {
        let bank = ProfileBank::standard();
        let white = ImageBuffer::filled(1, 1, ColorMode::RGB, &[1.0; 3]).unwrap();
        let out = gamut_map(&white, bank.get(a), bank.get(b)).unwrap();
        prop_assert!(out.data().iter().all(|&v| v >= 1.0 - 1.0 / 255.0));
    }

    #[test]
    fn separation_round_trip(r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let cmyk = rgb_to_cmyk_pixel([r, g, b]);
        prop_assert!(cmyk.iter().all(|v| (0.0..=1.0).contains(v)));
        if cmyk[3] < 1.0 {
            let back = cmyk_to_rgb_pixel(cmyk);
            prop_assert!((back[0] - r).abs() < 1e-6 && (back[1] - g).abs() < 1e-6 && (back[2] - b).abs() < 1e-6);
        }
    }

    #[test]
    fn color_ops_stay_in_range(img in image(ColorMode::RGB, 8), seed in any::<u64>()) {
        let profiles = ProfileBank::standard();
        let presets = PresetBank::standard();
        let a = color_diversity(&img, &mut rng_from(&[seed]), &profiles).unwrap();
        prop_assert!(in_unit_range(&a.image));
        prop_assert_eq!(&a, &color_diversity(&img, &mut rng_from(&[seed]), &profiles).unwrap());
        let b = color_distortion(&img, &mut rng_from(&[seed]), &presets, &profiles).unwrap();
        prop_assert!(in_unit_range(&b.image));
        prop_assert!(b.image.same_shape(&img));
    }

    #[test]
    fn homography_hits_displaced_corners(offsets in prop::collection::vec(-10.0f64..10.0, 8)) {
        let src: [Point; 4] = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)];
        let dst: [Point; 4] = std::array::from_fn(|i| (src[i].0 + offsets[2 * i], src[i].1 + offsets[2 * i + 1]));
        prop_assume!(is_convex(&dst));
        let h = Homography::from_correspondences(&src, &dst).unwrap();
        for i in 0..4 {
            let p = h.apply(src[i]);
            prop_assert!((p.0 - dst[i].0).abs() < 1e-6 && (p.1 - dst[i].1).abs() < 1e-6);
        }
    }

    #[test]
    fn moire_is_a_convex_composite(img in image(ColorMode::RGB, 24), seed in any::<u64>(), gamma in 0.01f64..=0.3) {
        let bank = moire_bank();
        let out = moire(&img, &mut rng_from(&[seed]), bank, gamma).unwrap();
        let (id, x, y) = parse_asset(&out.assets[0]);
        let tex = bank.iter().find(|t| t.id() == id).unwrap();
        let overlay = tex.render_region(x, y, img.width(), img.height());
        prop_assert!(within_bounds(&out.image, &img, &overlay));
        prop_assert_eq!(&out, &moire(&img, &mut rng_from(&[seed]), bank, gamma).unwrap());
    }

    #[test]
    fn reflection_is_a_convex_composite(img in image(ColorMode::RGB, 24), seed in any::<u64>(), gamma in 0.03f64..=0.2) {
        let bank = BackgroundBank::procedural();
        let out = specular_reflection(&img, &mut rng_from(&[seed]), &bank, gamma).unwrap();
        let (name, x, y) = parse_asset(&out.assets[0]);
        let bg = bank.iter().find(|b| b.name == name).unwrap();
        let overlay = bg.image.crop(x, y, img.width(), img.height()).unwrap();
        prop_assert!(within_bounds(&out.image, &img, &overlay));
    }

    #[test]
    fn sfc_is_a_convex_composite(img in image(ColorMode::RGB, 24), gamma in 0.01f64..=0.2) {
        prop_assume!(img.width() >= 3 && img.height() >= 3);
        let out = sfc_halftone(&img, gamma).unwrap();
        prop_assert!(within_bounds(&out, &img, &sfc_halftone_image(&img).unwrap()));
    }

    #[test]
    fn bn_halftone_stays_in_range(img in image(ColorMode::RGB, 40), seed in any::<u64>(), gamma in 0.01f64..=0.4) {
        let out = bn_halftone(&img, &mut rng_from(&[seed]), bn_bank(), gamma).unwrap();
        prop_assert!(out.image.same_shape(&img));
        prop_assert!(in_unit_range(&out.image));
        prop_assert_eq!(&out, &bn_halftone(&img, &mut rng_from(&[seed]), bn_bank(), gamma).unwrap());
    }

    #[test]
    fn darker_gray_means_more_ink(a in 0.0f32..=1.0, b in 0.0f32..=1.0) {
        let ink = |v: f32| {
            let img = ImageBuffer::filled(9, 9, ColorMode::L, &[v]).unwrap();
            sfc_halftone_image(&img).unwrap().data().iter().filter(|&&p| p == 0.0).count()
        };
        let (dark, light) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(ink(dark) >= ink(light));
    }

    #[test]
    fn blue_noise_histograms_are_uniform(seed in any::<u64>(), channels in 1usize..=4) {
        let tex = generate_blue_noise(16, 16, channels, seed).unwrap();
        for c in 0..channels {
            let mut hist = [0usize; 256];
            for y in 0..16 {
                for x in 0..16 {
                    hist[recapture::image::quantize(tex.get(x, y, c)) as usize] += 1;
                }
            }
            prop_assert!(hist.iter().all(|&n| n == 1));
        }
    }

    #[test]
    fn spectrum_is_consistent(img in (3u32..=5).prop_flat_map(|e| image_square(1 << e))) {
        let spec = radial_power_spectrum(&img, 8).unwrap();
        prop_assert!(spec.bins.windows(2).all(|w| w[0].hi <= w[1].lo + 1e-12));
        prop_assert!(spec.bins.iter().all(|b| b.mean_power >= 0.0));
        let energy: f64 = img.data().iter().map(|&v| f64::from(v).powi(2)).sum();
        let total = spec.binned_total() + spec.dc_power;
        prop_assert!((total - energy).abs() <= 1e-6 * energy.max(1e-12));
    }
}

fn image_square(n: usize) -> impl Strategy<Value = ImageBuffer> {
    prop::collection::vec(0.0f32..=1.0, n * n).prop_map(move |d| ImageBuffer::new(n, n, ColorMode::L, d).unwrap())
}

#[test]
fn cluster_masks_nest() {
    let table = DotClusterTable::spiral();
    for l in 0..table.clusters.len() - 1 {
        assert!(table.ink_count(l) <= table.ink_count(l + 1));
        for y in 0..3 {
            for x in 0..3 {
                assert!(!table.clusters[l][y][x] || table.clusters[l + 1][y][x]);
            }
        }
    }
}

#[test]
fn blur_preserves_the_mean_of_a_large_image() {
    let img = ImageBuffer::from_fn(224, 224, ColorMode::RGB, |x, y, c| {
        (((x * 31 + y * 17 + c * 7) % 97) as f32 / 96.0) * 0.8 + 0.1
    });
    let mean = |i: &ImageBuffer| i.data().iter().map(|&v| f64::from(v)).sum::<f64>() / i.data().len() as f64;
    for d in BlurDirection::ALL {
        let out = hand_trembling(&img, BlurSpec::new(16, d).unwrap()).unwrap();
        assert!((mean(&out) - mean(&img)).abs() <= 1e-3, "{d:?}");
    }
    let flat = ImageBuffer::filled(30, 30, ColorMode::RGB, &[0.25; 3]).unwrap();
    assert_eq!(hand_trembling(&flat, BlurSpec::new(14, BlurDirection::Diagonal).unwrap()).unwrap(), flat);
}

#[test]
fn decimated_output_has_few_values() {
    let img = ImageBuffer::from_fn(224, 224, ColorMode::RGB, |x, y, c| ((x * 3 + y * 5 + c) % 251) as f32 / 250.0);
    let out = low_resolution(&img, ResolutionSpec::new(1.0 / 3.0).unwrap()).unwrap();
    let small = resize_nearest(&img, 74, 74).unwrap();
    let distinct = |i: &ImageBuffer| i.data().chunks(3).map(|p| p.iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<HashSet<_>>().len();
    assert!(distinct(&out) <= distinct(&small));
}

#[test]
fn moire_with_zero_radius_tiles_the_layout() {
    let layouts = default_layouts();
    let bank = synth_moire_bank(&layouts[..1], 9, MoireSynthConfig { size: 48, warps_per_layout: 2, radius_fraction: 0.0 }).unwrap();
    let raster = bank[0].render();
    for y in 0..48 {
        for x in 0..48 {
            for c in 0..3 {
                assert_eq!(raster.get(x, y, c), layouts[0].sample(x % 12, y % 12, c));
            }
        }
    }
    let again = synth_moire_bank(&layouts[..1], 9, MoireSynthConfig { size: 48, warps_per_layout: 2, radius_fraction: 0.0 }).unwrap();
    assert_eq!(again[1].render(), bank[1].render());
}

#[test]
fn default_moire_corners_stay_in_radius() {
    let bank = synth_moire_bank(&default_layouts(), 21, MoireSynthConfig::default()).unwrap();
    let base: [Point; 4] = [(0.0, 0.0), (1024.0, 0.0), (1024.0, 1024.0), (0.0, 1024.0)];
    for t in &bank {
        for (c, b) in t.corners().iter().zip(base) {
            assert!((c.0 - b.0).abs() <= 102.4 && (c.1 - b.1).abs() <= 102.4);
        }
    }
    let other = synth_moire_bank(&default_layouts(), 22, MoireSynthConfig::default()).unwrap();
    assert_ne!(bank[0].corners(), other[0].corners());
}

#[test]
fn press_render_anchors() {
    for preset in PresetBank::standard().iter() {
        let no_ink = ImageBuffer::filled(1, 1, ColorMode::CMYK, &[0.0; 4]).unwrap();
        assert!(cmyk_render(&no_ink, preset).unwrap().data().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        let black = ImageBuffer::filled(1, 1, ColorMode::CMYK, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(cmyk_render(&black, preset).unwrap().data().iter().all(|&v| v <= 0.1), "{}", preset.name);
    }
}

#[test]
fn grayscale_of_ramps() {
    let img = ImageBuffer::from_fn(11, 1, ColorMode::RGB, |x, _, _| x as f32 / 10.0);
    let g = to_grayscale(&img).unwrap();
    for x in 0..11 {
        assert!((g.get(x, 0, 0) - x as f32 / 10.0).abs() < 1e-6);
    }
}
