//! Tone reproduction curves (device value → linear light).

use crate::error::{Error, Result};

/// Number of probes used to check monotonicity of parametric curves.
const MONOTONE_PROBES: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum ToneCurve {
    /// `y = x^gamma`.
    Gamma(f64),
    /// Uniformly spaced samples over `[0, 1]`, linearly interpolated.
    Sampled(Vec<f64>),
    /// ICC `para` function of type 0..=4, rescaled so that `f(0) = 0`, `f(1) = 1`.
    Parametric {
        kind: u16,
        params: Vec<f64>,
        offset: f64,
        scale: f64,
    },
}

impl ToneCurve {
    pub fn gamma(g: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Validation(format!("gamma {g} must be positive")));
        }
        Ok(ToneCurve::Gamma(g))
    }

    /// Builds a sampled curve normalized to `f(0) = 0`, `f(1) = 1`.
    pub fn sampled(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Validation("sampled curve needs at least 2 points".into()));
        }
        if samples.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("tone curve is not monotone".into()));
        }
        let (lo, hi) = (samples[0], samples[samples.len() - 1]);
        if !(hi > lo) {
            return Err(Error::Validation("tone curve is flat".into()));
        }
        Ok(ToneCurve::Sampled(
            samples.into_iter().map(|v| (v - lo) / (hi - lo)).collect(),
        ))
    }

    pub fn parametric(kind: u16, params: Vec<f64>) -> Result<Self> {
        let needed = match kind {
            0 => 1,
            1 => 3,
            2 => 4,
            3 => 5,
            4 => 7,
            _ => return Err(Error::UnsupportedProfile(format!("parametric curve type {kind}"))),
        };
        if params.len() < needed {
            return Err(Error::Format(format!(
                "parametric curve type {kind} needs {needed} parameters, got {}",
                params.len()
            )));
        }
        let raw = |x: f64| eval_parametric(kind, &params, x);
        let (lo, hi) = (raw(0.0), raw(1.0));
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Validation("parametric curve does not increase over [0, 1]".into()));
        }
        let curve = ToneCurve::Parametric {
            kind,
            params,
            offset: lo,
            scale: hi - lo,
        };
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=MONOTONE_PROBES {
            let y = curve.eval(i as f64 / MONOTONE_PROBES as f64);
            if !y.is_finite() || y < prev - 1e-12 {
                return Err(Error::Validation("tone curve is not monotone".into()));
            }
            prev = y;
        }
        Ok(curve)
    }

    /// Decodes a device value in `[0, 1]` to linear light.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            ToneCurve::Gamma(g) => x.powf(*g),
            ToneCurve::Sampled(t) => {
                let pos = x * (t.len() - 1) as f64;
                let i = (pos.floor() as usize).min(t.len() - 2);
                let f = pos - i as f64;
                t[i] + (t[i + 1] - t[i]) * f
            }
            ToneCurve::Parametric {
                kind,
                params,
                offset,
                scale,
            } => ((eval_parametric(*kind, params, x) - offset) / scale).clamp(0.0, 1.0),
        }
    }

    /// Encodes linear light in `[0, 1]` back to a device value.
    pub fn invert(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self {
            ToneCurve::Gamma(g) => y.powf(1.0 / g),
            ToneCurve::Sampled(t) => {
                // first segment whose upper end reaches y
                let idx = t.partition_point(|&v| v < y);
                if idx == 0 {
                    return 0.0;
                }
                if idx >= t.len() {
                    return 1.0;
                }
                let (a, b) = (t[idx - 1], t[idx]);
                let f = if b > a { (y - a) / (b - a) } else { 0.0 };
                ((idx - 1) as f64 + f) / (t.len() - 1) as f64
            }
            ToneCurve::Parametric { .. } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..48 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

fn eval_parametric(kind: u16, p: &[f64], x: f64) -> f64 {
    let g = p[0];
    let pow = |base: f64| if base > 0.0 { base.powf(g) } else { 0.0 };
    match kind {
        0 => pow(x),
        1 => {
            let (a, b) = (p[1], p[2]);
            if x >= -b / a {
                pow(a * x + b)
            } else {
                0.0
            }
        }
        2 => {
            let (a, b, c) = (p[1], p[2], p[3]);
            if x >= -b / a {
                pow(a * x + b) + c
            } else {
                c
            }
        }
        3 => {
            let (a, b, c, d) = (p[1], p[2], p[3], p[4]);
            if x >= d {
                pow(a * x + b)
            } else {
                c * x
            }
        }
        4 => {
            let (a, b, c, d, e, f) = (p[1], p[2], p[3], p[4], p[5], p[6]);
            if x >= d {
                pow(a * x + b) + e
            } else {
                c * x + f
            }
        }
        _ => unreachable!("kind validated at construction"),
    }
}

/// sRGB decoding expressed as ICC parametric type 3 parameters.
pub fn srgb_parameters() -> Vec<f64> {
    vec![2.4, 1.0 / 1.055, 0.055 / 1.055, 1.0 / 12.92, 0.04045]
}
