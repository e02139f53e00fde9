//! A small two-layer model trained on a synthetic multi-domain problem, used
//! to check that the combined objective equalizes domain risks.
//!
//! The model is `h = tanh(W x + b)`, `z = v·h + c`. The contrastive term acts
//! on `h / |h|` of real examples; the variance term on per-domain spoof risks.

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::loss::{
    bce_with_logit, sigmoid, supcon_loss_grad, total_loss, variance, variance_grad, LossReport, RiskVector,
    DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_TAU,
};
use crate::error::{Error, Result};
use crate::rng::rng_from;

pub const INPUT_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 400,
            learning_rate: 0.2,
            hidden: 8,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            tau: DEFAULT_TAU,
        }
    }
}

/// One cluster pair of the synthetic scenario.
#[derive(Debug, Clone, Copy)]
struct DomainSpec {
    real_center: [f64; 2],
    spoof_center: [f64; 2],
    real: usize,
    spoof: usize,
}

/// Four domains: three with well-separated spoofs, one small domain whose
/// spoofs sit close to the real faces.
const SCENARIO: [DomainSpec; 4] = [
    DomainSpec {
        real_center: [-0.5, 0.0],
        spoof_center: [2.5, 0.0],
        real: 60,
        spoof: 60,
    },
    DomainSpec {
        real_center: [0.0, -0.5],
        spoof_center: [0.0, 2.5],
        real: 60,
        spoof: 60,
    },
    DomainSpec {
        real_center: [0.5, 0.0],
        spoof_center: [-2.5, 0.0],
        real: 60,
        spoof: 60,
    },
    DomainSpec {
        real_center: [0.0, 0.5],
        spoof_center: [0.6, -1.2],
        real: 60,
        spoof: 15,
    },
];
const CLUSTER_STD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    pub x: Vec<[f64; INPUT_DIM]>,
    /// 1 for spoof, 0 for real.
    pub y: Vec<f64>,
    pub domain: Vec<usize>,
    pub domains: usize,
}

impl ToyData {
    pub fn scenario(seed: u64) -> Self {
        let mut rng = rng_from(&[seed, 0x64617461]);
        let noise = Normal::new(0.0, CLUSTER_STD).expect("positive std");
        let mut data = ToyData {
            x: Vec::new(),
            y: Vec::new(),
            domain: Vec::new(),
            domains: SCENARIO.len(),
        };
        for (d, spec) in SCENARIO.iter().enumerate() {
            for (center, count, label) in [(spec.real_center, spec.real, 0.0), (spec.spoof_center, spec.spoof, 1.0)] {
                for _ in 0..count {
                    data.x.push([center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)]);
                    data.y.push(label);
                    data.domain.push(d);
                }
            }
        }
        data
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub hidden: usize,
    /// Row-major `hidden × INPUT_DIM`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl Params {
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = rng_from(&[seed, 0x696e6974]);
        let mut u = |s: f64| rng.gen_range(-s..s);
        Self {
            hidden,
            w: (0..hidden * INPUT_DIM).map(|_| u(1.0)).collect(),
            b: (0..hidden).map(|_| u(0.5)).collect(),
            v: (0..hidden).map(|_| u(0.5)).collect(),
            c: 0.0,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w.len() + 2 * self.hidden + 1);
        out.extend(&self.w);
        out.extend(&self.b);
        out.extend(&self.v);
        out.push(self.c);
        out
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Self {
        let (w, rest) = flat.split_at(hidden * INPUT_DIM);
        let (b, rest) = rest.split_at(hidden);
        let (v, rest) = rest.split_at(hidden);
        Self {
            hidden,
            w: w.to_vec(),
            b: b.to_vec(),
            v: v.to_vec(),
            c: rest[0],
        }
    }

    fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            w: vec![0.0; hidden * INPUT_DIM],
            b: vec![0.0; hidden],
            v: vec![0.0; hidden],
            c: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: LossReport,
    pub risks: RiskVector,
    pub grad: Params,
}

/// Loss terms, per-domain risks and the analytic gradient at `p`.
pub fn evaluate(p: &Params, data: &ToyData, alpha: f64, beta: f64, tau: f64) -> Result<Evaluation> {
    let n = data.len();
    let hdim = p.hidden;
    let mut hs = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    for x in &data.x {
        let h: Vec<f64> = (0..hdim)
            .map(|k| (p.w[k * INPUT_DIM] * x[0] + p.w[k * INPUT_DIM + 1] * x[1] + p.b[k]).tanh())
            .collect();
        zs.push(h.iter().zip(&p.v).map(|(a, b)| a * b).sum::<f64>() + p.c);
        hs.push(h);
    }
    let losses: Vec<f64> = zs.iter().zip(&data.y).map(|(&z, &y)| bce_with_logit(z, y)).collect();
    let bce = losses.iter().sum::<f64>() / n as f64;

    // per-domain spoof risks
    let mut sums = vec![0.0; data.domains];
    let mut counts = vec![0usize; data.domains];
    for i in 0..n {
        if data.y[i] == 1.0 {
            sums[data.domain[i]] += losses[i];
            counts[data.domain[i]] += 1;
        }
    }
    let groups: Vec<usize> = (0..data.domains).filter(|&d| counts[d] > 0).collect();
    let risks: Vec<f64> = groups.iter().map(|&d| sums[d] / counts[d] as f64).collect();
    let sare = variance(&risks)?;
    let risk_grad = variance_grad(&risks)?;
    let mut group_weight = vec![0.0; data.domains];
    for (g, &d) in groups.iter().enumerate() {
        group_weight[d] = risk_grad[g] / counts[d] as f64;
    }

    // contrastive term on normalized embeddings
    let norms: Vec<f64> = hs.iter().map(|h| (h.iter().map(|a| a * a).sum::<f64>() + 1e-12).sqrt()).collect();
    let units: Vec<Vec<f64>> = hs.iter().zip(&norms).map(|(h, &r)| h.iter().map(|a| a / r).collect()).collect();
    let is_real: Vec<bool> = data.y.iter().map(|&y| y == 0.0).collect();
    let (con, unit_grads) = supcon_loss_grad(&units, &is_real, tau)?;

    let mut g = Params::zeros(hdim);
    for i in 0..n {
        let p_spoof = sigmoid(zs[i]);
        let mut dz = (p_spoof - data.y[i]) / n as f64;
        if data.y[i] == 1.0 {
            dz += beta * group_weight[data.domain[i]] * (p_spoof - 1.0);
        }
        g.c += dz;
        let u = &units[i];
        let gu = &unit_grads[i];
        let proj: f64 = u.iter().zip(gu).map(|(a, b)| a * b).sum();
        for k in 0..hdim {
            g.v[k] += dz * hs[i][k];
            let dh = dz * p.v[k] + alpha * (gu[k] - u[k] * proj) / norms[i];
            let dpre = dh * (1.0 - hs[i][k] * hs[i][k]);
            g.w[k * INPUT_DIM] += dpre * data.x[i][0];
            g.w[k * INPUT_DIM + 1] += dpre * data.x[i][1];
            g.b[k] += dpre;
        }
    }
    Ok(Evaluation {
        report: total_loss(bce, con, sare, alpha, beta)?,
        risks: RiskVector::new(risks, groups.iter().map(|&d| d as u64).collect())?,
        grad: g,
    })
}

/// One line of the training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub bce: f64,
    pub con: f64,
    pub sare: f64,
    pub total: f64,
    pub risks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub params: Params,
}

impl Trace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace has the initial record")
    }

    /// Final `max R_i - min R_i`.
    pub fn final_gap(&self) -> f64 {
        let r = &self.last().risks;
        r.iter().copied().fold(f64::NEG_INFINITY, f64::max) - r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Full-batch gradient descent for `epochs` steps. The trace holds the
/// state before each step and after the last one.
pub fn train_toy(config: &ToyConfig) -> Result<Trace> {
    if config.hidden == 0 || !(config.learning_rate > 0.0) || !(config.tau > 0.0) {
        return Err(Error::Config("toy trainer needs hidden > 0, learning_rate > 0 and tau > 0".into()));
    }
    let data = ToyData::scenario(config.seed);
    let mut p = Params::init(config.hidden, config.seed);
    let mut records = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let eval = evaluate(&p, &data, config.alpha, config.beta, config.tau)?;
        let r = eval.report;
        if !r.total.is_finite() {
            return Err(Error::Numeric(format!("loss diverged at epoch {epoch}")));
        }
        records.push(TraceRecord {
            epoch,
            bce: r.bce,
            con: r.con,
            sare: r.sare,
            total: r.total,
            risks: eval.risks.risks.clone(),
        });
        if epoch == config.epochs {
            break;
        }
        let step = config.learning_rate;
        let flat: Vec<f64> = p
            .to_flat()
            .iter()
            .zip(eval.grad.to_flat())
            .map(|(x, g)| x - step * g)
            .collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("parameters diverged at epoch {epoch}")));
        }
        p = Params::from_flat(config.hidden, &flat);
    }
    Ok(Trace { records, params: p })
}

/// Largest relative disagreement between the analytic gradient and central
/// differences with step `h`, at the initial parameters of `config`.
pub fn gradient_check(config: &ToyConfig, h: f64) -> Result<f64> {
    let data = ToyData::scenario(config.seed);
    let p = Params::init(config.hidden, config.seed);
    let analytic = evaluate(&p, &data, config.alpha, config.beta, config.tau)?.grad.to_flat();
    let base = p.to_flat();
    let loss_at = |flat: &[f64]| -> Result<f64> {
        let q = Params::from_flat(config.hidden, flat);
        Ok(evaluate(&q, &data, config.alpha, config.beta, config.tau)?.report.total)
    };
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let numeric = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_is_seeded() {
        assert_eq!(ToyData::scenario(1), ToyData::scenario(1));
        assert_ne!(ToyData::scenario(1), ToyData::scenario(2));
        assert_eq!(ToyData::scenario(0).len(), 4 * 60 + 3 * 60 + 15);
    }

    #[test]
    fn flat_round_trip() {
        let p = Params::init(5, 3);
        assert_eq!(Params::from_flat(5, &p.to_flat()), p);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cfg = ToyConfig::default();
        assert!(gradient_check(&cfg, 1e-5).unwrap() < 1e-4);
        let plain = ToyConfig {
            alpha: 0.0,
            beta: 0.0,
            ..cfg
        };
        assert!(gradient_check(&plain, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn trace_lines_are_json() {
        let cfg = ToyConfig {
            epochs: 3,
            ..ToyConfig::default()
        };
        let trace = train_toy(&cfg).unwrap();
        assert_eq!(trace.records.len(), 4);
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: TraceRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, trace.records[0]);
        assert_eq!(first.risks.len(), 4);
    }
}
