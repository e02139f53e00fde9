//! Risk variance, real-only supervised contrastive loss, and the combined
//! objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.02;
pub const DEFAULT_BETA: f64 = 10.0;
pub const DEFAULT_TAU: f64 = 0.07;

/// Per-domain spoof risks `R_1..R_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskVector {
    pub risks: Vec<f64>,
    pub domain_ids: Vec<u64>,
}

impl RiskVector {
    pub fn new(risks: Vec<f64>, domain_ids: Vec<u64>) -> Result<Self> {
        if risks.is_empty() {
            return Err(Error::Range("risk vector is empty".into()));
        }
        if risks.len() != domain_ids.len() {
            return Err(Error::Shape(format!(
                "{} risks for {} domains",
                risks.len(),
                domain_ids.len()
            )));
        }
        if let Some(r) = risks.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Range(format!("risk {r} is not a finite non-negative value")));
        }
        Ok(Self { risks, domain_ids })
    }

    /// Risks labelled `0..m`.
    pub fn from_risks(risks: Vec<f64>) -> Result<Self> {
        let ids = (0..risks.len() as u64).collect();
        Self::new(risks, ids)
    }

    pub fn m(&self) -> usize {
        self.risks.len()
    }

    /// `max R_i - min R_i`.
    pub fn gap(&self) -> f64 {
        let max = self.risks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.risks.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Deviations from the mean, computed on values shifted by `r[0]` so that
/// equal entries give exactly zero.
fn deviations(r: &[f64]) -> Result<Vec<f64>> {
    if r.is_empty() {
        return Err(Error::Range("variance of an empty vector".into()));
    }
    let shifted: Vec<f64> = r.iter().map(|x| x - r[0]).collect();
    let mu = shifted.iter().sum::<f64>() / r.len() as f64;
    Ok(shifted.into_iter().map(|d| d - mu).collect())
}

/// Population variance `(1/m) Σ (R_i - R̄)²` of raw values.
pub fn variance(r: &[f64]) -> Result<f64> {
    let d = deviations(r)?;
    Ok(d.iter().map(|x| x * x).sum::<f64>() / r.len() as f64)
}

/// `∂Var/∂R_i = (2/m)(R_i - R̄)`.
pub fn variance_grad(r: &[f64]) -> Result<Vec<f64>> {
    let m = r.len() as f64;
    Ok(deviations(r)?.into_iter().map(|x| 2.0 / m * x).collect())
}

pub fn sare_loss(r: &RiskVector) -> Result<f64> {
    variance(&r.risks)
}

pub fn sare_grad(r: &RiskVector) -> Result<Vec<f64>> {
    variance_grad(&r.risks)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Supervised contrastive loss with real examples as anchors and positives
/// and every other example in the denominator. Returns the mean over anchors.
pub fn supcon_loss(embeddings: &[Vec<f64>], is_real: &[bool], tau: f64) -> Result<f64> {
    supcon_loss_grad(embeddings, is_real, tau).map(|(l, _)| l)
}

/// Loss and its gradient with respect to each embedding, treating the
/// embeddings as free vectors.
pub fn supcon_loss_grad(embeddings: &[Vec<f64>], is_real: &[bool], tau: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = embeddings.len();
    if is_real.len() != n {
        return Err(Error::Shape(format!("{n} embeddings but {} labels", is_real.len())));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Range(format!("temperature {tau} must be positive")));
    }
    let dim = embeddings.first().map_or(0, Vec::len);
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::Shape("embeddings differ in dimension".into()));
    }
    let anchors: Vec<usize> = (0..n).filter(|&i| is_real[i]).collect();
    if anchors.len() < 2 {
        return Err(Error::Undefined(format!(
            "contrastive loss needs at least 2 real examples, got {}",
            anchors.len()
        )));
    }
    let positives = (anchors.len() - 1) as f64;
    let mut grads = vec![vec![0.0; dim]; n];
    let mut total = 0.0;
    let scale = 1.0 / anchors.len() as f64;
    let mut sims = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for &i in &anchors {
        for j in 0..n {
            sims[j] = if j == i { f64::NEG_INFINITY } else { dot(&embeddings[i], &embeddings[j]) / tau };
        }
        let max = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = sims.iter().map(|s| (s - max).exp()).sum();
        let log_z = max + z.ln();
        let pos_mean = anchors.iter().filter(|&&p| p != i).map(|&p| sims[p]).sum::<f64>() / positives;
        total += log_z - pos_mean;
        // dL_i/ds_ij = softmax_j - [j positive] / |P|
        for j in 0..n {
            weights[j] = if j == i {
                0.0
            } else {
                (sims[j] - log_z).exp() - if is_real[j] { 1.0 / positives } else { 0.0 }
            };
        }
        for j in 0..n {
            let w = weights[j] * scale / tau;
            if w == 0.0 {
                continue;
            }
            for d in 0..dim {
                grads[i][d] += w * embeddings[j][d];
                grads[j][d] += w * embeddings[i][d];
            }
        }
    }
    Ok((total * scale, grads))
}

/// The terms of `L = L_bce + α L_con + β L_sare`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub bce: f64,
    pub con: f64,
    pub sare: f64,
    pub alpha: f64,
    pub beta: f64,
    pub total: f64,
}

pub fn total_loss(bce: f64, con: f64, sare: f64, alpha: f64, beta: f64) -> Result<LossReport> {
    for (name, v) in [("bce", bce), ("con", con), ("sare", sare), ("alpha", alpha), ("beta", beta)] {
        if !v.is_finite() {
            return Err(Error::Numeric(format!("{name} is {v}")));
        }
    }
    Ok(LossReport {
        bce,
        con,
        sare,
        alpha,
        beta,
        total: bce + alpha * con + beta * sare,
    })
}

/// Numerically stable binary cross-entropy of a logit against a 0/1 target.
pub fn bce_with_logit(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[0.5, 0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(variance(&[0.0, 1.0]).unwrap(), 0.25);
        assert_eq!(variance_grad(&[0.0, 1.0]).unwrap(), vec![-0.5, 0.5]);
        assert_eq!(variance(&[0.3]).unwrap(), 0.0);
        assert!(matches!(variance(&[]), Err(Error::Range(_))));
    }

    #[test]
    fn risk_vector_validation() {
        assert!(matches!(RiskVector::new(vec![0.1], vec![]), Err(Error::Shape(_))));
        assert!(matches!(RiskVector::from_risks(vec![-0.1]), Err(Error::Range(_))));
        assert!(matches!(RiskVector::from_risks(vec![]), Err(Error::Range(_))));
    }

    #[test]
    fn identical_pair_has_zero_contrastive_loss() {
        let e = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(supcon_loss(&e, &[true, true], DEFAULT_TAU).unwrap().abs() < 1e-12);
        assert!(matches!(supcon_loss(&e, &[true, false], DEFAULT_TAU), Err(Error::Undefined(_))));
    }

    #[test]
    fn combined_loss() {
        let r = total_loss(1.0, 0.5, 0.1, 0.02, 10.0).unwrap();
        assert!((r.total - 2.01).abs() < 1e-12);
        assert_eq!(total_loss(0.7, 3.0, 5.0, 0.0, 0.0).unwrap().total, 0.7);
        assert!(matches!(total_loss(f64::NAN, 0.0, 0.0, 0.0, 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn bce_matches_the_probability_form() {
        for z in [-30.0, -2.0, 0.0, 0.4, 12.0] {
            for y in [0.0, 1.0] {
                let p = sigmoid(z);
                let want = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
                if want.is_finite() {
                    assert!((bce_with_logit(z, y) - want).abs() < 1e-9, "z={z} y={y}");
                }
            }
        }
    }
}
