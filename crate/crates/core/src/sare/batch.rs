//! Domain-doubling batch construction and per-domain spoof risks.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::loss::RiskVector;
use crate::error::{Error, Result};
use crate::policy::Label;

/// One domain's examples.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBatch<T> {
    pub features: Vec<T>,
    pub labels: Vec<Label>,
    pub domain_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub domain_id: u64,
    pub range: Range<usize>,
}

/// Source batches followed by their augmented twins, stacked so one forward
/// pass covers every domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MegaBatch<T> {
    pub features: Vec<T>,
    pub labels: Vec<Label>,
    pub slices: Vec<Slice>,
    /// Number of risk groups, twice the number of source domains.
    pub m: usize,
}

impl<T: Clone> MegaBatch<T> {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn batch(&self, i: usize) -> DomainBatch<T> {
        let s = &self.slices[i];
        DomainBatch {
            features: self.features[s.range.clone()].to_vec(),
            labels: self.labels[s.range.clone()].to_vec(),
            domain_id: s.domain_id,
        }
    }
}

/// Largest per-domain batch that keeps `m` domains within `budget` examples.
pub fn per_domain_budget(budget: usize, m: usize) -> usize {
    budget / m.max(1)
}

/// Stacks `sources` and `augment(source, index)` for each source. Every
/// source must hold at most `⌊budget / m⌋` examples with `m = 2 * sources`.
pub fn build_megabatch<T: Clone>(
    sources: &[DomainBatch<T>],
    budget: usize,
    mut augment: impl FnMut(&DomainBatch<T>, usize) -> Result<DomainBatch<T>>,
) -> Result<MegaBatch<T>> {
    if sources.is_empty() {
        return Err(Error::Config("a megabatch needs at least one source domain".into()));
    }
    let m = 2 * sources.len();
    let cap = per_domain_budget(budget, m);
    for s in sources {
        if s.features.len() != s.labels.len() {
            return Err(Error::Shape(format!("domain {} has mismatched labels", s.domain_id)));
        }
        if s.features.len() > cap {
            return Err(Error::Config(format!(
                "domain {} has {} examples but S^B = {budget} with m = {m} allows {cap}",
                s.domain_id,
                s.features.len()
            )));
        }
    }
    let mut twins = Vec::with_capacity(sources.len());
    for (i, s) in sources.iter().enumerate() {
        let t = augment(s, i)?;
        if t.features.len() != s.features.len() || t.labels.len() != s.labels.len() {
            return Err(Error::Shape(format!(
                "augmented twin of domain {} changed the batch size",
                s.domain_id
            )));
        }
        twins.push(t);
    }
    let mut mb = MegaBatch {
        features: Vec::new(),
        labels: Vec::new(),
        slices: Vec::with_capacity(m),
        m,
    };
    for b in sources.iter().chain(&twins) {
        let start = mb.features.len();
        mb.features.extend_from_slice(&b.features);
        mb.labels.extend_from_slice(&b.labels);
        mb.slices.push(Slice {
            domain_id: b.domain_id,
            range: start..mb.features.len(),
        });
    }
    Ok(mb)
}

/// Mean loss over spoof examples of each slice. Slices without spoof
/// examples are left out of the vector.
pub fn spoof_risks<T>(mb: &MegaBatch<T>, losses: &[f64]) -> Result<RiskVector> {
    if losses.len() != mb.labels.len() {
        return Err(Error::Shape(format!(
            "{} losses for a batch of {}",
            losses.len(),
            mb.labels.len()
        )));
    }
    let mut risks = Vec::new();
    let mut ids = Vec::new();
    for s in &mb.slices {
        let spoof: Vec<f64> = s
            .range
            .clone()
            .filter(|&i| mb.labels[i] == Label::Spoof)
            .map(|i| losses[i])
            .collect();
        if !spoof.is_empty() {
            risks.push(spoof.iter().sum::<f64>() / spoof.len() as f64);
            ids.push(s.domain_id);
        }
    }
    if risks.is_empty() {
        return Err(Error::Undefined("no slice holds a spoof example".into()));
    }
    RiskVector::new(risks, ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(id: u64, n: usize, spoof_from: usize) -> DomainBatch<f64> {
        DomainBatch {
            features: (0..n).map(|i| (id * 100 + i as u64) as f64).collect(),
            labels: (0..n).map(|i| if i >= spoof_from { Label::Spoof } else { Label::Bonafide }).collect(),
            domain_id: id,
        }
    }

    fn twin(b: &DomainBatch<f64>, _: usize) -> Result<DomainBatch<f64>> {
        Ok(DomainBatch {
            features: b.features.iter().map(|f| -f).collect(),
            labels: vec![Label::Spoof; b.labels.len()],
            domain_id: b.domain_id + 1000,
        })
    }

    #[test]
    fn three_sources_give_six_slices() {
        let src = vec![batch(1, 4, 2), batch(2, 3, 0), batch(3, 5, 5)];
        let mb = build_megabatch(&src, 30, twin).unwrap();
        assert_eq!(mb.m, 6);
        assert_eq!(mb.slices.len(), 6);
        for (i, s) in src.iter().enumerate() {
            assert_eq!(&mb.batch(i), s);
        }
        assert_eq!(mb.batch(3).domain_id, 1001);
        let one = build_megabatch(&src[..1], 8, twin).unwrap();
        assert_eq!(one.slices.len(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let src = vec![batch(1, 4, 2), batch(2, 3, 0)];
        // floor(15 / 4) = 3 < 4
        let err = build_megabatch(&src, 15, twin).unwrap_err();
        assert!(matches!(err, Error::Config(ref msg) if msg.contains("S^B = 15") && msg.contains("m = 4")));
        assert!(build_megabatch(&src, 16, twin).is_ok());
    }

    #[test]
    fn risks_skip_slices_without_spoof() {
        let src = vec![batch(1, 2, 0), batch(2, 3, 3)];
        let mb = build_megabatch(&src, 100, twin).unwrap();
        let losses = vec![0.2, 0.4, 9.0, 9.0, 9.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let r = spoof_risks(&mb, &losses).unwrap();
        assert_eq!(r.domain_ids, vec![1, 1001, 1002]);
        assert!((r.risks[0] - 0.3).abs() < 1e-12);
        assert!((r.risks[1] - 1.5).abs() < 1e-12);
        assert!((r.risks[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_spoof_anywhere_is_undefined() {
        let src = vec![batch(1, 2, 2)];
        let mb = build_megabatch(&src, 100, |b, _| Ok(b.clone())).unwrap();
        assert!(matches!(spoof_risks(&mb, &[0.1; 4]), Err(Error::Undefined(_))));
    }
}
