//! The `augment` command: applies the epoch policy to every manifest record.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use recapture::banks::AssetBanks;
use recapture::policy::{augment_sample, domain_id, AugOpKind, Label, Policy, Registry, Sample};
use recapture::rng::sample_rng;
use recapture::ImageBuffer;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{read_manifest, ManifestRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpProvenance {
    pub kind: AugOpKind,
    pub magnitude_index: usize,
    pub resolved_magnitude: Option<f64>,
    pub assets: Vec<String>,
    pub rng_words: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub index: usize,
    pub source_path: String,
    /// Relative to the output directory.
    pub output_path: String,
    pub input_label: Label,
    pub output_label: Label,
    pub domain: String,
    pub domain_in: String,
    pub domain_out: String,
    pub sub_policy_index: usize,
    pub sub_policy: Vec<OpProvenance>,
    pub asset_ids: Vec<String>,
    pub rng_seed_components: [u64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub index: usize,
    pub source_path: Option<String>,
    pub error: String,
}

pub struct AugmentJob<'a> {
    pub manifest: &'a Path,
    pub out: &'a Path,
    pub seed: u64,
    pub epoch: u64,
    pub strict: bool,
    pub workers: Option<usize>,
    pub max_error_rate: f64,
    pub registry: &'a Registry,
    pub banks: &'a AssetBanks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total: usize,
    pub written: usize,
    pub unchanged: usize,
    pub failed: usize,
}

fn hex(id: u64) -> String {
    format!("{id:016x}")
}

fn stem(path: &str) -> String {
    let s: String = Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() { "image".into() } else { s }
}

/// Writes `bytes` unless the file already holds exactly them. Returns
/// whether a write happened.
fn write_if_changed(path: &Path, bytes: &[u8]) -> std::io::Result<bool> {
    if fs::read(path).is_ok_and(|old| old == bytes) {
        return Ok(false);
    }
    fs::write(path, bytes)?;
    Ok(true)
}

fn process(
    job: &AugmentJob,
    policy: &Policy,
    index: usize,
    rec: &ManifestRecord,
) -> Result<(ProvenanceRecord, bool), String> {
    let image = ImageBuffer::load(&rec.resolved)
        .and_then(|img| img.to_rgb())
        .map_err(|e| e.to_string())?;
    let domain_in = domain_id(&rec.domain);
    let sample = Sample::new(image, rec.label, domain_in);
    let mut rng = sample_rng(job.seed, job.epoch, index as u64);
    let (choice, out) =
        augment_sample(sample, policy, job.registry, job.banks, &mut rng).map_err(|e| e.to_string())?;
    let png = out.image.encode_png().map_err(|e| e.to_string())?;
    let output_path = format!("images/{index:06}_{}.png", stem(&rec.path));
    let wrote = write_if_changed(&job.out.join(&output_path), &png).map_err(|e| format!("{output_path}: {e}"))?;
    let sub_policy: Vec<OpProvenance> = out
        .provenance
        .into_iter()
        .map(|r| OpProvenance {
            kind: r.kind,
            magnitude_index: r.magnitude_index,
            resolved_magnitude: r.magnitude,
            assets: r.assets,
            rng_words: r.rng_words,
        })
        .collect();
    let asset_ids = sub_policy.iter().flat_map(|o| o.assets.iter().cloned()).collect();
    Ok((
        ProvenanceRecord {
            index,
            source_path: rec.path.clone(),
            output_path,
            input_label: rec.label,
            output_label: out.label,
            domain: rec.domain.clone(),
            domain_in: hex(domain_in),
            domain_out: hex(out.domain_id),
            sub_policy_index: choice,
            sub_policy,
            asset_ids,
            rng_seed_components: [job.seed, job.epoch, index as u64],
        },
        wrote,
    ))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).map_err(|e| CliError::Data(e.to_string()))?);
        text.push('\n');
    }
    write_if_changed(path, text.as_bytes()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn run(job: &AugmentJob) -> CliResult<Summary> {
    if !(0.0..=1.0).contains(&job.max_error_rate) {
        return Err(CliError::Usage(format!("max error rate {} outside [0, 1]", job.max_error_rate)));
    }
    let entries = read_manifest(job.manifest)?;
    let images = job.out.join("images");
    fs::create_dir_all(&images).map_err(|e| CliError::Data(format!("{}: {e}", images.display())))?;
    let policy = recapture::policy::sample_policy_with(job.registry, job.seed, job.epoch);
    write_if_changed(&job.out.join("policy.json"), format!("{}\n", policy.to_json()).as_bytes())
        .map_err(|e| CliError::Data(e.to_string()))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = job.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Data(e.to_string()))?;

    let work = |(i, entry): (usize, &Result<ManifestRecord, String>)| match entry {
        Ok(rec) => process(job, &policy, i, rec).map_err(|e| ErrorRecord {
            index: i,
            source_path: Some(rec.path.clone()),
            error: e,
        }),
        Err(e) => Err(ErrorRecord {
            index: i,
            source_path: None,
            error: e.clone(),
        }),
    };

    let outcomes: Vec<Result<(ProvenanceRecord, bool), ErrorRecord>> = if job.strict {
        let first: Result<Vec<_>, ErrorRecord> =
            pool.install(|| entries.par_iter().enumerate().map(work).collect());
        match first {
            Ok(v) => v.into_iter().map(Ok).collect(),
            Err(e) => {
                let what = e.source_path.as_deref().unwrap_or("manifest");
                return Err(CliError::Data(format!("record {} ({what}): {}", e.index, e.error)));
            }
        }
    } else {
        pool.install(|| entries.par_iter().enumerate().map(work).collect())
    };

    let mut provenance = Vec::new();
    let mut errors = Vec::new();
    let mut written = 0;
    for o in outcomes {
        match o {
            Ok((p, wrote)) => {
                written += wrote as usize;
                provenance.push(p);
            }
            Err(e) => errors.push(e),
        }
    }
    write_jsonl(&job.out.join("provenance.jsonl"), &provenance)?;
    write_jsonl(&job.out.join("errors.jsonl"), &errors)?;

    let summary = Summary {
        total: entries.len(),
        written,
        unchanged: provenance.len() - written,
        failed: errors.len(),
    };
    let rate = if entries.is_empty() { 0.0 } else { errors.len() as f64 / entries.len() as f64 };
    if rate > job.max_error_rate {
        return Err(CliError::Data(format!(
            "{} of {} records failed (see errors.jsonl); first: record {}: {}",
            errors.len(),
            entries.len(),
            errors[0].index,
            errors[0].error
        )));
    }
    Ok(summary)
}

pub fn resolve_bank_dir(flag: Option<PathBuf>, config: Option<PathBuf>) -> CliResult<PathBuf> {
    flag.or(config).or_else(recapture::banks::default_bank_dir).ok_or_else(|| {
        CliError::Core(recapture::Error::MissingBank(format!(
            "no bank directory; pass --banks or set {}",
            recapture::banks::BANKS_ENV
        )))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_sanitized() {
        assert_eq!(stem("a/b/face 01.png"), "face_01");
        assert_eq!(stem(".png"), "_png");
        assert_eq!(stem(""), "image");
    }

    #[test]
    fn unchanged_files_are_not_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        assert!(write_if_changed(&p, b"abc").unwrap());
        assert!(!write_if_changed(&p, b"abc").unwrap());
        assert!(write_if_changed(&p, b"abd").unwrap());
    }
}
