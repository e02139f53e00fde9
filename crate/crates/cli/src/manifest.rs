//! Dataset manifests: JSON lines, or CSV with a `path,label,domain` header.

use std::fs;
use std::path::{Path, PathBuf};

use recapture::policy::Label;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    /// As written in the manifest.
    pub path: String,
    /// Resolved against the manifest's directory.
    pub resolved: PathBuf,
    pub label: Label,
    pub domain: String,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    path: String,
    label: String,
    domain: String,
}

/// One entry per non-blank manifest line; malformed lines become errors.
pub type Entries = Vec<Result<ManifestRecord, String>>;

fn resolve(raw: RawRecord, base: &Path) -> Result<ManifestRecord, String> {
    let label = Label::parse(&raw.label).map_err(|e| e.to_string())?;
    if raw.domain.trim().is_empty() {
        return Err("empty domain".into());
    }
    if raw.path.trim().is_empty() {
        return Err("empty path".into());
    }
    let p = Path::new(&raw.path);
    let resolved = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    Ok(ManifestRecord {
        path: raw.path,
        resolved,
        label,
        domain: raw.domain,
    })
}

pub fn read_manifest(path: &Path) -> CliResult<Entries> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .clone();
        for col in ["path", "label", "domain"] {
            if !headers.iter().any(|h| h == col) {
                return Err(CliError::Data(format!("{}: CSV header lacks '{col}'", path.display())));
            }
        }
        Ok(reader
            .deserialize::<RawRecord>()
            .map(|r| r.map_err(|e| e.to_string()).and_then(|raw| resolve(raw, base)))
            .collect())
    } else {
        Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, line)| {
                serde_json::from_str::<RawRecord>(line)
                    .map_err(|e| format!("line {}: {e}", n + 1))
                    .and_then(|raw| resolve(raw, base))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let j = dir.path().join("m.jsonl");
        fs::write(
            &j,
            "{\"path\":\"a.png\",\"label\":\"bonafide\",\"domain\":\"d1\"}\n\n{\"path\":\"b.png\",\"label\":\"nope\",\"domain\":\"d1\"}\n",
        )
        .unwrap();
        let e = read_manifest(&j).unwrap();
        assert_eq!(e.len(), 2);
        let first = e[0].as_ref().unwrap();
        assert_eq!(first.label, Label::Bonafide);
        assert_eq!(first.resolved, dir.path().join("a.png"));
        assert!(e[1].is_err());

        let c = dir.path().join("m.csv");
        fs::write(&c, "path,label,domain\n/x/a.png, spoof ,d2\n").unwrap();
        let e = read_manifest(&c).unwrap();
        let r = e[0].as_ref().unwrap();
        assert_eq!((r.label, r.domain.as_str(), r.resolved.as_path()), (Label::Spoof, "d2", Path::new("/x/a.png")));

        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "file,label\n").unwrap();
        assert!(matches!(read_manifest(&bad), Err(CliError::Data(_))));
    }
}
