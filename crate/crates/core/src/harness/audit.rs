use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataset::{list_frames, read_manifest, Partition};
use crate::error::{Error, Result};

/// SHA-256 of every train/dev frame and landmark file, keyed by path relative
/// to the manifest directory.
pub fn audit_inputs(manifest: &Path) -> Result<BTreeMap<String, String>> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let records = read_manifest(manifest).map_err(|e| e.in_command("audit", manifest.display().to_string()))?;
    let mut digests = BTreeMap::new();
    let mut add = |rel: String| -> Result<()> {
        let path = base.join(&rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        digests.insert(rel, hex::encode(Sha256::digest(&bytes)));
        Ok(())
    };
    for r in records
        .iter()
        .filter(|r| matches!(r.partition, Some(Partition::Train | Partition::Dev)))
    {
        for (idx, _) in list_frames(&r.frames_path(base))? {
            add(format!("{}/{}", r.frames_dir, crate::dataset::frame_file_name(idx)))?;
        }
        if r.landmarks_file(base).is_file() {
            add(r.landmarks_path.clone())?;
        }
    }
    Ok(digests)
}

/// Checksums of the protected inputs before and after a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub files: usize,
    pub digest_before: String,
    pub digest_after: String,
    pub unchanged: bool,
    pub changed: Vec<String>,
}

fn combined(map: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in map {
        h.update(k.as_bytes());
        h.update([0]);
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl AuditRecord {
    pub fn compare(before: BTreeMap<String, String>, after: BTreeMap<String, String>) -> Self {
        let mut changed: Vec<String> = before
            .iter()
            .filter(|(k, v)| after.get(*k) != Some(v))
            .map(|(k, _)| k.clone())
            .collect();
        changed.extend(after.keys().filter(|k| !before.contains_key(*k)).cloned());
        changed.sort();
        Self {
            files: before.len(),
            digest_before: combined(&before),
            digest_after: combined(&after),
            unchanged: changed.is_empty(),
            changed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_flags_changes() {
        let a: BTreeMap<String, String> = [("x".to_string(), "1".to_string())].into();
        let same = AuditRecord::compare(a.clone(), a.clone());
        assert!(same.unchanged);
        assert_eq!(same.digest_before, same.digest_after);
        let b: BTreeMap<String, String> = [("x".to_string(), "2".to_string())].into();
        let diff = AuditRecord::compare(a, b);
        assert!(!diff.unchanged);
        assert_eq!(diff.changed, vec!["x".to_string()]);
    }
}
