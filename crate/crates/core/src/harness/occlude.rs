use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{list_frames, read_manifest, write_manifest, Partition, SampleRecord};
use crate::error::{Error, Result};
use crate::imaging::{load_image, save_image};
use crate::landmarks::{parse_landmarks, FrameLandmarks};
use crate::occlusion::{apply_occlusion_or_fallback, Applied, AssetPack};

use super::{write_file, OcclusionRequest};

const COMMAND: &str = "occlude";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccludeSummary {
    pub occlusion: String,
    pub dir_name: String,
    pub manifest: PathBuf,
    pub samples: usize,
    /// Frames copied unmodified because no landmarks were available.
    pub unoccluded_fallback: usize,
}

impl OccludeSummary {
    /// Reads `summary.json` next to an occluded manifest.
    pub fn load_beside(manifest: &Path) -> Result<Option<Self>> {
        let path = manifest.with_file_name("summary.json");
        if !path.is_file() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }
}

pub(crate) fn load_sample_landmarks(base: &Path, r: &SampleRecord) -> Result<Vec<FrameLandmarks<f64>>> {
    let path = r.landmarks_file(base);
    if path.is_file() {
        parse_landmarks(&path)
    } else {
        Ok(Vec::new())
    }
}

fn occlude_sample(
    base: &Path,
    dir: &Path,
    r: &SampleRecord,
    req: &OcclusionRequest,
    assets: &AssetPack<f64>,
    index: usize,
) -> Result<(SampleRecord, usize)> {
    let ctx = |e: Error, what: &str| e.in_command(COMMAND, format!("sample {}: {what}", r.id));
    let spec = req.resolve(assets, index).map_err(|e| ctx(e, "asset"))?;
    let src = r.frames_path(base);
    let frames = list_frames(&src).map_err(|e| ctx(e, &src.display().to_string()))?;
    let lms_path = r.landmarks_file(base);
    let lms = load_sample_landmarks(base, r).map_err(|e| ctx(e, &lms_path.display().to_string()))?;
    let frames_dir = format!("samples/{}", r.id);
    let dst = dir.join(&frames_dir);
    fs::create_dir_all(&dst).map_err(|e| Error::io(&dst, e))?;
    let mut fallback = 0;
    for (idx, path) in frames {
        let img = load_image(&path).map_err(|e| ctx(e, &path.display().to_string()))?;
        let frame_lms = lms.iter().find(|f| f.frame == idx).map(|f| &f.landmarks);
        let (out, applied) =
            apply_occlusion_or_fallback(&img, frame_lms, &spec, assets).map_err(|e| ctx(e, &format!("frame {idx}")))?;
        if applied == Applied::UnoccludedFallback {
            fallback += 1;
        }
        let target = dst.join(path.file_name().expect("frame file name"));
        save_image(&out, &target).map_err(|e| ctx(e, &target.display().to_string()))?;
    }
    let landmarks_path = format!("{frames_dir}/landmarks.jsonl");
    if lms_path.is_file() {
        let target = dir.join(&landmarks_path);
        fs::copy(&lms_path, &target).map_err(|e| ctx(Error::io(&target, e), "landmarks"))?;
    }
    Ok((
        SampleRecord {
            frames_dir,
            landmarks_path,
            ..r.clone()
        },
        fallback,
    ))
}

/// Writes occluded copies of the test-partition samples under
/// `out/occluded/<name>/`. Train and dev samples are never touched.
pub fn cmd_occlude(
    manifest: &Path,
    out: &Path,
    request: &OcclusionRequest,
    assets: &AssetPack<f64>,
) -> Result<OccludeSummary> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let records = read_manifest(manifest).map_err(|e| e.in_command(COMMAND, manifest.display().to_string()))?;
    if let Some(r) = records.iter().find(|r| r.partition.is_none()) {
        return Err(
            Error::InvalidParameter("manifest has no partition; split it first".into())
                .in_command(COMMAND, format!("sample {}", r.id)),
        );
    }
    let mut test: Vec<&SampleRecord> = records
        .iter()
        .filter(|r| r.partition == Some(Partition::Test))
        .collect();
    test.sort_by(|a, b| a.id.cmp(&b.id));
    let dir_name = request.dir_name();
    let dir = out.join("occluded").join(&dir_name);
    let results: Vec<(SampleRecord, usize)> = test
        .par_iter()
        .enumerate()
        .map(|(i, r)| occlude_sample(base, &dir, r, request, assets, i))
        .collect::<Result<_>>()?;
    let fallback = results.iter().map(|r| r.1).sum();
    let occluded: Vec<SampleRecord> = results.into_iter().map(|r| r.0).collect();
    let manifest_out = dir.join("manifest.jsonl");
    write_manifest(&occluded, &manifest_out)?;
    let summary = OccludeSummary {
        occlusion: request.to_string(),
        dir_name,
        manifest: manifest_out,
        samples: occluded.len(),
        unoccluded_fallback: fallback,
    };
    let mut stored = summary.clone();
    stored.manifest = PathBuf::from("manifest.jsonl");
    write_file(&dir.join("summary.json"), serde_json::to_string_pretty(&stored)? + "\n")?;
    Ok(summary)
}
