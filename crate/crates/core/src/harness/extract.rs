use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{list_frames, read_manifest, SampleRecord};
use crate::error::{Error, Result};
use crate::features::{
    iqm_vector, lbp_histogram, motion_features, motion_signal, write_features_csv, Extractor, FeatureVector, CROP_SIZE,
    MOTION_WINDOW,
};
use crate::imaging::{load_image, resize_bilinear, to_grayscale, Image};
use crate::landmarks::{face_crop, FrameLandmarks, LandmarkSet, MIN_FACE_SIZE};

use super::occlude::load_sample_landmarks;
use super::write_file;

const COMMAND: &str = "extract";

/// A frame (or whole sample, for motion) left out of the feature file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedItem {
    pub sample_id: String,
    pub frame: Option<u32>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub extractor: Extractor,
    pub vectors: Vec<FeatureVector<f64>>,
    pub skipped: Vec<SkippedItem>,
}

/// Landmarks of `frame`, else of the nearest annotated frame (earlier on ties).
fn nearest(lms: &[FrameLandmarks<f64>], frame: u32) -> Option<&LandmarkSet<f64>> {
    lms.iter()
        .min_by_key(|f| (f.frame.abs_diff(frame), f.frame))
        .map(|f| &f.landmarks)
}

type SampleFeatures = (Vec<FeatureVector<f64>>, Vec<SkippedItem>);

fn frame_features(
    extractor: Extractor,
    r: &SampleRecord,
    frames: &[(u32, std::path::PathBuf)],
    lms: &[FrameLandmarks<f64>],
) -> Result<SampleFeatures> {
    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for (idx, path) in frames {
        let ctx = |e: Error| e.in_command(COMMAND, format!("sample {}: {}", r.id, path.display()));
        let img = load_image(path).map_err(ctx)?;
        let crop = match nearest(lms, *idx) {
            Some(l) => match face_crop(&img, l, CROP_SIZE) {
                Ok(c) => c,
                Err(e @ (Error::FaceTooSmall { .. } | Error::FaceOutsideFrame)) => {
                    skipped.push(SkippedItem {
                        sample_id: r.id.clone(),
                        frame: Some(*idx),
                        reason: e.to_string(),
                    });
                    continue;
                }
                Err(e) => return Err(ctx(e)),
            },
            None => resize_bilinear(&to_grayscale(&img), CROP_SIZE, CROP_SIZE).map_err(ctx)?,
        };
        let v = match extractor {
            Extractor::Lbp59 => lbp_histogram(&crop),
            Extractor::Iqm => iqm_vector(&crop),
            Extractor::Motion5 => unreachable!("motion is extracted per window"),
        }
        .map_err(ctx)?;
        vectors.push(v.with_source(r.id.clone(), *idx));
    }
    Ok((vectors, skipped))
}

fn window_features(
    r: &SampleRecord,
    frames: &[(u32, std::path::PathBuf)],
    lms: &[FrameLandmarks<f64>],
) -> Result<SampleFeatures> {
    let skip = |reason: String| {
        Ok((
            Vec::new(),
            vec![SkippedItem {
                sample_id: r.id.clone(),
                frame: None,
                reason,
            }],
        ))
    };
    if frames.len() < 3 {
        return skip(format!("{} frames, motion needs at least 3", frames.len()));
    }
    let Some(face) = nearest(lms, frames[0].0) else {
        return skip("no landmarks for the face box".into());
    };
    let bbox = face.bbox();
    let side = bbox.width().max(bbox.height());
    if side < MIN_FACE_SIZE {
        return skip(
            Error::FaceTooSmall {
                side,
                min: MIN_FACE_SIZE,
            }
            .to_string(),
        );
    }
    let images: Vec<Image> = frames
        .iter()
        .map(|(_, p)| {
            load_image(p)
                .map(|i| to_grayscale(&i))
                .map_err(|e| e.in_command(COMMAND, format!("sample {}: {}", r.id, p.display())))
        })
        .collect::<Result<_>>()?;
    let window = MOTION_WINDOW.min(images.len());
    let mut vectors = Vec::new();
    for start in 0..=images.len() - window {
        let signal = match motion_signal(&images[start..start + window], &bbox) {
            Ok(s) => s,
            Err(e @ (Error::NoBackground | Error::FaceOutsideFrame)) => return skip(e.to_string()),
            Err(e) => return Err(e.in_command(COMMAND, format!("sample {}", r.id))),
        };
        let v = motion_features(&signal).map_err(|e| e.in_command(COMMAND, format!("sample {}", r.id)))?;
        vectors.push(v.with_source(r.id.clone(), frames[start].0));
    }
    Ok((vectors, Vec::new()))
}

/// Extracts `extractor` features for every sample of `manifest` into `out_csv`
/// (plus `<name>.skipped.json`). Rows are ordered by sample id, then frame.
pub fn cmd_extract(manifest: &Path, extractor: Extractor, out_csv: &Path) -> Result<ExtractSummary> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut records = read_manifest(manifest).map_err(|e| e.in_command(COMMAND, manifest.display().to_string()))?;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let per_sample: Vec<SampleFeatures> = records
        .par_iter()
        .map(|r| {
            let dir = r.frames_path(base);
            let frames = list_frames(&dir).map_err(|e| e.in_command(COMMAND, format!("sample {}", r.id)))?;
            let lms = load_sample_landmarks(base, r)
                .map_err(|e| e.in_command(COMMAND, format!("sample {}: {}", r.id, r.landmarks_path)))?;
            match extractor {
                Extractor::Motion5 => window_features(r, &frames, &lms),
                _ => frame_features(extractor, r, &frames, &lms),
            }
        })
        .collect::<Result<_>>()?;
    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for (v, s) in per_sample {
        vectors.extend(v);
        skipped.extend(s);
    }
    write_features_csv(out_csv, extractor, &vectors)?;
    write_file(
        &out_csv.with_extension("skipped.json"),
        serde_json::to_string_pretty(&skipped)? + "\n",
    )?;
    Ok(ExtractSummary {
        extractor,
        vectors,
        skipped,
    })
}
