use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::classifier::{grid_search, svm_score, GridSpec, Kernel, KernelKind, LabeledSet, SvmModel};
use crate::dataset::{read_manifest, Partition, SampleRecord};
use crate::error::{Error, Result};
use crate::features::{read_features_csv, Extractor, FeatureVector};
use crate::metrics::{
    eer_threshold, parse_report_csv, render_markdown, report_csv, MetricsReport, ReportRow, ScoreEntry, ScoreSet,
    PROTOCOL,
};

use super::{write_file, Granularity, Hyper};

fn records_by_id(manifest: &Path, command: &'static str) -> Result<BTreeMap<String, SampleRecord>> {
    let records = read_manifest(manifest).map_err(|e| e.in_command(command, manifest.display().to_string()))?;
    Ok(records.into_iter().map(|r| (r.id.clone(), r)).collect())
}

fn partition_set(
    vectors: &[FeatureVector<f64>],
    records: &BTreeMap<String, SampleRecord>,
    partition: Partition,
    command: &'static str,
) -> Result<LabeledSet<f64>> {
    let mut v = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for fv in vectors {
        let r = records.get(&fv.sample_id).ok_or_else(|| {
            Error::InvalidParameter("feature row has no manifest entry".into())
                .in_command(command, format!("sample {}", fv.sample_id))
        })?;
        if r.partition == Some(partition) {
            v.push(fv.values.clone());
            labels.push(r.label.sign());
            ids.push(fv.sample_id.clone());
        }
    }
    LabeledSet::with_ids(v, labels, ids, partition)
}

fn load_features(path: &Path, command: &'static str) -> Result<(Extractor, Vec<FeatureVector<f64>>)> {
    read_features_csv(path).map_err(|e| e.in_command(command, path.display().to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSummary {
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Option<f64>,
    pub dev_eer: f64,
    pub converged: bool,
}

/// Selected model and the grid that led to it (written beside the model).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub extractor: String,
    pub kernel: String,
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Option<f64>,
    pub dev_eer: f64,
    pub dev_threshold: f64,
    pub converged: bool,
    pub support_vectors: usize,
    pub n_train: usize,
    pub n_dev: usize,
    pub candidates: Vec<CandidateSummary>,
}

fn gamma_of(k: &Kernel<f64>) -> Option<f64> {
    match *k {
        Kernel::Rbf { gamma } => Some(gamma),
        Kernel::Linear => None,
    }
}

/// Fits normalization and the SVM on the train rows of `features`, selects
/// hyperparameters by dev EER and writes the model plus `<model>.train.json`.
pub fn cmd_train(
    features: &Path,
    manifest: &Path,
    kernel: KernelKind,
    hyper: Hyper,
    granularity: Granularity,
    seed: u64,
    model_out: &Path,
) -> Result<TrainSummary> {
    const COMMAND: &str = "train";
    let (extractor, vectors) = load_features(features, COMMAND)?;
    let records = records_by_id(manifest, COMMAND)?;
    let train = partition_set(&vectors, &records, Partition::Train, COMMAND)?;
    let dev = partition_set(&vectors, &records, Partition::Dev, COMMAND)?;
    let mut spec = match hyper {
        Hyper::Grid => GridSpec::default_grid(kernel),
        Hyper::Fixed { c, gamma } => GridSpec::single(kernel, c, gamma),
    };
    spec.video_level = granularity.video_level();
    spec.seed = seed;
    let out = grid_search(&train, &dev, &spec).map_err(|e| e.in_command(COMMAND, features.display().to_string()))?;
    let best = out.best_candidate();
    let summary = TrainSummary {
        extractor: extractor.short_name().to_string(),
        kernel: best.kernel.name().to_string(),
        c: best.c,
        gamma: gamma_of(&best.kernel),
        dev_eer: best.dev_eer,
        dev_threshold: best.dev_threshold,
        converged: best.converged,
        support_vectors: out.best.model.support_vectors.len(),
        n_train: train.len(),
        n_dev: dev.len(),
        candidates: out
            .candidates
            .iter()
            .map(|c| CandidateSummary {
                c: c.c,
                gamma: gamma_of(&c.kernel),
                dev_eer: c.dev_eer,
                converged: c.converged,
            })
            .collect(),
    };
    out.best.model.save(model_out)?;
    write_file(
        &model_out.with_extension("train.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(summary)
}

fn score_set(model: &SvmModel<f64>, set: &LabeledSet<f64>, granularity: Granularity) -> Result<ScoreSet<f64>> {
    let entries = set
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Ok(ScoreEntry {
                sample_id: set.ids()[i].clone(),
                score: svm_score(model, v)?,
                label: set.label(i),
                partition: set.partition(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = ScoreSet::new(entries)?;
    if granularity.video_level() {
        scores.mean_by_sample()
    } else {
        Ok(scores)
    }
}

/// Thresholds at the dev-set EER of `clean_features` and scores the test rows
/// of `test_features` (labels from `test_manifest`).
#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    model: &Path,
    clean_features: &Path,
    manifest: &Path,
    test_features: &Path,
    test_manifest: &Path,
    occlusion: &str,
    granularity: Granularity,
    unoccluded_fallback: usize,
) -> Result<ReportRow<f64>> {
    const COMMAND: &str = "evaluate";
    let model = SvmModel::<f64>::load(model)?;
    let (extractor, clean) = load_features(clean_features, COMMAND)?;
    let (test_extractor, test) = load_features(test_features, COMMAND)?;
    if test_extractor != extractor {
        return Err(Error::DimensionMismatch {
            expected: extractor.tag().into(),
            found: test_extractor.tag().into(),
        }
        .in_command(COMMAND, test_features.display().to_string()));
    }
    let dev = partition_set(&clean, &records_by_id(manifest, COMMAND)?, Partition::Dev, COMMAND)?;
    let test = partition_set(&test, &records_by_id(test_manifest, COMMAND)?, Partition::Test, COMMAND)?;
    let ctx = |e: Error, p: &Path| e.in_command(COMMAND, p.display().to_string());
    let (threshold, dev_eer) =
        eer_threshold(&score_set(&model, &dev, granularity).map_err(|e| ctx(e, clean_features))?)
            .map_err(|e| ctx(e, clean_features))?;
    let test_scores = score_set(&model, &test, granularity).map_err(|e| ctx(e, test_features))?;
    let metrics = MetricsReport::evaluate(&test_scores, threshold).map_err(|e| ctx(e, test_features))?;
    Ok(ReportRow {
        protocol: PROTOCOL.to_string(),
        occlusion: occlusion.to_string(),
        extractor: extractor.short_name().to_string(),
        metrics,
        dev_eer,
        unoccluded_fallback,
    })
}

pub fn read_report_rows(path: &Path) -> Result<Vec<ReportRow<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report_csv(&text).map_err(|e| e.in_command("report", path.display().to_string()))
}

/// Merges metric CSVs into `out/report.csv` and `out/report.md`.
pub fn cmd_report(inputs: &[&Path], out: &Path) -> Result<Vec<ReportRow<f64>>> {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_report_rows(p)?);
    }
    write_file(&out.join("report.csv"), report_csv(&rows))?;
    write_file(&out.join("report.md"), render_markdown(&rows))?;
    Ok(rows)
}
