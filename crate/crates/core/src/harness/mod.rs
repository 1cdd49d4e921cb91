//! Experiment driver: occlude the test partition, extract features, train on
//! clean train data with dev-set model selection, evaluate every occlusion and
//! assemble the report.
//!
//! Output layout under the run directory:
//!
//! ```text
//! occluded/<occlusion>/manifest.jsonl, samples/, summary.json
//! features/<extractor>/clean.csv, <occlusion>.csv, *.skipped.json
//! models/<extractor>.json, <extractor>.train.json
//! metrics/<extractor>.csv
//! report.md, report.csv, audit.json
//! ```
//!
//! A `.incomplete` marker sits in the run directory until the run succeeds.

mod audit;
mod evaluate;
mod extract;
mod occlude;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classifier::KernelKind;
use crate::error::{Error, Result};
use crate::features::Extractor;
use crate::metrics::{render_markdown, report_csv, ReportRow, NO_OCCLUSION};
use crate::occlusion::{AssetPack, OcclusionKind, OcclusionSpec};

pub use audit::{audit_inputs, AuditRecord};
pub use evaluate::{cmd_evaluate, cmd_report, cmd_train, read_report_rows, TrainSummary};
pub use extract::{cmd_extract, ExtractSummary, SkippedItem};
pub use occlude::{cmd_occlude, OccludeSummary};

pub use crate::synthdata::synthesize as cmd_synth;

/// Environment variable naming an asset-pack manifest (or its directory).
pub const ASSETS_ENV: &str = "OCCLUBENCH_ASSETS";
pub const INCOMPLETE_MARKER: &str = ".incomplete";

/// How test scores are pooled before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    /// One score per video: the mean of its frame scores.
    #[default]
    Video,
    Frame,
}

impl Granularity {
    pub fn video_level(self) -> bool {
        self == Granularity::Video
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "video" => Ok(Granularity::Video),
            "frame" => Ok(Granularity::Frame),
            _ => Err(Error::InvalidParameter(format!("unknown granularity {s:?}"))),
        }
    }
}

/// Hyperparameters: the default grid or one fixed setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hyper {
    Grid,
    Fixed { c: f64, gamma: Option<f64> },
}

/// An occlusion as named on the command line. `mask3d` and `glasses` without
/// an asset id cycle through the pack's assets, one per test sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OcclusionRequest {
    Kind(OcclusionKind),
    Mask3dCycle,
    GlassesCycle,
}

impl OcclusionRequest {
    /// The six families evaluated by default.
    pub fn defaults() -> Vec<Self> {
        vec![
            OcclusionRequest::Kind(OcclusionKind::Low2D),
            OcclusionRequest::Kind(OcclusionKind::Medium2D),
            OcclusionRequest::Kind(OcclusionKind::High2D),
            OcclusionRequest::Kind(OcclusionKind::Round2D),
            OcclusionRequest::Mask3dCycle,
            OcclusionRequest::GlassesCycle,
        ]
    }

    /// Directory-safe form of the name.
    pub fn dir_name(&self) -> String {
        self.to_string().replace(':', "_")
    }

    /// Concrete occlusion for the `index`-th test sample.
    pub fn resolve(&self, assets: &AssetPack<f64>, index: usize) -> Result<OcclusionSpec<f64>> {
        let pick = |ids: Vec<&str>| -> Result<String> {
            if ids.is_empty() {
                return Err(Error::InvalidAssets("asset pack is empty".into()));
            }
            Ok(ids[index % ids.len()].to_string())
        };
        let kind = match self {
            OcclusionRequest::Kind(k) => k.clone(),
            OcclusionRequest::Mask3dCycle => OcclusionKind::Mask3D(pick(assets.texture_ids().collect())?),
            OcclusionRequest::GlassesCycle => OcclusionKind::Glasses(pick(assets.glasses_ids().collect())?),
        };
        let spec = OcclusionSpec::new(kind);
        spec.validate(assets)?;
        Ok(spec)
    }
}

impl fmt::Display for OcclusionRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OcclusionRequest::Kind(k) => write!(f, "{k}"),
            OcclusionRequest::Mask3dCycle => f.write_str("mask3d"),
            OcclusionRequest::GlassesCycle => f.write_str("glasses"),
        }
    }
}

impl FromStr for OcclusionRequest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask3d" => Ok(OcclusionRequest::Mask3dCycle),
            "glasses" => Ok(OcclusionRequest::GlassesCycle),
            _ => s.parse().map(OcclusionRequest::Kind),
        }
    }
}

/// Loads the asset pack from `path`, else from `$OCCLUBENCH_ASSETS`, else the
/// built-in pack. A directory means its `manifest.json`.
pub fn load_assets(path: Option<&Path>) -> Result<AssetPack<f64>> {
    let env = std::env::var_os(ASSETS_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env) {
        None => Ok(AssetPack::builtin()),
        Some(p) if p.is_dir() => AssetPack::load(p.join("manifest.json")),
        Some(p) => AssetPack::load(p),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub extractors: Vec<Extractor>,
    pub occlusions: Vec<OcclusionRequest>,
    pub kernel: KernelKind,
    pub hyper: Hyper,
    pub granularity: Granularity,
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    pub assets: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            out: out.into(),
            extractors: vec![Extractor::Lbp59, Extractor::Iqm, Extractor::Motion5],
            occlusions: OcclusionRequest::defaults(),
            kernel: KernelKind::Rbf,
            hyper: Hyper::Grid,
            granularity: Granularity::Video,
            seed: 7,
            jobs: None,
            assets: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.manifest.is_file() {
            return Err(Error::InvalidParameter(format!(
                "manifest {} does not exist",
                self.manifest.display()
            )));
        }
        if self.extractors.is_empty() {
            return Err(Error::InvalidParameter("no extractor selected".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be >= 1".into()));
        }
        let mut names: Vec<String> = self.occlusions.iter().map(ToString::to_string).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate occlusion".into()));
        }
        if let Hyper::Fixed { c, gamma } = self.hyper {
            if !(c > 0.0) || gamma.is_some_and(|g| !(g > 0.0)) {
                return Err(Error::InvalidParameter("C and gamma must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<ReportRow<f64>>,
    pub train: Vec<TrainSummary>,
    pub audit: AuditRecord,
}

pub fn features_path(out: &Path, extractor: Extractor, name: &str) -> PathBuf {
    out.join("features")
        .join(extractor.short_name())
        .join(format!("{name}.csv"))
}

pub fn model_path(out: &Path, extractor: Extractor) -> PathBuf {
    out.join("models").join(format!("{}.json", extractor.short_name()))
}

/// Creates `dir` and its `.incomplete` marker; returns the marker path.
pub fn write_marker(dir: &Path) -> Result<PathBuf> {
    let marker = dir.join(INCOMPLETE_MARKER);
    write_file(&marker, "run in progress or failed\n")?;
    Ok(marker)
}

/// Sizes the global worker pool; call once before any parallel work.
pub fn init_global_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs the whole protocol; outputs do not depend on `jobs`.
pub fn run_protocol(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()
        .map_err(|e| e.in_command("run", cfg.manifest.display().to_string()))?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let marker = write_marker(&cfg.out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| run_inner(cfg))?;
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(outcome)
}

fn run_inner(cfg: &RunConfig) -> Result<RunOutcome> {
    let assets = load_assets(cfg.assets.as_deref()).map_err(|e| e.in_command("run", "asset pack"))?;
    let before = audit_inputs(&cfg.manifest)?;

    let occluded: Vec<OccludeSummary> = cfg
        .occlusions
        .iter()
        .map(|o| cmd_occlude(&cfg.manifest, &cfg.out, o, &assets))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut train = Vec::new();
    for &ex in &cfg.extractors {
        let clean = features_path(&cfg.out, ex, "clean");
        cmd_extract(&cfg.manifest, ex, &clean)?;
        let model = model_path(&cfg.out, ex);
        train.push(cmd_train(
            &clean,
            &cfg.manifest,
            cfg.kernel,
            cfg.hyper,
            cfg.granularity,
            cfg.seed,
            &model,
        )?);

        let mut ex_rows = vec![cmd_evaluate(
            &model,
            &clean,
            &cfg.manifest,
            &clean,
            &cfg.manifest,
            NO_OCCLUSION,
            cfg.granularity,
            0,
        )?];
        for o in &occluded {
            let test = features_path(&cfg.out, ex, &o.dir_name);
            cmd_extract(&o.manifest, ex, &test)?;
            ex_rows.push(cmd_evaluate(
                &model,
                &clean,
                &cfg.manifest,
                &test,
                &o.manifest,
                &o.occlusion,
                cfg.granularity,
                o.unoccluded_fallback,
            )?);
        }
        let metrics = cfg.out.join("metrics").join(format!("{}.csv", ex.short_name()));
        write_file(&metrics, report_csv(&ex_rows))?;
        rows.extend(ex_rows);
    }
    write_file(&cfg.out.join("report.csv"), report_csv(&rows))?;
    write_file(&cfg.out.join("report.md"), render_markdown(&rows))?;

    let after = audit_inputs(&cfg.manifest)?;
    let audit = AuditRecord::compare(before, after);
    write_file(&cfg.out.join("audit.json"), audit.to_json()?)?;
    if !audit.unchanged {
        return Err(
            Error::InvalidParameter("train/dev inputs changed during the run".into()).in_command("run", "audit"),
        );
    }
    Ok(RunOutcome { rows, train, audit })
}
