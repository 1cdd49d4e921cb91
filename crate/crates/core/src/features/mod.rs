//! Per-frame and per-window descriptors fed to the SVM: uniform LBP
//! histograms, full-reference image-quality measures and frame-difference
//! motion statistics.

mod iqm;
mod lbp;
mod motion;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use iqm::{iqm_vector, IQM_DIM, PSNR_CAP};
pub use lbp::{lbp_code, lbp_histogram, lbp_map, uniform_bin, LbpMap, ALL_TIES_CODE, LBP_BINS, NON_UNIFORM_BIN};
pub use motion::{motion_features, motion_signal, MOTION_DIM, MOTION_WINDOW};

/// Side of the square gray face crop used by the LBP and IQM extractors.
pub const CROP_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Extractor {
    #[serde(rename = "LBP59")]
    Lbp59,
    #[serde(rename = "IQM")]
    Iqm,
    #[serde(rename = "MOTION5")]
    Motion5,
}

impl Extractor {
    pub const ALL: [Extractor; 3] = [Extractor::Lbp59, Extractor::Iqm, Extractor::Motion5];

    pub fn dim(self) -> usize {
        match self {
            Extractor::Lbp59 => LBP_BINS,
            Extractor::Iqm => IQM_DIM,
            Extractor::Motion5 => MOTION_DIM,
        }
    }

    /// Tag written in feature CSVs.
    pub fn tag(self) -> &'static str {
        match self {
            Extractor::Lbp59 => "LBP59",
            Extractor::Iqm => "IQM",
            Extractor::Motion5 => "MOTION5",
        }
    }

    /// Short name used on the command line and in output paths.
    pub fn short_name(self) -> &'static str {
        match self {
            Extractor::Lbp59 => "lbp",
            Extractor::Iqm => "iqm",
            Extractor::Motion5 => "motion",
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Extractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbp" | "LBP59" => Ok(Extractor::Lbp59),
            "iqm" | "IQM" => Ok(Extractor::Iqm),
            "motion" | "MOTION5" => Ok(Extractor::Motion5),
            _ => Err(Error::InvalidParameter(format!("unknown extractor {s:?}"))),
        }
    }
}

/// Descriptor of one frame (or, for motion, one window starting at `frame_index`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub extractor: Extractor,
    pub values: Vec<T>,
    pub sample_id: String,
    pub frame_index: u32,
}

impl<T: Scalar> FeatureVector<T> {
    /// Checks the dimension against the extractor and that every value is finite.
    pub fn new(extractor: Extractor, values: Vec<T>, sample_id: impl Into<String>, frame_index: u32) -> Result<Self> {
        if values.len() != extractor.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for {}", extractor.dim(), extractor.tag()),
                found: values.len().to_string(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{} value v{i} is not finite",
                extractor.tag()
            )));
        }
        Ok(Self {
            extractor,
            values,
            sample_id: sample_id.into(),
            frame_index,
        })
    }

    pub fn with_source(mut self, sample_id: impl Into<String>, frame_index: u32) -> Self {
        self.sample_id = sample_id.into();
        self.frame_index = frame_index;
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn csv_header(dim: usize) -> String {
    let mut h = String::from("sample_id,frame,extractor");
    for i in 0..dim {
        h.push_str(&format!(",v{i}"));
    }
    h
}

/// Serializes vectors of one extractor; floats carry 9 significant digits.
pub fn features_to_csv<T: Scalar>(extractor: Extractor, vectors: &[FeatureVector<T>]) -> String {
    let mut out = csv_header(extractor.dim());
    out.push('\n');
    for v in vectors {
        out.push_str(&format!("{},{},{}", v.sample_id, v.frame_index, v.extractor.tag()));
        for x in &v.values {
            out.push_str(&format!(",{:.8e}", x.to_f64_lossy()));
        }
        out.push('\n');
    }
    out
}

pub fn write_features_csv<T: Scalar>(path: &Path, extractor: Extractor, vectors: &[FeatureVector<T>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, features_to_csv(extractor, vectors)).map_err(|e| Error::io(path, e))
}

pub fn parse_features_csv<T: Scalar>(text: &str) -> Result<(Extractor, Vec<FeatureVector<T>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty feature file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..3] != ["sample_id", "frame", "extractor"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let dim = cols.len() - 3;
    let mut extractor = None;
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 3 {
            return Err(bad(format!("expected {} fields, found {}", dim + 3, fields.len())));
        }
        let ex: Extractor = fields[2].parse().map_err(|e: Error| bad(e.to_string()))?;
        if *extractor.get_or_insert(ex) != ex {
            return Err(bad("mixed extractors in one file".into()));
        }
        let frame = fields[1].parse::<u32>().map_err(|e| bad(format!("frame: {e}")))?;
        let values = fields[3..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| bad(format!("value {f:?}: {e}")))
            })
            .collect::<Result<Vec<T>>>()?;
        out.push(FeatureVector::new(ex, values, fields[0], frame).map_err(|e| bad(e.to_string()))?);
    }
    let extractor = match extractor {
        Some(e) if e.dim() == dim => e,
        Some(e) => {
            return Err(Error::DimensionMismatch {
                expected: format!("{} columns for {}", e.dim(), e.tag()),
                found: dim.to_string(),
            })
        }
        None => Extractor::ALL
            .into_iter()
            .find(|e| e.dim() == dim)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("no extractor has {dim} values"),
            })?,
    };
    Ok((extractor, out))
}

pub fn read_features_csv<T: Scalar>(path: &Path) -> Result<(Extractor, Vec<FeatureVector<T>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features_csv(&text).map_err(|e| e.in_command("read features", path.display().to_string()))
}
