//! Dataset manifest (JSON Lines) shared by the generator and the harness.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Attack,
}

impl Label {
    /// `+1` for bonafide, `-1` for attack.
    pub fn sign(self) -> i8 {
        match self {
            Label::Bonafide => 1,
            Label::Attack => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Print,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        })
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "print" => Ok(AttackKind::Print),
            "replay" => Ok(AttackKind::Replay),
            _ => Err(Error::InvalidParameter(format!("unknown attack kind {s:?}"))),
        }
    }
}

/// One video of the corpus. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub frames_dir: String,
    pub landmarks_path: String,
    pub label: Label,
    pub attack_kind: Option<AttackKind>,
    pub partition: Option<Partition>,
    pub subject: u32,
}

impl SampleRecord {
    pub fn frames_path(&self, base: &Path) -> PathBuf {
        base.join(&self.frames_dir)
    }

    pub fn landmarks_file(&self, base: &Path) -> PathBuf {
        base.join(&self.landmarks_path)
    }
}

pub fn frame_file_name(index: u32) -> String {
    format!("frame_{index:04}.ppm")
}

/// Sorted `(index, path)` of every `frame_NNNN.ppm` in `dir`.
pub fn list_frames(dir: &Path) -> Result<Vec<(u32, PathBuf)>> {
    let mut frames = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(idx) = name
            .strip_prefix("frame_")
            .and_then(|s| s.strip_suffix(".ppm"))
            .and_then(|s| s.parse::<u32>().ok())
        {
            frames.push((idx, entry.path()));
        }
    }
    frames.sort();
    Ok(frames)
}

pub fn write_manifest(records: &[SampleRecord], path: &Path) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
