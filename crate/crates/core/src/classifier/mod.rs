//! Soft-margin binary SVM trained with sequential minimal optimization.
//!
//! Labels are `+1` for bona fide and `-1` for attack; positive scores lean bona
//! fide. Inputs are z-scored with statistics from the training set, which the
//! model carries along.

mod grid;
mod smo;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, Partition};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use grid::{grid_search, GridCandidate, GridOutcome, GridSpec, C_GRID, GAMMA_MULTIPLIERS};
pub use smo::{svm_train, TraceStep, TrainConfig, TrainOutcome, ALPHA_EPS};

/// Floor applied to per-dimension standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel<T> {
    Linear,
    Rbf { gamma: T },
}

impl<T: Scalar> Kernel<T> {
    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(&x, &y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: T = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Rbf { .. } => "rbf",
        }
    }
}

/// Kernel family without parameters, as chosen on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            _ => Err(Error::InvalidParameter(format!("unknown kernel {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> NormStats<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim().to_string(),
                found: v.len().to_string(),
            });
        }
        Ok(v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect())
    }
}

/// Per-dimension mean and population standard deviation (floored at 1e-8).
pub fn normalize_fit<T: Scalar>(vectors: &[Vec<T>]) -> Result<NormStats<T>> {
    let first = vectors.first().ok_or(Error::TooFew { needed: 1, found: 0 })?;
    let dim = first.len();
    let n = T::from_count(vectors.len());
    let mut mean = vec![T::zero(); dim];
    for v in vectors {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![T::zero(); dim];
    for v in vectors {
        for ((s, &x), &m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let floor = T::lit(STD_FLOOR);
    let std = var.into_iter().map(|s| (s / n).sqrt().max(floor)).collect();
    Ok(NormStats { mean, std })
}

pub fn normalize_apply<T: Scalar>(stats: &NormStats<T>, v: &[T]) -> Result<Vec<T>> {
    stats.apply(v)
}

/// Feature vectors with `+1 / -1` labels from one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet<T> {
    vectors: Vec<Vec<T>>,
    labels: Vec<i8>,
    ids: Vec<String>,
    partition: Partition,
}

impl<T: Scalar> LabeledSet<T> {
    pub fn new(vectors: Vec<Vec<T>>, labels: Vec<i8>, partition: Partition) -> Result<Self> {
        let ids = vec![String::new(); vectors.len()];
        Self::with_ids(vectors, labels, ids, partition)
    }

    /// Like [`LabeledSet::new`] with the sample id of each vector, used to
    /// aggregate frame scores per video.
    pub fn with_ids(vectors: Vec<Vec<T>>, labels: Vec<i8>, ids: Vec<String>, partition: Partition) -> Result<Self> {
        if vectors.len() != labels.len() || vectors.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels and ids", vectors.len()),
                found: format!("{} labels, {} ids", labels.len(), ids.len()),
            });
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidParameter(format!("label {l} is not +1 or -1")));
        }
        if let Some(first) = vectors.first() {
            if let Some(v) = vectors.iter().find(|v| v.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len().to_string(),
                    found: v.len().to_string(),
                });
            }
            if vectors.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("non-finite feature value".into()));
            }
        }
        Ok(Self {
            vectors,
            labels,
            ids,
            partition,
        })
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&1) && self.labels.contains(&-1)
    }

    pub fn label(&self, i: usize) -> Label {
        if self.labels[i] > 0 {
            Label::Bonafide
        } else {
            Label::Attack
        }
    }
}

/// Trained model; support vectors are stored already normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T> {
    pub kernel: Kernel<T>,
    pub c: T,
    pub bias: T,
    pub norm_stats: NormStats<T>,
    pub support_vectors: Vec<Vec<T>>,
    pub dual_coefs: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelFile<T> {
    kernel: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    gamma: Option<T>,
    #[serde(rename = "C")]
    c: T,
    bias: T,
    norm_stats: NormStats<T>,
    support_vectors: Vec<Vec<T>>,
    dual_coefs: Vec<T>,
}

impl<T: Scalar> SvmModel<T> {
    pub fn dim(&self) -> usize {
        self.norm_stats.dim()
    }

    /// Decision value of an already normalized vector.
    pub fn decision(&self, z: &[T]) -> T {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, &a)| a * self.kernel.eval(sv, z))
            .sum::<T>()
            + self.bias
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            kernel: self.kernel.name().to_string(),
            gamma: match self.kernel {
                Kernel::Rbf { gamma } => Some(gamma),
                Kernel::Linear => None,
            },
            c: self.c,
            bias: self.bias,
            norm_stats: self.norm_stats.clone(),
            support_vectors: self.support_vectors.clone(),
            dual_coefs: self.dual_coefs.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile<T> = serde_json::from_str(text)?;
        let kernel = match (f.kernel.as_str(), f.gamma) {
            ("linear", _) => Kernel::Linear,
            ("rbf", Some(gamma)) if gamma > T::zero() => Kernel::Rbf { gamma },
            ("rbf", _) => return Err(Error::InvalidParameter("rbf model needs gamma > 0".into())),
            (k, _) => return Err(Error::InvalidParameter(format!("unknown kernel {k:?}"))),
        };
        let model = Self {
            kernel,
            c: f.c,
            bias: f.bias,
            norm_stats: f.norm_stats,
            support_vectors: f.support_vectors,
            dual_coefs: f.dual_coefs,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.norm_stats.std.len() != dim
            || self.support_vectors.len() != self.dual_coefs.len()
            || self.support_vectors.is_empty()
            || self.support_vectors.iter().any(|sv| sv.len() != dim)
        {
            return Err(Error::InvalidParameter("inconsistent model dimensions".into()));
        }
        if !(self.c > T::zero()) {
            return Err(Error::InvalidParameter("C must be > 0".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.in_command("load model", path.display().to_string()))
    }
}

/// `f(v) = sum_i coef_i K(sv_i, z(v)) + b` with `z` the training z-score.
pub fn svm_score<T: Scalar>(model: &SvmModel<T>, v: &[T]) -> Result<T> {
    Ok(model.decision(&model.norm_stats.apply(v)?))
}

/// `1 / (dim * var)` over all normalized training values, or `1 / dim` when the
/// variance vanishes.
pub fn default_gamma<T: Scalar>(normalized: &[Vec<T>]) -> T {
    let dim = normalized.first().map_or(1, Vec::len).max(1);
    let n = T::from_count(normalized.len() * dim);
    let mean = normalized.iter().flatten().copied().sum::<T>() / n;
    let var = normalized.iter().flatten().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    if var > T::zero() {
        T::one() / (T::from_count(dim) * var)
    } else {
        T::one() / T::from_count(dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_dimension_normalizes_to_zero() {
        let data = vec![vec![1.0f64, 3.0], vec![2.0, 3.0], vec![4.0, 3.0]];
        let s = normalize_fit(&data).unwrap();
        for v in &data {
            assert_eq!(s.apply(v).unwrap()[1], 0.0);
        }
        let single = normalize_fit(&[vec![5.0f64, -2.0]]).unwrap();
        assert_eq!(single.apply(&[5.0, -2.0]).unwrap(), vec![0.0, 0.0]);
        assert!(normalize_fit::<f64>(&[]).is_err());
    }

    #[test]
    fn labeled_set_validation() {
        assert!(LabeledSet::new(vec![vec![1.0f64], vec![1.0, 2.0]], vec![1, -1], Partition::Train).is_err());
        assert!(LabeledSet::new(vec![vec![1.0f64]], vec![2], Partition::Train).is_err());
        assert!(LabeledSet::new(vec![vec![1.0f64]], vec![1, 1], Partition::Train).is_err());
        let s = LabeledSet::new(vec![vec![1.0f64], vec![0.0]], vec![1, -1], Partition::Dev).unwrap();
        assert!(s.has_both_classes());
        assert_eq!(s.label(1), Label::Attack);
    }

    #[test]
    fn model_json_rejects_bad_kernel() {
        let bad = r#"{"kernel":"rbf","C":1.0,"bias":0.0,"norm_stats":{"mean":[0.0],"std":[1.0]},"support_vectors":[[1.0]],"dual_coefs":[1.0]}"#;
        assert!(SvmModel::<f64>::from_json(bad).is_err());
    }

    proptest! {
        #[test]
        fn normalized_train_has_zero_mean_unit_std(data in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 2..30)) {
            let s = normalize_fit(&data).unwrap();
            let z: Vec<Vec<f64>> = data.iter().map(|v| s.apply(v).unwrap()).collect();
            let z_stats = normalize_fit(&z).unwrap();
            for d in 0..3 {
                if s.std[d] > 1e-6 {
                    prop_assert!(z_stats.mean[d].abs() < 1e-9);
                    prop_assert!((z_stats.std[d] - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
