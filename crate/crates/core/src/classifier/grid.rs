use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{eer_threshold, ScoreEntry, ScoreSet};
use crate::scalar::Scalar;

use super::{
    default_gamma, normalize_fit, svm_score, svm_train, Kernel, KernelKind, LabeledSet, TrainConfig, TrainOutcome,
};

pub const C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
/// Factors applied to the default RBF gamma.
pub const GAMMA_MULTIPLIERS: [f64; 3] = [0.25, 1.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice<T> {
    /// Multiple of [`default_gamma`] on the training set.
    Relative(T),
    Absolute(T),
}

/// Hyperparameter candidates, tried in C-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub kind: KernelKind,
    pub c_values: Vec<T>,
    pub gammas: Vec<GammaChoice<T>>,
    /// Score dev videos by their mean frame score instead of per frame.
    pub video_level: bool,
    pub seed: u64,
}

impl<T: Scalar> GridSpec<T> {
    /// The full default grid.
    pub fn default_grid(kind: KernelKind) -> Self {
        Self {
            kind,
            c_values: C_GRID.iter().map(|&c| T::lit(c)).collect(),
            gammas: GAMMA_MULTIPLIERS
                .iter()
                .map(|&m| GammaChoice::Relative(T::lit(m)))
                .collect(),
            video_level: true,
            seed: 0,
        }
    }

    /// One candidate; `gamma = None` means the default gamma.
    pub fn single(kind: KernelKind, c: T, gamma: Option<T>) -> Self {
        Self {
            kind,
            c_values: vec![c],
            gammas: vec![gamma.map_or(GammaChoice::Relative(T::one()), GammaChoice::Absolute)],
            video_level: true,
            seed: 0,
        }
    }

    fn kernels(&self, base_gamma: T) -> Vec<Kernel<T>> {
        match self.kind {
            KernelKind::Linear => vec![Kernel::Linear],
            KernelKind::Rbf => self
                .gammas
                .iter()
                .map(|g| Kernel::Rbf {
                    gamma: match *g {
                        GammaChoice::Relative(m) => m * base_gamma,
                        GammaChoice::Absolute(a) => a,
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCandidate<T> {
    pub c: T,
    pub kernel: Kernel<T>,
    pub dev_eer: T,
    pub dev_threshold: T,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome<T> {
    pub best: TrainOutcome<T>,
    pub best_index: usize,
    pub candidates: Vec<GridCandidate<T>>,
}

impl<T: Scalar> GridOutcome<T> {
    pub fn best_candidate(&self) -> &GridCandidate<T> {
        &self.candidates[self.best_index]
    }
}

/// Dev-set scores of `outcome`, optionally averaged per sample id.
pub(crate) fn dev_scores<T: Scalar>(
    model: &super::SvmModel<T>,
    dev: &LabeledSet<T>,
    video_level: bool,
) -> Result<ScoreSet<T>> {
    let entries = dev
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Ok(ScoreEntry {
                sample_id: dev.ids()[i].clone(),
                score: svm_score(model, v)?,
                label: dev.label(i),
                partition: dev.partition(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let set = ScoreSet::new(entries)?;
    if video_level {
        set.mean_by_sample()
    } else {
        Ok(set)
    }
}

/// Trains every candidate (in parallel) and keeps the one with the lowest dev
/// EER; ties go to the earliest candidate in grid order.
pub fn grid_search<T: Scalar>(
    train: &LabeledSet<T>,
    dev: &LabeledSet<T>,
    spec: &GridSpec<T>,
) -> Result<GridOutcome<T>> {
    if spec.c_values.is_empty() || (spec.kind == KernelKind::Rbf && spec.gammas.is_empty()) {
        return Err(Error::InvalidParameter("empty hyperparameter grid".into()));
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if !dev.has_both_classes() {
        return Err(Error::MissingClass);
    }
    let stats = normalize_fit(train.vectors())?;
    let z: Vec<Vec<T>> = train.vectors().iter().map(|v| stats.apply(v)).collect::<Result<_>>()?;
    let kernels = spec.kernels(default_gamma(&z));
    let jobs: Vec<(T, Kernel<T>)> = spec
        .c_values
        .iter()
        .flat_map(|&c| kernels.iter().map(move |&k| (c, k)))
        .collect();
    let results: Vec<(TrainOutcome<T>, GridCandidate<T>)> = jobs
        .par_iter()
        .map(|&(c, kernel)| {
            let cfg = TrainConfig {
                seed: spec.seed,
                ..TrainConfig::new(kernel, c)
            };
            let outcome = svm_train(train, &cfg)?;
            let (dev_threshold, dev_eer) = eer_threshold(&dev_scores(&outcome.model, dev, spec.video_level)?)?;
            let cand = GridCandidate {
                c,
                kernel,
                dev_eer,
                dev_threshold,
                converged: outcome.converged,
            };
            Ok((outcome, cand))
        })
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, (_, cand)) in results.iter().enumerate() {
        if cand.dev_eer < results[best_index].1.dev_eer {
            best_index = i;
        }
    }
    let mut candidates = Vec::with_capacity(results.len());
    let mut best = None;
    for (i, (outcome, cand)) in results.into_iter().enumerate() {
        if i == best_index {
            best = Some(outcome);
        }
        candidates.push(cand);
    }
    Ok(GridOutcome {
        best: best.expect("index in range"),
        best_index,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Partition;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(seed: u64, n: usize, sep: f64, partition: Partition) -> LabeledSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Vec::new();
        let mut l = Vec::new();
        let mut ids = Vec::new();
        for i in 0..n {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            v.push(vec![
                sep * f64::from(y) + rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            l.push(y);
            ids.push(format!("v{}", i % 10));
        }
        LabeledSet::with_ids(v, l, ids, partition).unwrap()
    }

    #[test]
    fn grid_order_and_selection() {
        let train = blobs(1, 40, 0.8, Partition::Train);
        let dev = blobs(2, 40, 0.8, Partition::Dev);
        let mut spec = GridSpec::default_grid(KernelKind::Rbf);
        spec.video_level = false;
        let out = grid_search(&train, &dev, &spec).unwrap();
        assert_eq!(out.candidates.len(), 12);
        assert_eq!(out.candidates[0].c, 0.1);
        assert_eq!(out.candidates[3].c, 1.0);
        let min = out.candidates.iter().map(|c| c.dev_eer).fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_candidate().dev_eer, min);
        assert!(out.candidates[..out.best_index].iter().all(|c| c.dev_eer > min));
        assert_eq!(out, grid_search(&train, &dev, &spec).unwrap());
    }

    #[test]
    fn linear_grid_ignores_gamma() {
        let train = blobs(3, 30, 2.0, Partition::Train);
        let dev = blobs(4, 30, 2.0, Partition::Dev);
        let out = grid_search(&train, &dev, &GridSpec::default_grid(KernelKind::Linear)).unwrap();
        assert_eq!(out.candidates.len(), 4);
        assert!(out.candidates.iter().all(|c| c.kernel == Kernel::Linear));
    }
}
