//! Error rates at a score threshold: FAR/FRR/HTER, APCER/BPCER/ACER and the
//! development-set EER threshold. A presentation is accepted as bona fide when
//! its score is `>=` the threshold. All rates are percentages.

mod report;

use std::collections::BTreeMap;

use num_traits::Num;

use crate::dataset::{Label, Partition};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use report::{
    occlusion_column, parse_report_csv, render_markdown, report_csv, ReportRow, NO_OCCLUSION, OCCLUSION_COLUMNS,
    PROTOCOL, REPORT_COLUMNS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry<T> {
    pub sample_id: String,
    pub score: T,
    pub label: Label,
    pub partition: Partition,
}

/// Non-empty set of finite scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet<T> {
    entries: Vec<ScoreEntry<T>>,
}

impl<T: Scalar> ScoreSet<T> {
    pub fn new(entries: Vec<ScoreEntry<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::TooFew { needed: 1, found: 0 });
        }
        if let Some(e) = entries.iter().find(|e| !e.score.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "score of {} is not finite",
                e.sample_id
            )));
        }
        Ok(Self { entries })
    }

    /// Builds a set from bare `(score, label)` pairs, numbering the ids.
    pub fn from_pairs(pairs: &[(T, Label)], partition: Partition) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(score, label))| ScoreEntry {
                    sample_id: format!("{i:06}"),
                    score,
                    label,
                    partition,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ScoreEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    fn require_both(&self) -> Result<(usize, usize)> {
        let (b, a) = (self.count(Label::Bonafide), self.count(Label::Attack));
        if b == 0 || a == 0 {
            return Err(Error::MissingClass);
        }
        Ok((b, a))
    }

    /// One entry per sample id holding the mean of its scores, sorted by id.
    /// Scores are summed in ascending order so the result does not depend on
    /// the order of the input.
    pub fn mean_by_sample(&self) -> Result<Self> {
        let mut groups: BTreeMap<&str, (Vec<T>, Label, Partition)> = BTreeMap::new();
        for e in &self.entries {
            let g = groups
                .entry(e.sample_id.as_str())
                .or_insert_with(|| (Vec::new(), e.label, e.partition));
            if g.1 != e.label {
                return Err(Error::InvalidParameter(format!(
                    "sample {} has mixed labels",
                    e.sample_id
                )));
            }
            g.0.push(e.score);
        }
        Self::new(
            groups
                .into_iter()
                .map(|(id, (mut scores, label, partition))| {
                    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                    let n = T::from_count(scores.len());
                    ScoreEntry {
                        sample_id: id.to_string(),
                        score: scores.into_iter().sum::<T>() / n,
                        label,
                        partition,
                    }
                })
                .collect(),
        )
    }
}

fn percent<T: Scalar>(num: usize, den: usize) -> T {
    T::lit(100.0) * T::from_count(num) / T::from_count(den)
}

/// `(FAR, FRR)` in percent at threshold `tau`.
pub fn far_frr<T: Scalar>(scores: &ScoreSet<T>, tau: T) -> Result<(T, T)> {
    let (nb, na) = scores.require_both()?;
    let accepted_attacks = scores
        .entries
        .iter()
        .filter(|e| e.label == Label::Attack && e.score >= tau)
        .count();
    let rejected_bonafide = scores
        .entries
        .iter()
        .filter(|e| e.label == Label::Bonafide && e.score < tau)
        .count();
    Ok((percent(accepted_attacks, na), percent(rejected_bonafide, nb)))
}

/// Every candidate threshold with its `(FAR, FRR)`: `-inf`, the midpoints of
/// adjacent distinct scores and `+inf`, in increasing order.
pub fn rate_curve<T: Scalar>(scores: &ScoreSet<T>) -> Result<Vec<(T, T, T)>> {
    let (nb, na) = scores.require_both()?;
    let mut sorted: Vec<(T, Label)> = scores.entries.iter().map(|e| (e.score, e.label)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    // at tau = -inf everything is accepted
    let (mut attacks_accepted, mut bonafide_rejected) = (na, 0usize);
    let mut curve = vec![(T::neg_infinity(), percent(na, na), percent(0, nb))];
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == v {
            match sorted[i].1 {
                Label::Attack => attacks_accepted -= 1,
                Label::Bonafide => bonafide_rejected += 1,
            }
            i += 1;
        }
        let tau = match sorted.get(i) {
            Some(&(next, _)) => {
                let mid = v + (next - v) / T::lit(2.0);
                // adjacent floats: keep the threshold strictly above `v`
                if mid > v {
                    mid
                } else {
                    next
                }
            }
            None => T::infinity(),
        };
        curve.push((tau, percent(attacks_accepted, na), percent(bonafide_rejected, nb)));
    }
    Ok(curve)
}

/// Threshold minimizing `|FAR - FRR|` over [`rate_curve`] (smallest on ties) and
/// the EER `(FAR + FRR) / 2` there.
pub fn eer_threshold<T: Scalar>(dev: &ScoreSet<T>) -> Result<(T, T)> {
    let curve = rate_curve(dev)?;
    let mut best = curve[0];
    for &c in &curve[1..] {
        if (c.1 - c.2).abs() < (best.1 - best.2).abs() {
            best = c;
        }
    }
    Ok((best.0, hter(best.1, best.2)))
}

/// Half total error rate, the mean of FAR and FRR.
pub fn hter<N: Num + Copy>(far: N, frr: N) -> N {
    (far + frr) / (N::one() + N::one())
}

/// Average classification error rate, the mean of APCER and BPCER.
pub fn acer<N: Num + Copy>(apcer: N, bpcer: N) -> N {
    (apcer + bpcer) / (N::one() + N::one())
}

/// `(APCER, BPCER, ACER)` in percent with all attack species pooled.
pub fn apcer_bpcer_acer<T: Scalar>(test: &ScoreSet<T>, tau: T) -> Result<(T, T, T)> {
    let (apcer, bpcer) = far_frr(test, tau)?;
    Ok((apcer, bpcer, acer(apcer, bpcer)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<T> {
    pub threshold: T,
    pub far: T,
    pub frr: T,
    pub hter: T,
    pub apcer: T,
    pub bpcer: T,
    pub acer: T,
    pub n_bonafide: usize,
    pub n_attack: usize,
}

impl<T: Scalar> MetricsReport<T> {
    pub fn evaluate(test: &ScoreSet<T>, threshold: T) -> Result<Self> {
        let (far, frr) = far_frr(test, threshold)?;
        let (apcer, bpcer, acer) = apcer_bpcer_acer(test, threshold)?;
        Ok(Self {
            threshold,
            far,
            frr,
            hter: hter(far, frr),
            apcer,
            bpcer,
            acer,
            n_bonafide: test.count(Label::Bonafide),
            n_attack: test.count(Label::Attack),
        })
    }
}
