//! Platt-style SMO with a maximal-violating-pair finishing phase.
//!
//! The solver keeps `F_i = sum_j a_j y_j K_ij - y_i`, so that the decision
//! value is `F_i + y_i + b`. The first phase is Platt's heuristic loop (first
//! choice: any KKT violator; second choice: largest `|F_1 - F_2|` among
//! non-bound examples, then non-bound and finally all examples from a seeded
//! random start). It runs for at most `max_passes` passes. The second phase
//! repeatedly optimizes the maximal violating pair until
//! `max F(I_low) - min F(I_up) <= 2 tol`; the bias is then the midpoint, which
//! puts every example within `tol` of its KKT condition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{normalize_fit, Kernel, LabeledSet, SvmModel};

/// Multipliers at or below this are not support vectors.
pub const ALPHA_EPS: f64 = 1e-9;
const STEP_EPS: f64 = 1e-12;
/// Kernel matrices up to this many rows are cached in full.
const FULL_CACHE_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub kernel: Kernel<T>,
    pub c: T,
    pub tol: T,
    pub max_passes: usize,
    pub seed: u64,
    /// Record the dual objective and `sum a_i y_i` after every accepted step.
    pub trace: bool,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(kernel: Kernel<T>, c: T) -> Self {
        Self {
            kernel,
            c,
            tol: T::lit(1e-3),
            max_passes: 10,
            seed: 0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep<T> {
    pub objective: T,
    pub sum_alpha_y: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T> {
    pub model: SvmModel<T>,
    /// All multipliers, in training order.
    pub alphas: Vec<T>,
    /// Whether the KKT conditions hold within `tol` (otherwise the step budget ran out).
    pub converged: bool,
    pub steps: usize,
    pub trace: Vec<TraceStep<T>>,
}

enum KernelCache<'a, T> {
    Full(Vec<T>, usize),
    Lazy(&'a [Vec<T>], Kernel<T>),
}

impl<T: Scalar> KernelCache<'_, T> {
    fn get(&self, i: usize, j: usize) -> T {
        match self {
            KernelCache::Full(m, n) => m[i * n + j],
            KernelCache::Lazy(x, k) => k.eval(&x[i], &x[j]),
        }
    }
}

struct Solver<'a, T> {
    k: KernelCache<'a, T>,
    y: Vec<T>,
    alpha: Vec<T>,
    f: Vec<T>,
    c: T,
    tol: T,
    beta: T,
    rng: ChaCha8Rng,
    steps: usize,
    trace: Option<Vec<TraceStep<T>>>,
}

impl<T: Scalar> Solver<'_, T> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alpha[i] > T::zero() && self.alpha[i] < self.c
    }

    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > T::zero() {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > T::zero()
        }
    }

    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > T::zero() {
            self.alpha[i] > T::zero()
        } else {
            self.alpha[i] < self.c
        }
    }

    fn objective(&self) -> T {
        let half = T::lit(0.5);
        (0..self.n())
            .map(|i| self.alpha[i] - half * self.alpha[i] * self.y[i] * (self.f[i] + self.y[i]))
            .sum()
    }

    fn record(&mut self) {
        if self.trace.is_none() {
            return;
        }
        let step = TraceStep {
            objective: self.objective(),
            sum_alpha_y: self.alpha.iter().zip(&self.y).map(|(&a, &y)| a * y).sum(),
        };
        if let Some(t) = self.trace.as_mut() {
            t.push(step);
        }
    }

    fn snap(&self, a: T) -> T {
        let eps = T::lit(STEP_EPS) * self.c;
        if a < eps {
            T::zero()
        } else if a > self.c - eps {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < T::zero() {
            ((a2 - a1).max(T::zero()), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(T::zero()), (a1 + a2).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let (k11, k12, k22) = (self.k.get(i1, i1), self.k.get(i1, i2), self.k.get(i2, i2));
        let eta = k11 + k22 - k12 - k12;
        let slope = y2 * (self.f[i1] - self.f[i2]);
        // gain of moving a2 by t along the constraint line
        let gain = |t: T| slope * t - T::lit(0.5) * eta * t * t;
        let mut new_a2 = if eta > T::zero() {
            (a2 + slope / eta).max(lo).min(hi)
        } else {
            let (gl, gh) = (gain(lo - a2), gain(hi - a2));
            let margin = T::lit(STEP_EPS) * (T::one() + gl.abs().max(gh.abs()));
            if gl > gh + margin {
                lo
            } else if gh > gl + margin {
                hi
            } else {
                a2
            }
        };
        new_a2 = self.snap(new_a2);
        if (new_a2 - a2).abs() < T::lit(STEP_EPS) * (new_a2 + a2 + T::lit(STEP_EPS)) {
            return false;
        }
        if gain(new_a2 - a2) <= T::zero() {
            return false;
        }
        let new_a1 = self.snap(a1 + s * (a2 - new_a2));
        let (d1, d2) = (y1 * (new_a1 - a1), y2 * (new_a2 - a2));

        let (e1, e2) = (self.f[i1] - self.beta, self.f[i2] - self.beta);
        let b1 = e1 + d1 * k11 + d2 * k12 + self.beta;
        let b2 = e2 + d1 * k12 + d2 * k22 + self.beta;
        self.alpha[i1] = new_a1;
        self.alpha[i2] = new_a2;
        self.beta = if self.non_bound(i1) {
            b1
        } else if self.non_bound(i2) {
            b2
        } else {
            (b1 + b2) * T::lit(0.5)
        };
        for k in 0..self.n() {
            let delta = d1 * self.k.get(i1, k) + d2 * self.k.get(i2, k);
            self.f[k] += delta;
        }
        self.steps += 1;
        self.record();
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let r2 = (self.f[i2] - self.beta) * self.y[i2];
        let a2 = self.alpha[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > T::zero())) {
            return false;
        }
        let n = self.n();
        let non_bound: Vec<usize> = (0..n).filter(|&i| self.non_bound(i)).collect();
        if non_bound.len() > 1 {
            let f2 = self.f[i2];
            let best = non_bound
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    (self.f[a] - f2)
                        .abs()
                        .partial_cmp(&(self.f[b] - f2).abs())
                        .expect("finite")
                        .then(b.cmp(&a))
                })
                .expect("non-empty");
            if self.take_step(best, i2) {
                return true;
            }
        }
        if !non_bound.is_empty() {
            let start = self.rng.gen_range(0..non_bound.len());
            for off in 0..non_bound.len() {
                let i1 = non_bound[(start + off) % non_bound.len()];
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        let start = self.rng.gen_range(0..n);
        (0..n).any(|off| self.take_step((start + off) % n, i2))
    }

    fn platt_phase(&mut self, max_passes: usize) {
        let mut examine_all = true;
        for _ in 0..max_passes {
            let candidates: Vec<usize> = (0..self.n()).filter(|&i| examine_all || self.non_bound(i)).collect();
            let changed = candidates.into_iter().filter(|&i| self.examine(i)).count();
            if examine_all && changed == 0 {
                break;
            }
            if examine_all {
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
    }

    /// `(argmin F over I_up, argmax F over I_low)`; lowest index on ties.
    fn violating_pair(&self) -> (Option<usize>, Option<usize>) {
        let (mut up, mut low): (Option<usize>, Option<usize>) = (None, None);
        for i in 0..self.n() {
            if self.in_up(i) && up.is_none_or(|u| self.f[i] < self.f[u]) {
                up = Some(i);
            }
            if self.in_low(i) && low.is_none_or(|l| self.f[i] > self.f[l]) {
                low = Some(i);
            }
        }
        (up, low)
    }

    fn finish_phase(&mut self, max_steps: usize) -> bool {
        let two_tol = self.tol + self.tol;
        for _ in 0..max_steps {
            match self.violating_pair() {
                (Some(u), Some(l)) if self.f[l] - self.f[u] > two_tol => {
                    if !self.take_step(u, l) {
                        return false;
                    }
                }
                _ => return true,
            }
        }
        false
    }

    /// Threshold `beta` (bias `-beta`) halfway between the two KKT bounds.
    fn final_beta(&self) -> T {
        match self.violating_pair() {
            (Some(u), Some(l)) => (self.f[u] + self.f[l]) * T::lit(0.5),
            (Some(u), None) => self.f[u],
            (None, Some(l)) => self.f[l],
            (None, None) => self.beta,
        }
    }
}

/// Trains on `data` (labels `+1` / `-1`); features are z-scored first.
pub fn svm_train<T: Scalar>(data: &LabeledSet<T>, cfg: &TrainConfig<T>) -> Result<TrainOutcome<T>> {
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if !(cfg.c > T::zero()) || !cfg.c.is_finite() {
        return Err(Error::InvalidParameter("C must be finite and > 0".into()));
    }
    if let Kernel::Rbf { gamma } = cfg.kernel {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite and > 0".into()));
        }
    }
    let stats = normalize_fit(data.vectors())?;
    let x: Vec<Vec<T>> = data.vectors().iter().map(|v| stats.apply(v)).collect::<Result<_>>()?;
    let n = x.len();
    let k = if n <= FULL_CACHE_LIMIT {
        let mut m = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = cfg.kernel.eval(&x[i], &x[j]);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        KernelCache::Full(m, n)
    } else {
        KernelCache::Lazy(&x, cfg.kernel)
    };
    let y: Vec<T> = data.labels().iter().map(|&l| T::lit(f64::from(l))).collect();
    let mut solver = Solver {
        k,
        f: y.iter().map(|&v| -v).collect(),
        y,
        alpha: vec![T::zero(); n],
        c: cfg.c,
        tol: cfg.tol,
        beta: T::zero(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        steps: 0,
        trace: cfg.trace.then(Vec::new),
    };
    solver.record();
    solver.platt_phase(cfg.max_passes);
    let converged = solver.finish_phase(1000 * n + 100_000);
    let beta = solver.final_beta();

    let eps = T::lit(ALPHA_EPS);
    let (support_vectors, dual_coefs) = (0..n)
        .filter(|&i| solver.alpha[i] > eps)
        .map(|i| (x[i].clone(), solver.alpha[i] * solver.y[i]))
        .unzip();
    Ok(TrainOutcome {
        model: SvmModel {
            kernel: cfg.kernel,
            c: cfg.c,
            bias: -beta,
            norm_stats: stats,
            support_vectors,
            dual_coefs,
        },
        alphas: solver.alpha,
        converged,
        steps: solver.steps,
        trace: solver.trace.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::svm_score;
    use crate::dataset::Partition;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn set(points: &[(Vec<f64>, i8)]) -> LabeledSet<f64> {
        LabeledSet::new(
            points.iter().map(|p| p.0.clone()).collect(),
            points.iter().map(|p| p.1).collect(),
            Partition::Train,
        )
        .unwrap()
    }

    #[test]
    fn two_point_closed_form() {
        let data = set(&[(vec![1.0], 1), (vec![-1.0], -1)]);
        let out = svm_train(&data, &TrainConfig::new(Kernel::Linear, 1.0)).unwrap();
        assert!(out.converged);
        // z-scoring leaves +-1 unchanged (mean 0, population std 1)
        for a in &out.alphas {
            assert!((a - 0.5).abs() < 1e-6);
        }
        let m = &out.model;
        assert_eq!(m.support_vectors.len(), 2);
        let w: f64 = m
            .support_vectors
            .iter()
            .zip(&m.dual_coefs)
            .map(|(sv, c)| c * sv[0])
            .sum();
        assert!((w - 1.0).abs() < 1e-6);
        assert!(m.bias.abs() < 1e-6);
        assert!((svm_score(m, &[1.0]).unwrap() - 1.0).abs() < 1e-6);
        assert!((svm_score(m, &[-1.0]).unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_class_rejected() {
        let data = set(&[(vec![1.0], 1), (vec![2.0], 1)]);
        assert!(matches!(
            svm_train(&data, &TrainConfig::new(Kernel::Linear, 1.0)),
            Err(Error::SingleClass)
        ));
        let ok = set(&[(vec![1.0], 1), (vec![2.0], -1)]);
        assert!(svm_train(&ok, &TrainConfig::new(Kernel::Linear, 0.0)).is_err());
    }

    #[test]
    fn xor_with_rbf() {
        let data = set(&[
            (vec![0.0, 0.0], -1),
            (vec![1.0, 1.0], -1),
            (vec![0.0, 1.0], 1),
            (vec![1.0, 0.0], 1),
        ]);
        let out = svm_train(&data, &TrainConfig::new(Kernel::Rbf { gamma: 1.0 }, 10.0)).unwrap();
        let m = &out.model;
        for (v, &l) in data.vectors().iter().zip(data.labels()) {
            // recompute the decision value by direct kernel evaluation
            let z = m.norm_stats.apply(v).unwrap();
            let f: f64 = m
                .support_vectors
                .iter()
                .zip(&m.dual_coefs)
                .map(|(sv, c)| c * (-(sv[0] - z[0]).powi(2) - (sv[1] - z[1]).powi(2)).exp())
                .sum::<f64>()
                + m.bias;
            assert!(f * f64::from(l) > 0.0);
        }
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let points: Vec<(Vec<f64>, i8)> = (0..60)
            .map(|i| {
                let l: i8 = if i % 2 == 0 { 1 } else { -1 };
                let c = 3.0 * f64::from(l);
                (vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)], l)
            })
            .collect();
        let data = set(&points);
        let out = svm_train(&data, &TrainConfig::new(Kernel::Linear, 1.0)).unwrap();
        for (v, &l) in data.vectors().iter().zip(data.labels()) {
            assert!(svm_score(&out.model, v).unwrap() * f64::from(l) > 0.0);
        }
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<(Vec<f64>, i8)> = (0..40)
            .map(|i| {
                (
                    vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    if i % 3 == 0 { 1 } else { -1 },
                )
            })
            .collect();
        let data = set(&points);
        let cfg = TrainConfig {
            seed: 3,
            ..TrainConfig::new(Kernel::Rbf { gamma: 0.5 }, 1.0)
        };
        assert_eq!(svm_train(&data, &cfg).unwrap(), svm_train(&data, &cfg).unwrap());
    }

    fn random_problem() -> impl Strategy<Value = (Vec<(Vec<f64>, i8)>, bool, f64)> {
        (
            proptest::collection::vec((proptest::collection::vec(-2.0f64..2.0, 3), any::<bool>()), 4..40),
            any::<bool>(),
            prop_oneof![Just(0.1), Just(1.0), Just(10.0)],
        )
            .prop_map(|(pts, rbf, c)| {
                let mut pts: Vec<(Vec<f64>, i8)> = pts.into_iter().map(|(v, b)| (v, if b { 1 } else { -1 })).collect();
                pts[0].1 = 1;
                pts[1].1 = -1;
                (pts, rbf, c)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kkt_audit_and_dual_trace((pts, rbf, c) in random_problem(), seed in any::<u64>()) {
            let data = set(&pts);
            let kernel = if rbf { Kernel::Rbf { gamma: 0.5 } } else { Kernel::Linear };
            let cfg = TrainConfig { seed, trace: true, ..TrainConfig::new(kernel, c) };
            let out = svm_train(&data, &cfg).unwrap();
            prop_assert!(out.converged);
            let tol = 1e-3;
            for (i, v) in data.vectors().iter().enumerate() {
                let yf = f64::from(data.labels()[i]) * svm_score(&out.model, v).unwrap();
                let a = out.alphas[i];
                if a == 0.0 {
                    prop_assert!(yf >= 1.0 - tol, "a=0 but yf={yf}");
                } else if a == c {
                    prop_assert!(yf <= 1.0 + tol, "a=C but yf={yf}");
                } else {
                    prop_assert!((yf - 1.0).abs() <= tol, "0<a<C but yf={yf}");
                }
            }
            for w in out.trace.windows(2) {
                prop_assert!(w[1].objective >= w[0].objective - 1e-9);
            }
            for t in &out.trace {
                prop_assert!(t.sum_alpha_y.abs() <= 1e-6);
            }
            let coef_sum: f64 = out.model.dual_coefs.iter().sum();
            prop_assert!(coef_sum.abs() <= 1e-6);
            prop_assert!(out.model.dual_coefs.iter().all(|a| a.abs() <= c + 1e-12));
        }

        #[test]
        fn model_json_round_trip((pts, rbf, c) in random_problem()) {
            let data = set(&pts);
            let kernel = if rbf { Kernel::Rbf { gamma: 0.7 } } else { Kernel::Linear };
            let model = svm_train(&data, &TrainConfig::new(kernel, c)).unwrap().model;
            let back = SvmModel::<f64>::from_json(&model.to_json().unwrap()).unwrap();
            for v in data.vectors() {
                let (a, b) = (svm_score(&model, v).unwrap(), svm_score(&back, v).unwrap());
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
