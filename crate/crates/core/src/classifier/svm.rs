//! One-vs-one RBF support vector machine.

use std::collections::BTreeMap;
use std::path::Path;

use log::debug;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureWindow, NormStats, CHANNELS};
use super::smo::{solve, SmoConfig};
use crate::error::{invalid, Error, Result};

/// Labelled training input.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledWindow {
    pub window: FeatureWindow,
    pub label: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// RBF width γ in `exp(−γ‖x − z‖²)`.
    pub kernel_width: f64,
    pub c_reg: f64,
    pub tolerance: f64,
}

impl SvmParams {
    /// Inverse feature dimension for windows of `k` samples, C = 1.
    pub fn default_for_window(k: usize) -> Self {
        Self {
            kernel_width: 1.0 / (CHANNELS * k) as f64,
            c_reg: 1.0,
            tolerance: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_width.is_finite() && self.kernel_width > 0.0) {
            return invalid("kernel width must be positive");
        }
        if !(self.c_reg.is_finite() && self.c_reg > 0.0) {
            return invalid("box constraint C must be positive");
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return invalid("KKT tolerance must be positive");
        }
        Ok(())
    }
}

/// Binary machine separating class `a` (positive) from class `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub a: u8,
    pub b: u8,
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficients multiplied by the ±1 label.
    pub alphas: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub kkt_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<u8>,
    pub pairs: Vec<PairModel>,
    pub kernel_width: f64,
    pub c_reg: f64,
    pub norm_mean: [f64; CHANNELS],
    pub norm_std: [f64; CHANNELS],
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub training_accuracy: f64,
    pub max_kkt_residual: f64,
    pub support_vectors: usize,
}

fn squared_distances(x: &[&[f64]]) -> DMatrix<f64> {
    let n = x.len();
    let d = x[0].len();
    let m = DMatrix::from_fn(n, d, |i, j| x[i][j]);
    let gram = &m * m.transpose();
    DMatrix::from_fn(n, n, |i, j| {
        (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0)
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl SvmModel {
    pub fn norm_stats(&self) -> Result<NormStats> {
        NormStats::new(self.norm_mean, self.norm_std)
    }

    pub fn dimension(&self) -> usize {
        CHANNELS * self.k
    }

    /// Checks the structural invariants of a loaded model.
    pub fn validate(&self) -> Result<()> {
        self.norm_stats()?;
        if self.classes.len() < 2 || self.classes.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("model needs at least two distinct, sorted classes");
        }
        if !(self.kernel_width > 0.0 && self.c_reg > 0.0) {
            return invalid("model kernel width and C must be positive");
        }
        let expected = self.classes.len() * (self.classes.len() - 1) / 2;
        if self.pairs.len() != expected {
            return invalid(format!(
                "model has {} pairs, expected {expected}",
                self.pairs.len()
            ));
        }
        let dim = self.dimension();
        for p in &self.pairs {
            if p.support_vectors.len() != p.alphas.len() {
                return invalid("support vector and coefficient counts differ");
            }
            if p.support_vectors.iter().any(|sv| sv.len() != dim) {
                return invalid("support vector dimension does not match the window length");
            }
            if p.alphas.iter().any(|a| a.abs() > self.c_reg * (1.0 + 1e-9)) {
                return invalid("dual coefficient outside [-C, C]");
            }
            if p.alphas.iter().sum::<f64>().abs() > 1e-6 {
                return invalid("dual coefficients do not balance");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: SvmModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Pair decision value; non-negative favours `pair.a`.
    pub fn decision(&self, pair: &PairModel, x: &[f64]) -> f64 {
        pair.support_vectors
            .iter()
            .zip(&pair.alphas)
            .map(|(sv, a)| a * (-self.kernel_width * sq_dist(sv, x)).exp())
            .sum::<f64>()
            + pair.bias
    }

    /// Builds an evaluator that computes each distinct support vector's
    /// kernel value once per window.
    pub fn predictor(&self) -> Predictor<'_> {
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut unique: Vec<&[f64]> = Vec::new();
        let pair_index = self
            .pairs
            .iter()
            .map(|p| {
                p.support_vectors
                    .iter()
                    .map(|sv| {
                        let key: Vec<u64> = sv.iter().map(|v| v.to_bits()).collect();
                        *index.entry(key).or_insert_with(|| {
                            unique.push(sv);
                            unique.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Predictor {
            model: self,
            unique,
            pair_index,
        }
    }

    pub fn predict(&self, window: &FeatureWindow) -> Result<u8> {
        self.predictor().predict(window)
    }
}

pub struct Predictor<'a> {
    model: &'a SvmModel,
    unique: Vec<&'a [f64]>,
    pair_index: Vec<Vec<usize>>,
}

impl Predictor<'_> {
    pub fn decisions(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.model;
        if x.len() != m.dimension() {
            return invalid(format!(
                "window has {} values, model expects {}",
                x.len(),
                m.dimension()
            ));
        }
        let kernel: Vec<f64> = self
            .unique
            .iter()
            .map(|sv| (-m.kernel_width * sq_dist(sv, x)).exp())
            .collect();
        Ok(m.pairs
            .iter()
            .zip(&self.pair_index)
            .map(|(p, idx)| {
                idx.iter()
                    .zip(&p.alphas)
                    .map(|(&i, a)| a * kernel[i])
                    .sum::<f64>()
                    + p.bias
            })
            .collect())
    }

    /// Majority vote; ties go to the pairwise winner among the tied
    /// classes, then to the smaller label.
    pub fn predict(&self, window: &FeatureWindow) -> Result<u8> {
        let m = self.model;
        let dec = self.decisions(&window.values)?;
        let winner = |p: &PairModel, d: f64| if d >= 0.0 { p.a } else { p.b };
        let mut votes: BTreeMap<u8, usize> = m.classes.iter().map(|&c| (c, 0)).collect();
        for (p, &d) in m.pairs.iter().zip(&dec) {
            *votes
                .get_mut(&winner(p, d))
                .expect("pair classes are model classes") += 1;
        }
        let top = *votes.values().max().expect("at least two classes");
        let tied: Vec<u8> = votes
            .iter()
            .filter(|(_, &v)| v == top)
            .map(|(&c, _)| c)
            .collect();
        if tied.len() == 1 {
            return Ok(tied[0]);
        }
        let mut wins: BTreeMap<u8, usize> = tied.iter().map(|&c| (c, 0)).collect();
        for (p, &d) in m.pairs.iter().zip(&dec) {
            if wins.contains_key(&p.a) && wins.contains_key(&p.b) {
                *wins.get_mut(&winner(p, d)).expect("tied class") += 1;
            }
        }
        let best = *wins.values().max().expect("non-empty");
        Ok(*wins.iter().find(|(_, &v)| v == best).expect("non-empty").0)
    }

    pub fn predict_all(&self, windows: &[FeatureWindow]) -> Result<Vec<u8>> {
        windows.par_iter().map(|w| self.predict(w)).collect()
    }
}

/// Trains one binary machine per class pair. Windows must already be
/// normalized with `norm`.
pub fn train(
    data: &[LabeledWindow],
    params: &SvmParams,
    norm: NormStats,
) -> Result<(SvmModel, TrainReport)> {
    params.validate()?;
    let Some(first) = data.first() else {
        return Err(Error::TrainingFailed("no training data".into()));
    };
    let dim = first.window.values.len();
    if dim == 0 || dim % CHANNELS != 0 || data.iter().any(|d| d.window.values.len() != dim) {
        return invalid("training windows must share a length that is a multiple of 6");
    }
    let classes: Vec<u8> = data
        .iter()
        .map(|d| d.label)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::TrainingFailed(format!(
            "need at least two classes, got {:?}",
            classes
        )));
    }
    let x: Vec<&[f64]> = data.iter().map(|d| d.window.values.as_slice()).collect();
    let dist = squared_distances(&x);

    let pairs: Vec<(u8, u8)> = classes
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| classes[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let cfg = SmoConfig {
        c: params.c_reg,
        tolerance: params.tolerance,
        ..Default::default()
    };
    let gamma = params.kernel_width;

    let trained: Vec<PairModel> = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<PairModel> {
            let idx: Vec<usize> = (0..data.len())
                .filter(|&i| data[i].label == a || data[i].label == b)
                .collect();
            if idx.iter().all(|&i| dist[(i, idx[0])] == 0.0) {
                return Err(Error::TrainingFailed(format!(
                    "classes {a} and {b} have identical inputs"
                )));
            }
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if data[i].label == a { 1.0 } else { -1.0 })
                .collect();
            let kernel = DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
                (-gamma * dist[(idx[r], idx[c])]).exp()
            });
            let sol = solve(idx.len(), |r, c| kernel[(r, c)], &y, &cfg)?;
            debug!(
                "pair ({a}, {b}): {} iterations, KKT residual {:.2e}",
                sol.iterations, sol.kkt_residual
            );
            let mut support_vectors = Vec::new();
            let mut alphas = Vec::new();
            for (r, &i) in idx.iter().enumerate() {
                if sol.alpha[r] > 0.0 {
                    support_vectors.push(data[i].window.values.clone());
                    alphas.push(sol.alpha[r] * y[r]);
                }
            }
            Ok(PairModel {
                a,
                b,
                support_vectors,
                alphas,
                bias: sol.bias,
                kkt_residual: sol.kkt_residual,
            })
        })
        .collect::<Result<_>>()?;

    let model = SvmModel {
        classes,
        pairs: trained,
        kernel_width: params.kernel_width,
        c_reg: params.c_reg,
        norm_mean: norm.mean,
        norm_std: norm.std,
        k: dim / CHANNELS,
    };
    let predictor = model.predictor();
    let windows: Vec<FeatureWindow> = data.iter().map(|d| d.window.clone()).collect();
    let pred = predictor.predict_all(&windows)?;
    let correct = pred
        .iter()
        .zip(data)
        .filter(|(p, d)| **p == d.label)
        .count();
    let report = TrainReport {
        training_accuracy: correct as f64 / data.len() as f64,
        max_kkt_residual: model
            .pairs
            .iter()
            .map(|p| p.kkt_residual)
            .fold(0.0, f64::max),
        support_vectors: model.pairs.iter().map(|p| p.alphas.len()).sum(),
    };
    Ok((model, report))
}

/// Held-out accuracy for every (kernel width, C) combination; returns the
/// best parameters (first in grid order on ties) and all scores.
pub fn grid_search(
    train_set: &[LabeledWindow],
    validation: &[LabeledWindow],
    widths: &[f64],
    cs: &[f64],
    norm: NormStats,
) -> Result<(SvmParams, Vec<(SvmParams, f64)>)> {
    if widths.is_empty() || cs.is_empty() || validation.is_empty() {
        return invalid("grid search needs widths, C values and validation data");
    }
    let windows: Vec<FeatureWindow> = validation.iter().map(|d| d.window.clone()).collect();
    let mut scores = Vec::new();
    for &kernel_width in widths {
        for &c_reg in cs {
            let params = SvmParams {
                kernel_width,
                c_reg,
                tolerance: 1e-3,
            };
            let (model, _) = train(train_set, &params, norm)?;
            let pred = model.predictor().predict_all(&windows)?;
            let acc = pred
                .iter()
                .zip(validation)
                .filter(|(p, d)| **p == d.label)
                .count() as f64
                / validation.len() as f64;
            scores.push((params, acc));
        }
    }
    let best = scores
        .iter()
        .fold(scores[0], |b, s| if s.1 > b.1 { *s } else { b });
    Ok((best.0, scores))
}
