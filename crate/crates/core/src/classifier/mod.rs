//! Motion classification from raw windows of foot-mounted IMU data.

pub mod features;
pub mod smo;
pub mod svm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{build_windows, FeatureWindow, NormStats, CHANNELS, DEFAULT_WINDOW};
pub use svm::{
    grid_search, train, LabeledWindow, PairModel, Predictor, SvmModel, SvmParams, TrainReport,
};

use crate::error::{invalid, Result};
use crate::types::ImuStream;

pub const DEFAULT_SMOOTHING_WINDOW: usize = 15;
pub const DEFAULT_SMOOTHING_THRESHOLD: f64 = 0.2;

/// Samples dropped from each end of a training trial.
pub const DEFAULT_TRIM: usize = 1000;

/// Forward mean filter over binary labels: `ȳ_i = 1` iff
/// `Σ_{j=i}^{i+W_s} y_j / W_s ≥ threshold`. Near the end the window
/// shrinks to the `m` available labels and the sum is divided by
/// `max(m − 1, 1)`.
pub fn smooth(raw: &[u8], w_s: usize, threshold: f64) -> Result<Vec<u8>> {
    if w_s == 0 {
        return invalid("smoothing window must be at least 1");
    }
    if raw.iter().any(|&y| y > 1) {
        return invalid("smoothing is defined for binary labels only");
    }
    let mut prefix = vec![0usize; raw.len() + 1];
    for (i, &y) in raw.iter().enumerate() {
        prefix[i + 1] = prefix[i] + y as usize;
    }
    Ok((0..raw.len())
        .map(|i| {
            let end = (i + w_s + 1).min(raw.len());
            let m = end - i;
            let mean = (prefix[end] - prefix[i]) as f64 / (m - 1).max(1) as f64;
            u8::from(mean >= threshold - 1e-12)
        })
        .collect())
}

/// Per-sample labels from windows ending at each sample; the first `K − 1`
/// samples take the first window's label.
pub fn predict_stream(model: &SvmModel, stream: &ImuStream) -> Result<Vec<u8>> {
    let norm = model.norm_stats()?;
    let windows = build_windows(stream, model.k, 1, Some(&norm))?;
    let predictor = model.predictor();
    let labels: Vec<u8> = windows
        .par_iter()
        .map(|w| predictor.predict(w))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(stream.len());
    out.extend(std::iter::repeat_n(labels[0], model.k - 1));
    out.extend(labels);
    Ok(out)
}

/// Maps labels of a two-class model to `0` (smaller class) and `1`.
pub fn binarize(labels: &[u8], classes: &[u8]) -> Result<Vec<u8>> {
    let [lo, hi] = classes else {
        return invalid(format!(
            "binary labels need a two-class model, got classes {classes:?}"
        ));
    };
    labels
        .iter()
        .map(|&l| match l {
            l if l == *lo => Ok(0),
            l if l == *hi => Ok(1),
            other => invalid(format!("label {other} is not one of {classes:?}")),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Raw counts, rows = truth, columns = prediction.
    pub counts: [[usize; 6]; 6],
    /// Row-normalized rates; rows of absent classes are zero.
    pub rates: [[f64; 6]; 6],
    /// Mean of the diagonal over classes present in the truth.
    pub mean_accuracy: f64,
}

pub fn confusion_matrix(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return invalid("prediction and truth lengths differ");
    }
    if pred.iter().chain(truth).any(|&l| l > 5) {
        return invalid("labels must be in 0..=5");
    }
    let mut counts = [[0usize; 6]; 6];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[t as usize][p as usize] += 1;
    }
    let mut rates = [[0.0; 6]; 6];
    let mut diag = Vec::new();
    for r in 0..6 {
        let total: usize = counts[r].iter().sum();
        if total > 0 {
            for c in 0..6 {
                rates[r][c] = counts[r][c] as f64 / total as f64;
            }
            diag.push(rates[r][r]);
        }
    }
    let mean_accuracy = if diag.is_empty() {
        0.0
    } else {
        diag.iter().sum::<f64>() / diag.len() as f64
    };
    Ok(ConfusionMatrix {
        counts,
        rates,
        mean_accuracy,
    })
}

/// Labelled windows from one trial, after trimming `trim` samples from both
/// ends.
pub fn trial_windows(
    stream: &ImuStream,
    label: u8,
    k: usize,
    stride: usize,
    trim: usize,
    norm: &NormStats,
) -> Result<Vec<LabeledWindow>> {
    if stream.len() < 2 * trim + k {
        return invalid(format!(
            "trial of {} samples is too short for trim {trim} and window {k}",
            stream.len()
        ));
    }
    let trimmed = stream.slice(trim..stream.len() - trim);
    Ok(build_windows(&trimmed, k, stride, Some(norm))?
        .into_iter()
        .map(|window| LabeledWindow { window, label })
        .collect())
}

/// Splits a trial into a training first half and a test second half; no
/// window straddles the split.
pub fn split_trial(stream: &ImuStream, trim: usize) -> Result<(ImuStream, ImuStream)> {
    if stream.len() < 2 * trim + 2 {
        return invalid("trial too short to split");
    }
    let inner = stream.slice(trim..stream.len() - trim);
    let mid = inner.len() / 2;
    Ok((inner.slice(0..mid), inner.slice(mid..inner.len())))
}

/// How labelled trials are cut into training and test windows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSplit {
    pub k: usize,
    pub trim: usize,
    /// Windows per class in each of the training and test sets.
    pub windows_per_class: usize,
}

impl Default for TrialSplit {
    fn default() -> Self {
        Self {
            k: DEFAULT_WINDOW,
            trim: DEFAULT_TRIM,
            windows_per_class: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    pub model: SvmModel,
    pub report: TrainReport,
    /// Window-level results on the held-out second halves.
    pub test: ConfusionMatrix,
}

/// Evenly spaced windows from `halves`, `per_class` in total.
fn spread_windows(
    halves: &[&ImuStream],
    label: u8,
    per_class: usize,
    k: usize,
    norm: &NormStats,
) -> Result<Vec<LabeledWindow>> {
    let per_trial = per_class.div_ceil(halves.len());
    let mut out = Vec::with_capacity(per_class);
    for half in halves {
        if half.len() < k {
            return invalid(format!(
                "trial half of {} samples is shorter than the window {k}",
                half.len()
            ));
        }
        let stride = ((half.len() - k) / per_trial).max(1);
        out.extend(
            trial_windows(half, label, k, stride, 0, norm)?
                .into_iter()
                .take(per_trial),
        );
    }
    out.truncate(per_class);
    Ok(out)
}

/// Trains on the first half of every trial and tests on the second half.
/// Normalization statistics come from the training halves only.
pub fn fit_trials(
    trials: &[(u8, ImuStream)],
    split: &TrialSplit,
    params: &SvmParams,
) -> Result<FittedModel> {
    let halves: Vec<(u8, ImuStream, ImuStream)> = trials
        .iter()
        .map(|(label, stream)| split_trial(stream, split.trim).map(|(a, b)| (*label, a, b)))
        .collect::<Result<_>>()?;
    let norm = NormStats::from_streams(halves.iter().map(|h| &h.1))?;
    let mut classes: Vec<u8> = halves.iter().map(|h| h.0).collect();
    classes.sort_unstable();
    classes.dedup();
    let (mut train_set, mut test_set) = (Vec::new(), Vec::new());
    for &class in &classes {
        let first: Vec<&ImuStream> = halves
            .iter()
            .filter(|h| h.0 == class)
            .map(|h| &h.1)
            .collect();
        let second: Vec<&ImuStream> = halves
            .iter()
            .filter(|h| h.0 == class)
            .map(|h| &h.2)
            .collect();
        train_set.extend(spread_windows(
            &first,
            class,
            split.windows_per_class,
            split.k,
            &norm,
        )?);
        test_set.extend(spread_windows(
            &second,
            class,
            split.windows_per_class,
            split.k,
            &norm,
        )?);
    }
    let (model, report) = train(&train_set, params, norm)?;
    let windows: Vec<FeatureWindow> = test_set.iter().map(|d| d.window.clone()).collect();
    let pred = model.predictor().predict_all(&windows)?;
    let truth: Vec<u8> = test_set.iter().map(|d| d.label).collect();
    let test = confusion_matrix(&pred, &truth)?;
    Ok(FittedModel {
        model,
        report,
        test,
    })
}
