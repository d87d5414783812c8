//! Raw inertial windows as classifier inputs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{ImuSample, ImuStream};

/// Accelerometer x/y/z then gyro x/y/z.
pub const CHANNELS: usize = 6;

/// One second of data at the nominal rate.
pub const DEFAULT_WINDOW: usize = 125;

fn channels(s: &ImuSample) -> [f64; CHANNELS] {
    [
        s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z,
    ]
}

/// Per-channel z-score statistics from training data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: [f64; CHANNELS],
    pub std: [f64; CHANNELS],
}

impl NormStats {
    pub fn new(mean: [f64; CHANNELS], std: [f64; CHANNELS]) -> Result<Self> {
        if mean.iter().any(|m| !m.is_finite()) || std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return invalid("normalization needs finite means and positive standard deviations");
        }
        Ok(Self { mean, std })
    }

    /// Population statistics over all samples of all streams.
    pub fn from_streams<'a>(streams: impl IntoIterator<Item = &'a ImuStream>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum = [0.0; CHANNELS];
        let all: Vec<&ImuStream> = streams.into_iter().collect();
        for s in &all {
            for sample in s.samples() {
                for (acc, v) in sum.iter_mut().zip(channels(sample)) {
                    *acc += v;
                }
                n += 1;
            }
        }
        if n == 0 {
            return invalid("no samples to compute normalization from");
        }
        let mean = sum.map(|v| v / n as f64);
        let mut var = [0.0; CHANNELS];
        for s in &all {
            for sample in s.samples() {
                for ((acc, v), m) in var.iter_mut().zip(channels(sample)).zip(mean) {
                    *acc += (v - m) * (v - m);
                }
            }
        }
        Self::new(mean, var.map(|v| (v / n as f64).sqrt()))
    }

    fn apply(&self, raw: [f64; CHANNELS]) -> [f64; CHANNELS] {
        let mut out = raw;
        for c in 0..CHANNELS {
            out[c] = (raw[c] - self.mean[c]) / self.std[c];
        }
        out
    }
}

/// Flattened window `[a_k, ω_k, a_{k+1}, ω_{k+1}, …]` of `6 K` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub values: Vec<f64>,
    /// Index of the first sample of the window in its source stream.
    pub offset: usize,
}

impl FeatureWindow {
    pub fn window_len(&self) -> usize {
        self.values.len() / CHANNELS
    }
}

/// Windows of `k` samples starting at `0, stride, 2·stride, …`.
pub fn build_windows(
    stream: &ImuStream,
    k: usize,
    stride: usize,
    norm: Option<&NormStats>,
) -> Result<Vec<FeatureWindow>> {
    if k == 0 || stride == 0 {
        return invalid("window length and stride must be at least 1");
    }
    if stream.len() < k {
        return invalid(format!(
            "stream has {} samples, shorter than the window length {k}",
            stream.len()
        ));
    }
    let samples = stream.samples();
    let rows: Vec<[f64; CHANNELS]> = samples
        .iter()
        .map(|s| match norm {
            Some(n) => n.apply(channels(s)),
            None => channels(s),
        })
        .collect();
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("stream contains non-finite values");
    }
    Ok((0..=stream.len() - k)
        .step_by(stride)
        .map(|offset| FeatureWindow {
            values: rows[offset..offset + k].iter().flatten().copied().collect(),
            offset,
        })
        .collect())
}
