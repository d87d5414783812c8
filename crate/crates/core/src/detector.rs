//! SHOE (stance hypothesis optimal) zero-velocity detection.
//!
//! For a window of `W` samples starting at `n`,
//!
//! ```text
//! T_n = 1/W Σ_{k=n}^{n+W-1} ( |a_k - g ā/|ā||² / σ_a² + |ω_k|² / σ_ω² )
//! ```
//!
//! with `ā` the window mean of the specific force. Sample `n` is flagged
//! stationary when `T_n < γ`. The last `W - 1` samples have no complete
//! window of their own and reuse the statistic of the last complete one.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{ImuSample, ImuStream, Vec3, STANDARD_GRAVITY};

/// Window and noise weights of the SHOE statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShoeParams {
    /// Window length, samples.
    pub window: usize,
    /// Specific-force weight, m/s².
    pub sigma_a: f64,
    /// Angular-rate weight, rad/s.
    pub sigma_w: f64,
    /// Gravity magnitude, m/s².
    pub gravity: f64,
}

impl Default for ShoeParams {
    fn default() -> Self {
        Self {
            window: 5,
            sigma_a: 0.01,
            sigma_w: 0.00174,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl ShoeParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return invalid(format!(
                "SHOE window must be at least 2 samples, got {}",
                self.window
            ));
        }
        for (name, v) in [
            ("sigma_a", self.sigma_a),
            ("sigma_w", self.sigma_w),
            ("gravity", self.gravity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn with_gamma(self, gamma: f64) -> DetectorParams {
        DetectorParams { shoe: self, gamma }
    }
}

/// SHOE parameters plus a fixed threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub shoe: ShoeParams,
    pub gamma: f64,
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        self.shoe.validate()?;
        validate_gamma(self.gamma)
    }
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        invalid(format!("threshold must be positive, got {gamma}"))
    }
}

/// Thresholds per motion class: 0 = walk, 1 = run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub gamma_walk: f64,
    pub gamma_run: f64,
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma_walk)?;
        validate_gamma(self.gamma_run)?;
        if self.gamma_walk >= self.gamma_run {
            warn!(
                "walking threshold {} is not below running threshold {}",
                self.gamma_walk, self.gamma_run
            );
        }
        Ok(())
    }

    pub fn gamma_for(&self, label: u8) -> Result<f64> {
        match label {
            0 => Ok(self.gamma_walk),
            1 => Ok(self.gamma_run),
            other => invalid(format!("motion label must be 0 or 1, got {other}")),
        }
    }
}

/// Statistic of one window. A window whose mean specific force is exactly
/// zero (free fall) has no gravity direction and scores `+∞`.
pub fn shoe_statistic(window: &[ImuSample], params: &ShoeParams) -> Result<f64> {
    params.validate()?;
    if window.len() != params.window {
        return invalid(format!(
            "window has {} samples, expected {}",
            window.len(),
            params.window
        ));
    }
    Ok(window_statistic(window, params))
}

fn window_statistic(window: &[ImuSample], params: &ShoeParams) -> f64 {
    let mean = window.iter().map(|s| s.accel).sum::<Vec3>() / window.len() as f64;
    let norm = mean.norm();
    if norm == 0.0 {
        return f64::INFINITY;
    }
    let g_dir = mean * (params.gravity / norm);
    let inv_a = 1.0 / (params.sigma_a * params.sigma_a);
    let inv_w = 1.0 / (params.sigma_w * params.sigma_w);
    let sum: f64 = window
        .iter()
        .map(|s| (s.accel - g_dir).norm_squared() * inv_a + s.gyro.norm_squared() * inv_w)
        .sum();
    sum / window.len() as f64
}

/// Per-sample statistic, one value per stream sample.
pub fn shoe_statistics(stream: &ImuStream, params: &ShoeParams) -> Result<Vec<f64>> {
    params.validate()?;
    let w = params.window;
    if stream.len() < w {
        return invalid(format!(
            "stream has {} samples, fewer than the window {}",
            stream.len(),
            w
        ));
    }
    let mut stats: Vec<f64> = stream
        .samples()
        .windows(w)
        .map(|win| window_statistic(win, params))
        .collect();
    let last = *stats.last().expect("at least one window");
    stats.resize(stream.len(), last);
    Ok(stats)
}

pub fn threshold(stats: &[f64], gamma: f64) -> Vec<bool> {
    stats.iter().map(|&t| t < gamma).collect()
}

/// Fixed-threshold detection.
pub fn detect(stream: &ImuStream, params: &DetectorParams) -> Result<Vec<bool>> {
    validate_gamma(params.gamma)?;
    let stats = shoe_statistics(stream, &params.shoe)?;
    Ok(threshold(&stats, params.gamma))
}

/// Detection with the threshold chosen per sample from the smoothed motion
/// label (0 = walk, 1 = run).
pub fn detect_adaptive(
    stream: &ImuStream,
    motion: &[u8],
    params: &ShoeParams,
    adaptive: &AdaptiveParams,
) -> Result<Vec<bool>> {
    if motion.len() != stream.len() {
        return invalid(format!(
            "motion labels ({}) and IMU samples ({}) differ in length",
            motion.len(),
            stream.len()
        ));
    }
    let stats = shoe_statistics(stream, params)?;
    threshold_adaptive(&stats, motion, adaptive)
}

/// Per-sample thresholding of precomputed statistics by motion label.
pub fn threshold_adaptive(
    stats: &[f64],
    motion: &[u8],
    adaptive: &AdaptiveParams,
) -> Result<Vec<bool>> {
    if motion.len() != stats.len() {
        return invalid("motion labels and statistics differ in length");
    }
    adaptive.validate()?;
    let gammas = motion
        .iter()
        .map(|&m| adaptive.gamma_for(m))
        .collect::<Result<Vec<_>>>()?;
    Ok(stats.iter().zip(&gammas).map(|(t, g)| t < g).collect())
}
