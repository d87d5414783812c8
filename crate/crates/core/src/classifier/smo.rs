//! Sequential minimal optimization for the C-SVM dual, with second-order
//! working-set selection.
//!
//! Solves `min ½ αᵀQα − Σα` subject to `0 ≤ α ≤ C` and `yᵀα = 0`, where
//! `Q_ij = y_i y_j K_ij`.

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Offset `b` of the decision function `Σ α_i y_i K(x_i, x) + b`.
    pub bias: f64,
    /// Maximal KKT violation at termination.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoConfig {
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
        }
    }
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Largest violation `max_{I_up} −y G − min_{I_low} −y G`.
pub fn kkt_violation(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) {
            up = up.max(v);
        }
        if in_low(alpha[t], y[t], c) {
            low = low.min(v);
        }
    }
    if up.is_finite() && low.is_finite() {
        up - low
    } else {
        0.0
    }
}

/// `kernel(i, j)` must be symmetric; labels are ±1.
pub fn solve(
    n: usize,
    kernel: impl Fn(usize, usize) -> f64,
    y: &[f64],
    cfg: &SmoConfig,
) -> Result<SmoSolution> {
    if y.len() != n || n < 2 {
        return Err(Error::TrainingFailed(format!(
            "need at least two labelled samples, got {n}"
        )));
    }
    if !(y.iter().any(|v| *v > 0.0) && y.iter().any(|v| *v < 0.0)) {
        return Err(Error::TrainingFailed("both classes must be present".into()));
    }
    let c = cfg.c;
    let diag: Vec<f64> = (0..n).map(|i| kernel(i, i)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;

    loop {
        // first index: maximal violation
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t], c) {
                let v = -y[t] * grad[t];
                if v > g_max {
                    g_max = v;
                    i = t;
                }
            }
        }
        // second index: largest objective decrease
        let mut g_min = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            for t in 0..n {
                if !in_low(alpha[t], y[t], c) {
                    continue;
                }
                let v = -y[t] * grad[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let a = diag[i] + diag[t] - 2.0 * kernel(i, t);
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(b * b) / a;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < cfg.tolerance {
            break;
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::TrainingFailed(format!(
                "no convergence after {iterations} iterations (violation {:.3e})",
                g_max - g_min
            )));
        }
        iterations += 1;

        let quad = (diag[i] + diag[j] - 2.0 * kernel(i, j)).max(TAU);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kernel(t, i) * di + y[j] * kernel(t, j) * dj);
        }
    }

    let kkt_residual = kkt_violation(&alpha, y, &grad, c);
    Ok(SmoSolution {
        bias: -rho(&alpha, y, &grad, c),
        alpha,
        kkt_residual,
        iterations,
    })
}

/// Decision offset: mean of `y G` over free vectors, or the midpoint of the
/// feasible interval when every vector is at a bound.
fn rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
