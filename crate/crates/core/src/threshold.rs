//! Zero-velocity ground truth from motion capture and F-β-optimal
//! selection of the detector threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{shoe_statistics, ShoeParams};
use crate::error::{invalid, Error, Result};
use crate::types::{ImuStream, Vec3, ZvLabel, ZvLabelStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MocapSample {
    pub t: f64,
    pub pos: Vec3,
}

/// Tracked foot positions, meters.
#[derive(Clone, Debug, PartialEq)]
pub struct MocapStream {
    samples: Vec<MocapSample>,
    rate_hz: f64,
}

impl MocapStream {
    pub fn new(samples: Vec<MocapSample>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return invalid(format!("capture rate must be positive, got {rate_hz}"));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return invalid(format!(
                "mocap timestamps not strictly increasing at sample {}",
                i + 1
            ));
        }
        if samples
            .iter()
            .any(|s| !s.t.is_finite() || !s.pos.iter().all(|c| c.is_finite()))
        {
            return invalid("mocap stream has non-finite values");
        }
        Ok(Self { samples, rate_hz })
    }

    /// Builds a stream and estimates its rate from the median interval.
    pub fn from_samples(samples: Vec<MocapSample>) -> Result<Self> {
        if samples.len() < 2 {
            return invalid("need at least two mocap samples to infer the rate");
        }
        let mut steps: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
        steps.sort_by(f64::total_cmp);
        let median = steps[steps.len() / 2];
        if median <= 0.0 {
            return invalid("mocap timestamps not strictly increasing");
        }
        Self::new(samples, 1.0 / median)
    }

    pub fn samples(&self) -> &[MocapSample] {
        &self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Walk,
    Run,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FBetaConfig {
    /// β², the weight of recall relative to precision.
    pub beta_sq: f64,
    /// Foot speed below which mocap samples count as stationary, m/s.
    pub speed_threshold: f64,
    /// Candidate thresholds, strictly increasing.
    pub gamma_grid: Vec<f64>,
}

pub const DEFAULT_GRID_POINTS: usize = 300;
pub const DEFAULT_GRID_MIN: f64 = 1e2;
pub const DEFAULT_GRID_MAX: f64 = 1e8;

impl FBetaConfig {
    pub fn for_motion(kind: MotionKind) -> Self {
        let (beta_sq, speed_threshold) = match kind {
            MotionKind::Walk => (0.16, 0.1),
            MotionKind::Run => (0.4, 0.25),
        };
        Self {
            beta_sq,
            speed_threshold,
            gamma_grid: log_grid(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_POINTS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_sq.is_finite() && self.beta_sq > 0.0) {
            return invalid("beta² must be positive");
        }
        if !(self.speed_threshold.is_finite() && self.speed_threshold > 0.0) {
            return invalid("speed threshold must be positive");
        }
        if self.gamma_grid.is_empty() {
            return invalid("threshold grid is empty");
        }
        if self.gamma_grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return invalid("threshold grid must contain positive values");
        }
        if self.gamma_grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("threshold grid must be strictly increasing");
        }
        Ok(())
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub gamma: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

/// Labels mocap samples stationary when the central-difference foot speed
/// is below `speed_threshold`. The end samples use one-sided differences.
pub fn label_zero_velocity(mocap: &MocapStream, speed_threshold: f64) -> Result<ZvLabelStream> {
    let s = mocap.samples();
    if s.len() < 3 {
        return invalid(format!("need at least 3 mocap samples, got {}", s.len()));
    }
    if !(speed_threshold.is_finite() && speed_threshold > 0.0) {
        return invalid("speed threshold must be positive");
    }
    let n = s.len();
    let speed = |a: &MocapSample, b: &MocapSample| -> Result<f64> {
        let dt = b.t - a.t;
        if dt <= 0.0 {
            return invalid(format!("duplicate mocap timestamp at t = {}", a.t));
        }
        Ok((b.pos - a.pos).norm() / dt)
    };
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let v = match i {
            0 => speed(&s[0], &s[1])?,
            i if i == n - 1 => speed(&s[n - 2], &s[n - 1])?,
            i => speed(&s[i - 1], &s[i + 1])?,
        };
        labels.push(ZvLabel {
            t: s[i].t,
            stationary: v < speed_threshold,
        });
    }
    ZvLabelStream::new(labels)
}

/// Nearest-in-time ground-truth label for each IMU sample. Samples outside
/// the label stream's time span are `None` and excluded from scoring.
pub fn align_labels(labels: &ZvLabelStream, imu: &ImuStream) -> Result<Vec<Option<bool>>> {
    let l = labels.labels();
    let (Some(first), Some(last)) = (l.first(), l.last()) else {
        return invalid("label stream is empty");
    };
    let aligned: Vec<Option<bool>> = imu
        .timestamps()
        .map(|t| {
            if t < first.t || t > last.t {
                return None;
            }
            let idx = l.partition_point(|x| x.t < t);
            let best = if idx == 0 {
                0
            } else if idx == l.len() {
                l.len() - 1
            } else if (l[idx].t - t) < (t - l[idx - 1].t) {
                idx
            } else {
                idx - 1
            };
            Some(l[best].stationary)
        })
        .collect();
    if aligned.iter().all(Option::is_none) {
        return invalid("IMU and ground-truth time ranges do not overlap");
    }
    Ok(aligned)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Counts {
    pub fn tally<'a>(pairs: impl IntoIterator<Item = (bool, bool)> + 'a) -> Self {
        let mut c = Counts::default();
        for (pred, truth) in pairs {
            match (pred, truth) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> Result<f64> {
        if self.tp + self.fn_ == 0 {
            return Err(Error::UndefinedRecall);
        }
        Ok(self.tp as f64 / (self.tp + self.fn_) as f64)
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.fn_ + self.tn;
        if n == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / n as f64
    }
}

/// Precision and recall with "stationary" as the positive class.
pub fn precision_recall(pred: &[bool], truth: &[bool]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return invalid(format!(
            "prediction ({}) and truth ({}) lengths differ",
            pred.len(),
            truth.len()
        ));
    }
    let c = Counts::tally(pred.iter().copied().zip(truth.iter().copied()));
    Ok((c.precision(), c.recall()?))
}

pub fn f_beta(precision: f64, recall: f64, beta_sq: f64) -> f64 {
    let denom = beta_sq * precision + recall;
    if denom == 0.0 {
        return 0.0;
    }
    (1.0 + beta_sq) * precision * recall / denom
}

/// Scores every grid threshold against the (possibly partial) truth.
pub fn pr_curve(stats: &[f64], truth: &[Option<bool>], cfg: &FBetaConfig) -> Result<PrCurve> {
    cfg.validate()?;
    if stats.len() != truth.len() {
        return invalid("statistics and truth lengths differ");
    }
    let known: Vec<(f64, bool)> = stats
        .iter()
        .zip(truth)
        .filter_map(|(&s, t)| t.map(|t| (s, t)))
        .collect();
    if !known.iter().any(|&(_, t)| t) {
        return Err(Error::UndefinedRecall);
    }
    let points = cfg
        .gamma_grid
        .par_iter()
        .map(|&gamma| {
            let c = Counts::tally(known.iter().map(|&(s, t)| (s < gamma, t)));
            let precision = c.precision();
            let recall = c.recall().expect("truth has positives");
            PrPoint {
                gamma,
                precision,
                recall,
                f_beta: f_beta(precision, recall, cfg.beta_sq),
            }
        })
        .collect();
    Ok(PrCurve { points })
}

/// Grid point with maximal F-β; ties go to the smallest threshold.
pub fn best_point(curve: &PrCurve) -> Result<PrPoint> {
    let mut best: Option<PrPoint> = None;
    for p in &curve.points {
        if best.is_none_or(|b| p.f_beta > b.f_beta) {
            best = Some(*p);
        }
    }
    match best {
        Some(b) if b.f_beta > 0.0 => Ok(b),
        _ => Err(Error::OptimizationFailed),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaOptimum {
    pub gamma: f64,
    pub f_beta: f64,
    pub curve: PrCurve,
}

/// Sweeps the threshold over `cfg.gamma_grid` and returns the F-β-optimal one.
pub fn optimize_gamma(
    imu: &ImuStream,
    mocap: &MocapStream,
    shoe: &ShoeParams,
    cfg: &FBetaConfig,
) -> Result<GammaOptimum> {
    cfg.validate()?;
    let labels = label_zero_velocity(mocap, cfg.speed_threshold)?;
    let truth = align_labels(&labels, imu)?;
    let stats = shoe_statistics(imu, shoe)?;
    optimize_from_statistics(&stats, &truth, cfg)
}

pub fn optimize_from_statistics(
    stats: &[f64],
    truth: &[Option<bool>],
    cfg: &FBetaConfig,
) -> Result<GammaOptimum> {
    let curve = pr_curve(stats, truth, cfg)?;
    let best = best_point(&curve)?;
    Ok(GammaOptimum {
        gamma: best.gamma,
        f_beta: best.f_beta,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ImuSample;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mocap(positions: impl IntoIterator<Item = (f64, Vec3)>) -> MocapStream {
        MocapStream::new(
            positions
                .into_iter()
                .map(|(t, pos)| MocapSample { t, pos })
                .collect(),
            100.0,
        )
        .unwrap()
    }

    fn imu_grid(n: usize, rate: f64, t0: f64) -> ImuStream {
        let samples = (0..n)
            .map(|k| ImuSample::new(t0 + k as f64 / rate, Vec3::zeros(), Vec3::zeros()))
            .collect();
        ImuStream::new(samples, rate).unwrap()
    }

    #[test]
    fn constant_position_is_all_stationary() {
        let m = mocap((0..20).map(|i| (i as f64 * 0.01, Vec3::new(1.0, 2.0, 0.0))));
        let labels = label_zero_velocity(&m, 0.1).unwrap();
        assert!(labels.labels().iter().all(|l| l.stationary));
    }

    #[test]
    fn constant_speed_is_all_moving() {
        let m = mocap((0..20).map(|i| (i as f64 * 0.01, Vec3::new(i as f64 * 0.01, 0.0, 0.0))));
        let labels = label_zero_velocity(&m, 0.1).unwrap();
        assert!(labels.labels().iter().all(|l| !l.stationary));
    }

    #[test]
    fn too_few_mocap_samples() {
        let m = mocap((0..2).map(|i| (i as f64 * 0.01, Vec3::zeros())));
        assert!(label_zero_velocity(&m, 0.1).is_err());
    }

    #[test]
    fn duplicate_mocap_timestamps_are_rejected() {
        let s = vec![
            MocapSample {
                t: 0.0,
                pos: Vec3::zeros(),
            },
            MocapSample {
                t: 0.0,
                pos: Vec3::zeros(),
            },
        ];
        assert!(matches!(
            MocapStream::new(s, 100.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn identical_grids_align_one_to_one() {
        let labels = ZvLabelStream::new(
            (0..50)
                .map(|k| ZvLabel {
                    t: k as f64 / 125.0,
                    stationary: k % 3 == 0,
                })
                .collect(),
        )
        .unwrap();
        let aligned = align_labels(&labels, &imu_grid(50, 125.0, 0.0)).unwrap();
        for (k, a) in aligned.iter().enumerate() {
            assert_eq!(*a, Some(k % 3 == 0));
        }
    }

    #[test]
    fn constant_labels_survive_rate_change() {
        let labels = ZvLabelStream::new(
            (0..100)
                .map(|k| ZvLabel {
                    t: k as f64 / 100.0,
                    stationary: true,
                })
                .collect(),
        )
        .unwrap();
        let aligned = align_labels(&labels, &imu_grid(120, 125.0, 0.0)).unwrap();
        assert!(aligned.iter().all(|a| *a == Some(true)));
    }

    #[test]
    fn alternating_labels_use_nearest_neighbour() {
        let labels = ZvLabelStream::new(
            (0..100)
                .map(|k| ZvLabel {
                    t: k as f64 / 100.0 + 0.003,
                    stationary: k % 2 == 0,
                })
                .collect(),
        )
        .unwrap();
        let imu = imu_grid(125, 125.0, 0.0);
        let aligned = align_labels(&labels, &imu).unwrap();
        for (k, t) in imu.timestamps().enumerate() {
            // exhaustive search, independent of the bisection in align_labels
            let inside = t >= labels.labels()[0].t && t <= labels.labels()[99].t;
            if !inside {
                assert_eq!(aligned[k], None);
                continue;
            }
            let mut best = 0;
            for (j, l) in labels.labels().iter().enumerate() {
                if (l.t - t).abs() < (labels.labels()[best].t - t).abs() {
                    best = j;
                }
            }
            assert_eq!(
                aligned[k],
                Some(labels.labels()[best].stationary),
                "sample {k}"
            );
        }
    }

    #[test]
    fn disjoint_time_ranges_are_rejected() {
        let labels = ZvLabelStream::new(vec![ZvLabel {
            t: 100.0,
            stationary: true,
        }])
        .unwrap();
        assert!(align_labels(&labels, &imu_grid(10, 125.0, 0.0)).is_err());
    }

    #[test]
    fn perfect_prediction() {
        let truth = [true, false, true, true, false];
        assert_eq!(precision_recall(&truth, &truth).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn all_true_prediction() {
        let truth: Vec<bool> = (0..10).map(|i| i < 4).collect();
        let (p, r) = precision_recall(&[true; 10], &truth).unwrap();
        assert_relative_eq!(p, 0.4);
        assert_eq!(r, 1.0);
    }

    #[test]
    fn empty_prediction_has_unit_precision() {
        let truth = [true, false, false];
        assert_eq!(precision_recall(&[false; 3], &truth).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn recall_needs_positives() {
        assert!(matches!(
            precision_recall(&[true, false], &[false, false]),
            Err(Error::UndefinedRecall)
        ));
        assert!(precision_recall(&[true], &[true, false]).is_err());
    }

    #[test]
    fn f_beta_hand_values() {
        assert_eq!(f_beta(1.0, 1.0, 0.16), 1.0);
        assert_eq!(f_beta(0.0, 0.0, 0.4), 0.0);
        assert_relative_eq!(f_beta(0.3, 0.3, 0.16), 0.3, epsilon = 1e-15);
        assert!((f_beta(0.8, 0.6, 0.16) - 0.5568 / 0.728).abs() < 1e-12);
        assert!((f_beta(0.8, 0.6, 0.16) - 0.764_835).abs() < 1e-6);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(1e2, 1e8, 300);
        assert_eq!(g.len(), 300);
        assert_relative_eq!(g[0], 1e2, max_relative = 1e-12);
        assert_relative_eq!(g[299], 1e8, max_relative = 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let cfg = FBetaConfig {
            beta_sq: 0.16,
            speed_threshold: 0.1,
            gamma_grid: vec![50.0],
        };
        let stats = [10.0, 100.0, 10.0];
        let truth = [Some(true), Some(false), Some(true)];
        let opt = optimize_from_statistics(&stats, &truth, &cfg).unwrap();
        assert_eq!(opt.gamma, 50.0);
        assert_eq!(opt.f_beta, 1.0);
    }

    #[test]
    fn ties_resolve_to_smallest_threshold() {
        let cfg = FBetaConfig {
            beta_sq: 0.16,
            speed_threshold: 0.1,
            gamma_grid: vec![20.0, 30.0, 40.0, 200.0],
        };
        let stats = [10.0, 100.0, 10.0];
        let truth = [Some(true), Some(false), Some(true)];
        assert_eq!(
            optimize_from_statistics(&stats, &truth, &cfg)
                .unwrap()
                .gamma,
            20.0
        );
    }

    #[test]
    fn zero_score_everywhere_fails() {
        let cfg = FBetaConfig {
            beta_sq: 0.16,
            speed_threshold: 0.1,
            gamma_grid: vec![1.0, 2.0],
        };
        let stats = [10.0, 10.0];
        let truth = [Some(true), Some(false)];
        assert!(matches!(
            optimize_from_statistics(&stats, &truth, &cfg),
            Err(Error::OptimizationFailed)
        ));
    }

    #[test]
    fn unknown_samples_are_not_scored() {
        let cfg = FBetaConfig {
            beta_sq: 1.0,
            speed_threshold: 0.1,
            gamma_grid: vec![50.0],
        };
        let stats = [10.0, 10.0, 100.0];
        let truth = [Some(true), None, Some(false)];
        let curve = pr_curve(&stats, &truth, &cfg).unwrap();
        assert_eq!(curve.points[0].precision, 1.0);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut cfg = FBetaConfig::for_motion(MotionKind::Walk);
        assert_eq!((cfg.beta_sq, cfg.speed_threshold), (0.16, 0.1));
        cfg.gamma_grid = vec![2.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.gamma_grid = vec![];
        assert!(cfg.validate().is_err());
        let run = FBetaConfig::for_motion(MotionKind::Run);
        assert_eq!((run.beta_sq, run.speed_threshold), (0.4, 0.25));
    }

    proptest! {
        #[test]
        fn curve_is_bounded_and_recall_monotone(
            data in prop::collection::vec((0.0..1e6f64, any::<bool>()), 2..200),
        ) {
            prop_assume!(data.iter().any(|d| d.1));
            let stats: Vec<f64> = data.iter().map(|d| d.0).collect();
            let truth: Vec<Option<bool>> = data.iter().map(|d| Some(d.1)).collect();
            let cfg = FBetaConfig { beta_sq: 0.4, speed_threshold: 0.1, gamma_grid: log_grid(1.0, 1e6, 40) };
            let curve = pr_curve(&stats, &truth, &cfg).unwrap();
            for p in &curve.points {
                prop_assert!((0.0..=1.0).contains(&p.precision));
                prop_assert!((0.0..=1.0).contains(&p.recall));
                prop_assert!((0.0..=1.0).contains(&p.f_beta));
            }
            prop_assert!(curve.points.windows(2).all(|w| w[1].recall >= w[0].recall));
        }

        #[test]
        fn f_beta_equals_common_value(x in 0.0..=1.0f64, beta_sq in 0.01..10.0f64) {
            prop_assert!((f_beta(x, x, beta_sq) - x).abs() < 1e-12);
        }
    }
}
