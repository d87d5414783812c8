//! Trial scoring against surveyed markers.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    binarize, predict_stream, smooth, SvmModel, DEFAULT_SMOOTHING_THRESHOLD,
    DEFAULT_SMOOTHING_WINDOW,
};
use crate::detector::{shoe_statistics, threshold, threshold_adaptive, AdaptiveParams, ShoeParams};
use crate::ekf::{run_ins, EkfConfig, Trajectory};
use crate::error::{invalid, Result};
use crate::sim::{simulate, GaitPlan, GaitProfile, MotionClass, NoiseModel, Simulation};
use crate::survey::MarkerMap;
use crate::types::{ImuStream, Quaternion, Vec3, DEFAULT_RATE_HZ};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub t: f64,
    pub marker_id: u32,
}

/// Times at which the subject stood on a marker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerLog {
    events: Vec<TriggerEvent>,
}

impl TriggerLog {
    pub fn new(events: Vec<TriggerEvent>) -> Result<Self> {
        if events.iter().any(|e| !e.t.is_finite()) {
            return invalid("trigger times must be finite");
        }
        if events.windows(2).any(|w| w[1].t <= w[0].t) {
            return invalid("trigger times must be strictly increasing");
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[TriggerEvent] {
        &self.events
    }

    /// Checks that every trigger names a marker in the map.
    pub fn validate_against(&self, map: &MarkerMap) -> Result<()> {
        for e in &self.events {
            if map.position(e.marker_id).is_none() {
                return invalid(format!(
                    "trigger at t = {} names unknown marker {}",
                    e.t, e.marker_id
                ));
            }
        }
        Ok(())
    }
}

/// Yaw-plus-translation registration in the horizontal plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarAlignment {
    pub yaw: f64,
    /// Applied as `p ↦ R(yaw) (p − anchor) + target`.
    pub anchor: Vec3,
    pub target: Vec3,
}

impl PlanarAlignment {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        let d = p - self.anchor;
        Vec3::new(
            c * d.x - s * d.y + self.target.x,
            s * d.x + c * d.y + self.target.y,
            p.z,
        )
    }
}

fn trajectory_position(traj: &Trajectory, t: f64) -> Result<Vec3> {
    traj.position_at(t)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("trajectory does not cover t = {t}")))
}

/// Registers the trajectory to the map from the first two triggers: the
/// first trigger position lands exactly on its marker and the direction to
/// the second matches the surveyed direction.
pub fn align_trajectory(
    traj: &Trajectory,
    triggers: &TriggerLog,
    map: &MarkerMap,
) -> Result<(Trajectory, PlanarAlignment)> {
    let ev = triggers.events();
    if ev.len() < 2 {
        return invalid(format!(
            "alignment needs at least 2 triggers, got {}",
            ev.len()
        ));
    }
    triggers.validate_against(map)?;
    let p1 = trajectory_position(traj, ev[0].t)?;
    let p2 = trajectory_position(traj, ev[1].t)?;
    let m1 = map.position(ev[0].marker_id).expect("validated");
    let m2 = map.position(ev[1].marker_id).expect("validated");
    let (dp, dm) = ((p2 - p1).xy(), (m2 - m1).xy());
    if dp.norm() < 1e-9 || dm.norm() < 1e-9 {
        return invalid("first two triggers do not define a direction");
    }
    let yaw = dm.y.atan2(dm.x) - dp.y.atan2(dp.x);
    let alignment = PlanarAlignment {
        yaw,
        anchor: p1,
        target: Vec3::new(m1.x, m1.y, 0.0),
    };
    let turn = Quaternion::from_euler(0.0, 0.0, yaw);
    let mut out = traj.clone();
    for pt in &mut out.points {
        pt.state.p = alignment.apply(&pt.state.p);
        pt.state.v = turn.rotate(&pt.state.v);
        pt.state.q = turn * pt.state.q;
    }
    Ok((out, alignment))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerError {
    pub marker_id: u32,
    pub t: f64,
    pub error: f64,
}

/// Horizontal error at every trigger.
pub fn marker_errors(
    aligned: &Trajectory,
    triggers: &TriggerLog,
    map: &MarkerMap,
) -> Result<Vec<MarkerError>> {
    triggers.validate_against(map)?;
    triggers
        .events()
        .iter()
        .map(|e| {
            let p = trajectory_position(aligned, e.t)?;
            let m = map.position(e.marker_id).expect("validated");
            Ok(MarkerError {
                marker_id: e.marker_id,
                t: e.t,
                error: (p - m).xy().norm(),
            })
        })
        .collect()
}

/// Horizontal error at the last trigger on the marker furthest along the
/// surveyed path.
pub fn furthest_point_error(
    aligned: &Trajectory,
    triggers: &TriggerLog,
    map: &MarkerMap,
) -> Result<f64> {
    let far = map
        .furthest()
        .ok_or_else(|| crate::Error::InvalidArgument("marker map is empty".into()))?;
    let Some(event) = triggers
        .events()
        .iter()
        .rev()
        .find(|e| e.marker_id == far.id)
    else {
        return invalid(format!(
            "no trigger recorded at the furthest marker {}",
            far.id
        ));
    };
    let p = trajectory_position(aligned, event.t)?;
    Ok((p - far.pos).xy().norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GammaWalk,
    GammaRun,
    GammaAdapt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub furthest_point_error: f64,
    pub marker_errors: Vec<MarkerError>,
    pub zupt_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub methods: Vec<MethodResult>,
    /// Raw per-sample classifier accuracy against the supplied class truth.
    pub svm_accuracy: Option<f64>,
    pub path_length: f64,
    pub furthest_marker: u32,
    pub gamma_walk: f64,
    pub gamma_run: f64,
}

impl TrialReport {
    pub fn error(&self, method: Method) -> Option<f64> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| m.furthest_point_error)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    pub shoe: ShoeParams,
    pub ekf: EkfConfig,
    pub gammas: AdaptiveParams,
    pub smoothing_window: usize,
    pub smoothing_threshold: f64,
}

impl TrialConfig {
    pub fn new(gammas: AdaptiveParams) -> Self {
        Self {
            shoe: ShoeParams::default(),
            ekf: EkfConfig::default(),
            gammas,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            smoothing_threshold: DEFAULT_SMOOTHING_THRESHOLD,
        }
    }
}

/// Smoothed binary motion labels (0 = walk, 1 = run) and the raw ones.
pub fn motion_labels(
    imu: &ImuStream,
    model: &SvmModel,
    window: usize,
    thresh: f64,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let raw = binarize(&predict_stream(model, imu)?, &model.classes)?;
    let smoothed = smooth(&raw, window, thresh)?;
    Ok((raw, smoothed))
}

/// Classifies, runs the three detector variants and their filters, and
/// scores each against the markers.
pub fn run_trial(
    imu: &ImuStream,
    model: &SvmModel,
    cfg: &TrialConfig,
    triggers: &TriggerLog,
    map: &MarkerMap,
    class_truth: Option<&[u8]>,
) -> Result<TrialReport> {
    cfg.gammas.validate()?;
    triggers.validate_against(map)?;
    let (raw, motion) = motion_labels(imu, model, cfg.smoothing_window, cfg.smoothing_threshold)?;
    let svm_accuracy = match class_truth {
        Some(truth) if truth.len() != raw.len() => {
            return invalid("class truth length differs from the IMU stream")
        }
        Some(truth) => {
            Some(raw.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / raw.len() as f64)
        }
        None => None,
    };
    let stats = shoe_statistics(imu, &cfg.shoe)?;
    let flags = [
        (Method::GammaWalk, threshold(&stats, cfg.gammas.gamma_walk)),
        (Method::GammaRun, threshold(&stats, cfg.gammas.gamma_run)),
        (
            Method::GammaAdapt,
            threshold_adaptive(&stats, &motion, &cfg.gammas)?,
        ),
    ];
    let methods = flags
        .par_iter()
        .map(|(method, zv)| -> Result<MethodResult> {
            let traj = run_ins(imu, zv, &cfg.ekf)?;
            let (aligned, _) = align_trajectory(&traj, triggers, map)?;
            Ok(MethodResult {
                method: *method,
                furthest_point_error: furthest_point_error(&aligned, triggers, map)?,
                marker_errors: marker_errors(&aligned, triggers, map)?,
                zupt_fraction: zv.iter().filter(|z| **z).count() as f64 / zv.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialReport {
        methods,
        svm_accuracy,
        path_length: map.path_length,
        furthest_marker: map.furthest().map_or(0, |m| m.id),
        gamma_walk: cfg.gammas.gamma_walk,
        gamma_run: cfg.gammas.gamma_run,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialKind {
    Walk,
    Run,
    Mixed,
}

/// Distance between consecutive markers on the simulated course, m. Six legs
/// give a course of about 130 m.
pub const COURSE_LEG: f64 = 22.0;

/// Legs of the simulated course: three east, then three north.
pub const COURSE_HEADINGS: [f64; 6] = [0.0, 0.0, 0.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2];

/// A simulated trial on the marker course.
#[derive(Clone, Debug, PartialEq)]
pub struct CourseTrial {
    pub sim: Simulation,
    pub triggers: TriggerLog,
    pub map: MarkerMap,
    /// 0 = walk, 1 = run, per sample.
    pub class_truth: Vec<u8>,
}

pub fn course_plan(kind: TrialKind) -> GaitPlan {
    let segments = COURSE_HEADINGS
        .iter()
        .enumerate()
        .map(|(i, &heading)| {
            let class = match kind {
                TrialKind::Walk => MotionClass::Walk,
                TrialKind::Run => MotionClass::Run,
                TrialKind::Mixed if i % 2 == 0 => MotionClass::Walk,
                TrialKind::Mixed => MotionClass::Run,
            };
            let profile = GaitProfile::preset(class);
            profile
                .with_duration(COURSE_LEG / profile.speed())
                .with_heading(heading)
        })
        .collect();
    GaitPlan {
        segments,
        lead_in: 2.0,
        lead_out: 1.0,
    }
}

/// Simulates a course trial. Markers sit at the foot's stance positions at
/// the end of each leg, and the trigger fires at that stance midpoint.
pub fn course_trial(kind: TrialKind, noise: &NoiseModel) -> Result<CourseTrial> {
    let plan = course_plan(kind);
    let sim = simulate(&plan, noise, DEFAULT_RATE_HZ)?;
    let tr = &sim.truth;
    let start = (plan.lead_in * DEFAULT_RATE_HZ / 2.0) as usize;
    let indices: Vec<usize> = std::iter::once(start)
        .chain(tr.segment_ends.iter().copied())
        .collect();
    let positions: Vec<Vec3> = indices.iter().map(|&k| tr.positions[k]).collect();
    let map = MarkerMap::from_positions(&positions);
    let triggers = TriggerLog::new(
        indices
            .iter()
            .enumerate()
            .map(|(i, &k)| TriggerEvent {
                t: tr.t[k],
                marker_id: i as u32,
            })
            .collect(),
    )?;
    let class_truth = tr
        .class
        .iter()
        .map(|c| match c {
            MotionClass::Walk => Ok(0),
            MotionClass::Run => Ok(1),
            other => invalid(format!("course trials use walk and run only, got {other}")),
        })
        .collect::<Result<_>>()?;
    Ok(CourseTrial {
        sim,
        triggers,
        map,
        class_truth,
    })
}
