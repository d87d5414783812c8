//! Foot-mounted inertial navigation with zero-velocity updates.

pub mod classifier;
pub mod config;
pub mod detector;
pub mod ekf;
pub mod error;
pub mod eval;
pub mod io;
pub mod sim;
pub mod survey;
pub mod threshold;
pub mod types;

pub use config::Config;
pub use detector::{
    detect, detect_adaptive, shoe_statistic, shoe_statistics, threshold, threshold_adaptive,
    AdaptiveParams, DetectorParams, ShoeParams,
};
pub use ekf::{
    propagate, run_ins, zupt_update, Ekf, EkfConfig, ErrorCovariance, NavState, Trajectory,
    TrajectoryPoint,
};
pub use error::{Error, Result};
pub use eval::{
    align_trajectory, course_trial, furthest_point_error, marker_errors, run_trial, CourseTrial,
    Method, MethodResult, PlanarAlignment, TrialConfig, TrialKind, TrialReport, TriggerEvent,
    TriggerLog,
};
pub use threshold::{
    align_labels, f_beta, label_zero_velocity, optimize_gamma, precision_recall, FBetaConfig,
    GammaOptimum, MocapSample, MocapStream, MotionKind, PrCurve, PrPoint,
};
pub use types::*;
