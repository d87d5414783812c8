//! Zero-velocity-aided strapdown INS.
//!
//! The nominal state is integrated with forward Euler exactly in the order
//!
//! ```text
//! p_k = p_{k-1} + v_{k-1} dt
//! v_k = v_{k-1} + (R(q_{k-1}) a_k + g) dt
//! q_k = q_{k-1} ⊗ exp(ω_k dt)
//! ```
//!
//! where `g` is the gravity *vector* (pointing down). The filter carries a
//! 9-dimensional error state
//!
//! ```text
//!  [0..3]  δp   position error, m
//!  [3..6]  δv   velocity error, m/s
//!  [6..9]  δθ   attitude error, rad, navigation frame: R_true = Exp(δθ) R
//! ```
//!
//! With that (left) attitude error the linearized transition is
//!
//! ```text
//!      | I   I dt   0              |
//! F =  | 0   I     -[R(q) a]× dt   |
//!      | 0   0      I              |
//! ```
//!
//! Sensor biases are deliberately not estimated.

use log::warn;
use nalgebra::{Matrix3, SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::types::{omega_update, skew, ImuSample, ImuStream, Quaternion, Vec3, STANDARD_GRAVITY};

pub type Mat9 = SMatrix<f64, 9, 9>;
type Mat9x3 = SMatrix<f64, 9, 3>;
type Mat3x9 = SMatrix<f64, 3, 9>;

const POS: usize = 0;
const VEL: usize = 3;
const ATT: usize = 6;

/// Nominal navigation state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    /// Position, m, navigation frame.
    pub p: Vec3,
    /// Velocity, m/s.
    pub v: Vec3,
    /// Body-to-navigation attitude.
    pub q: Quaternion,
}

impl NavState {
    pub fn new(p: Vec3, v: Vec3, q: Quaternion) -> Self {
        Self { p, v, q }
    }

    pub fn at_rest() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros(), Quaternion::identity())
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.v.iter()).all(|c| c.is_finite()) && self.q.is_finite()
    }

    fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return invalid("navigation state has non-finite entries");
        }
        if !self.q.is_unit() {
            return invalid(format!(
                "attitude quaternion norm {} is not 1",
                self.q.norm()
            ));
        }
        Ok(())
    }
}

/// Covariance of the 9-dimensional error state `[δp, δv, δθ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorCovariance(Mat9);

impl ErrorCovariance {
    pub fn new(p: Mat9) -> Result<Self> {
        if !p.iter().all(|c| c.is_finite()) {
            return invalid("covariance has non-finite entries");
        }
        if (p - p.transpose()).abs().max() > 1e-9 {
            return invalid("covariance is not symmetric");
        }
        Ok(Self(p))
    }

    pub fn from_std(pos: f64, vel: f64, tilt: f64, yaw: f64) -> Self {
        let mut p = Mat9::zeros();
        for i in 0..3 {
            p[(POS + i, POS + i)] = pos * pos;
            p[(VEL + i, VEL + i)] = vel * vel;
        }
        p[(ATT, ATT)] = tilt * tilt;
        p[(ATT + 1, ATT + 1)] = tilt * tilt;
        p[(ATT + 2, ATT + 2)] = yaw * yaw;
        Self(p)
    }

    pub fn matrix(&self) -> &Mat9 {
        &self.0
    }

    pub fn velocity_block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(VEL, VEL).into_owned()
    }

    /// Largest absolute entry of `P - Pᵀ`.
    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    fn symmetrized(p: Mat9) -> Self {
        Self((p + p.transpose()) * 0.5)
    }
}

/// Filter noise and initialization settings. None of these are sensor
/// constants; they are tuning values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EkfConfig {
    /// Per-sample accelerometer noise used in the process noise, m/s².
    pub sigma_accel: f64,
    /// Per-sample gyro noise used in the process noise, rad/s.
    pub sigma_gyro: f64,
    /// Zero-velocity pseudo-measurement noise, m/s.
    pub sigma_zupt: f64,
    /// Gravity vector in the navigation frame, m/s².
    pub gravity: Vec3,
    pub p0: Vec3,
    pub v0: Vec3,
    pub init_pos_std: f64,
    pub init_vel_std: f64,
    pub init_tilt_std: f64,
    pub init_yaw_std: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            sigma_accel: 0.01 * STANDARD_GRAVITY,
            sigma_gyro: 0.00174,
            sigma_zupt: 0.01,
            gravity: Vec3::new(0.0, 0.0, -STANDARD_GRAVITY),
            p0: Vec3::zeros(),
            v0: Vec3::zeros(),
            init_pos_std: 1e-5,
            init_vel_std: 0.01,
            init_tilt_std: 1f64.to_radians(),
            init_yaw_std: 0.0,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<()> {
        let sigmas = [self.sigma_accel, self.sigma_gyro, self.sigma_zupt];
        if !sigmas.iter().all(|s| s.is_finite() && *s > 0.0) {
            return invalid("filter noise sigmas must be positive");
        }
        let stds = [
            self.init_pos_std,
            self.init_vel_std,
            self.init_tilt_std,
            self.init_yaw_std,
        ];
        if !stds.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return invalid("initial standard deviations must be non-negative");
        }
        if !self
            .gravity
            .iter()
            .chain(self.p0.iter())
            .chain(self.v0.iter())
            .all(|c| c.is_finite())
        {
            return invalid("gravity and initial state must be finite");
        }
        Ok(())
    }

    pub fn initial_covariance(&self) -> ErrorCovariance {
        ErrorCovariance::from_std(
            self.init_pos_std,
            self.init_vel_std,
            self.init_tilt_std,
            self.init_yaw_std,
        )
    }
}

/// One prediction step of the nominal state and the error covariance.
pub fn propagate(
    state: &NavState,
    cov: &ErrorCovariance,
    sample: &ImuSample,
    dt: f64,
    cfg: &EkfConfig,
) -> Result<(NavState, ErrorCovariance)> {
    if !(dt.is_finite() && dt > 0.0) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    if !sample.is_finite() {
        return Err(Error::Propagation(format!(
            "non-finite IMU sample at t = {}",
            sample.t
        )));
    }
    state.validate()?;

    let rot = state.q.rotation_matrix();
    let f_nav = rot * sample.accel;
    let p = state.p + state.v * dt;
    let v = state.v + (f_nav + cfg.gravity) * dt;
    let q = omega_update(&state.q, &(sample.gyro * dt))?;

    let mut f = Mat9::identity();
    f.fixed_view_mut::<3, 3>(POS, VEL)
        .copy_from(&(Matrix3::identity() * dt));
    f.fixed_view_mut::<3, 3>(VEL, ATT)
        .copy_from(&(-skew(&f_nav) * dt));

    let qv = (cfg.sigma_accel * dt).powi(2);
    let qa = (cfg.sigma_gyro * dt).powi(2);
    let mut noise = Mat9::zeros();
    for i in 0..3 {
        noise[(VEL + i, VEL + i)] = qv;
        noise[(ATT + i, ATT + i)] = qa;
    }
    let next = f * cov.0 * f.transpose() + noise;
    Ok((NavState::new(p, v, q), ErrorCovariance::symmetrized(next)))
}

/// Fuses the pseudo-measurement "velocity is zero" and injects the
/// estimated error into the nominal state.
pub fn zupt_update(
    state: &NavState,
    cov: &ErrorCovariance,
    cfg: &EkfConfig,
) -> Result<(NavState, ErrorCovariance)> {
    state.validate()?;
    let mut h = Mat3x9::zeros();
    h.fixed_view_mut::<3, 3>(0, VEL)
        .copy_from(&Matrix3::identity());
    let r = Matrix3::identity() * cfg.sigma_zupt.powi(2);

    let p = cov.0;
    let s = h * p * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular innovation covariance".into()))?;
    let gain: Mat9x3 = p * h.transpose() * s_inv;
    let innovation = -state.v;
    let dx = gain * innovation;

    let dp = dx.fixed_rows::<3>(POS).into_owned();
    let dv = dx.fixed_rows::<3>(VEL).into_owned();
    let dtheta = dx.fixed_rows::<3>(ATT).into_owned();
    let q = (Quaternion::from_rotation_vector(&dtheta) * state.q).normalized()?;
    let corrected = NavState::new(state.p + dp, state.v + dv, q);

    // Joseph form
    let ikh = Mat9::identity() - gain * h;
    let next = ikh * p * ikh.transpose() + gain * r * gain.transpose();
    Ok((corrected, ErrorCovariance::symmetrized(next)))
}

/// Sequential filter instance.
#[derive(Clone, Debug)]
pub struct Ekf {
    state: NavState,
    cov: ErrorCovariance,
    cfg: EkfConfig,
}

impl Ekf {
    pub fn new(state: NavState, cfg: EkfConfig) -> Result<Self> {
        cfg.validate()?;
        state.validate()?;
        Ok(Self {
            state,
            cov: cfg.initial_covariance(),
            cfg,
        })
    }

    pub fn with_covariance(state: NavState, cov: ErrorCovariance, cfg: EkfConfig) -> Result<Self> {
        cfg.validate()?;
        state.validate()?;
        Ok(Self { state, cov, cfg })
    }

    pub fn state(&self) -> &NavState {
        &self.state
    }

    pub fn covariance(&self) -> &ErrorCovariance {
        &self.cov
    }

    pub fn predict(&mut self, sample: &ImuSample, dt: f64) -> Result<()> {
        (self.state, self.cov) = propagate(&self.state, &self.cov, sample, dt, &self.cfg)?;
        Ok(())
    }

    pub fn zero_velocity_update(&mut self) -> Result<()> {
        (self.state, self.cov) = zupt_update(&self.state, &self.cov, &self.cfg)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: NavState,
    /// Whether a zero-velocity update was applied at this sample.
    pub zupt: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Set when no stationary sample was found in the first second and the
    /// initial attitude was leveled from the first samples instead.
    pub init_fallback: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.points.iter().map(|p| p.state.p)
    }

    /// Position at time `t`, linearly interpolated between the bracketing
    /// samples. `None` outside the trajectory's time span.
    pub fn position_at(&self, t: f64) -> Option<Vec3> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let idx = self.points.partition_point(|p| p.t <= t);
        if idx == 0 {
            return Some(first.state.p);
        }
        if idx >= self.points.len() {
            return Some(last.state.p);
        }
        let (a, b) = (&self.points[idx - 1], &self.points[idx]);
        let w = (t - a.t) / (b.t - a.t);
        Some(a.state.p * (1.0 - w) + b.state.p * w)
    }
}

/// Samples that may be averaged for the fallback leveling.
const FALLBACK_LEVELING_SAMPLES: usize = 50;

/// Roll and pitch from a mean specific-force vector measured at rest.
pub fn level_from_accel(mean_accel: &Vec3) -> Quaternion {
    let roll = mean_accel.y.atan2(mean_accel.z);
    let pitch = (-mean_accel.x).atan2((mean_accel.y.powi(2) + mean_accel.z.powi(2)).sqrt());
    Quaternion::from_euler(roll, pitch, 0.0)
}

/// Picks the samples used for initial leveling: the first contiguous run of
/// stationary flags that starts within the first second (capped at one
/// second of data). Returns `None` if there is no such run.
fn leveling_window(stream: &ImuStream, zv: &[bool]) -> Option<std::ops::Range<usize>> {
    let samples = stream.samples();
    let t0 = samples[0].t;
    let start = (0..samples.len())
        .take_while(|&i| samples[i].t - t0 <= 1.0)
        .find(|&i| zv[i])?;
    let end = (start..samples.len())
        .take_while(|&i| zv[i] && samples[i].t - samples[start].t <= 1.0)
        .last()
        .map_or(start + 1, |i| i + 1);
    Some(start..end)
}

/// Runs the full filter over a stream, applying a zero-velocity update at
/// every flagged sample. Returns one state per input sample.
pub fn run_ins(stream: &ImuStream, zv: &[bool], cfg: &EkfConfig) -> Result<Trajectory> {
    if zv.len() != stream.len() {
        return invalid(format!(
            "zero-velocity flags ({}) and IMU samples ({}) differ in length",
            zv.len(),
            stream.len()
        ));
    }
    cfg.validate()?;
    let samples = stream.samples();

    let (range, init_fallback) = match leveling_window(stream, zv) {
        Some(r) => (r, false),
        None => {
            warn!(
                "no stationary samples in the first second; leveling from the first {} samples",
                FALLBACK_LEVELING_SAMPLES
            );
            (0..samples.len().min(FALLBACK_LEVELING_SAMPLES), true)
        }
    };
    let mean_accel =
        samples[range.clone()].iter().map(|s| s.accel).sum::<Vec3>() / range.len() as f64;
    let q0 = level_from_accel(&mean_accel);

    let mut ekf = Ekf::new(NavState::new(cfg.p0, cfg.v0, q0), *cfg)?;
    let mut points = Vec::with_capacity(samples.len());
    for (k, sample) in samples.iter().enumerate() {
        if k > 0 {
            ekf.predict(sample, stream.interval(k))?;
        }
        if zv[k] {
            ekf.zero_velocity_update()?;
        }
        points.push(TrajectoryPoint {
            t: sample.t,
            state: *ekf.state(),
            zupt: zv[k],
        });
    }
    Ok(Trajectory {
        points,
        init_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    const DT: f64 = 0.008;

    fn rest_sample(t: f64) -> ImuSample {
        ImuSample::new(t, Vec3::new(0.0, 0.0, STANDARD_GRAVITY), Vec3::zeros())
    }

    #[test]
    fn gravity_cancels_at_rest() {
        let cfg = EkfConfig::default();
        let state = NavState::new(
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::zeros(),
            Quaternion::identity(),
        );
        let (next, _) = propagate(
            &state,
            &cfg.initial_covariance(),
            &rest_sample(0.0),
            DT,
            &cfg,
        )
        .unwrap();
        assert_eq!(next.p, state.p);
        assert_eq!(next.v, Vec3::zeros());
        assert_eq!(next.q, state.q);
    }

    #[test]
    fn free_fall_gains_gravity_times_dt() {
        let cfg = EkfConfig::default();
        let sample = ImuSample::new(0.0, Vec3::zeros(), Vec3::zeros());
        let (next, _) = propagate(
            &NavState::at_rest(),
            &cfg.initial_covariance(),
            &sample,
            DT,
            &cfg,
        )
        .unwrap();
        assert_relative_eq!(next.v, Vector3::new(0.0, 0.0, -0.0784532), epsilon = 1e-12);
        assert_eq!(next.p, Vec3::zeros());
    }

    #[test]
    fn constant_acceleration_uses_old_velocity_for_position() {
        let cfg = EkfConfig::default();
        let sample = ImuSample::new(0.0, Vec3::new(1.0, 0.0, STANDARD_GRAVITY), Vec3::zeros());
        let mut state = NavState::at_rest();
        let mut cov = cfg.initial_covariance();
        for _ in 0..125 {
            (state, cov) = propagate(&state, &cov, &sample, DT, &cfg).unwrap();
        }
        // oracle: v_k = k a dt and p_125 = Σ_{k<125} v_k dt = a dt² · 124·125/2
        let expected_p: f64 = (0..125).map(|k| k as f64 * 1.0 * DT * DT).sum();
        assert_relative_eq!(expected_p, 0.496, epsilon = 1e-12);
        assert_relative_eq!(state.v.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(state.p.x, expected_p, epsilon = 1e-12);
        assert_eq!(state.p.y, 0.0);
    }

    #[test]
    fn propagate_rejects_bad_input() {
        let cfg = EkfConfig::default();
        let cov = cfg.initial_covariance();
        let s = rest_sample(0.0);
        assert!(matches!(
            propagate(&NavState::at_rest(), &cov, &s, 0.0, &cfg),
            Err(Error::InvalidArgument(_))
        ));
        let bad = ImuSample::new(0.0, Vec3::new(f64::NAN, 0.0, 0.0), Vec3::zeros());
        assert!(matches!(
            propagate(&NavState::at_rest(), &cov, &bad, DT, &cfg),
            Err(Error::Propagation(_))
        ));
    }

    #[test]
    fn zupt_with_zero_velocity_only_shrinks_covariance() {
        let cfg = EkfConfig::default();
        let cov = ErrorCovariance::from_std(0.1, 0.5, 0.01, 0.01);
        let state = NavState::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::zeros(),
            Quaternion::from_euler(0.1, 0.0, 0.2),
        );
        let (next, post) = zupt_update(&state, &cov, &cfg).unwrap();
        assert_eq!(next.p, state.p);
        assert_eq!(next.v, state.v);
        assert_relative_eq!(next.q.as_vector4(), state.q.as_vector4(), epsilon = 1e-15);
        for i in 0..3 {
            assert!(post.velocity_block()[(i, i)] < cov.velocity_block()[(i, i)]);
        }
    }

    #[test]
    fn zupt_with_tiny_noise_zeroes_velocity() {
        let cfg = EkfConfig {
            sigma_zupt: 1e-6,
            ..Default::default()
        };
        let cov = ErrorCovariance::from_std(0.0, 10.0, 0.0, 0.0);
        let state = NavState::new(
            Vec3::zeros(),
            Vec3::new(0.1, 0.0, 0.0),
            Quaternion::identity(),
        );
        let (next, _) = zupt_update(&state, &cov, &cfg).unwrap();
        assert!(next.v.norm() < 1e-6);
    }

    #[test]
    fn zupt_with_equal_variances_halves_velocity() {
        let cfg = EkfConfig::default();
        let cov = ErrorCovariance::from_std(0.0, cfg.sigma_zupt, 0.0, 0.0);
        let state = NavState::new(
            Vec3::zeros(),
            Vec3::new(0.1, 0.0, 0.0),
            Quaternion::identity(),
        );
        let (next, post) = zupt_update(&state, &cov, &cfg).unwrap();
        assert_relative_eq!(next.v, Vector3::new(0.05, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(
            post.velocity_block()[(0, 0)],
            0.5 * cfg.sigma_zupt.powi(2),
            epsilon = 1e-18
        );
    }

    #[test]
    fn zupt_leaves_yaw_alone_without_yaw_velocity_correlation() {
        let cfg = EkfConfig::default();
        let mut p = *ErrorCovariance::from_std(0.1, 0.2, 0.05, 0.3).matrix();
        // correlate tilt with velocity, but not yaw
        p[(VEL, ATT + 1)] = 0.004;
        p[(ATT + 1, VEL)] = 0.004;
        p[(VEL + 1, ATT)] = -0.003;
        p[(ATT, VEL + 1)] = -0.003;
        let cov = ErrorCovariance::new(p).unwrap();
        let state = NavState::new(
            Vec3::zeros(),
            Vec3::new(0.3, -0.2, 0.1),
            Quaternion::from_euler(0.0, 0.0, 0.7),
        );
        let (next, _) = zupt_update(&state, &cov, &cfg).unwrap();
        // nav-frame correction that was applied on the left
        let dtheta = (next.q * state.q.conjugate()).to_rotation_vector();
        assert!(dtheta.z.abs() < 1e-15, "{dtheta}");
        assert!(dtheta.x.abs() > 0.0 || dtheta.y.abs() > 0.0);
    }

    #[test]
    fn posterior_speed_never_exceeds_prior() {
        let cfg = EkfConfig::default();
        let cov = ErrorCovariance::from_std(0.01, 0.05, 0.01, 0.0);
        for v in [0.01, 0.1, 1.0, 5.0] {
            let state = NavState::new(
                Vec3::zeros(),
                Vec3::new(v, -v, 0.5 * v),
                Quaternion::identity(),
            );
            let (next, _) = zupt_update(&state, &cov, &cfg).unwrap();
            assert!(next.v.norm() <= state.v.norm());
        }
    }

    #[test]
    fn stationary_stream_stays_at_origin() {
        let samples: Vec<_> = (0..1250).map(|k| rest_sample(k as f64 * DT)).collect();
        let stream = ImuStream::new(samples, 125.0).unwrap();
        let traj = run_ins(&stream, &vec![true; stream.len()], &EkfConfig::default()).unwrap();
        assert_eq!(traj.len(), 1250);
        assert!(!traj.init_fallback);
        assert!(traj.points.last().unwrap().state.p.norm() < 1e-3);
    }

    #[test]
    fn leveling_recovers_roll_and_pitch() {
        let truth = Quaternion::from_euler(0.1, -0.05, 0.0);
        let f_body = truth
            .conjugate()
            .rotate(&Vec3::new(0.0, 0.0, STANDARD_GRAVITY));
        let q = level_from_accel(&f_body);
        assert_relative_eq!(q.as_vector4(), truth.as_vector4(), epsilon = 1e-12);
    }

    #[test]
    fn missing_initial_stance_falls_back() {
        let samples: Vec<_> = (0..300).map(|k| rest_sample(k as f64 * DT)).collect();
        let stream = ImuStream::new(samples, 125.0).unwrap();
        let traj = run_ins(&stream, &vec![false; 300], &EkfConfig::default()).unwrap();
        assert!(traj.init_fallback);
        let flags: Vec<bool> = (0..300).map(|k| k > 200).collect();
        assert!(
            run_ins(&stream, &flags, &EkfConfig::default())
                .unwrap()
                .init_fallback
        );
    }

    #[test]
    fn flag_length_must_match() {
        let stream = ImuStream::new(vec![rest_sample(0.0), rest_sample(DT)], 125.0).unwrap();
        assert!(run_ins(&stream, &[true], &EkfConfig::default()).is_err());
    }

    #[test]
    fn interpolated_position() {
        let mk = |t: f64, x: f64| TrajectoryPoint {
            t,
            state: NavState::new(
                Vec3::new(x, 0.0, 0.0),
                Vec3::zeros(),
                Quaternion::identity(),
            ),
            zupt: false,
        };
        let traj = Trajectory {
            points: vec![mk(0.0, 0.0), mk(1.0, 2.0)],
            init_fallback: false,
        };
        assert_relative_eq!(traj.position_at(0.25).unwrap().x, 0.5);
        assert_eq!(traj.position_at(1.0).unwrap().x, 2.0);
        assert!(traj.position_at(1.5).is_none());
    }
}
