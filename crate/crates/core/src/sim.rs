//! Synthetic foot-mounted IMU data with exact ground truth.
//!
//! The foot alternates between stance (position fixed, slow heel-to-toe
//! pitch roll about the sensor) and swing (quintic-smoothstep advance,
//! half-sine lift, sinusoidal pitch). Every phase boundary falls on a sample
//! instant, and IMU samples are the exact discrete counterparts of the truth
//! trajectory over each sample interval, so a strapdown integrator fed with
//! noiseless data reproduces the truth up to rounding.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::threshold::{MocapSample, MocapStream};
use crate::types::{ImuSample, ImuStream, Quaternion, Vec3, STANDARD_GRAVITY};

/// The six motion types, indexed as the classifier labels them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    Walk,
    Jog,
    Run,
    Sprint,
    CrouchWalk,
    LadderClimb,
}

impl MotionClass {
    pub const ALL: [MotionClass; 6] = [
        MotionClass::Walk,
        MotionClass::Jog,
        MotionClass::Run,
        MotionClass::Sprint,
        MotionClass::CrouchWalk,
        MotionClass::LadderClimb,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Result<Self> {
        Self::ALL.get(i as usize).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("motion class index {i} out of range 0..6"))
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::Walk => "walk",
            MotionClass::Jog => "jog",
            MotionClass::Run => "run",
            MotionClass::Sprint => "sprint",
            MotionClass::CrouchWalk => "crouch",
            MotionClass::LadderClimb => "ladder",
        }
    }
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(i) = lower.parse::<u8>() {
            return Self::from_index(i);
        }
        Self::ALL
            .into_iter()
            .find(|c| {
                c.name() == lower || (lower == "crouch_walk" && *c == MotionClass::CrouchWalk)
            })
            .or((lower == "ladder_climb").then_some(MotionClass::LadderClimb))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown motion class '{s}'")))
    }
}

/// Kinematic description of one gait.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitProfile {
    pub motion_class: MotionClass,
    /// Distance covered per step, m. One foot advances two strides per cycle.
    pub stride_length: f64,
    /// Steps per second (both feet).
    pub cadence: f64,
    /// Fraction of the foot cycle spent stationary.
    pub stance_fraction: f64,
    /// Peak foot lift during swing, m.
    pub swing_apex: f64,
    /// Direction of travel, rad from the navigation x-axis.
    pub heading: f64,
    /// Requested duration, s. The simulated duration is rounded to whole cycles.
    pub duration: f64,
    /// Peak swing pitch excursion, rad.
    pub pitch_amplitude: f64,
    /// Heel-to-toe pitch rate while the foot is planted, rad/s.
    pub stance_roll_rate: f64,
    /// Static foot pitch at stance midpoint, rad (positive is toe-down).
    #[serde(default)]
    pub stance_pitch: f64,
    /// Relative standard deviation of per-cycle stride length and period.
    pub variability: f64,
}

impl GaitProfile {
    pub fn preset(motion_class: MotionClass) -> Self {
        // stride, cadence, stance, apex, swing pitch (deg), stance roll (rad/s), stance pitch (deg)
        let (stride, cadence, stance, apex, pitch_deg, roll, stance_deg) = match motion_class {
            MotionClass::Walk => (0.7, 1.8, 0.35, 0.10, 30.0, 0.05, 0.0),
            MotionClass::Jog => (1.1, 2.4, 0.25, 0.16, 38.0, 0.5, 0.0),
            MotionClass::Run => (1.6, 2.8, 0.15, 0.22, 45.0, 1.1, 0.0),
            MotionClass::Sprint => (2.2, 3.4, 0.10, 0.30, 55.0, 1.8, 0.0),
            // on the toes
            MotionClass::CrouchWalk => (0.45, 1.4, 0.45, 0.06, 15.0, 0.2, 25.0),
            // arch on a rung, heel below the toes
            MotionClass::LadderClimb => (0.08, 1.0, 0.50, 0.30, 8.0, 0.1, -20.0),
        };
        Self {
            motion_class,
            stride_length: stride,
            cadence,
            stance_fraction: stance,
            swing_apex: apex,
            heading: 0.0,
            duration: 60.0,
            pitch_amplitude: f64::to_radians(pitch_deg),
            stance_roll_rate: roll,
            stance_pitch: f64::to_radians(stance_deg),
            variability: 0.03,
        }
    }

    pub fn walk() -> Self {
        Self::preset(MotionClass::Walk)
    }

    pub fn run() -> Self {
        Self::preset(MotionClass::Run)
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_heading(mut self, heading: f64) -> Self {
        self.heading = heading;
        self
    }

    /// Nominal foot-cycle period, s.
    pub fn cycle_period(&self) -> f64 {
        2.0 / self.cadence
    }

    /// Nominal walking speed, m/s.
    pub fn speed(&self) -> f64 {
        self.stride_length * self.cadence
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.stride_length,
            self.cadence,
            self.stance_fraction,
            self.swing_apex,
            self.heading,
            self.duration,
            self.pitch_amplitude,
            self.stance_roll_rate,
            self.stance_pitch,
            self.variability,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return invalid("gait profile has non-finite fields");
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return invalid(format!(
                "stance fraction must be in (0, 1), got {}",
                self.stance_fraction
            ));
        }
        if self.cadence <= 0.0 {
            return invalid(format!("cadence must be positive, got {}", self.cadence));
        }
        if self.stride_length < 0.0 || self.swing_apex < 0.0 || self.duration <= 0.0 {
            return invalid("stride, apex must be non-negative and duration positive");
        }
        if !(0.0..0.3).contains(&self.variability) {
            return invalid("variability must be in [0, 0.3)");
        }
        Ok(())
    }
}

/// Additive sensor errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub accel_noise_std: f64,
    pub gyro_noise_std: f64,
    pub accel_bias: Vec3,
    pub gyro_bias: Vec3,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            accel_noise_std: 0.02,
            gyro_noise_std: 0.002,
            accel_bias: Vec3::zeros(),
            gyro_bias: Vec3::zeros(),
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            accel_noise_std: 0.0,
            gyro_noise_std: 0.0,
            seed,
            ..Self::default()
        }
    }

    /// White noise plus small constant biases typical of a calibrated
    /// MEMS unit.
    pub fn realistic(seed: u64) -> Self {
        Self {
            accel_bias: Vec3::new(0.02, -0.015, 0.01),
            gyro_bias: Vec3::new(1.0e-3, -8.0e-4, 5.0e-5),
            seed,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.accel_noise_std >= 0.0 && self.gyro_noise_std >= 0.0) {
            return invalid("noise standard deviations must be non-negative");
        }
        if !self
            .accel_bias
            .iter()
            .chain(self.gyro_bias.iter())
            .all(|b| b.is_finite())
        {
            return invalid("biases must be finite");
        }
        Ok(())
    }
}

/// A sequence of gait segments with standing periods at both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitPlan {
    pub segments: Vec<GaitProfile>,
    /// Standing still before the first step, s.
    pub lead_in: f64,
    /// Standing still after the last step, s.
    pub lead_out: f64,
}

pub const DEFAULT_LEAD_IN: f64 = 1.0;
pub const DEFAULT_LEAD_OUT: f64 = 1.0;

impl GaitPlan {
    pub fn single(profile: GaitProfile) -> Self {
        Self {
            segments: vec![profile],
            lead_in: DEFAULT_LEAD_IN,
            lead_out: DEFAULT_LEAD_OUT,
        }
    }

    /// Square laps: straight sides of `side` seconds joined by left turns,
    /// `duration` seconds in total.
    pub fn laps(profile: GaitProfile, duration: f64, side: f64) -> Result<Self> {
        if !(duration > 0.0 && side > 0.0) {
            return invalid("lap duration and side time must be positive");
        }
        let sides = (duration / side).ceil() as usize;
        let segments = (0..sides)
            .map(|i| {
                let len = side.min(duration - i as f64 * side);
                profile
                    .with_duration(len)
                    .with_heading(profile.heading + i as f64 * PI / 2.0)
            })
            .collect();
        Ok(Self {
            segments,
            lead_in: DEFAULT_LEAD_IN,
            lead_out: DEFAULT_LEAD_OUT,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return invalid("gait plan has no segments");
        }
        for s in &self.segments {
            s.validate()?;
        }
        if !(self.lead_in >= 0.0 && self.lead_out >= 0.0) {
            return invalid("lead-in and lead-out must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub motion_class: MotionClass,
    pub duration: f64,
}

/// Preset profiles for each segment, ready for [`simulate`]. Segment
/// boundaries land on stance midpoints by construction.
pub fn piecewise_profile(segments: &[SegmentSpec]) -> Result<GaitPlan> {
    if segments.is_empty() {
        return invalid("need at least one segment");
    }
    let plan = GaitPlan {
        segments: segments
            .iter()
            .map(|s| GaitProfile::preset(s.motion_class).with_duration(s.duration))
            .collect(),
        lead_in: DEFAULT_LEAD_IN,
        lead_out: DEFAULT_LEAD_OUT,
    };
    plan.validate()?;
    Ok(plan)
}

/// Per-sample ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub t: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub orientations: Vec<Quaternion>,
    pub stance: Vec<bool>,
    pub class: Vec<MotionClass>,
    /// Segment index of each sample.
    pub segment: Vec<usize>,
    /// Sample indices of stance midpoints, in order. The class of the
    /// samples after a midpoint may differ from the class before it.
    pub stance_midpoints: Vec<usize>,
    /// Sample index of the stance midpoint ending each segment's last cycle.
    pub segment_ends: Vec<usize>,
}

impl Truth {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Times at which the motion class changes (a class-change midpoint).
    pub fn transition_times(&self) -> Vec<f64> {
        (1..self.len())
            .filter(|&k| self.class[k] != self.class[k - 1])
            .map(|k| self.t[k - 1])
            .collect()
    }

    /// Total horizontal distance travelled.
    pub fn path_length(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| (w[1] - w[0]).xy().norm())
            .sum()
    }
}

impl Truth {
    /// Motion-capture view of the truth: every `decimation`-th position with
    /// optional white noise, m.
    pub fn mocap(&self, decimation: usize, noise_std: f64, seed: u64) -> Result<MocapStream> {
        if decimation == 0 {
            return invalid("decimation must be at least 1");
        }
        if noise_std.is_nan() || noise_std < 0.0 {
            return invalid("mocap noise must be non-negative");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let samples: Vec<MocapSample> = (0..self.len())
            .step_by(decimation)
            .map(|k| {
                let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
                let n = Vec3::new(draw(), draw(), draw()) * noise_std;
                MocapSample {
                    t: self.t[k],
                    pos: self.positions[k] + n,
                }
            })
            .collect();
        MocapStream::from_samples(samples)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub imu: ImuStream,
    pub truth: Truth,
}

const MAX_TURN_PER_STEP: f64 = PI / 6.0;

#[derive(Clone, Copy, Debug)]
enum Kind {
    Stand,
    Stance {
        rate: f64,
    },
    Swing {
        disp: Vec3,
        apex: f64,
        yaw1: f64,
        theta1: f64,
        rate0: f64,
        rate1: f64,
        amp: f64,
    },
}

/// One phase spans samples `start..=start + len`; the shared boundary sample
/// belongs to the earlier phase.
#[derive(Clone, Copy, Debug)]
struct Phase {
    start: usize,
    len: usize,
    p0: Vec3,
    yaw0: f64,
    theta0: f64,
    class: MotionClass,
    segment: usize,
    /// The phase starts at a stance midpoint.
    opens_cycle: bool,
    kind: Kind,
}

/// Quintic smoothstep and its first derivative.
fn smoothstep(s: f64) -> (f64, f64) {
    let s2 = s * s;
    (
        s2 * s * (10.0 - 15.0 * s + 6.0 * s2),
        30.0 * s2 * (1.0 - s) * (1.0 - s),
    )
}

/// Cubic Hermite interpolation with end slopes in units of the parameter.
fn hermite(s: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> f64 {
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * m1
}

/// Peak swing inversion as a fraction of the swing pitch amplitude. Its rate
/// is in quadrature with the pitch rate, so the foot never stops rotating
/// mid-swing.
const SWING_ROLL_RATIO: f64 = 0.6;

fn attitude(roll: f64, theta: f64, yaw: f64) -> Quaternion {
    Quaternion::from_euler(roll, theta, yaw)
}

impl Phase {
    fn end(&self) -> usize {
        self.start + self.len
    }

    fn duration(&self, dt: f64) -> f64 {
        self.len as f64 * dt
    }

    /// Pose and velocity at sample `k`, which must lie within the phase.
    fn evaluate(&self, k: usize, dt: f64) -> (Vec3, Vec3, Quaternion) {
        let local = (k - self.start) as f64;
        match self.kind {
            Kind::Stand => (
                self.p0,
                Vec3::zeros(),
                attitude(0.0, self.theta0, self.yaw0),
            ),
            Kind::Stance { rate } => (
                self.p0,
                Vec3::zeros(),
                attitude(0.0, self.theta0 + rate * local * dt, self.yaw0),
            ),
            Kind::Swing {
                disp,
                apex,
                yaw1,
                theta1,
                rate0,
                rate1,
                amp,
            } => {
                let s = local / self.len as f64;
                let period = self.duration(dt);
                let (sig, dsig) = smoothstep(s);
                let lift = apex * (PI * sig).sin();
                let dlift = apex * PI * (PI * sig).cos() * dsig;
                let p = self.p0 + disp * sig + Vec3::new(0.0, 0.0, lift);
                let v = (disp * dsig + Vec3::new(0.0, 0.0, dlift)) / period;
                let theta = amp * (2.0 * PI * sig).sin()
                    + hermite(s, self.theta0, theta1, rate0 * period, rate1 * period);
                let roll = SWING_ROLL_RATIO * amp * (PI * sig).sin().powi(2);
                let yaw = self.yaw0 + (yaw1 - self.yaw0) * sig;
                (p, v, attitude(roll, theta, yaw))
            }
        }
    }

    fn is_stationary(&self) -> bool {
        !matches!(self.kind, Kind::Swing { .. })
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Clamped normal draw used for per-cycle gait variation.
fn jitter(rng: &mut ChaCha8Rng, rel_std: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    1.0 + rel_std * z.clamp(-3.0, 3.0)
}

/// Phases of the whole plan plus the sample index ending each segment.
fn build_phases(plan: &GaitPlan, rate_hz: f64, rng: &mut ChaCha8Rng) -> (Vec<Phase>, Vec<usize>) {
    let dt = 1.0 / rate_hz;
    let mut phases: Vec<Phase> = Vec::new();
    let mut segment_ends = Vec::with_capacity(plan.segments.len());
    let mut cursor = 0usize;
    let mut pos = Vec3::zeros();
    let mut yaw = plan.segments[0].heading;

    let n_in = (plan.lead_in * rate_hz).round() as usize;
    if n_in > 0 {
        phases.push(Phase {
            start: 0,
            len: n_in,
            p0: pos,
            yaw0: yaw,
            theta0: plan.segments[0].stance_pitch,
            class: plan.segments[0].motion_class,
            segment: 0,
            opens_cycle: false,
            kind: Kind::Stand,
        });
        cursor = n_in;
    }

    for (seg_idx, prof) in plan.segments.iter().enumerate() {
        let cycles = ((prof.duration / prof.cycle_period()).round() as usize).max(1);
        let next_pitch = plan
            .segments
            .get(seg_idx + 1)
            .map_or(prof.stance_pitch, |p| p.stance_pitch);
        for cycle in 0..cycles {
            // the last swing of a segment carries the foot into the next segment's stance pitch
            let pitch_out = if cycle + 1 == cycles {
                next_pitch
            } else {
                prof.stance_pitch
            };
            let period = prof.cycle_period() * jitter(rng, prof.variability);
            let stride = prof.stride_length * jitter(rng, prof.variability);
            let n_cycle = ((period * rate_hz).round() as usize).max(4);
            // stance samples per cycle = 2 * n_half + 1
            let n_half = (((prof.stance_fraction * n_cycle as f64 - 1.0) / 2.0).round() as usize)
                .clamp(1, (n_cycle - 2) / 2);
            let n_swing = n_cycle - 2 * n_half;
            let half = n_half as f64 * dt;
            let rate = prof.stance_roll_rate;
            let turn = wrap_angle(prof.heading - yaw).clamp(-MAX_TURN_PER_STEP, MAX_TURN_PER_STEP);
            let yaw1 = yaw + turn;
            let dir = yaw + 0.5 * turn;
            let disp = Vec3::new(dir.cos(), dir.sin(), 0.0) * (2.0 * stride);
            let base = Phase {
                start: cursor,
                len: n_half,
                p0: pos,
                yaw0: yaw,
                theta0: prof.stance_pitch,
                class: prof.motion_class,
                segment: seg_idx,
                opens_cycle: true,
                kind: Kind::Stance { rate },
            };
            phases.push(base);
            phases.push(Phase {
                start: cursor + n_half,
                len: n_swing,
                theta0: prof.stance_pitch + rate * half,
                opens_cycle: false,
                kind: Kind::Swing {
                    disp,
                    apex: prof.swing_apex,
                    yaw1,
                    theta1: pitch_out - rate * half,
                    rate0: rate,
                    rate1: rate,
                    amp: prof.pitch_amplitude,
                },
                ..base
            });
            pos += disp;
            yaw = yaw1;
            phases.push(Phase {
                start: cursor + n_half + n_swing,
                len: n_half,
                p0: pos,
                yaw0: yaw,
                theta0: pitch_out - rate * half,
                opens_cycle: false,
                ..base
            });
            cursor += n_cycle;
        }
        segment_ends.push(cursor);
    }

    let last = plan.segments.last().expect("validated non-empty");
    let n_out = ((plan.lead_out * rate_hz).round() as usize).max(if n_in == 0 { 1 } else { 0 });
    if n_out > 0 {
        phases.push(Phase {
            start: cursor,
            len: n_out,
            p0: pos,
            yaw0: yaw,
            theta0: last.stance_pitch,
            class: last.motion_class,
            segment: plan.segments.len() - 1,
            opens_cycle: true,
            kind: Kind::Stand,
        });
    }
    (phases, segment_ends)
}

/// Generates IMU samples and truth for a gait plan.
pub fn simulate(plan: &GaitPlan, noise: &NoiseModel, rate_hz: f64) -> Result<Simulation> {
    plan.validate()?;
    noise.validate()?;
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return invalid(format!("rate must be positive, got {rate_hz}"));
    }
    let total: f64 =
        plan.segments.iter().map(|s| s.duration).sum::<f64>() + plan.lead_in + plan.lead_out;
    if total * rate_hz < 1.0 {
        return invalid("plan is shorter than one sample");
    }
    let dt = 1.0 / rate_hz;
    let mut gait_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    gait_rng.set_stream(1);
    let (phases, segment_ends) = build_phases(plan, rate_hz, &mut gait_rng);
    let n = phases.last().map_or(1, |p| p.end() + 1);

    let mut truth = Truth {
        t: Vec::with_capacity(n),
        positions: Vec::with_capacity(n),
        velocities: Vec::with_capacity(n),
        orientations: Vec::with_capacity(n),
        stance: Vec::with_capacity(n),
        class: Vec::with_capacity(n),
        segment: Vec::with_capacity(n),
        stance_midpoints: Vec::new(),
        segment_ends,
    };
    let mut push = |k: usize, phase: &Phase, stance: bool| {
        let (p, v, q) = phase.evaluate(k, dt);
        truth.t.push(k as f64 * dt);
        truth.positions.push(p);
        truth.velocities.push(v);
        truth.orientations.push(q);
        truth.stance.push(stance);
        truth.class.push(phase.class);
        truth.segment.push(phase.segment);
    };
    push(0, &phases[0], true);
    for phase in &phases {
        for k in phase.start + 1..=phase.end() {
            // the velocity is zero at every phase boundary
            push(k, phase, phase.is_stationary() || k == phase.end());
        }
        if phase.opens_cycle {
            truth.stance_midpoints.push(phase.start);
        }
    }

    let g = Vec3::new(0.0, 0.0, -STANDARD_GRAVITY);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut gauss = |std: f64| -> Vec3 {
        let mut draw = || -> f64 { StandardNormal.sample(&mut noise_rng) };
        Vec3::new(draw(), draw(), draw()) * std
    };
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let (accel, gyro) = if k == 0 {
            (truth.orientations[0].conjugate().rotate(&-g), Vec3::zeros())
        } else {
            let q_prev = truth.orientations[k - 1];
            let dq = q_prev.conjugate() * truth.orientations[k];
            let gyro = dq.to_rotation_vector() / dt;
            let dv = (truth.velocities[k] - truth.velocities[k - 1]) / dt;
            (q_prev.conjugate().rotate(&(dv - g)), gyro)
        };
        let a = accel + noise.accel_bias + gauss(noise.accel_noise_std);
        let w = gyro + noise.gyro_bias + gauss(noise.gyro_noise_std);
        samples.push(ImuSample::new(truth.t[k], a, w));
    }
    let imu = ImuStream::new(samples, rate_hz)?;
    Ok(Simulation { imu, truth })
}

/// Convenience wrapper for a single profile.
pub fn simulate_profile(
    profile: &GaitProfile,
    noise: &NoiseModel,
    rate_hz: f64,
) -> Result<Simulation> {
    simulate(&GaitPlan::single(*profile), noise, rate_hz)
}
