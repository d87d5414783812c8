//! Shared math and sensor types.
//!
//! Conventions used everywhere in the crate:
//! - Quaternions are Hamilton, scalar-first, and rotate body vectors into the
//!   navigation frame (`R(q) * v_body = v_nav`).
//! - The navigation frame is z-up. Gravity is the vector `(0, 0, -9.80665)`.
//! - Angular rates are body-frame, so attitude increments multiply on the right.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Point3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Standard gravity magnitude, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Default nominal IMU rate, Hz.
pub const DEFAULT_RATE_HZ: f64 = 125.0;

/// Default allowed timestamp jitter, as a fraction of the nominal period.
pub const DEFAULT_JITTER_TOLERANCE: f64 = 0.1;

const NORM_TOLERANCE: f64 = 1e-9;

/// Skew-symmetric cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub const fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Raw constructor; the caller is responsible for normalization.
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn normalized(&self) -> Result<Self> {
        if !self.is_finite() {
            return invalid("quaternion has non-finite components");
        }
        let n = self.norm();
        if n <= f64::MIN_POSITIVE {
            return invalid("quaternion has zero norm");
        }
        Ok(Self::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < NORM_TOLERANCE
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn vector_part(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn as_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Exact exponential map of a rotation vector (axis times angle, rad).
    pub fn from_rotation_vector(phi: &Vec3) -> Self {
        let angle = phi.norm();
        let half = 0.5 * angle;
        // sin(half)/angle, with the series limit near zero
        let k = if angle < 1e-8 {
            0.5 - angle * angle / 48.0
        } else {
            half.sin() / angle
        };
        Self::new(half.cos(), k * phi.x, k * phi.y, k * phi.z)
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        Self::from_rotation_vector(&(axis.normalize() * angle))
    }

    /// Logarithm map; returns the rotation vector with angle in [0, π].
    pub fn to_rotation_vector(&self) -> Vec3 {
        let q = if self.w < 0.0 {
            Self::new(-self.w, -self.x, -self.y, -self.z)
        } else {
            *self
        };
        let v = q.vector_part();
        let s = v.norm();
        if s < 1e-12 {
            return v * 2.0;
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    /// Rotation matrix of an already normalized quaternion.
    pub fn rotation_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation_matrix() * v
    }

    /// Quaternion for a body-to-navigation rotation given as yaw-pitch-roll
    /// (z-y-x intrinsic), radians.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        let qz = Self::from_axis_angle(&Vec3::z(), yaw);
        let qy = Self::from_axis_angle(&Vec3::y(), pitch);
        let qx = Self::from_axis_angle(&Vec3::x(), roll);
        qz * qy * qx
    }

    /// Returns (roll, pitch, yaw) for the z-y-x convention of [`Self::from_euler`].
    pub fn to_euler(&self) -> (f64, f64, f64) {
        let r = self.rotation_matrix();
        let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        (roll, pitch, yaw)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        Quaternion::new(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

/// Maps a quaternion to its SO(3) matrix, normalizing first.
pub fn quat_to_rotation(q: &Quaternion) -> Result<Mat3> {
    Ok(q.normalized()?.rotation_matrix())
}

/// The 4×4 matrix `Ω(φ)` such that `Ω(φ) q` equals `q ⊗ exp(φ)` as a
/// column `[w, x, y, z]`. This is the exact (closed-form) version.
pub fn omega_matrix(phi: &Vec3) -> Matrix4<f64> {
    let dq = Quaternion::from_rotation_vector(phi);
    right_product_matrix(&dq)
}

/// Matrix of `q ↦ q ⊗ p` acting on `[w, x, y, z]` columns.
pub fn right_product_matrix(p: &Quaternion) -> Matrix4<f64> {
    let (w, x, y, z) = (p.w, p.x, p.y, p.z);
    Matrix4::new(
        w, -x, -y, -z, //
        x, w, z, -y, //
        y, -z, w, x, //
        z, y, -x, w,
    )
}

/// Advances an attitude by a body-frame incremental rotation `phi` (rad),
/// typically `gyro * dt`. The result is renormalized.
pub fn omega_update(q_prev: &Quaternion, phi: &Vec3) -> Result<Quaternion> {
    if !phi.iter().all(|c| c.is_finite()) {
        return invalid("incremental rotation has non-finite components");
    }
    let angle = phi.norm();
    if angle >= PI {
        return Err(Error::StepTooLarge { angle });
    }
    (*q_prev * Quaternion::from_rotation_vector(phi)).normalized()
}

/// Rigid transform `p ↦ R p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se3Transform {
    rotation: Mat3,
    translation: Vec3,
}

impl Default for Se3Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Se3Transform {
    const ORTHO_TOLERANCE: f64 = 1e-9;

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Validates `RᵀR = I` and `det R = +1` within 1e-9.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !rotation
            .iter()
            .chain(translation.iter())
            .all(|c| c.is_finite())
        {
            return invalid("transform has non-finite entries");
        }
        let ortho_err = (rotation.transpose() * rotation - Mat3::identity())
            .abs()
            .max();
        if ortho_err > Self::ORTHO_TOLERANCE {
            return invalid(format!("rotation is not orthonormal (error {ortho_err:e})"));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > Self::ORTHO_TOLERANCE {
            return invalid(format!("rotation determinant is {det}, expected +1"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_quaternion(q: &Quaternion, translation: Vec3) -> Result<Self> {
        Self::new(quat_to_rotation(q)?, translation)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.apply(&p.coords))
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Se3Transform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

impl Mul for Se3Transform {
    type Output = Se3Transform;

    fn mul(self, rhs: Se3Transform) -> Se3Transform {
        self.compose(&rhs)
    }
}

pub fn se3_compose(a: &Se3Transform, b: &Se3Transform) -> Se3Transform {
    a.compose(b)
}

/// One 6-axis inertial reading in the body frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    /// Seconds, monotonic.
    pub t: f64,
    /// Specific force, m/s².
    pub accel: Vec3,
    /// Angular rate, rad/s.
    pub gyro: Vec3,
}

impl ImuSample {
    pub fn new(t: f64, accel: Vec3, gyro: Vec3) -> Self {
        Self { t, accel, gyro }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.accel.iter().all(|c| c.is_finite())
            && self.gyro.iter().all(|c| c.is_finite())
    }
}

/// Fixed-rate sequence of [`ImuSample`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct ImuStream {
    samples: Vec<ImuSample>,
    rate_hz: f64,
}

impl ImuStream {
    /// Validates with the default 10% jitter tolerance.
    pub fn new(samples: Vec<ImuSample>, rate_hz: f64) -> Result<Self> {
        Self::with_jitter_tolerance(samples, rate_hz, DEFAULT_JITTER_TOLERANCE)
    }

    /// `tolerance` is the allowed deviation of each sample interval from the
    /// nominal period, as a fraction of that period.
    pub fn with_jitter_tolerance(
        samples: Vec<ImuSample>,
        rate_hz: f64,
        tolerance: f64,
    ) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return invalid(format!("sampling rate must be positive, got {rate_hz}"));
        }
        if samples.is_empty() {
            return invalid("IMU stream is empty");
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return invalid(format!("IMU sample {i} has non-finite values"));
        }
        let dt = 1.0 / rate_hz;
        for (i, pair) in samples.windows(2).enumerate() {
            let step = pair[1].t - pair[0].t;
            if step <= 0.0 {
                return invalid(format!(
                    "timestamps not strictly increasing at sample {}",
                    i + 1
                ));
            }
            if (step - dt).abs() > tolerance * dt {
                return invalid(format!(
                    "sample interval {step} s at sample {} deviates from nominal {dt} s",
                    i + 1
                ));
            }
        }
        Ok(Self { samples, rate_hz })
    }

    pub fn samples(&self) -> &[ImuSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<ImuSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    /// Nominal sampling period.
    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    /// Measured interval preceding sample `k` (nominal for `k == 0`).
    pub fn interval(&self, k: usize) -> f64 {
        if k == 0 {
            self.dt()
        } else {
            self.samples[k].t - self.samples[k - 1].t
        }
    }

    /// Contiguous sub-range; panics if the range is empty or out of bounds.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ImuStream {
        assert!(!range.is_empty(), "empty IMU sub-stream");
        Self {
            samples: self.samples[range].to_vec(),
            rate_hz: self.rate_hz,
        }
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZvLabel {
    pub t: f64,
    pub stationary: bool,
}

/// Time-stamped zero-velocity ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ZvLabelStream {
    labels: Vec<ZvLabel>,
}

impl ZvLabelStream {
    pub fn new(labels: Vec<ZvLabel>) -> Result<Self> {
        if labels.windows(2).any(|w| w[1].t <= w[0].t) {
            return invalid("label timestamps must be strictly increasing");
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[ZvLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
