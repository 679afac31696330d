//! Attitude and line-of-sight geometry.
//!
//! Attitudes are ZYX Euler triples (yaw ψ, pitch θ, roll φ) mapping the body
//! frame into the world frame as `R = Rz(ψ)·Ry(θ)·Rx(φ)`. Pointing mismatch
//! between a forecast attitude `R̂` and the realized attitude `R` is the
//! axis-angle vector `vee(log(R̂ᵀR))`.
//!
//! Steering angles follow the literal convention `θ̃ = arccos(u_z)`,
//! `φ̃ = atan2(u_y, u_x)` on the body-frame LoS direction `u = Rᵀe`, with no
//! boresight flip: a user directly below a level platform sits at `θ̃ = π`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GIMBAL_LOCK_MARGIN: f64 = 1e-9;
const SMALL_ANGLE: f64 = 1e-6;
const ANTIPODAL_MARGIN: f64 = 1e-9;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// ZYX Euler attitude in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerZYX {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerZYX {
    pub const LEVEL: EulerZYX = EulerZYX {
        yaw: 0.0,
        pitch: 0.0,
        roll: 0.0,
    };

    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn from_degrees(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self::new(yaw.to_radians(), pitch.to_radians(), roll.to_radians())
    }

    pub fn to_degrees(self) -> [f64; 3] {
        [
            self.yaw.to_degrees(),
            self.pitch.to_degrees(),
            self.roll.to_degrees(),
        ]
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }

    /// Same attitude with yaw and roll wrapped to `(-π, π]`.
    pub fn wrapped(self) -> Self {
        Self::new(wrap_pi(self.yaw), self.pitch, wrap_pi(self.roll))
    }

    pub fn is_finite(self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }
}

/// Proper rotation matrix (body → world).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking `RᵀR = I` and `det R = 1` within `tol`.
    pub fn from_matrix(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        let r = Rotation(m);
        if !r.is_proper(tol) {
            return Err(Error::InvalidArgument(
                "matrix is not a proper rotation".into(),
            ));
        }
        Ok(r)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Rotation(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Orthonormality and orientation check.
    pub fn is_proper(&self, tol: f64) -> bool {
        let ortho = (self.0.transpose() * self.0 - Matrix3::identity()).norm();
        ortho <= tol && (self.0.determinant() - 1.0).abs() <= tol
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Rodrigues exponential of an axis-angle vector.
    pub fn exp(omega: &Vector3<f64>) -> Self {
        let theta = omega.norm();
        let k = hat(omega);
        let (a, b) = if theta < SMALL_ANGLE {
            (1.0 - theta * theta / 6.0, 0.5 - theta * theta / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
        };
        Rotation(Matrix3::identity() + k * a + k * k * b)
    }
}

/// Skew-symmetric matrix `[v]×` with `[v]× w = v × w`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on the skew part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Axis-angle residual between two attitudes, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationResidual(pub Vector3<f64>);

impl RotationResidual {
    pub fn zero() -> Self {
        RotationResidual(Vector3::zeros())
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

pub fn euler_to_rotation(a: EulerZYX) -> Result<Rotation> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "non-finite attitude {a:?}"
        )));
    }
    Ok(Rotation::about_z(a.yaw)
        .compose(&Rotation::about_y(a.pitch))
        .compose(&Rotation::about_x(a.roll)))
}

pub fn rotation_to_euler(r: &Rotation) -> Result<EulerZYX> {
    let m = r.matrix();
    let r31 = m[(2, 0)];
    if r31.abs() > 1.0 - GIMBAL_LOCK_MARGIN {
        return Err(Error::DegenerateAttitude { r31 });
    }
    let pitch = (-r31).asin();
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    Ok(EulerZYX::new(wrap_pi(yaw), pitch, wrap_pi(roll)))
}

/// `vee(log(R̂ᵀR))`: the rotation taking the forecast body frame onto the
/// realized one, expressed in the forecast body frame.
///
/// Fails with [`Error::AmbiguousAxis`] (carrying the angle) when the relative
/// rotation is within 1e-9 rad of π.
pub fn rotation_log_vee(r_hat: &Rotation, r: &Rotation) -> Result<RotationResidual> {
    let rel = r_hat.matrix().transpose() * r.matrix();
    let axis_sin = vee(&rel); // = sin(θ)·axis
    let sin_theta = axis_sin.norm();
    let cos_theta = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = sin_theta.atan2(cos_theta);
    if theta < SMALL_ANGLE {
        // θ / sin θ ≈ 1 + θ²/6
        return Ok(RotationResidual(axis_sin * (1.0 + theta * theta / 6.0)));
    }
    if PI - theta < ANTIPODAL_MARGIN {
        return Err(Error::AmbiguousAxis { angle: theta });
    }
    Ok(RotationResidual(axis_sin * (theta / theta.sin())))
}

/// Geodesic angle between two rotations, defined everywhere including π.
pub fn rotation_angle_between(r_hat: &Rotation, r: &Rotation) -> f64 {
    let rel = r_hat.matrix().transpose() * r.matrix();
    let sin_theta = vee(&rel).norm();
    let cos_theta = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    sin_theta.atan2(cos_theta)
}

/// Body-frame steering angles `(θ̃, φ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    pub theta: f64,
    pub phi: f64,
}

impl SteeringAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Angles of a unit body-frame vector; `atan2(0, 0)` is taken as 0.
    pub fn from_direction(u: &Vector3<f64>) -> Self {
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let phi = if u.x == 0.0 && u.y == 0.0 {
            0.0
        } else {
            let p = u.y.atan2(u.x);
            if p == -PI {
                PI
            } else {
                p
            }
        };
        Self { theta, phi }
    }

    /// Unit direction `(sinθ̃ cosφ̃, sinθ̃ sinφ̃, cosθ̃)`.
    pub fn direction(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// Direction cosines `(s_x, s_y)` that drive the UPA phase progression.
    pub fn direction_cosines(&self) -> (f64, f64) {
        let d = self.direction();
        (d.x, d.y)
    }
}

/// Maps a world-frame LoS unit vector into the body frame of attitude `a`
/// and returns its steering angles.
pub fn los_to_body_angles(e: &Vector3<f64>, a: EulerZYX) -> Result<SteeringAngles> {
    if (e.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "LoS vector is not unit length (norm {})",
            e.norm()
        )));
    }
    let r = euler_to_rotation(a)?;
    Ok(SteeringAngles::from_direction(&r.transpose().apply(e)))
}

/// Body-frame direction `Rᵀe` for attitude `a`.
pub fn los_to_body(e: &Vector3<f64>, a: EulerZYX) -> Result<Vector3<f64>> {
    Ok(euler_to_rotation(a)?.transpose().apply(e))
}

/// HAP and ground-user positions with the derived per-user LoS.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldGeometry {
    pub hap: Vector3<f64>,
    pub users: Vec<Vector3<f64>>,
    pub los: Vec<Vector3<f64>>,
    pub distance: Vec<f64>,
}

impl WorldGeometry {
    pub fn new(hap: Vector3<f64>, users: Vec<Vector3<f64>>) -> Result<Self> {
        let mut los = Vec::with_capacity(users.len());
        let mut distance = Vec::with_capacity(users.len());
        for (k, u) in users.iter().enumerate() {
            let diff = u - hap;
            let d = diff.norm();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "user {k} coincides with the HAP"
                )));
            }
            let e = diff / d;
            if e.z >= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "user {k} is not below the HAP"
                )));
            }
            los.push(e);
            distance.push(d);
        }
        Ok(Self {
            hap,
            users,
            los,
            distance,
        })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}
