//! Rigid poses, wrenches and the few 3-vector helpers the contact model needs.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Row-major 3x3 rotation matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Fixed-axis X-Y-Z rotation: `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn rotation_xyz(r: Vec3) -> Mat3 {
    let (sr, cr) = r[0].sin_cos();
    let (sp, cp) = r[1].sin_cos();
    let (sy, cy) = r[2].sin_cos();
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

#[inline]
pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Peg pose: bottom-face centre (the TCP) in mm and (roll, pitch, yaw) in rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PegPose {
    pub p: Vec3,
    pub r: Vec3,
}

impl PegPose {
    pub fn new(p: Vec3, r: Vec3) -> Self {
        Self { p, r }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self { p: [x, y, z], r: [0.0; 3] }
    }

    /// Maps a point given in the peg frame to the world frame.
    pub fn transform(&self, local: Vec3) -> Vec3 {
        add(self.p, mat_vec(&rotation_xyz(self.r), local))
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.r.iter()).all(|v| v.is_finite())
    }
}

/// External wrench on the peg: force in N, torque about the TCP in N*cm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub f: Vec3,
    pub tau: Vec3,
}

impl Wrench {
    pub fn as_array(&self) -> [f64; 6] {
        [self.f[0], self.f[1], self.f[2], self.tau[0], self.tau[1], self.tau[2]]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|v| *v == 0.0)
    }
}

/// Planar rigid frame of the (true) hole relative to the nominal hole frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HoleFrame {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl HoleFrame {
    pub fn identity() -> Self {
        Self::default()
    }

    /// World point to hole frame.
    pub fn to_local(&self, w: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        let dx = w[0] - self.x;
        let dy = w[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy, w[2]]
    }

    /// Hole-frame direction to world frame.
    pub fn dir_to_world(&self, d: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        [c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]]
    }
}
