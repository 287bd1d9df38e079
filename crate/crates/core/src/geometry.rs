//! 3-vectors, unit quaternions and rigid poses.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Cartesian 3-vector. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zeros() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Vec3::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Vec3::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Vec3::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        // hypot-style scaling is unnecessary at robot scales
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, o: &Self) -> T {
        (*self - *o).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn try_normalize(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(*self * n.recip())
        } else {
            None
        }
    }

    pub fn lerp(&self, o: &Self, s: T) -> Self {
        *self + (*o - *self) * s
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(&self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn cast<U: Real>(&self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rotation stored as a unit quaternion `(x, y, z, w)` with `w` the scalar part.
///
/// Every constructor renormalizes (input already unit to within a few ulps
/// is kept verbatim). The sign is left as given: `q` and `-q`
/// are distinct values that encode the same rotation, and hemisphere choice
/// is deferred to interpolation and trace construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[T; 4]")]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct UnitQuaternion<T> {
    x: T,
    y: T,
    z: T,
    w: T,
}

impl<T> From<UnitQuaternion<T>> for [T; 4] {
    fn from(q: UnitQuaternion<T>) -> Self {
        [q.x, q.y, q.z, q.w]
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for UnitQuaternion<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z, w] = <[T; 4]>::deserialize(d)?;
        UnitQuaternion::try_new(x, y, z, w)
            .ok_or_else(|| serde::de::Error::custom("quaternion must be finite and non-zero"))
    }
}

impl<T: Real> UnitQuaternion<T> {
    /// Normalizes `(x, y, z, w)`. Returns `None` for zero or non-finite input.
    pub fn try_new(x: T, y: T, z: T, w: T) -> Option<Self> {
        let n = (x * x + y * y + z * z + w * w).sqrt();
        if !(n.is_finite() && n > T::zero()) {
            return None;
        }
        // already unit to rounding; keeping it makes reloading idempotent
        if (n - T::one()).abs() <= T::lit(4.0) * T::epsilon() {
            return Some(UnitQuaternion { x, y, z, w });
        }
        Some(UnitQuaternion {
            x: x / n,
            y: y / n,
            z: z / n,
            w: w / n,
        })
    }

    /// Like [`try_new`](Self::try_new) but panics on degenerate input.
    pub fn new(x: T, y: T, z: T, w: T) -> Self {
        Self::try_new(x, y, z, w).expect("degenerate quaternion")
    }

    pub fn identity() -> Self {
        UnitQuaternion {
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
            w: T::one(),
        }
    }

    /// Rotation of `angle` radians about `axis`. A zero axis yields identity.
    pub fn from_axis_angle(axis: &Vec3<T>, angle: T) -> Self {
        let Some(u) = axis.try_normalize() else {
            return Self::identity();
        };
        let half = angle * T::lit(0.5);
        let s = half.sin();
        Self::new(u.x * s, u.y * s, u.z * s, half.cos())
    }

    /// Fixed-axis roll/pitch/yaw: roll about x, then pitch about y, then yaw
    /// about z, all in the parent frame (`R = Rz(yaw) * Ry(pitch) * Rx(roll)`).
    pub fn from_rpy(roll: T, pitch: T, yaw: T) -> Self {
        let qx = Self::from_axis_angle(&Vec3::unit_x(), roll);
        let qy = Self::from_axis_angle(&Vec3::unit_y(), pitch);
        let qz = Self::from_axis_angle(&Vec3::unit_z(), yaw);
        qz * qy * qx
    }

    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn z(&self) -> T {
        self.z
    }
    pub fn w(&self) -> T {
        self.w
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn vector_part(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z + self.w * o.w
    }

    pub fn conjugate(&self) -> Self {
        UnitQuaternion {
            x: -self.x,
            y: -self.y,
            z: -self.z,
            w: self.w,
        }
    }

    /// Rotates `v` by this quaternion.
    pub fn rotate(&self, v: &Vec3<T>) -> Vec3<T> {
        // v' = v + 2w(u x v) + 2 u x (u x v)
        let u = self.vector_part();
        let two = T::lit(2.0);
        let t = u.cross(v) * two;
        *v + t * self.w + u.cross(&t)
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> T {
        let c = self.w.abs().min(T::one());
        T::lit(2.0) * c.acos()
    }

    /// Geodesic distance on SO(3), `2 acos(|<p, q>|)`, sign-invariant.
    pub fn geodesic_distance(&self, o: &Self) -> T {
        let c = self.dot(o).abs().min(T::one());
        T::lit(2.0) * c.acos()
    }

    /// Representative with `w >= 0`; when `w == 0` the first non-zero of
    /// `(x, y, z)` is made positive.
    pub fn hemisphere_normalized(&self) -> Self {
        let flip = if self.w != T::zero() {
            self.w < T::zero()
        } else {
            [self.x, self.y, self.z]
                .into_iter()
                .find(|c| *c != T::zero())
                .is_some_and(|c| c < T::zero())
        };
        if flip {
            -*self
        } else {
            *self
        }
    }

    /// Spherical linear interpolation along the shorter arc.
    ///
    /// `s = 0` returns `self` and `s = 1` returns `other` exactly as stored.
    pub fn slerp(&self, other: &Self, s: T) -> Self {
        if s == T::zero() {
            return *self;
        }
        if s == T::one() {
            return *other;
        }
        let mut end = *other;
        let mut d = self.dot(other);
        if d < T::zero() {
            end = -end;
            d = -d;
        }
        let (k0, k1) = if d > T::one() - T::lit(1e-12) {
            // nearly parallel: normalized lerp is accurate and avoids 0/0
            (T::one() - s, s)
        } else {
            let theta = d.min(T::one()).acos();
            let sin_theta = theta.sin();
            (
                ((T::one() - s) * theta).sin() / sin_theta,
                (s * theta).sin() / sin_theta,
            )
        };
        Self::new(
            k0 * self.x + k1 * end.x,
            k0 * self.y + k1 * end.y,
            k0 * self.z + k1 * end.z,
            k0 * self.w + k1 * end.w,
        )
    }

    pub fn cast<U: Real>(&self) -> UnitQuaternion<U> {
        UnitQuaternion::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
            U::lit(self.w.as_f64()),
        )
    }
}

impl<T: Real> Neg for UnitQuaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        UnitQuaternion {
            x: -self.x,
            y: -self.y,
            z: -self.z,
            w: -self.w,
        }
    }
}

impl<T: Real> Mul for UnitQuaternion<T> {
    type Output = Self;
    /// Hamilton product; `a * b` applies `b` first.
    fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        )
    }
}

/// Rigid pose: position in meters plus orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Pose<T> {
    pub position: Vec3<T>,
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vec3<T>, orientation: UnitQuaternion<T>) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Pose::new(Vec3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_translation(position: Vec3<T>) -> Self {
        Pose::new(position, UnitQuaternion::identity())
    }

    pub fn from_rotation(orientation: UnitQuaternion<T>) -> Self {
        Pose::new(Vec3::zeros(), orientation)
    }

    /// `self ∘ other`: `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Pose {
            position: self.position + self.orientation.rotate(&other.position),
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn inverse(&self) -> Self {
        let r = self.orientation.conjugate();
        Pose::new(-r.rotate(&self.position), r)
    }

    pub fn transform_point(&self, p: &Vec3<T>) -> Vec3<T> {
        self.position + self.orientation.rotate(p)
    }
}
