//! Vector primitives, oriented surfaces, and specular reflection geometry.
//!
//! Conventions used everywhere in this crate:
//!
//! * room frame: `x`/`y` span the floor, `z` points up, right-handed;
//! * angles in config and public signatures are degrees, radians appear
//!   only inside implementations;
//! * surface normals are unit vectors pointing into the room.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::float::{sin_cos_deg, Real};

/// Cartesian point or direction in the room frame.
///
/// Serializes as a three-element array `[x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<F> {
    pub x: F,
    pub y: F,
    pub z: F,
}

impl<F> From<[F; 3]> for Vec3<F> {
    fn from(a: [F; 3]) -> Self {
        let [x, y, z] = a;
        Self { x, y, z }
    }
}

impl<F> From<Vec3<F>> for [F; 3] {
    fn from(v: Vec3<F>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<F: Serialize> Serialize for Vec3<F> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.x)?;
        t.serialize_element(&self.y)?;
        t.serialize_element(&self.z)?;
        t.end()
    }
}

impl<'de, F: Deserialize<'de>> Deserialize<'de> for Vec3<F> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        <[F; 3]>::deserialize(deserializer).map(Self::from)
    }
}

impl<F: Real> Vec3<F> {
    pub fn new(x: F, y: F, z: F) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero(), F::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(F::one(), F::zero(), F::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(F::zero(), F::one(), F::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(F::zero(), F::zero(), F::one())
    }

    pub fn dot(self, rhs: Self) -> F {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Self) -> Self {
        Self::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm_squared(self) -> F {
        self.dot(self)
    }

    pub fn norm(self) -> F {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. Input must be nonzero.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        debug_assert!(n > F::zero(), "normalized() on zero vector");
        self / n
    }

    pub fn distance(self, other: Self) -> F {
        (other - self).norm()
    }
}

impl<F: Real> Add for Vec3<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<F: Real> Sub for Vec3<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<F: Real> Neg for Vec3<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<F: Real> Mul<F> for Vec3<F> {
    type Output = Self;
    fn mul(self, s: F) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<F: Real> Div<F> for Vec3<F> {
    type Output = Self;
    fn div(self, s: F) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Errors from the low-level geometric kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryError {
    /// Source and destination coincide, so no propagation direction exists.
    CoincidentPoints,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CoincidentPoints => write!(f, "source and destination points coincide"),
        }
    }
}

impl std::error::Error for GeometryError {}

/// Applies the pose rotation `R_z(yaw) * R_x(roll)` to a direction.
///
/// Roll turns about the room `x` axis, yaw about `z`, both right-handed;
/// roll is applied first. `(0, 0)` returns the input unchanged.
pub fn rotate_normal<F: Real>(base_normal: Vec3<F>, roll_deg: F, yaw_deg: F) -> Vec3<F> {
    let (sr, cr) = sin_cos_deg(roll_deg);
    let (sy, cy) = sin_cos_deg(yaw_deg);
    let v = base_normal;
    let rolled = Vec3::new(v.x, cr * v.y - sr * v.z, sr * v.y + cr * v.z);
    Vec3::new(
        cy * rolled.x - sy * rolled.y,
        sy * rolled.x + cy * rolled.y,
        rolled.z,
    )
}

/// Radiation and incidence cosines of the direct segment `src -> dst`.
///
/// Returns `(cos_at_src, cos_at_dst, distance)` with both cosines clamped
/// to zero when the segment leaves through the back of either surface.
/// Coincident endpoints have no direction and are rejected.
pub fn incidence_cosines<F: Real>(
    src: Vec3<F>,
    src_normal: Vec3<F>,
    dst: Vec3<F>,
    dst_normal: Vec3<F>,
) -> Result<(F, F, F), GeometryError> {
    let offset = dst - src;
    let distance = offset.norm();
    if distance == F::zero() {
        return Err(GeometryError::CoincidentPoints);
    }
    let dir = offset / distance;
    let cos_src = src_normal.dot(dir).max(F::zero());
    let cos_dst = dst_normal.dot(-dir).max(F::zero());
    Ok((cos_src, cos_dst, distance))
}

/// Field-of-view test on a precomputed incidence cosine, boundary inclusive.
pub fn within_fov<F: Real>(cos_incidence: F, fov_deg: F) -> bool {
    cos_incidence >= crate::float::cos_deg(fov_deg)
}

/// One receiver branch of an angle-diversity detector.
///
/// The branch normal in room coordinates is
/// `(cos EL cos AZ, cos EL sin AZ, sin EL)` with azimuth measured from
/// `+x` toward `+y` and elevation up from the horizontal plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchOrientation<F> {
    pub azimuth_deg: F,
    pub elevation_deg: F,
    pub fov_deg: F,
}

impl<F: Real> BranchOrientation<F> {
    pub fn normal(&self) -> Vec3<F> {
        let (se, ce) = sin_cos_deg(self.elevation_deg);
        let (sa, ca) = sin_cos_deg(self.azimuth_deg);
        Vec3::new(ce * ca, ce * sa, se)
    }

    pub fn cos_fov(&self) -> F {
        crate::float::cos_deg(self.fov_deg)
    }
}

/// Placement and orientation of one finite rectangular mirror.
///
/// `base_normal` is the mounting-surface normal; the actual facet normal is
/// `rotate_normal(base_normal, roll_deg, yaw_deg)`. Extents are half the
/// facet side lengths, measured along the rotated in-plane axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorPose<F> {
    pub center: Vec3<F>,
    pub base_normal: Vec3<F>,
    pub roll_deg: F,
    pub yaw_deg: F,
    pub half_width_m: F,
    pub half_height_m: F,
}

impl<F: Real> MirrorPose<F> {
    /// Facet normal after the pose rotation.
    pub fn normal(&self) -> Vec3<F> {
        rotate_normal(self.base_normal, self.roll_deg, self.yaw_deg)
    }

    /// Right-handed local frame `(u, v, n)` of the rotated facet.
    ///
    /// Before rotation `v` is the projection of room `+z` onto the facet
    /// (room `+y` when the base normal is within ~25 degrees of vertical),
    /// so `v` tracks "up along the mirror" and `u` completes the frame.
    pub fn axes(&self) -> (Vec3<F>, Vec3<F>, Vec3<F>) {
        let n0 = self.base_normal;
        let reference = if n0.z.abs() > F::of(0.9) {
            Vec3::unit_y()
        } else {
            Vec3::unit_z()
        };
        let v0 = (reference - n0 * reference.dot(n0)).normalized();
        let u0 = v0.cross(n0);
        (
            rotate_normal(u0, self.roll_deg, self.yaw_deg),
            rotate_normal(v0, self.roll_deg, self.yaw_deg),
            rotate_normal(n0, self.roll_deg, self.yaw_deg),
        )
    }
}

/// Mirror image of `point` across the facet plane of `mirror`.
pub fn image_point<F: Real>(point: Vec3<F>, mirror: &MirrorPose<F>) -> Vec3<F> {
    let n = mirror.normal();
    let s = (point - mirror.center).dot(n);
    point - n * (s + s)
}

/// Point on the facet where the specular path `src -> mirror -> dst` bounces.
///
/// Exists only when both endpoints are strictly on the front side of the
/// facet plane and the bounce lands inside the finite extent; `None`
/// otherwise. The construction intersects the segment from `image(src)` to
/// `dst` with the plane, which enforces the equal-angle reflection law.
pub fn specular_point<F: Real>(
    src: Vec3<F>,
    dst: Vec3<F>,
    mirror: &MirrorPose<F>,
) -> Option<Vec3<F>> {
    let (u, v, n) = mirror.axes();
    let s_src = (src - mirror.center).dot(n);
    let s_dst = (dst - mirror.center).dot(n);
    if s_src <= F::zero() || s_dst <= F::zero() {
        return None;
    }
    let image = src - n * (s_src + s_src);
    // Signed plane distances of image and dst are -s_src and +s_dst, so the
    // crossing sits at parameter s_src / (s_src + s_dst) along the segment.
    let t = s_src / (s_src + s_dst);
    let point = image + (dst - image) * t;
    let local = point - mirror.center;
    if local.dot(u).abs() <= mirror.half_width_m && local.dot(v).abs() <= mirror.half_height_m {
        Some(point)
    } else {
        None
    }
}
