//! Pinhole camera model and plane algebra in the camera frame.
//!
//! The camera looks down +z, x points right and y points down. Depth is the
//! z coordinate of a point, not the length of its viewing ray.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Point3 = nalgebra::Point3<f64>;

const PARALLEL_EPS: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-6;

/// Pinhole intrinsics. Pixel coordinates address pixel centers, so pixel
/// `(col, row)` corresponds to `u = col`, `v = row`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite() && self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::InvalidIntrinsics(format!(
                "cx={} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidIntrinsics(format!(
                "cy={} outside [0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    fn check_bounds(&self, u: f64, v: f64) -> Result<()> {
        if self.contains(u, v) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                u,
                v,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Viewing ray through `(u, v)`, scaled so its z component is 1.
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Project a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &Point3) -> (f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// Lift pixel `(u, v)` with z-depth `depth` to a camera-frame point.
pub fn backproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Point3> {
    if !(depth > 0.0) {
        return Err(Error::NonPositiveDepth(depth));
    }
    k.check_bounds(u, v)?;
    Ok(Point3::new(
        (u - k.cx) / k.fx * depth,
        (v - k.cy) / k.fy * depth,
        depth,
    ))
}

/// A plane `{p : n·p = d}` with unit normal in canonical (camera-facing) sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane3D {
    normal: Vec3,
    offset: f64,
}

impl Plane3D {
    /// Build a plane from any nonzero normal; the result is normalized and
    /// sign-canonicalized.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        canonicalize(normal, offset)
    }

    /// Plane through `point` with the given normal direction.
    pub fn from_point_normal(point: &Point3, normal: Vec3) -> Result<Self> {
        let offset = normal.dot(&point.coords);
        canonicalize(normal, offset)
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance `n·p − d`. Negative means behind the plane as seen
    /// from the camera.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

/// Normalize a plane and fix its sign: `n_z ≤ 0`, and when `n_z = 0` the
/// first nonzero of `(n_x, n_y)` is positive.
pub fn canonicalize(normal: Vec3, offset: f64) -> Result<Plane3D> {
    let norm = normal.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNormal);
    }
    let (mut n, mut d) = if norm == 1.0 {
        (normal, offset)
    } else {
        (normal / norm, offset / norm)
    };
    let flip = if n.z != 0.0 {
        n.z > 0.0
    } else if n.x != 0.0 {
        n.x < 0.0
    } else {
        n.y < 0.0
    };
    if flip {
        n = -n;
        d = -d;
    }
    // Adding +0.0 turns negative zeros into positive ones.
    n.apply(|c| *c += 0.0);
    Ok(Plane3D {
        normal: n,
        offset: d,
    })
}

/// Unit normal in canonical sign.
pub fn canonical_normal(normal: Vec3) -> Result<Vec3> {
    Ok(canonicalize(normal, 0.0)?.normal)
}

/// Z-depth at which the viewing ray through `(u, v)` meets `plane`.
pub fn ray_plane_depth(u: f64, v: f64, plane: &Plane3D, k: &CameraIntrinsics) -> Result<f64> {
    k.check_bounds(u, v)?;
    intersect_ray(&k.ray(u, v), plane)
}

/// Intersection depth for a ray already expressed with unit z component.
pub(crate) fn intersect_ray(dir: &Vec3, plane: &Plane3D) -> Result<f64> {
    let nd = plane.normal.dot(dir);
    if nd.abs() < PARALLEL_EPS {
        return Err(Error::RayParallel);
    }
    let z = plane.offset / nd;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::BehindCamera(z));
    }
    Ok(z)
}

/// Angle between two unit vectors, in degrees. Uses `atan2(|a×b|, a·b)`,
/// which stays accurate for nearly parallel vectors where `acos` does not.
pub fn angle_between(a: &Vec3, b: &Vec3) -> Result<f64> {
    for v in [a, b] {
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitInput(n));
        }
    }
    Ok(a.cross(b).norm().atan2(a.dot(b)).to_degrees())
}

#[derive(Serialize, Deserialize)]
struct PlaneJson {
    normal: [f64; 3],
    offset: f64,
}

impl Serialize for Plane3D {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlaneJson {
            normal: [self.normal.x, self.normal.y, self.normal.z],
            offset: self.offset,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Plane3D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PlaneJson::deserialize(d)?;
        canonicalize(Vec3::from(raw.normal), raw.offset).map_err(serde::de::Error::custom)
    }
}
