//! Analytic box-room scenes with one rectangular mirror.
//!
//! The room is an axis-aligned box in world coordinates (x right, y down,
//! z forward). A camera sits inside it with a yaw / pitch / roll pose, and
//! the mirror is a rectangle lying in the room. Ground truth comes from
//! exact ray casting; [`corrupt`] then fakes what a depth sensor reports.

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::geometry::{backproject, ray_plane_depth, CameraIntrinsics, Plane3D, Point3, Vec3};
use crate::imaging::{border_band, BandMetric, DepthMap, InstanceMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Room {
    fn contains_strictly(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] > self.min[i] && p[i] < self.max[i])
    }

    fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    /// Distance along `dir` from `origin` (inside the box) to the box surface.
    fn exit(&self, origin: &Vec3, dir: &Vec3) -> f64 {
        (0..3)
            .filter(|&i| dir[i] != 0.0)
            .map(|i| {
                let bound = if dir[i] > 0.0 { self.max[i] } else { self.min[i] };
                (bound - origin[i]) / dir[i]
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    /// Rotation about the world y axis, degrees.
    pub yaw_deg: f64,
    /// Rotation about the camera x axis, degrees.
    pub pitch_deg: f64,
    /// Rotation about the optical axis, degrees.
    pub roll_deg: f64,
}

impl CameraPose {
    /// Camera-to-world rotation.
    pub fn rotation(&self) -> Rotation3<f64> {
        let ry = Rotation3::from_axis_angle(&Vec3::y_axis(), self.yaw_deg.to_radians());
        let rx = Rotation3::from_axis_angle(&Vec3::x_axis(), self.pitch_deg.to_radians());
        let rz = Rotation3::from_axis_angle(&Vec3::z_axis(), self.roll_deg.to_radians());
        ry * rx * rz
    }

    fn origin(&self) -> Vec3 {
        Vec3::from(self.position)
    }
}

/// Rectangle spanned by two orthogonal in-plane axes around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorRect {
    pub center: [f64; 3],
    pub axis_u: [f64; 3],
    pub axis_v: [f64; 3],
    pub half_extents: [f64; 2],
}

impl MirrorRect {
    fn axes(&self) -> Result<(Vec3, Vec3)> {
        let u = Vec3::from(self.axis_u);
        let v = Vec3::from(self.axis_v);
        let (nu, nv) = (u.norm(), v.norm());
        if !(nu > 0.0 && nv > 0.0 && nu.is_finite() && nv.is_finite()) {
            return Err(Error::InvalidScene("mirror axes must be nonzero".into()));
        }
        let (u, v) = (u / nu, v / nv);
        if u.dot(&v).abs() > 1e-9 {
            return Err(Error::InvalidScene("mirror axes must be orthogonal".into()));
        }
        Ok((u, v))
    }

    fn corners(&self) -> Result<[Vec3; 4]> {
        let (u, v) = self.axes()?;
        let c = Vec3::from(self.center);
        let (a, b) = (u * self.half_extents[0], v * self.half_extents[1]);
        Ok([c + a + b, c + a - b, c - a + b, c - a - b])
    }

    /// World-frame plane through the rectangle.
    fn world_plane(&self) -> Result<(Vec3, f64)> {
        let (u, v) = self.axes()?;
        let n = u.cross(&v).normalize();
        Ok((n, n.dot(&Vec3::from(self.center))))
    }

    fn contains(&self, q: &Vec3) -> bool {
        let Ok((u, v)) = self.axes() else {
            return false;
        };
        let r = q - Vec3::from(self.center);
        r.dot(&u).abs() <= self.half_extents[0] && r.dot(&v).abs() <= self.half_extents[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Mirror pixels report the reflected scene, beyond the glass.
    #[default]
    BehindPlane,
    /// Mirror pixels drop to zero with probability `outlier_fraction`.
    Dropout,
    /// Reflected scene, then dropout.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room: Room,
    pub camera: CameraPose,
    pub mirror: MirrorRect,
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub corruption: Corruption,
    /// Standard deviation of Gaussian depth noise on border-band pixels.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Dropout probability for mirror pixels.
    #[serde(default)]
    pub outlier_fraction: f64,
    /// Fraction of border-band pixels pushed far off the wall.
    #[serde(default)]
    pub band_outlier_fraction: f64,
    #[serde(default = "default_band_width")]
    pub band_width: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_band_width() -> u32 {
    defaults::BAND_WIDTH_PX
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        let r = &self.room;
        if !(0..3).all(|i| r.min[i].is_finite() && r.max[i].is_finite() && r.min[i] < r.max[i]) {
            return Err(Error::InvalidScene("room extents must be finite and positive".into()));
        }
        if !self.room.contains_strictly(&self.camera.origin()) {
            return Err(Error::CameraOutsideRoom);
        }
        let he = self.mirror.half_extents;
        if !(he[0] > 0.0 && he[1] > 0.0 && he[0].is_finite() && he[1].is_finite()) {
            return Err(Error::InvalidScene("mirror half extents must be positive".into()));
        }
        if !self.mirror.corners()?.iter().all(|c| self.room.contains(c, 1e-9)) {
            return Err(Error::InvalidScene("mirror must lie inside the room".into()));
        }
        for (name, f) in [
            ("outlier_fraction", self.outlier_fraction),
            ("band_outlier_fraction", self.band_outlier_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidScene(format!("{name} must be in [0, 1], got {f}")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidScene("noise_sigma must be finite and non-negative".into()));
        }
        if self.band_width < 1 {
            return Err(Error::InvalidScene("band_width must be at least 1".into()));
        }
        Ok(())
    }

    /// Mirror plane in camera coordinates.
    pub fn camera_plane(&self) -> Result<Plane3D> {
        let (n_w, d_w) = self.mirror.world_plane()?;
        let rot = self.camera.rotation();
        let c = self.camera.origin();
        Plane3D::new(rot.inverse() * n_w, d_w - n_w.dot(&c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub gt: DepthMap,
    pub mask: InstanceMask,
    /// Mirror plane in camera coordinates.
    pub plane: Plane3D,
}

/// Per-pixel mirror hit: world-space hit point and unit world direction.
struct MirrorHit {
    point: Vec3,
    dir: Vec3,
}

fn cast(spec: &SceneSpec, rot: &Rotation3<f64>, col: u32, row: u32) -> (f64, Option<MirrorHit>) {
    let k = &spec.intrinsics;
    let c = spec.camera.origin();
    let dir = rot * k.ray(col as f64, row as f64);
    let t_wall = spec.room.exit(&c, &dir);
    let Ok((n, d)) = spec.mirror.world_plane() else {
        return (t_wall, None);
    };
    let denom = n.dot(&dir);
    if denom != 0.0 {
        let t = (d - n.dot(&c)) / denom;
        let q = c + dir * t;
        if t > 0.0 && t <= t_wall * (1.0 + 1e-9) && spec.mirror.contains(&q) {
            return (
                t,
                Some(MirrorHit {
                    point: q,
                    dir: dir.normalize(),
                }),
            );
        }
    }
    (t_wall, None)
}

/// Ground-truth depth, mirror mask (instance id 1) and camera-frame plane.
/// Mirror pixels carry the exact ray/plane depth.
pub fn render_gt(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let k = &spec.intrinsics;
    let plane = spec.camera_plane()?;
    let rot = spec.camera.rotation();
    let (w, h) = k.dims();
    let rows: Vec<Vec<(f64, bool)>> = (0..h)
        .into_par_iter()
        .map(|row| {
            (0..w)
                .map(|col| match cast(spec, &rot, col, row) {
                    (_, Some(_)) => {
                        let z = ray_plane_depth(col as f64, row as f64, &plane, k)
                            .expect("mirror hit lies in front of the camera");
                        (z, true)
                    }
                    (t, None) => (t, false),
                })
                .collect()
        })
        .collect();
    let (depth, bits): (Vec<f64>, Vec<bool>) = rows.into_iter().flatten().unzip();
    Ok(RenderedScene {
        gt: DepthMap::new(w, h, depth, defaults::DEPTH_SCALE)?,
        mask: InstanceMask::new(w, h, bits, 1)?,
        plane,
    })
}

/// Depth reported for a mirror pixel when the sensor sees the reflection:
/// the path continues past the glass by the length of the reflected ray.
fn virtual_depth(spec: &SceneSpec, hit: &MirrorHit, plane_depth: f64, ray_len: f64) -> f64 {
    let (n, _) = spec.mirror.world_plane().expect("validated");
    let reflected = hit.dir - n * (2.0 * hit.dir.dot(&n));
    let s = spec.room.exit(&hit.point, &reflected).max(0.0);
    plane_depth + s / ray_len
}

/// Sensor-style depth for a rendered scene. Deterministic for a given seed;
/// random draws happen in row-major pixel order.
pub fn corrupt(scene: &RenderedScene, spec: &SceneSpec) -> Result<DepthMap> {
    spec.validate()?;
    let k = &spec.intrinsics;
    let rot = spec.camera.rotation();
    let (w, h) = scene.gt.dims();
    let mut out = scene.gt.clone();
    let band = if scene.mask.is_empty() {
        None
    } else {
        Some(border_band(&scene.mask, spec.band_width, BandMetric::Euclidean)?)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidScene(e.to_string()))?;
    let reflect = matches!(spec.corruption, Corruption::BehindPlane | Corruption::Mixed);
    let dropout = matches!(spec.corruption, Corruption::Dropout | Corruption::Mixed);

    for row in 0..h {
        for col in 0..w {
            let idx = (row * w + col) as usize;
            let gt = scene.gt.data()[idx];
            if scene.mask.bits()[idx] {
                let mut z = gt;
                if reflect {
                    if let (_, Some(hit)) = cast(spec, &rot, col, row) {
                        let ray_len = k.ray(col as f64, row as f64).norm();
                        z = virtual_depth(spec, &hit, gt, ray_len);
                    }
                }
                if dropout && rng.random::<f64>() < spec.outlier_fraction {
                    z = 0.0;
                }
                out.set(col, row, z);
            } else if band.as_ref().is_some_and(|b| b.bits.bits()[idx]) && gt > 0.0 {
                let mut z = gt + noise.sample(&mut rng);
                if rng.random::<f64>() < spec.band_outlier_fraction {
                    let magnitude = rng.random_range(0.05..0.5);
                    z = if rng.random::<bool>() { z + magnitude } else { z - magnitude };
                }
                if z <= 0.0 {
                    z = gt + 0.05;
                }
                out.set(col, row, z);
            }
        }
    }
    Ok(out)
}

/// Default camera for generated scenes: 256×192, 220 px focal length.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(220.0, 220.0, 127.5, 95.5, 256, 192).expect("valid intrinsics")
}

/// Minimum mirror pixels and valid border points a generated scene must have.
const MIN_MIRROR_PX: usize = 200;
const MIN_BAND_PX: usize = 300;
const MAX_ATTEMPTS: usize = 10_000;

/// A random room, pose and wall-mounted mirror for the given seed.
///
/// The mirror sits on the wall the optical axis hits. Scenes are redrawn until
/// the mirror covers at least a few hundred pixels and every border-band pixel
/// lies on the mirror's wall, so the band determines the plane exactly.
/// Noise and corruption fields are left at zero / `BehindPlane` with the seed
/// copied through.
pub fn random_scene(seed: u64, intrinsics: &CameraIntrinsics, band_width: u32) -> Result<SceneSpec> {
    intrinsics.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let half = [
            rng.random_range(1.5..3.0),
            rng.random_range(1.2..1.6),
            rng.random_range(1.5..3.5),
        ];
        let room = Room {
            min: [-half[0], -half[1], -half[2]],
            max: half,
        };
        let margin = 0.6;
        let position = [
            rng.random_range(-half[0] + margin..half[0] - margin),
            rng.random_range(-half[1] + margin..half[1] - margin),
            rng.random_range(-half[2] + margin..half[2] - margin),
        ];
        let camera = CameraPose {
            position,
            yaw_deg: rng.random_range(-180.0..180.0),
            pitch_deg: rng.random_range(-20.0..20.0),
            roll_deg: rng.random_range(-10.0..10.0),
        };
        let c = Vec3::from(position);
        let axis = camera.rotation() * Vec3::z();
        let t = room.exit(&c, &axis);
        let hit = c + axis * t;
        // Wall axis: the coordinate that sits on a bound.
        let wall = (0..3)
            .min_by(|&a, &b| {
                let da = (hit[a] - room.min[a]).abs().min((hit[a] - room.max[a]).abs());
                let db = (hit[b] - room.min[b]).abs().min((hit[b] - room.max[b]).abs());
                da.total_cmp(&db)
            })
            .expect("three axes");
        let (ia, ib) = match wall {
            0 => (2, 1),
            1 => (0, 2),
            _ => (0, 1),
        };
        let wall_margin = 0.15;
        let mut center = hit;
        let mut half_extents = [0.0; 2];
        let mut ok = true;
        for (slot, i) in [ia, ib].into_iter().enumerate() {
            let lo = room.min[i] + wall_margin;
            let hi = room.max[i] - wall_margin;
            let c_i = (hit[i] + rng.random_range(-0.3..0.3)).clamp(lo + 0.2, hi - 0.2);
            let room_for = (c_i - lo).min(hi - c_i);
            if room_for < 0.2 {
                ok = false;
                break;
            }
            center[i] = c_i;
            half_extents[slot] = rng.random_range(0.2..room_for.min(1.0));
        }
        if !ok {
            continue;
        }
        let mut axis_u = [0.0; 3];
        let mut axis_v = [0.0; 3];
        axis_u[ia] = 1.0;
        axis_v[ib] = 1.0;
        let spec = SceneSpec {
            room,
            camera,
            mirror: MirrorRect {
                center: center.into(),
                axis_u,
                axis_v,
                half_extents,
            },
            intrinsics: *intrinsics,
            corruption: Corruption::BehindPlane,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            band_outlier_fraction: 0.0,
            band_width,
            seed,
        };
        if usable(&spec)? {
            return Ok(spec);
        }
    }
    Err(Error::InvalidScene(format!(
        "no usable scene after {MAX_ATTEMPTS} attempts"
    )))
}

fn usable(spec: &SceneSpec) -> Result<bool> {
    let scene = render_gt(spec)?;
    if scene.mask.count() < MIN_MIRROR_PX {
        return Ok(false);
    }
    let band = border_band(&scene.mask, spec.band_width, BandMetric::Euclidean)?;
    if band.count() < MIN_BAND_PX {
        return Ok(false);
    }
    let k = &spec.intrinsics;
    for (col, row) in band.pixels() {
        let z = scene.gt.get(col, row);
        let p: Point3 = backproject(col as f64, row as f64, z, k)?;
        if scene.plane.signed_distance(&p).abs() > 1e-9 {
            return Ok(false);
        }
    }
    // Keep the camera on the side where "behind the glass" reads n·p < d.
    if scene.plane.offset() >= 0.0 {
        return Ok(false);
    }
    // Grazing views make tiny pixel offsets into large depth changes.
    let view = Unit::new_normalize(k.ray(k.cx, k.cy));
    if scene.plane.normal().dot(&view).abs() < 0.25 {
        return Ok(false);
    }
    Ok(true)
}
