//! Rewriting mirror-region depth from an estimated plane.

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::geometry::{backproject, intersect_ray, CameraIntrinsics, Plane3D, Point3};
use crate::imaging::{border_band, check_dims, BandMetric, DepthMap, InstanceMask};
use crate::plane_fit::{offset_from_border, ransac_plane, CentroidRay, OffsetRule, RansacConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementResult {
    pub depth: DepthMap,
    pub replaced_px: usize,
    /// Mask pixels left untouched because their ray is parallel to the plane
    /// or meets it behind the camera.
    pub skipped_px: usize,
}

/// Replace every mask pixel with the depth where its ray meets `plane`.
pub fn refine_depth(
    depth: &DepthMap,
    mask: &InstanceMask,
    plane: &Plane3D,
    k: &CameraIntrinsics,
) -> Result<RefinementResult> {
    let mut out = depth.clone();
    let (replaced_px, skipped_px) = refine_in_place(&mut out, mask, plane, k)?;
    Ok(RefinementResult {
        depth: out,
        replaced_px,
        skipped_px,
    })
}

fn refine_in_place(
    depth: &mut DepthMap,
    mask: &InstanceMask,
    plane: &Plane3D,
    k: &CameraIntrinsics,
) -> Result<(usize, usize)> {
    check_dims(k.dims(), depth.dims())?;
    check_dims(depth.dims(), mask.dims())?;
    let w = depth.width() as usize;
    let (mut replaced, mut skipped) = (0, 0);
    for (idx, _) in mask.bits().iter().enumerate().filter(|(_, b)| **b) {
        let ray = k.ray((idx % w) as f64, (idx / w) as f64);
        match intersect_ray(&ray, plane) {
            Ok(z) => {
                depth.set_index(idx, z);
                replaced += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    Ok((replaced, skipped))
}

/// Settings for estimating a plane from the depth around a mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub band_width: u32,
    pub band_metric: BandMetric,
    pub ransac: RansacConfig,
    pub offset_rule: OffsetRule,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            band_width: defaults::BAND_WIDTH_PX,
            band_metric: BandMetric::Euclidean,
            ransac: RansacConfig::default(),
            offset_rule: OffsetRule::MeanProjection,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFit {
    pub plane: Plane3D,
    /// Valid border points (band pixels with a depth reading).
    pub border_points: usize,
    pub inliers: usize,
}

/// Estimate a mirror plane from the border band of `mask`.
///
/// Band pixels flagged in `exclude` (typically other mirrors) and pixels
/// without a reading are ignored. The normal comes from RANSAC over the
/// lifted band; the offset is then set from the RANSAC inliers with the
/// configured rule.
pub fn fit_instance_plane(
    depth: &DepthMap,
    mask: &InstanceMask,
    exclude: Option<&[bool]>,
    k: &CameraIntrinsics,
    cfg: &FitConfig,
) -> Result<InstanceFit> {
    check_dims(k.dims(), depth.dims())?;
    check_dims(depth.dims(), mask.dims())?;
    let band = border_band(mask, cfg.band_width, cfg.band_metric)?;
    let mut points = Vec::new();
    for (col, row) in band.pixels() {
        let idx = row as usize * depth.width() as usize + col as usize;
        if exclude.is_some_and(|ex| ex[idx]) {
            continue;
        }
        let z = depth.data()[idx];
        if z > 0.0 {
            points.push(backproject(col as f64, row as f64, z, k)?);
        }
    }
    if points.is_empty() {
        return Err(Error::NoBorderPoints);
    }
    let fit = ransac_plane(&points, &cfg.ransac)?;
    let inlier_points: Vec<Point3> = fit.inliers.iter().map(|&i| points[i]).collect();
    let centroid = mask.centroid().ok_or(Error::EmptyMask)?;
    let plane = offset_from_border(
        &fit.plane.normal(),
        &inlier_points,
        cfg.offset_rule,
        Some(CentroidRay {
            pixel: centroid,
            intrinsics: k,
        }),
    )?;
    Ok(InstanceFit {
        plane,
        border_points: points.len(),
        inliers: inlier_points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlaneSource {
    Given(Plane3D),
    /// Estimate from the border band.
    Auto,
}

#[derive(Debug, Clone)]
pub struct FrameInstance {
    pub mask: InstanceMask,
    pub plane: PlaneSource,
}

#[derive(Debug)]
pub struct InstanceOutcome {
    pub instance_id: u32,
    pub plane: Option<Plane3D>,
    pub fit: Option<InstanceFit>,
    pub replaced_px: usize,
    pub skipped_px: usize,
    pub error: Option<Error>,
}

#[derive(Debug)]
pub struct FrameRefinement {
    pub result: RefinementResult,
    /// One entry per instance, in application (instance_id) order.
    pub instances: Vec<InstanceOutcome>,
}

impl FrameRefinement {
    pub fn failures(&self) -> usize {
        self.instances.iter().filter(|i| i.error.is_some()).count()
    }
}

/// Refine every mirror instance of a frame.
///
/// Instances are applied in ascending `instance_id`, so a later instance wins
/// where masks overlap. Planes for `Auto` instances are all estimated from
/// the input depth with every mirror pixel excluded from the bands. A failing
/// instance leaves its pixels untouched, counts them as skipped and does not
/// stop the others.
pub fn refine_frame(
    depth: &DepthMap,
    instances: &[FrameInstance],
    k: &CameraIntrinsics,
    cfg: &FitConfig,
) -> Result<FrameRefinement> {
    check_dims(k.dims(), depth.dims())?;
    for inst in instances {
        check_dims(depth.dims(), inst.mask.dims())?;
    }
    let mut order: Vec<&FrameInstance> = instances.iter().collect();
    order.sort_by_key(|i| i.mask.instance_id);

    let mut mirror_px = vec![false; depth.len()];
    for inst in &order {
        for (slot, b) in mirror_px.iter_mut().zip(inst.mask.bits()) {
            *slot |= *b;
        }
    }

    let planes: Vec<Result<(Plane3D, Option<InstanceFit>)>> = order
        .iter()
        .map(|inst| match inst.plane {
            PlaneSource::Given(p) => Ok((p, None)),
            PlaneSource::Auto => fit_instance_plane(depth, &inst.mask, Some(&mirror_px), k, cfg)
                .map(|fit| (fit.plane, Some(fit))),
        })
        .collect();

    let mut out = depth.clone();
    let mut outcomes = Vec::with_capacity(order.len());
    let (mut replaced_total, mut skipped_total) = (0, 0);
    for (inst, plane) in order.iter().zip(planes) {
        let outcome = match plane.and_then(|(p, fit)| {
            refine_in_place(&mut out, &inst.mask, &p, k).map(|counts| (p, fit, counts))
        }) {
            Ok((p, fit, (replaced, skipped))) => InstanceOutcome {
                instance_id: inst.mask.instance_id,
                plane: Some(p),
                fit,
                replaced_px: replaced,
                skipped_px: skipped,
                error: None,
            },
            Err(e) => InstanceOutcome {
                instance_id: inst.mask.instance_id,
                plane: None,
                fit: None,
                replaced_px: 0,
                skipped_px: inst.mask.count(),
                error: Some(e),
            },
        };
        replaced_total += outcome.replaced_px;
        skipped_total += outcome.skipped_px;
        outcomes.push(outcome);
    }
    Ok(FrameRefinement {
        result: RefinementResult {
            depth: out,
            replaced_px: replaced_total,
            skipped_px: skipped_total,
        },
        instances: outcomes,
    })
}
