//! Depth accuracy metrics with a mirror / other / all breakdown, and mask
//! AP for mirror detections (optionally gated on normal angle error).
//!
//! Depth metrics only look at pixels whose ground truth exceeds `min_gt`;
//! smaller values mean the sensor returned nothing. Every per-region metric
//! takes a boolean selection of the same length as the maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::defaults::{self, DELTA_THRESHOLDS, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW};
use crate::error::{Error, Result};
use crate::geometry::{angle_between, Vec3};
use crate::imaging::{check_dims, iou, DepthMap, InstanceMask};

fn check_region(pred: &DepthMap, gt: &DepthMap, region: &[bool]) -> Result<usize> {
    check_dims(gt.dims(), pred.dims())?;
    if region.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: (region.len() as u32, 1),
        });
    }
    let n = region.iter().filter(|b| **b).count();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(n)
}

fn selected<'a>(
    pred: &'a DepthMap,
    gt: &'a DepthMap,
    region: &'a [bool],
) -> impl Iterator<Item = (f64, f64)> + 'a {
    pred.data()
        .iter()
        .zip(gt.data())
        .zip(region)
        .filter(|(_, r)| **r)
        .map(|((p, g), _)| (*p, *g))
}

/// Root mean squared error over the region.
pub fn rmse(pred: &DepthMap, gt: &DepthMap, region: &[bool]) -> Result<f64> {
    let n = check_region(pred, gt, region)?;
    let sum: f64 = selected(pred, gt, region).map(|(p, g)| (g - p) * (g - p)).sum();
    Ok((sum / n as f64).sqrt())
}

/// Least-squares scale `s = Σ gt·pred / Σ pred²` aligning pred to gt.
pub fn optimal_scale(pred: &DepthMap, gt: &DepthMap, region: &[bool]) -> Result<f64> {
    check_region(pred, gt, region)?;
    let (mut gp, mut pp) = (0.0, 0.0);
    for (p, g) in selected(pred, gt, region) {
        gp += g * p;
        pp += p * p;
    }
    if pp == 0.0 {
        return Err(Error::AllZeroPred);
    }
    Ok(gp / pp)
}

/// RMSE after aligning pred to gt with the optimal single scale.
pub fn s_rmse(pred: &DepthMap, gt: &DepthMap, region: &[bool]) -> Result<f64> {
    let s = optimal_scale(pred, gt, region)?;
    let n = region.iter().filter(|b| **b).count();
    let sum: f64 = selected(pred, gt, region)
        .map(|(p, g)| (g - s * p) * (g - s * p))
        .sum();
    Ok((sum / n as f64).sqrt())
}

/// Mean of `|gt − pred| / gt`.
pub fn abs_rel(pred: &DepthMap, gt: &DepthMap, region: &[bool]) -> Result<f64> {
    let n = check_region(pred, gt, region)?;
    let sum: f64 = selected(pred, gt, region)
        .map(|(p, g)| (g - p).abs() / g)
        .sum();
    Ok(sum / n as f64)
}

fn within_ratio(pred: f64, gt: f64, threshold: f64) -> bool {
    pred > 0.0 && gt > 0.0 && (gt / pred).max(pred / gt) < threshold
}

/// Fraction of region pixels with `max(gt/pred, pred/gt) < threshold`.
/// Non-positive predictions always fail.
pub fn delta(pred: &DepthMap, gt: &DepthMap, region: &[bool], threshold: f64) -> Result<f64> {
    let n = check_region(pred, gt, region)?;
    let hits = selected(pred, gt, region)
        .filter(|(p, g)| within_ratio(*p, *g, threshold))
        .count();
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SsimMode {
    /// 11×11 Gaussian window (σ = 1.5) around every region pixel, averaged.
    #[default]
    Gaussian,
    /// A single window spanning the whole region.
    Global,
}

fn ssim_formula(mx: f64, my: f64, vx: f64, vy: f64, cov: f64) -> f64 {
    ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2))
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as i64;
    (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect()
}

/// Per-pixel SSIM values for every region pixel, in row-major order.
/// Window statistics use only in-region pixels, with the Gaussian weights
/// renormalized over them.
fn ssim_values(pred: &DepthMap, gt: &DepthMap, region: &[bool]) -> Vec<f64> {
    let (w, h) = (gt.width() as i64, gt.height() as i64);
    let g = gaussian_kernel();
    let half = (SSIM_WINDOW / 2) as i64;
    let (x, y) = (gt.data(), pred.data());
    let mut out = Vec::new();
    let mut taps: Vec<(usize, f64)> = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for r in 0..h {
        for c in 0..w {
            if !region[(r * w + c) as usize] {
                continue;
            }
            taps.clear();
            for dy in -half..=half {
                let rr = r + dy;
                if rr < 0 || rr >= h {
                    continue;
                }
                for dx in -half..=half {
                    let cc = c + dx;
                    if cc < 0 || cc >= w {
                        continue;
                    }
                    let idx = (rr * w + cc) as usize;
                    if region[idx] {
                        taps.push((idx, g[(dy + half) as usize] * g[(dx + half) as usize]));
                    }
                }
            }
            let wsum: f64 = taps.iter().map(|t| t.1).sum();
            let mx = taps.iter().map(|&(i, wt)| wt * x[i]).sum::<f64>() / wsum;
            let my = taps.iter().map(|&(i, wt)| wt * y[i]).sum::<f64>() / wsum;
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for &(i, wt) in &taps {
                let (dx, dy) = (x[i] - mx, y[i] - my);
                vx += wt * dx * dx;
                vy += wt * dy * dy;
                cov += wt * dx * dy;
            }
            out.push(ssim_formula(mx, my, vx / wsum, vy / wsum, cov / wsum));
        }
    }
    out
}

fn ssim_global(pred: &DepthMap, gt: &DepthMap, region: &[bool], n: usize) -> f64 {
    let inv = 1.0 / n as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for (p, g) in selected(pred, gt, region) {
        mx += g;
        my += p;
    }
    mx *= inv;
    my *= inv;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (p, g) in selected(pred, gt, region) {
        vx += (g - mx) * (g - mx);
        vy += (p - my) * (p - my);
        cov += (g - mx) * (p - my);
    }
    ssim_formula(mx, my, vx * inv, vy * inv, cov * inv)
}

/// Structural similarity between pred and gt over the region.
pub fn ssim(pred: &DepthMap, gt: &DepthMap, region: &[bool], mode: SsimMode) -> Result<f64> {
    let n = check_region(pred, gt, region)?;
    Ok(match mode {
        SsimMode::Gaussian => ssim_values(pred, gt, region).iter().sum::<f64>() / n as f64,
        SsimMode::Global => ssim_global(pred, gt, region, n),
    })
}

fn delta_key(t: f64) -> String {
    format!("{t}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub rmse: f64,
    /// `None` when every prediction in the region is zero.
    pub s_rmse: Option<f64>,
    pub abs_rel: f64,
    pub ssim: f64,
    /// Keyed by the ratio threshold, e.g. `"1.25"`.
    pub delta: BTreeMap<String, f64>,
}

impl DepthMetrics {
    pub fn delta_at(&self, threshold: f64) -> Option<f64> {
        self.delta.get(&delta_key(threshold)).copied()
    }
}

/// Metrics for one region. A region without evaluated pixels is marked
/// `absent` and carries no metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub evaluated_px: usize,
    pub absent: bool,
    #[serde(flatten)]
    pub metrics: Option<DepthMetrics>,
}

impl RegionReport {
    fn absent() -> Self {
        Self {
            evaluated_px: 0,
            absent: true,
            metrics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mirror: RegionReport,
    pub other: RegionReport,
    pub all: RegionReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Mirror,
    Other,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub min_gt: f64,
    pub ssim_mode: SsimMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            min_gt: defaults::MIN_GT_DEPTH,
            ssim_mode: SsimMode::Gaussian,
        }
    }
}

/// Selections for the three regions after the validity filter.
pub fn region_masks(
    gt: &DepthMap,
    mirror_mask: &InstanceMask,
    min_gt: f64,
) -> Result<[(Region, Vec<bool>); 3]> {
    check_dims(gt.dims(), mirror_mask.dims())?;
    let valid: Vec<bool> = gt.data().iter().map(|g| *g > min_gt).collect();
    if !valid.iter().any(|v| *v) {
        return Err(Error::EmptyValidSet);
    }
    let mirror = valid
        .iter()
        .zip(mirror_mask.bits())
        .map(|(v, m)| *v && *m)
        .collect();
    let other = valid
        .iter()
        .zip(mirror_mask.bits())
        .map(|(v, m)| *v && !*m)
        .collect();
    Ok([
        (Region::Mirror, mirror),
        (Region::Other, other),
        (Region::All, valid),
    ])
}

fn region_report(
    pred: &DepthMap,
    gt: &DepthMap,
    region: &[bool],
    mode: SsimMode,
) -> Result<RegionReport> {
    let n = region.iter().filter(|b| **b).count();
    if n == 0 {
        return Ok(RegionReport::absent());
    }
    let s_rmse = match s_rmse(pred, gt, region) {
        Ok(v) => Some(v),
        Err(Error::AllZeroPred) => None,
        Err(e) => return Err(e),
    };
    let mut deltas = BTreeMap::new();
    for t in DELTA_THRESHOLDS {
        deltas.insert(delta_key(t), delta(pred, gt, region, t)?);
    }
    Ok(RegionReport {
        evaluated_px: n,
        absent: false,
        metrics: Some(DepthMetrics {
            rmse: rmse(pred, gt, region)?,
            s_rmse,
            abs_rel: abs_rel(pred, gt, region)?,
            ssim: ssim(pred, gt, region, mode)?,
            delta: deltas,
        }),
    })
}

/// Evaluate one frame. `mirror_mask` is the union of all ground-truth mirror
/// instances.
pub fn eval_depth(
    pred: &DepthMap,
    gt: &DepthMap,
    mirror_mask: &InstanceMask,
    opts: &EvalOptions,
) -> Result<MetricReport> {
    check_dims(gt.dims(), pred.dims())?;
    let [(_, mirror), (_, other), (_, all)] = region_masks(gt, mirror_mask, opts.min_gt)?;
    Ok(MetricReport {
        mirror: region_report(pred, gt, &mirror, opts.ssim_mode)?,
        other: region_report(pred, gt, &other, opts.ssim_mode)?,
        all: region_report(pred, gt, &all, opts.ssim_mode)?,
    })
}

/// Running sums for one region, so many frames can be pooled pixel-wise and
/// merged in any order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionAccumulator {
    pub count: usize,
    sum_sq_err: f64,
    /// Σ (gt − pred)·pred
    sum_err_pred: f64,
    sum_pred_sq: f64,
    sum_gt_pred: f64,
    sum_abs_rel: f64,
    sum_ssim: f64,
    delta_hits: [usize; DELTA_THRESHOLDS.len()],
}

impl RegionAccumulator {
    pub fn add_frame(
        &mut self,
        pred: &DepthMap,
        gt: &DepthMap,
        region: &[bool],
        mode: SsimMode,
    ) -> Result<()> {
        let n = match check_region(pred, gt, region) {
            Ok(n) => n,
            Err(Error::EmptyRegion) => return Ok(()),
            Err(e) => return Err(e),
        };
        for (p, g) in selected(pred, gt, region) {
            let e = g - p;
            self.sum_sq_err += e * e;
            self.sum_err_pred += e * p;
            self.sum_pred_sq += p * p;
            self.sum_gt_pred += g * p;
            self.sum_abs_rel += e.abs() / g;
            for (hits, t) in self.delta_hits.iter_mut().zip(DELTA_THRESHOLDS) {
                *hits += within_ratio(p, g, t) as usize;
            }
        }
        self.sum_ssim += match mode {
            SsimMode::Gaussian => ssim_values(pred, gt, region).iter().sum::<f64>(),
            SsimMode::Global => ssim_global(pred, gt, region, n) * n as f64,
        };
        self.count += n;
        Ok(())
    }

    pub fn merge(&mut self, other: &RegionAccumulator) {
        self.count += other.count;
        self.sum_sq_err += other.sum_sq_err;
        self.sum_err_pred += other.sum_err_pred;
        self.sum_pred_sq += other.sum_pred_sq;
        self.sum_gt_pred += other.sum_gt_pred;
        self.sum_abs_rel += other.sum_abs_rel;
        self.sum_ssim += other.sum_ssim;
        for (a, b) in self.delta_hits.iter_mut().zip(other.delta_hits) {
            *a += b;
        }
    }

    pub fn finalize(&self) -> RegionReport {
        if self.count == 0 {
            return RegionReport::absent();
        }
        let n = self.count as f64;
        // With e = gt − pred: Σ(gt − s·pred)² = Σe² + 2(1−s)Σe·pred + (1−s)²Σpred².
        // This form is exactly zero for pred = gt.
        let s_rmse = (self.sum_pred_sq > 0.0).then(|| {
            let s = self.sum_gt_pred / self.sum_pred_sq;
            let a = 1.0 - s;
            let sum = self.sum_sq_err + 2.0 * a * self.sum_err_pred + a * a * self.sum_pred_sq;
            (sum.max(0.0) / n).sqrt()
        });
        let delta = DELTA_THRESHOLDS
            .iter()
            .zip(self.delta_hits)
            .map(|(t, hits)| (delta_key(*t), hits as f64 / n))
            .collect();
        RegionReport {
            evaluated_px: self.count,
            absent: false,
            metrics: Some(DepthMetrics {
                rmse: (self.sum_sq_err / n).sqrt(),
                s_rmse,
                abs_rel: self.sum_abs_rel / n,
                ssim: self.sum_ssim / n,
                delta,
            }),
        }
    }
}

/// Pixel-pooled accumulation of the three regions across frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DepthAccumulator {
    pub mirror: RegionAccumulator,
    pub other: RegionAccumulator,
    pub all: RegionAccumulator,
    pub frames: usize,
}

impl DepthAccumulator {
    pub fn add_frame(
        &mut self,
        pred: &DepthMap,
        gt: &DepthMap,
        mirror_mask: &InstanceMask,
        opts: &EvalOptions,
    ) -> Result<()> {
        check_dims(gt.dims(), pred.dims())?;
        let [(_, mirror), (_, other), (_, all)] = region_masks(gt, mirror_mask, opts.min_gt)?;
        let mut next = self.clone();
        next.mirror.add_frame(pred, gt, &mirror, opts.ssim_mode)?;
        next.other.add_frame(pred, gt, &other, opts.ssim_mode)?;
        next.all.add_frame(pred, gt, &all, opts.ssim_mode)?;
        next.frames += 1;
        *self = next;
        Ok(())
    }

    pub fn merge(&mut self, other: &DepthAccumulator) {
        self.mirror.merge(&other.mirror);
        self.other.merge(&other.other);
        self.all.merge(&other.all);
        self.frames += other.frames;
    }

    pub fn finalize(&self) -> MetricReport {
        MetricReport {
            mirror: self.mirror.finalize(),
            other: self.other.finalize(),
            all: self.all.finalize(),
        }
    }
}

fn mean_region(reports: &[&RegionReport]) -> RegionReport {
    let evaluated_px = reports.iter().map(|r| r.evaluated_px).sum();
    let present: Vec<&DepthMetrics> = reports.iter().filter_map(|r| r.metrics.as_ref()).collect();
    if present.is_empty() {
        return RegionReport {
            evaluated_px,
            absent: true,
            metrics: None,
        };
    }
    let n = present.len() as f64;
    let mean = |f: &dyn Fn(&DepthMetrics) -> f64| present.iter().map(|m| f(m)).sum::<f64>() / n;
    let s_vals: Vec<f64> = present.iter().filter_map(|m| m.s_rmse).collect();
    let delta = present[0]
        .delta
        .keys()
        .map(|k| (k.clone(), mean(&|m| m.delta[k])))
        .collect();
    RegionReport {
        evaluated_px,
        absent: false,
        metrics: Some(DepthMetrics {
            rmse: mean(&|m| m.rmse),
            s_rmse: (!s_vals.is_empty()).then(|| s_vals.iter().sum::<f64>() / s_vals.len() as f64),
            abs_rel: mean(&|m| m.abs_rel),
            ssim: mean(&|m| m.ssim),
            delta,
        }),
    }
}

/// Per-frame averaging: each metric is the mean over frames in which the
/// region is present.
pub fn average_reports(reports: &[MetricReport]) -> MetricReport {
    let pick = |f: fn(&MetricReport) -> &RegionReport| {
        mean_region(&reports.iter().map(f).collect::<Vec<_>>())
    };
    MetricReport {
        mirror: pick(|r| &r.mirror),
        other: pick(|r| &r.other),
        all: pick(|r| &r.all),
    }
}

/// A predicted mirror instance.
#[derive(Debug, Clone)]
pub struct Detection {
    pub mask: InstanceMask,
    pub confidence: f64,
    pub normal: Option<Vec3>,
}

#[derive(Debug, Clone)]
pub struct GroundTruthInstance {
    pub mask: InstanceMask,
    pub normal: Vec3,
}

/// Predictions and ground truth of one frame; matching never crosses frames.
#[derive(Debug, Clone, Default)]
pub struct FrameDetections {
    pub predictions: Vec<Detection>,
    pub ground_truth: Vec<GroundTruthInstance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    /// Mask AP.
    Seg,
    /// Mask AP where a match also needs a normal angle error below 30°.
    SegAngle,
}

/// IoU thresholds 0.50, 0.55, …, 0.95, built as exact quotients.
pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// Area under the precision envelope sampled at 101 recall points.
fn interpolated_ap(tp: &[bool], total_gt: usize) -> f64 {
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (i, t) in tp.iter().enumerate() {
        hits += *t as usize;
        precision.push(hits as f64 / (i + 1) as f64);
        recall.push(hits as f64 / total_gt as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut sum = 0.0;
    for step in 0..=100 {
        let r = step as f64 / 100.0;
        let idx = recall.partition_point(|x| *x < r);
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    sum / 101.0
}

/// Mean AP over the ten IoU thresholds.
pub fn eval_detections(frames: &[FrameDetections], mode: ApMode) -> Result<f64> {
    let total_gt: usize = frames.iter().map(|f| f.ground_truth.len()).sum();
    if total_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    let angle_limit = defaults::AP_ANGLE_DEG;
    // (frame, prediction) pairs with their IoU and angle gate per GT.
    let mut order: Vec<(usize, usize, f64)> = Vec::new();
    let mut ious: Vec<Vec<Vec<f64>>> = Vec::with_capacity(frames.len());
    let mut angle_ok: Vec<Vec<Vec<bool>>> = Vec::with_capacity(frames.len());
    let mut global_idx = 0;
    for (fi, frame) in frames.iter().enumerate() {
        let mut frame_ious = Vec::with_capacity(frame.predictions.len());
        let mut frame_angles = Vec::with_capacity(frame.predictions.len());
        for (pi, det) in frame.predictions.iter().enumerate() {
            if !(det.confidence.is_finite() && (0.0..=1.0).contains(&det.confidence)) {
                return Err(Error::InvalidConfidence(det.confidence));
            }
            let normal = match (mode, det.normal) {
                (ApMode::SegAngle, None) => return Err(Error::MissingNormal(global_idx)),
                (_, n) => n,
            };
            let mut row_iou = Vec::with_capacity(frame.ground_truth.len());
            let mut row_angle = Vec::with_capacity(frame.ground_truth.len());
            for gt in &frame.ground_truth {
                row_iou.push(iou(&det.mask, &gt.mask)?);
                row_angle.push(match (mode, normal) {
                    (ApMode::Seg, _) => true,
                    (ApMode::SegAngle, Some(n)) => angle_between(&n, &gt.normal)? < angle_limit,
                    (ApMode::SegAngle, None) => unreachable!(),
                });
            }
            frame_ious.push(row_iou);
            frame_angles.push(row_angle);
            order.push((fi, pi, det.confidence));
            global_idx += 1;
        }
        ious.push(frame_ious);
        angle_ok.push(frame_angles);
    }
    // Stable sort keeps insertion order among equal confidences.
    order.sort_by(|a, b| b.2.total_cmp(&a.2));

    let thresholds = iou_thresholds();
    let mut total = 0.0;
    for t in thresholds {
        let mut matched: Vec<Vec<bool>> = frames
            .iter()
            .map(|f| vec![false; f.ground_truth.len()])
            .collect();
        let tp: Vec<bool> = order
            .iter()
            .map(|&(fi, pi, _)| {
                let mut best: Option<(usize, f64)> = None;
                for (gi, &v) in ious[fi][pi].iter().enumerate() {
                    if matched[fi][gi] || v < t || !angle_ok[fi][pi][gi] {
                        continue;
                    }
                    if best.is_none_or(|(_, bv)| v > bv) {
                        best = Some((gi, v));
                    }
                }
                if let Some((gi, _)) = best {
                    matched[fi][gi] = true;
                    true
                } else {
                    false
                }
            })
            .collect();
        total += interpolated_ap(&tp, total_gt);
    }
    Ok(total / thresholds.len() as f64)
}
