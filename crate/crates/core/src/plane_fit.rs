//! Mirror plane estimation from border points, plus the anchor-normal
//! codebook used to express a normal as (nearest anchor, residual).

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::geometry::{backproject, canonical_normal, CameraIntrinsics, Plane3D, Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Maximum point-to-plane distance of an inlier, meters.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    /// The consensus must also cover this fraction of the input points.
    pub min_inlier_fraction: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: defaults::RANSAC_ITERATIONS,
            inlier_threshold: defaults::RANSAC_INLIER_THRESHOLD,
            min_inliers: defaults::RANSAC_MIN_INLIERS,
            min_inlier_fraction: defaults::RANSAC_MIN_INLIER_FRACTION,
            seed: defaults::RANSAC_SEED,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("ransac iterations must be >= 1".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "ransac inlier threshold must be positive".into(),
            ));
        }
        if self.min_inliers < 3 {
            return Err(Error::InvalidConfig("ransac min_inliers must be >= 3".into()));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::InvalidConfig(
                "ransac min_inlier_fraction must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Inlier count required for `n` input points.
    pub fn required_inliers(&self, n: usize) -> usize {
        let frac = (self.min_inlier_fraction * n as f64).ceil() as usize;
        self.min_inliers.max(frac)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    pub plane: Plane3D,
    /// Indices of the points within the threshold of the winning hypothesis.
    pub inliers: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Hypothesis {
    iteration: usize,
    plane: Plane3D,
    count: usize,
    sum_sq: f64,
}

impl Hypothesis {
    /// Total order: more inliers, then lower RMS, then earlier iteration.
    fn better_than(&self, other: &Hypothesis) -> bool {
        if self.count != other.count {
            return self.count > other.count;
        }
        // Compare mean squared distance without dividing by zero counts.
        let lhs = self.sum_sq * other.count as f64;
        let rhs = other.sum_sq * self.count as f64;
        if lhs != rhs {
            return lhs < rhs;
        }
        self.iteration < other.iteration
    }
}

fn plane_through(a: &Point3, b: &Point3, c: &Point3) -> Option<Plane3D> {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let scale = ab.norm() * ac.norm();
    if !(n.norm() > 1e-12 * scale) {
        return None;
    }
    Plane3D::from_point_normal(a, n).ok()
}

fn score(points: &[Point3], plane: &Plane3D, threshold: f64) -> (usize, f64) {
    let mut count = 0;
    let mut sum_sq = 0.0;
    for p in points {
        let dist = plane.signed_distance(p).abs();
        if dist <= threshold {
            count += 1;
            sum_sq += dist * dist;
        }
    }
    (count, sum_sq)
}

/// Robust plane fit. Each iteration draws its sample from its own RNG stream
/// (seed, iteration), so the result does not depend on the thread count.
pub fn ransac_plane(points: &[Point3], cfg: &RansacConfig) -> Result<RansacFit> {
    cfg.validate()?;
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len();
    let best = (0..cfg.iterations)
        .into_par_iter()
        .filter_map(|iteration| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(iteration as u64);
            let idx = rand::seq::index::sample(&mut rng, n, 3);
            let plane = plane_through(&points[idx.index(0)], &points[idx.index(1)], &points[idx.index(2)])?;
            let (count, sum_sq) = score(points, &plane, cfg.inlier_threshold);
            Some(Hypothesis {
                iteration,
                plane,
                count,
                sum_sq,
            })
        })
        .reduce_with(|a, b| if a.better_than(&b) { a } else { b })
        .ok_or(Error::Degenerate)?;

    let required = cfg.required_inliers(n);
    if best.count < required {
        return Err(Error::NoConsensus {
            found: best.count,
            required,
        });
    }
    let inliers: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| best.plane.signed_distance(p).abs() <= cfg.inlier_threshold)
        .map(|(i, _)| i)
        .collect();
    let subset: Vec<Point3> = inliers.iter().map(|&i| points[i]).collect();
    let plane = least_squares_plane(&subset)?;
    Ok(RansacFit { plane, inliers })
}

/// Total least squares plane: through the centroid, normal along the
/// smallest-variance direction.
pub fn least_squares_plane(points: &[Point3]) -> Result<Plane3D> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let inv = 1.0 / points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords) * inv;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov * inv);
    let (min_idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("3x3 matrix has eigenvalues");
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    if !(sorted[1] > 0.0) {
        return Err(Error::Degenerate);
    }
    let normal = eig.eigenvectors.column(min_idx).into_owned();
    Plane3D::from_point_normal(&Point3::from(centroid), normal)
}

/// How the plane offset is derived from border points for a fixed normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetRule {
    /// `d = mean(n·p)`, the least-squares offset.
    #[default]
    MeanProjection,
    /// Lift the mask centroid pixel to the mean border depth and pass the
    /// plane through it.
    MeanDepthCentroid,
}

impl std::str::FromStr for OffsetRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean-projection" => Ok(OffsetRule::MeanProjection),
            "mean-depth-centroid" => Ok(OffsetRule::MeanDepthCentroid),
            other => Err(format!("unknown offset rule {other:?}")),
        }
    }
}

/// Mask centroid and camera, needed by [`OffsetRule::MeanDepthCentroid`].
#[derive(Debug, Clone, Copy)]
pub struct CentroidRay<'a> {
    pub pixel: (f64, f64),
    pub intrinsics: &'a CameraIntrinsics,
}

pub fn offset_from_border(
    normal: &Vec3,
    border: &[Point3],
    rule: OffsetRule,
    centroid: Option<CentroidRay<'_>>,
) -> Result<Plane3D> {
    let norm = normal.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NonUnitInput(norm));
    }
    if border.is_empty() {
        return Err(Error::NoBorderPoints);
    }
    let inv = 1.0 / border.len() as f64;
    match rule {
        OffsetRule::MeanProjection => {
            let d = border.iter().map(|p| normal.dot(&p.coords)).sum::<f64>() * inv;
            Plane3D::new(*normal, d)
        }
        OffsetRule::MeanDepthCentroid => {
            let ray = centroid.ok_or_else(|| {
                Error::InvalidConfig("mean-depth-centroid rule needs the mask centroid".into())
            })?;
            let mean_z = border.iter().map(|p| p.z).sum::<f64>() * inv;
            let anchor = backproject(ray.pixel.0, ray.pixel.1, mean_z, ray.intrinsics)?;
            Plane3D::from_point_normal(&anchor, *normal)
        }
    }
}

/// Cluster-center unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorCodebook {
    anchors: Vec<Vec3>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct CodebookJson {
    k: u32,
    anchors: Vec<[f64; 3]>,
    seed: u64,
}

impl Serialize for AnchorCodebook {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CodebookJson {
            k: self.anchors.len() as u32,
            anchors: self.anchors.iter().map(|a| [a.x, a.y, a.z]).collect(),
            seed: self.seed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnchorCodebook {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CodebookJson::deserialize(d)?;
        if raw.k as usize != raw.anchors.len() {
            return Err(D::Error::custom(format!(
                "k = {} but {} anchors listed",
                raw.k,
                raw.anchors.len()
            )));
        }
        AnchorCodebook::new(raw.anchors.into_iter().map(Vec3::from).collect(), raw.seed)
            .map_err(D::Error::custom)
    }
}

impl AnchorCodebook {
    /// Anchors are normalized and sign-canonicalized.
    pub fn new(anchors: Vec<Vec3>, seed: u64) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidConfig("codebook needs at least one anchor".into()));
        }
        let anchors = anchors
            .into_iter()
            .map(canonical_normal)
            .collect::<Result<Vec<_>>>()?;
        if has_duplicates(&anchors) {
            return Err(Error::InvalidConfig("codebook anchors must be distinct".into()));
        }
        Ok(Self { anchors, seed })
    }

    pub fn anchors(&self) -> &[Vec3] {
        &self.anchors
    }

    pub fn k(&self) -> usize {
        self.anchors.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the anchor with the smallest angle to `v` (lowest index on
    /// ties). Only the direction of `v` matters.
    pub fn nearest_anchor(&self, v: &Vec3) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, a) in self.anchors.iter().enumerate() {
            let dot = a.dot(v);
            if dot > best_dot {
                best = i;
                best_dot = dot;
            }
        }
        best
    }
}

fn has_duplicates(anchors: &[Vec3]) -> bool {
    anchors.iter().enumerate().any(|(i, a)| {
        anchors[i + 1..]
            .iter()
            .any(|b| (a - b).norm() <= 1e-12)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMeansVariant {
    /// Lloyd's algorithm on raw 3-vectors; centroids normalized at the end.
    #[default]
    Euclidean,
    /// Centroids projected back onto the sphere after every update.
    Spherical,
}

#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub codebook: AnchorCodebook,
    /// Sum of squared distances to the assigned centroid, one entry per
    /// assignment step of the successful attempt.
    pub distortion_log: Vec<f64>,
    /// Re-seeding attempts used (0 = first try succeeded).
    pub reseeds: usize,
}

/// k-means codebook with k-means++ seeding.
pub fn build_codebook(normals: &[Vec3], k: usize, seed: u64) -> Result<AnchorCodebook> {
    build_codebook_with(normals, k, seed, KMeansVariant::Euclidean).map(|run| run.codebook)
}

pub fn build_codebook_with(
    normals: &[Vec3],
    k: usize,
    seed: u64,
    variant: KMeansVariant,
) -> Result<KMeansRun> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if normals.len() < k {
        return Err(Error::TooFewNormals {
            k,
            got: normals.len(),
        });
    }
    for n in normals {
        let norm = n.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NonUnitInput(norm));
        }
    }
    for attempt in 0..=defaults::KMEANS_RESEED_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        if let Some((centroids, log)) = lloyd(normals, k, variant, &mut rng) {
            let Ok(anchors) = centroids
                .into_iter()
                .map(canonical_normal)
                .collect::<Result<Vec<_>>>()
            else {
                continue;
            };
            if has_duplicates(&anchors) {
                continue;
            }
            return Ok(KMeansRun {
                codebook: AnchorCodebook { anchors, seed },
                distortion_log: log,
                reseeds: attempt,
            });
        }
    }
    Err(Error::EmptyCluster)
}

fn kmeans_pp(points: &[Vec3], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // Guard against rounding landing on an already chosen point.
            if d2[pick] == 0.0 {
                pick = d2
                    .iter()
                    .enumerate()
                    .rev()
                    .find(|(_, w)| **w > 0.0)
                    .map(|(i, _)| i)
                    .unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[next];
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min((p - c).norm_squared());
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[Vec3], centers: &[Vec3], labels: &mut [usize]) -> f64 {
    let mut distortion = 0.0;
    for (label, p) in labels.iter_mut().zip(points) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centers.iter().enumerate() {
            let d = (p - c).norm_squared();
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        *label = best;
        distortion += best_d;
    }
    distortion
}

/// Returns `None` when a cluster empties or a spherical centroid vanishes.
fn lloyd(
    points: &[Vec3],
    k: usize,
    variant: KMeansVariant,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<Vec3>, Vec<f64>)> {
    let mut centers = kmeans_pp(points, k, rng);
    let mut labels = vec![0usize; points.len()];
    let mut log = Vec::new();
    for _ in 0..defaults::KMEANS_MAX_ITERATIONS {
        log.push(assign(points, &centers, &mut labels));
        let mut sums = vec![Vec3::zeros(); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        let mut movement: f64 = 0.0;
        for j in 0..k {
            if counts[j] == 0 {
                return None;
            }
            let mut c = sums[j] / counts[j] as f64;
            if variant == KMeansVariant::Spherical {
                let norm = c.norm();
                if !(norm > 1e-12) {
                    return None;
                }
                c /= norm;
            }
            movement = movement.max((c - centers[j]).norm());
            centers[j] = c;
        }
        if movement < defaults::KMEANS_TOLERANCE {
            break;
        }
    }
    log.push(assign(points, &centers, &mut labels));
    if centers.iter().any(|c| !(c.norm() > 1e-12)) {
        return None;
    }
    Some((centers, log))
}

/// A normal expressed relative to its closest anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorCode {
    pub anchor_id: usize,
    pub residual: [f64; 3],
}

pub fn encode_normal(n: &Vec3, cb: &AnchorCodebook) -> Result<AnchorCode> {
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NonUnitInput(norm));
    }
    let anchor_id = cb.nearest_anchor(n);
    let r = n - cb.anchors[anchor_id];
    Ok(AnchorCode {
        anchor_id,
        residual: [r.x, r.y, r.z],
    })
}

pub fn decode_normal(code: &AnchorCode, cb: &AnchorCodebook) -> Result<Vec3> {
    let anchor = cb.anchors.get(code.anchor_id).ok_or(Error::BadAnchorId {
        id: code.anchor_id,
        k: cb.k(),
    })?;
    let sum = anchor + Vec3::from(code.residual);
    if !(sum.norm() > 1e-12) {
        return Err(Error::ZeroSum);
    }
    canonical_normal(sum)
}
