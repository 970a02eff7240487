//! Default parameters in one place, so ablation sweeps are flag changes only.

/// Border band radius in pixels around a mirror mask.
pub const BAND_WIDTH_PX: u32 = 25;

/// Number of anchor normals in the codebook.
pub const ANCHOR_COUNT: usize = 10;

/// Ground-truth depths at or below this value (meters) are treated as "no reading".
pub const MIN_GT_DEPTH: f64 = 0.00001;

/// Ratio thresholds for the delta accuracy metrics: 1.05, 1.10, 1.25, 1.25^2, 1.25^3.
pub const DELTA_THRESHOLDS: [f64; 5] = [1.05, 1.10, 1.25, 1.5625, 1.953125];

/// SSIM stabilizing constants.
pub const SSIM_C1: f64 = 0.0001;
pub const SSIM_C2: f64 = 0.0009;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

/// Normal angle gate for angle-aware AP, degrees.
pub const AP_ANGLE_DEG: f64 = 30.0;

pub const RANSAC_ITERATIONS: usize = 1000;
/// Point-to-plane distance in meters.
pub const RANSAC_INLIER_THRESHOLD: f64 = 0.010;
pub const RANSAC_MIN_INLIERS: usize = 10;
pub const RANSAC_MIN_INLIER_FRACTION: f64 = 0.2;
pub const RANSAC_SEED: u64 = 0;

pub const KMEANS_MAX_ITERATIONS: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-9;
pub const KMEANS_RESEED_ATTEMPTS: usize = 3;

/// Raw units per meter for 16-bit depth PNGs.
pub const DEPTH_SCALE: f64 = 1000.0;
