//! Run configuration: a JSON file whose fields can each be overridden by a flag.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use mirror_depth::defaults;
use mirror_depth::imaging::BandMetric;
use mirror_depth::plane_fit::{OffsetRule, RansacConfig};
use mirror_depth::refine::FitConfig;
use serde::{Deserialize, Serialize};

pub const THREADS_ENV: &str = "MIRROR_DEPTH_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub depth: Option<PathBuf>,
    pub mask_index: Option<PathBuf>,
    pub intrinsics: Option<PathBuf>,
    /// Plane JSON for instances whose index entry names no plane file.
    pub plane: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub band_width: u32,
    pub band_metric: BandMetric,
    pub offset_rule: OffsetRule,
    pub ransac: RansacConfig,
    /// Raw PNG units per meter.
    pub depth_scale: f64,
    pub min_gt: f64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            depth: None,
            mask_index: None,
            intrinsics: None,
            plane: None,
            output_dir: None,
            band_width: defaults::BAND_WIDTH_PX,
            band_metric: BandMetric::Euclidean,
            offset_rule: OffsetRule::MeanProjection,
            ransac: RansacConfig::default(),
            depth_scale: defaults::DEPTH_SCALE,
            min_gt: defaults::MIN_GT_DEPTH,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            band_width: self.band_width,
            band_metric: self.band_metric,
            ransac: self.ransac,
            offset_rule: self.offset_rule,
        }
    }

    pub fn require<'a>(field: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        field
            .as_deref()
            .with_context(|| format!("missing {flag} (flag or config field)"))
    }
}

/// Per-frame inputs and fitting parameters shared by several commands.
#[derive(Debug, Clone, Default, Args)]
pub struct FrameArgs {
    /// 16-bit depth PNG.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// JSON list of {instance_id, mask_path, plane_path?}.
    #[arg(long)]
    pub mask_index: Option<PathBuf>,
    /// Camera intrinsics JSON {fx, fy, cx, cy, width, height}.
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    #[arg(long)]
    pub plane: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Border band width in pixels.
    #[arg(long)]
    pub band_width: Option<u32>,
    /// euclidean or chebyshev.
    #[arg(long, value_parser = parse_band_metric)]
    pub band_metric: Option<BandMetric>,
    /// mean-projection or mean-depth-centroid.
    #[arg(long)]
    pub offset_rule: Option<OffsetRule>,
    #[arg(long)]
    pub ransac_iterations: Option<usize>,
    /// Inlier distance in meters.
    #[arg(long)]
    pub inlier_threshold: Option<f64>,
    #[arg(long)]
    pub min_inliers: Option<usize>,
    #[arg(long)]
    pub ransac_seed: Option<u64>,
    /// Raw PNG units per meter.
    #[arg(long)]
    pub depth_scale: Option<f64>,
}

fn parse_band_metric(s: &str) -> std::result::Result<BandMetric, String> {
    match s {
        "euclidean" => Ok(BandMetric::Euclidean),
        "chebyshev" => Ok(BandMetric::Chebyshev),
        other => Err(format!("unknown band metric {other:?}")),
    }
}

impl FrameArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
            if let Some(v) = flag {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        set_opt(&mut cfg.depth, &self.depth);
        set_opt(&mut cfg.mask_index, &self.mask_index);
        set_opt(&mut cfg.intrinsics, &self.intrinsics);
        set_opt(&mut cfg.plane, &self.plane);
        set_opt(&mut cfg.output_dir, &self.output_dir);
        set(&mut cfg.band_width, &self.band_width);
        set(&mut cfg.band_metric, &self.band_metric);
        set(&mut cfg.offset_rule, &self.offset_rule);
        set(&mut cfg.ransac.iterations, &self.ransac_iterations);
        set(&mut cfg.ransac.inlier_threshold, &self.inlier_threshold);
        set(&mut cfg.ransac.min_inliers, &self.min_inliers);
        set(&mut cfg.ransac.seed, &self.ransac_seed);
        set(&mut cfg.depth_scale, &self.depth_scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.band_width, 25);
        assert_eq!(cfg.min_gt, 0.00001);
        assert_eq!(defaults::ANCHOR_COUNT, 10);
    }

    #[test]
    fn flags_override_file_values() {
        let mut cfg: RunConfig =
            serde_json::from_str(r#"{"band_width": 15, "ransac": {"iterations": 50}}"#).unwrap();
        assert_eq!(cfg.ransac.iterations, 50);
        assert_eq!(cfg.ransac.inlier_threshold, RansacConfig::default().inlier_threshold);
        let args = FrameArgs {
            band_width: Some(35),
            ..FrameArgs::default()
        };
        args.apply(&mut cfg);
        assert_eq!(cfg.band_width, 35);
        assert_eq!(cfg.ransac.iterations, 50);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"band_widht": 3}"#).is_err());
    }
}
