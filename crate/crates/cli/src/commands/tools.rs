//! `anchors`, `synth` and `pointcloud`.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mirror_depth::defaults;
use mirror_depth::geometry::Vec3;
use mirror_depth::imaging::{read_depth, read_rgb, to_pointcloud, write_depth, write_mask, write_ply, InstanceIndexEntry};
use mirror_depth::plane_fit::{build_codebook_with, KMeansVariant};
use mirror_depth::synth::{self, corrupt, random_scene, render_gt, Corruption, SceneSpec};
use rayon::prelude::*;

use super::{print_json, create_dir, read_intrinsics, read_json, write_json, Status};
use crate::config::RunConfig;

#[derive(Debug, Args)]
pub struct AnchorsArgs {
    /// JSON list of unit normals [[x, y, z], ...].
    #[arg(long)]
    pub normals: PathBuf,
    /// Number of anchors.
    #[arg(long, default_value_t = defaults::ANCHOR_COUNT)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Euclidean)]
    pub variant: VariantArg,
    /// Codebook path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Euclidean,
    Spherical,
}

pub fn anchors(args: &AnchorsArgs) -> Result<Status> {
    let raw: Vec<[f64; 3]> = read_json(&args.normals)?;
    let normals: Vec<Vec3> = raw.into_iter().map(Vec3::from).collect();
    let variant = match args.variant {
        VariantArg::Euclidean => KMeansVariant::Euclidean,
        VariantArg::Spherical => KMeansVariant::Spherical,
    };
    let run = build_codebook_with(&normals, args.k, args.seed, variant)?;
    match &args.output {
        Some(path) => write_json(path, &run.codebook)?,
        None => print_json(&run.codebook)?,
    }
    Ok(Status::Ok)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Number of scenes.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Seed of the first scene; scene i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Render this scene description instead of random rooms.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub corruption: Option<CorruptionArg>,
    /// Gaussian depth noise on border pixels, meters.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Mirror pixel dropout probability.
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    /// Fraction of border pixels pushed off the wall.
    #[arg(long)]
    pub band_outlier_fraction: Option<f64>,
    #[arg(long)]
    pub band_width: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CorruptionArg {
    BehindPlane,
    Dropout,
    Mixed,
}

impl From<CorruptionArg> for Corruption {
    fn from(c: CorruptionArg) -> Self {
        match c {
            CorruptionArg::BehindPlane => Corruption::BehindPlane,
            CorruptionArg::Dropout => Corruption::Dropout,
            CorruptionArg::Mixed => Corruption::Mixed,
        }
    }
}

impl SynthArgs {
    fn apply(&self, spec: &mut SceneSpec) {
        if let Some(c) = self.corruption {
            spec.corruption = c.into();
        }
        if let Some(v) = self.noise_sigma {
            spec.noise_sigma = v;
        }
        if let Some(v) = self.outlier_fraction {
            spec.outlier_fraction = v;
        }
        if let Some(v) = self.band_outlier_fraction {
            spec.band_outlier_fraction = v;
        }
    }
}

/// Writes `gt/`, `depth/`, `mask/`, `plane/`, `spec/` and `index/` entries
/// named `NNNN`, plus a shared `intrinsics.json`.
pub fn synth(args: &SynthArgs, cfg: RunConfig) -> Result<Status> {
    if args.count == 0 {
        bail!("--count must be at least 1");
    }
    let base: Option<SceneSpec> = args.spec.as_deref().map(read_json).transpose()?;
    let band_width = args
        .band_width
        .or(base.map(|s| s.band_width))
        .unwrap_or(cfg.band_width);
    let k = base.map_or_else(synth::default_intrinsics, |s| s.intrinsics);
    let specs = (0..args.count)
        .into_par_iter()
        .map(|i| {
            let mut spec = match base {
                Some(s) => SceneSpec {
                    seed: s.seed.wrapping_add(i),
                    ..s
                },
                None => random_scene(args.seed.wrapping_add(i), &k, band_width)?,
            };
            spec.band_width = band_width;
            args.apply(&mut spec);
            spec.validate()?;
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;

    let out = &args.output_dir;
    for sub in ["gt", "depth", "mask", "plane", "spec", "index"] {
        create_dir(&out.join(sub))?;
    }
    write_json(&out.join("intrinsics.json"), &k)?;
    specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| -> Result<()> {
            let name = format!("{i:04}");
            let scene = render_gt(spec)?;
            let noisy = corrupt(&scene, spec)?;
            write_depth(out.join("gt").join(format!("{name}.png")), &scene.gt)?;
            write_depth(out.join("depth").join(format!("{name}.png")), &noisy)?;
            write_mask(out.join("mask").join(format!("{name}.png")), &scene.mask)?;
            write_json(&out.join("plane").join(format!("{name}.json")), &scene.plane)?;
            write_json(&out.join("spec").join(format!("{name}.json")), spec)?;
            let index = [InstanceIndexEntry {
                instance_id: scene.mask.instance_id,
                mask_path: format!("../mask/{name}.png"),
                plane_path: Some(format!("../plane/{name}.json")),
            }];
            write_json(&out.join("index").join(format!("{name}.json")), &index)
        })
        .collect::<Result<Vec<()>>>()
        .context("writing synthetic corpus")?;
    Ok(Status::Ok)
}

#[derive(Debug, Args)]
pub struct PointcloudArgs {
    #[arg(long)]
    pub depth: Option<PathBuf>,
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Optional 8-bit RGB image of the same size for vertex colors.
    #[arg(long)]
    pub rgb: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Raw PNG units per meter.
    #[arg(long)]
    pub depth_scale: Option<f64>,
}

pub fn pointcloud(args: &PointcloudArgs, mut cfg: RunConfig) -> Result<Status> {
    if args.depth.is_some() {
        cfg.depth = args.depth.clone();
    }
    if args.intrinsics.is_some() {
        cfg.intrinsics = args.intrinsics.clone();
    }
    if let Some(s) = args.depth_scale {
        cfg.depth_scale = s;
    }
    let k = read_intrinsics(RunConfig::require(&cfg.intrinsics, "--intrinsics")?)?;
    let depth = read_depth(RunConfig::require(&cfg.depth, "--depth")?, cfg.depth_scale)?;
    let rgb = match &args.rgb {
        Some(path) => {
            let (w, h, px) = read_rgb(path)?;
            if (w, h) != depth.dims() {
                bail!("rgb image is {w}x{h} but depth is {}x{}", depth.width(), depth.height());
            }
            Some(px)
        }
        None => None,
    };
    let points = to_pointcloud(&depth, &k, rgb.as_deref())?;
    write_ply(&args.output, &points)?;
    Ok(Status::Ok)
}
