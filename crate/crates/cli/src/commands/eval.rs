//! Evaluation commands: `eval-depth` and `eval-det`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mirror_depth::defaults::DELTA_THRESHOLDS;
use mirror_depth::geometry::{Plane3D, Vec3};
use mirror_depth::imaging::{read_depth, read_instance_index, read_mask, InstanceMask};
use mirror_depth::metrics::{
    average_reports, eval_depth as eval_frame, eval_detections, ApMode, DepthAccumulator,
    Detection, EvalOptions, FrameDetections, GroundTruthInstance, MetricReport, RegionReport,
    SsimMode,
};
use mirror_depth::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{print_json, read_json, resolve, write_json, ErrorRecord, Status};
use crate::config::RunConfig;

#[derive(Debug, Args)]
pub struct EvalDepthArgs {
    /// Directory of predicted depth PNGs.
    #[arg(long)]
    pub pred_dir: PathBuf,
    /// Directory of ground-truth depth PNGs; its file names define the frames.
    #[arg(long)]
    pub gt_dir: PathBuf,
    /// Directory of mirror masks named like the frames (any nonzero pixel is mirror).
    #[arg(long)]
    pub mask_dir: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write one CSV row per frame and region.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Average per-frame metrics instead of pooling pixels.
    #[arg(long)]
    pub per_frame: bool,
    /// Ground-truth depths at or below this are ignored (meters).
    #[arg(long)]
    pub min_gt: Option<f64>,
    #[arg(long, value_enum, default_value_t = SsimArg::Gaussian)]
    pub ssim: SsimArg,
    /// Raw PNG units per meter.
    #[arg(long)]
    pub depth_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SsimArg {
    Gaussian,
    Global,
}

#[derive(Debug, Serialize)]
struct SkippedFrame {
    frame: String,
    #[serde(flatten)]
    error: ErrorRecord,
}

#[derive(Debug, Serialize)]
struct DepthReport {
    mode: &'static str,
    frames: usize,
    #[serde(flatten)]
    report: MetricReport,
    skipped: Vec<SkippedFrame>,
}

fn list_frames(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name.to_ascii_lowercase().ends_with(".png") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

struct FrameResult {
    name: String,
    outcome: std::result::Result<(DepthAccumulator, MetricReport), Error>,
}

pub fn eval_depth(args: &EvalDepthArgs, mut cfg: RunConfig) -> Result<Status> {
    if let Some(v) = args.min_gt {
        cfg.min_gt = v;
    }
    if let Some(v) = args.depth_scale {
        cfg.depth_scale = v;
    }
    let opts = EvalOptions {
        min_gt: cfg.min_gt,
        ssim_mode: match args.ssim {
            SsimArg::Gaussian => SsimMode::Gaussian,
            SsimArg::Global => SsimMode::Global,
        },
    };
    let names = list_frames(&args.gt_dir)?;
    if names.is_empty() {
        bail!("no frames found in {}", args.gt_dir.display());
    }

    // Frames are independent; results are reduced in name order so the
    // report does not depend on the thread count.
    let results: Vec<FrameResult> = names
        .par_iter()
        .map(|name| -> Result<FrameResult> {
            let gt = read_depth(args.gt_dir.join(name), cfg.depth_scale)?;
            let pred = read_depth(args.pred_dir.join(name), cfg.depth_scale)?;
            if pred.dims() != gt.dims() {
                bail!("{name}: prediction and ground truth differ in size");
            }
            let mask = match &args.mask_dir {
                Some(dir) => read_mask(dir.join(name), 0)?,
                None => InstanceMask::empty(gt.width(), gt.height(), 0),
            };
            if mask.dims() != gt.dims() {
                bail!("{name}: mask and ground truth differ in size");
            }
            let outcome = (|| {
                let mut acc = DepthAccumulator::default();
                acc.add_frame(&pred, &gt, &mask, &opts)?;
                Ok((acc, eval_frame(&pred, &gt, &mask, &opts)?))
            })();
            Ok(FrameResult {
                name: name.clone(),
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pooled = DepthAccumulator::default();
    let mut per_frame = Vec::new();
    let mut skipped = Vec::new();
    for r in &results {
        match &r.outcome {
            Ok((acc, report)) => {
                pooled.merge(acc);
                per_frame.push(report.clone());
            }
            Err(e @ Error::EmptyValidSet) => skipped.push(SkippedFrame {
                frame: r.name.clone(),
                error: ErrorRecord::from(e),
            }),
            Err(e) => bail!("{}: {e}", r.name),
        }
    }
    let report = DepthReport {
        mode: if args.per_frame { "per-frame" } else { "pooled" },
        frames: per_frame.len(),
        report: if args.per_frame {
            average_reports(&per_frame)
        } else {
            pooled.finalize()
        },
        skipped,
    };

    if let Some(csv_path) = &args.csv {
        write_csv(csv_path, &results)?;
    }
    match &args.output {
        Some(path) => write_json(path, &report)?,
        None => print_json(&report)?,
    }
    Ok(Status::from_failures(report.skipped.len()))
}

fn write_csv(path: &Path, results: &[FrameResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec![
        "frame".to_string(),
        "region".into(),
        "evaluated_px".into(),
        "rmse".into(),
        "s_rmse".into(),
        "abs_rel".into(),
        "ssim".into(),
    ];
    header.extend(DELTA_THRESHOLDS.iter().map(|t| format!("delta_{t}")));
    w.write_record(&header)?;
    for r in results {
        let Ok((_, report)) = &r.outcome else {
            continue;
        };
        for (region, rep) in [
            ("mirror", &report.mirror),
            ("other", &report.other),
            ("all", &report.all),
        ] {
            w.write_record(csv_row(&r.name, region, rep))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_row(frame: &str, region: &str, rep: &RegionReport) -> Vec<String> {
    let mut row = vec![frame.to_string(), region.to_string(), rep.evaluated_px.to_string()];
    match &rep.metrics {
        Some(m) => {
            row.push(m.rmse.to_string());
            row.push(m.s_rmse.map(|v| v.to_string()).unwrap_or_default());
            row.push(m.abs_rel.to_string());
            row.push(m.ssim.to_string());
            for t in DELTA_THRESHOLDS {
                row.push(m.delta_at(t).map(|v| v.to_string()).unwrap_or_default());
            }
        }
        None => row.extend(std::iter::repeat_n(String::new(), 4 + DELTA_THRESHOLDS.len())),
    }
    row
}

#[derive(Debug, Args)]
pub struct EvalDetArgs {
    /// JSON list of {"gt_index": path, "detections": path}, one per frame.
    #[arg(long, conflicts_with_all = ["gt_index", "detections"])]
    pub manifest: Option<PathBuf>,
    /// Instance index of a single frame; plane files supply GT normals.
    #[arg(long, requires = "detections")]
    pub gt_index: Option<PathBuf>,
    /// Detections JSON [{"mask_path", "confidence", "normal"}] of a single frame.
    #[arg(long, requires = "gt_index")]
    pub detections: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DetMode::Both)]
    pub mode: DetMode,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetMode {
    Seg,
    SegAngle,
    Both,
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    gt_index: String,
    detections: String,
}

#[derive(Debug, Deserialize)]
struct DetectionEntry {
    mask_path: String,
    confidence: f64,
    normal: Option<[f64; 3]>,
}

#[derive(Debug, Serialize)]
struct DetReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    seg_ap: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ap30: Option<Option<f64>>,
}

fn load_det_frame(gt_index: &Path, detections: &Path, need_normals: bool) -> Result<FrameDetections> {
    let ground_truth = read_instance_index(gt_index)?
        .into_iter()
        .map(|e| {
            let mask = read_mask(resolve(gt_index, &e.mask_path), e.instance_id)?;
            let normal = match &e.plane_path {
                Some(rel) => read_json::<Plane3D>(&resolve(gt_index, rel))?.normal(),
                None if need_normals => {
                    bail!("instance {} in {} has no plane file", e.instance_id, gt_index.display())
                }
                // Unused when matching on masks alone.
                None => Vec3::new(0.0, 0.0, -1.0),
            };
            Ok(GroundTruthInstance { mask, normal })
        })
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<DetectionEntry> = read_json(detections)?;
    let predictions = entries
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            Ok(Detection {
                mask: read_mask(resolve(detections, &d.mask_path), i as u32)?,
                confidence: d.confidence,
                normal: d.normal.map(Vec3::from),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameDetections {
        predictions,
        ground_truth,
    })
}

fn score(frames: &[FrameDetections], mode: ApMode) -> Result<Option<f64>> {
    match eval_detections(frames, mode) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoGroundTruth) => Ok(None),
        Err(e @ Error::MissingNormal(_)) => {
            bail!("{e}; every detection needs a normal for the angle-gated AP (use --mode seg)")
        }
        Err(e) => Err(e.into()),
    }
}

pub fn eval_det(args: &EvalDetArgs) -> Result<Status> {
    let need_normals = args.mode != DetMode::Seg;
    let pairs: Vec<(PathBuf, PathBuf)> = match (&args.manifest, &args.gt_index, &args.detections) {
        (Some(m), _, _) => read_json::<Vec<ManifestEntry>>(m)?
            .into_iter()
            .map(|e| (resolve(m, &e.gt_index), resolve(m, &e.detections)))
            .collect(),
        (None, Some(g), Some(d)) => vec![(g.clone(), d.clone())],
        _ => bail!("pass --manifest, or --gt-index with --detections"),
    };
    let frames = pairs
        .iter()
        .map(|(g, d)| load_det_frame(g, d, need_normals))
        .collect::<Result<Vec<_>>>()?;
    let report = DetReport {
        seg_ap: match args.mode {
            DetMode::SegAngle => None,
            _ => Some(score(&frames, ApMode::Seg)?),
        },
        ap30: match args.mode {
            DetMode::Seg => None,
            _ => Some(score(&frames, ApMode::SegAngle)?),
        },
    };
    match &args.output {
        Some(path) => write_json(path, &report)?,
        None => print_json(&report)?,
    }
    Ok(Status::Ok)
}
