//! Single-frame commands: `fit-plane` and `refine`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use mirror_depth::geometry::{CameraIntrinsics, Plane3D};
use mirror_depth::imaging::{
    read_depth, read_instance_index, read_mask, write_depth, DepthMap, InstanceIndexEntry,
    InstanceMask,
};
use mirror_depth::refine::{fit_instance_plane, refine_frame, FrameInstance, PlaneSource};
use rayon::prelude::*;
use serde::Serialize;

use super::{create_dir, read_intrinsics, read_json, resolve, write_json, ErrorRecord, Status};
use crate::config::{FrameArgs, RunConfig};

#[derive(Debug, Args)]
pub struct FitPlaneArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
}

struct Instance {
    entry: InstanceIndexEntry,
    mask_path: PathBuf,
    mask: InstanceMask,
}

struct FrameInputs {
    depth: DepthMap,
    k: CameraIntrinsics,
    index_path: PathBuf,
    instances: Vec<Instance>,
}

fn load_frame(cfg: &RunConfig) -> Result<FrameInputs> {
    let depth_path = RunConfig::require(&cfg.depth, "--depth")?;
    let index_path = RunConfig::require(&cfg.mask_index, "--mask-index")?;
    let k = read_intrinsics(RunConfig::require(&cfg.intrinsics, "--intrinsics")?)?;
    let depth = read_depth(depth_path, cfg.depth_scale)?;
    if depth.dims() != k.dims() {
        anyhow::bail!(
            "depth is {}x{} but intrinsics describe {}x{}",
            depth.width(),
            depth.height(),
            k.width,
            k.height
        );
    }
    let mut entries = read_instance_index(index_path)?;
    entries.sort_by_key(|e| e.instance_id);
    let instances = entries
        .into_iter()
        .map(|entry| {
            let mask_path = resolve(index_path, &entry.mask_path);
            let mask = read_mask(&mask_path, entry.instance_id)?;
            if mask.dims() != depth.dims() {
                anyhow::bail!("mask {} does not match the depth size", mask_path.display());
            }
            Ok(Instance {
                entry,
                mask_path,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameInputs {
        depth,
        k,
        index_path: index_path.to_path_buf(),
        instances,
    })
}

/// One line of the `planes.json` index. It is also a valid mask index, so it
/// can be passed straight to `refine`.
#[derive(Debug, Serialize)]
struct PlaneRecord {
    instance_id: u32,
    mask_path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    plane_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plane: Option<Plane3D>,
    #[serde(skip_serializing_if = "Option::is_none")]
    border_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inliers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorRecord>,
}

fn absolute(path: &Path) -> Result<String> {
    let p = std::fs::canonicalize(path).with_context(|| format!("resolving {}", path.display()))?;
    Ok(p.to_string_lossy().into_owned())
}

fn mirror_union(frame: &FrameInputs) -> Vec<bool> {
    let mut union = vec![false; frame.depth.len()];
    for inst in &frame.instances {
        for (slot, b) in union.iter_mut().zip(inst.mask.bits()) {
            *slot |= *b;
        }
    }
    union
}

pub fn fit_plane(args: &FitPlaneArgs, mut cfg: RunConfig) -> Result<Status> {
    args.frame.apply(&mut cfg);
    let out_dir = RunConfig::require(&cfg.output_dir, "--output-dir")?.to_path_buf();
    let fit_cfg = cfg.fit_config();
    let frame = load_frame(&cfg)?;
    let union = mirror_union(&frame);
    let fits: Vec<_> = frame
        .instances
        .par_iter()
        .map(|inst| fit_instance_plane(&frame.depth, &inst.mask, Some(&union), &frame.k, &fit_cfg))
        .collect();

    create_dir(&out_dir)?;
    let mut records = Vec::with_capacity(fits.len());
    let mut failures = 0;
    for (inst, fit) in frame.instances.iter().zip(fits) {
        let id = inst.entry.instance_id;
        let mask_path = absolute(&inst.mask_path)?;
        records.push(match fit {
            Ok(fit) => {
                let name = format!("plane_{id}.json");
                write_json(&out_dir.join(&name), &fit.plane)?;
                PlaneRecord {
                    instance_id: id,
                    mask_path,
                    plane_path: Some(name),
                    plane: Some(fit.plane),
                    border_points: Some(fit.border_points),
                    inliers: Some(fit.inliers),
                    error: None,
                }
            }
            Err(e) => {
                failures += 1;
                PlaneRecord {
                    instance_id: id,
                    mask_path,
                    plane_path: None,
                    plane: None,
                    border_points: None,
                    inliers: None,
                    error: Some(ErrorRecord::from(&e)),
                }
            }
        });
    }
    write_json(&out_dir.join("planes.json"), &records)?;
    Ok(Status::from_failures(failures))
}

#[derive(Debug, Serialize)]
struct InstanceStats {
    instance_id: u32,
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    plane: Option<Plane3D>,
    replaced_px: usize,
    skipped_px: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    border_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inliers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorRecord>,
}

#[derive(Debug, Serialize)]
struct RefineStats {
    replaced_px: usize,
    skipped_px: usize,
    instances: Vec<InstanceStats>,
}

pub fn refine(args: &RefineArgs, mut cfg: RunConfig) -> Result<Status> {
    args.frame.apply(&mut cfg);
    let out_dir = RunConfig::require(&cfg.output_dir, "--output-dir")?.to_path_buf();
    let fit_cfg = cfg.fit_config();
    let frame = load_frame(&cfg)?;
    let fallback: Option<Plane3D> = cfg.plane.as_deref().map(read_json).transpose()?;
    let instances = frame
        .instances
        .iter()
        .map(|inst| {
            let plane = match &inst.entry.plane_path {
                Some(rel) => PlaneSource::Given(read_json(&resolve(&frame.index_path, rel))?),
                None => fallback.map_or(PlaneSource::Auto, PlaneSource::Given),
            };
            Ok(FrameInstance {
                mask: inst.mask.clone(),
                plane,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let refined = refine_frame(&frame.depth, &instances, &frame.k, &fit_cfg)?;
    let stats = RefineStats {
        replaced_px: refined.result.replaced_px,
        skipped_px: refined.result.skipped_px,
        instances: refined
            .instances
            .iter()
            .zip(&instances)
            .map(|(o, inst)| InstanceStats {
                instance_id: o.instance_id,
                source: match inst.plane {
                    PlaneSource::Given(_) => "given",
                    PlaneSource::Auto => "auto",
                },
                plane: o.plane,
                replaced_px: o.replaced_px,
                skipped_px: o.skipped_px,
                border_points: o.fit.as_ref().map(|f| f.border_points),
                inliers: o.fit.as_ref().map(|f| f.inliers),
                error: o.error.as_ref().map(ErrorRecord::from),
            })
            .collect(),
    };
    create_dir(&out_dir)?;
    write_depth(out_dir.join("refined.png"), &refined.result.depth)?;
    write_json(&out_dir.join("stats.json"), &stats)?;
    Ok(Status::from_failures(refined.failures()))
}
