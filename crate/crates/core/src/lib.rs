//! Depth refinement for mirror surfaces.
//!
//! A mirror is modelled as a planar region: an instance mask plus a 3D plane
//! in camera coordinates. Depth sensors and depth estimators report wrong
//! values there (either nothing, or the reflected scene "behind" the glass),
//! while the frame around a mirror is usually measured well. The pipeline is:
//!
//! 1. [`imaging::border_band`] grows a ring of pixels around the mask.
//! 2. Valid ring depths are lifted to 3D and [`plane_fit::ransac_plane`]
//!    estimates the plane; [`plane_fit::offset_from_border`] fixes its offset
//!    for a given normal.
//! 3. [`refine::refine_depth`] rewrites every mask pixel with the depth at
//!    which its viewing ray meets the plane.
//!
//! [`metrics`] holds the depth and detection metrics used to score results,
//! and [`synth`] renders analytic box-room scenes with mirror corruption that
//! serve as exact ground truth.

pub mod defaults;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod metrics;
pub mod plane_fit;
pub mod refine;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{
    angle_between, backproject, canonicalize, ray_plane_depth, CameraIntrinsics, Plane3D, Point3,
    Vec3,
};
pub use imaging::{border_band, iou, BandMetric, BorderBand, DepthMap, InstanceMask};
pub use plane_fit::{
    build_codebook, decode_normal, encode_normal, offset_from_border, ransac_plane, AnchorCode,
    AnchorCodebook, OffsetRule, RansacConfig,
};
pub use metrics::{eval_depth, eval_detections, ApMode, EvalOptions, MetricReport};
pub use refine::{fit_instance_plane, refine_depth, refine_frame, FitConfig};
pub use synth::{corrupt, random_scene, render_gt, Corruption, RenderedScene, SceneSpec};
