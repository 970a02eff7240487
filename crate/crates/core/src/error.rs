use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the mirror depth pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("pixel ({u}, {v}) lies outside a {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: u32, height: u32 },
    #[error("ray is parallel to the plane")]
    RayParallel,
    #[error("plane intersection lies behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("plane normal has zero length")]
    ZeroNormal,
    #[error("vector is not unit length (norm {0})")]
    NonUnitInput(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad image format: {0}")]
    BadFormat(String),
    #[error("invalid depth value {0} (must be finite and >= 0)")]
    InvalidDepth(f64),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("mask has no set pixels")]
    EmptyMask,
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all sampled point triples are collinear")]
    Degenerate,
    #[error("best plane has {found} inliers, fewer than the required {required}")]
    NoConsensus { found: usize, required: usize },
    #[error("no valid border points")]
    NoBorderPoints,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {k} normals, got {got}")]
    TooFewNormals { k: usize, got: usize },
    #[error("k-means produced an empty cluster after re-seeding")]
    EmptyCluster,
    #[error("anchor id {id} out of range for codebook of size {k}")]
    BadAnchorId { id: usize, k: usize },
    #[error("anchor plus residual sums to zero")]
    ZeroSum,

    #[error("no ground-truth pixels pass the validity filter")]
    EmptyValidSet,
    #[error("region has no pixels")]
    EmptyRegion,
    #[error("all predictions in the region are zero")]
    AllZeroPred,
    #[error("no ground-truth instances")]
    NoGroundTruth,
    #[error("detection {0} has no normal but angle-gated evaluation was requested")]
    MissingNormal(usize),
    #[error("invalid detection confidence {0}")]
    InvalidConfidence(f64),

    #[error("camera is outside the room")]
    CameraOutsideRoom,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable name of the variant, used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveDepth(_) => "NonPositiveDepth",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::RayParallel => "RayParallel",
            Error::BehindCamera(_) => "BehindCamera",
            Error::ZeroNormal => "ZeroNormal",
            Error::NonUnitInput(_) => "NonUnitInput",
            Error::InvalidIntrinsics(_) => "InvalidIntrinsics",
            Error::Io { .. } => "IoError",
            Error::BadFormat(_) => "BadFormat",
            Error::InvalidDepth(_) => "InvalidDepth",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyMask => "EmptyMask",
            Error::Json(_) => "Json",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::Degenerate => "Degenerate",
            Error::NoConsensus { .. } => "NoConsensus",
            Error::NoBorderPoints => "NoBorderPoints",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::TooFewNormals { .. } => "TooFewNormals",
            Error::EmptyCluster => "EmptyCluster",
            Error::BadAnchorId { .. } => "BadAnchorId",
            Error::ZeroSum => "ZeroSum",
            Error::EmptyValidSet => "EmptyValidSet",
            Error::EmptyRegion => "EmptyRegion",
            Error::AllZeroPred => "AllZeroPred",
            Error::NoGroundTruth => "NoGroundTruth",
            Error::MissingNormal(_) => "MissingNormal",
            Error::InvalidConfidence(_) => "InvalidConfidence",
            Error::CameraOutsideRoom => "CameraOutsideRoom",
            Error::InvalidScene(_) => "InvalidScene",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
