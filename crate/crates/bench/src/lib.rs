//! Fixtures shared by the benchmarks.

use mirror_depth::geometry::{backproject, Point3};
use mirror_depth::imaging::{border_band, BandMetric, DepthMap};
use mirror_depth::synth::{self, corrupt, random_scene, render_gt, RenderedScene, SceneSpec};

pub struct Frame {
    pub spec: SceneSpec,
    pub scene: RenderedScene,
    pub depth: DepthMap,
}

/// A random room at the default resolution with noisy, partly corrupted border depth.
pub fn frame(seed: u64) -> Frame {
    let k = synth::default_intrinsics();
    let mut spec = random_scene(seed, &k, 25).expect("scene");
    spec.noise_sigma = 0.005;
    spec.band_outlier_fraction = 0.2;
    let scene = render_gt(&spec).expect("render");
    let depth = corrupt(&scene, &spec).expect("corrupt");
    Frame { spec, scene, depth }
}

/// Border band pixels of `f` lifted to camera-frame points.
pub fn band_points(f: &Frame) -> Vec<Point3> {
    let band = border_band(&f.scene.mask, f.spec.band_width, BandMetric::Euclidean).expect("band");
    let w = f.depth.width() as usize;
    band.pixels()
        .filter_map(|(c, r)| {
            let z = f.depth.data()[r as usize * w + c as usize];
            backproject(c as f64, r as f64, z, &f.spec.intrinsics).ok()
        })
        .collect()
}
