//! Depth maps, instance masks, border bands and point-cloud export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{backproject, CameraIntrinsics, Point3};

/// Metric depth grid, row-major. A value of 0 means "no reading".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    data: Vec<f64>,
    /// Raw units per meter used when the map is stored as a 16-bit PNG.
    pub scale: f64,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, data: Vec<f64>, scale: f64) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::BadFormat(format!(
                "depth buffer has {} values for a {width}x{height} grid",
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDepth(bad));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("depth scale {scale}")));
        }
        Ok(Self {
            width,
            height,
            data,
            scale,
        })
    }

    pub fn filled(width: u32, height: u32, value: f64, scale: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize], scale)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, col: u32, row: u32) -> f64 {
        self.data[row as usize * self.width as usize + col as usize]
    }

    /// Overwrite one value. Panics on a negative or non-finite depth.
    pub fn set(&mut self, col: u32, row: u32, value: f64) {
        assert!(value.is_finite() && value >= 0.0, "invalid depth {value}");
        let w = self.width as usize;
        self.data[row as usize * w + col as usize] = value;
    }

    pub(crate) fn set_index(&mut self, idx: usize, value: f64) {
        debug_assert!(value.is_finite() && value >= 0.0);
        self.data[idx] = value;
    }

    /// Quantize to raw 16-bit units, saturating at `u16::MAX`.
    pub fn to_raw(&self) -> Vec<u16> {
        self.data
            .iter()
            .map(|m| (m * self.scale).round().min(u16::MAX as f64) as u16)
            .collect()
    }

    pub fn from_raw(width: u32, height: u32, raw: &[u16], scale: f64) -> Result<Self> {
        let data = raw.iter().map(|&r| r as f64 / scale).collect();
        Self::new(width, height, data, scale)
    }
}

pub(crate) fn check_dims(expected: (u32, u32), actual: (u32, u32)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

fn open_png(path: &Path) -> Result<png::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    decoder
        .read_info()
        .map_err(|e| Error::BadFormat(format!("{}: {e}", path.display())))
}

fn read_frame(reader: &mut png::Reader<BufReader<File>>, path: &Path) -> Result<Vec<u8>> {
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::BadFormat(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::BadFormat(format!("{}: {e}", path.display())))?;
    buf.truncate(info.buffer_size());
    Ok(buf)
}

fn write_png(
    path: &Path,
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    bytes: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width, height);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let map_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::BadFormat(other.to_string()),
    };
    let mut writer = encoder.write_header().map_err(map_err)?;
    writer.write_image_data(bytes).map_err(map_err)?;
    writer.finish().map_err(map_err)
}

/// Read a 16-bit single-channel PNG; meters = raw / scale.
pub fn read_depth(path: impl AsRef<Path>, scale: f64) -> Result<DepthMap> {
    let path = path.as_ref();
    let mut reader = open_png(path)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::BadFormat(format!(
            "{}: expected 16-bit grayscale, found {:?} {:?}",
            path.display(),
            info.bit_depth,
            info.color_type
        )));
    }
    let (width, height) = (info.width, info.height);
    let bytes = read_frame(&mut reader, path)?;
    let raw: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    DepthMap::from_raw(width, height, &raw, scale)
}

/// Write a depth map as a 16-bit grayscale PNG using its own scale.
pub fn write_depth(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    let bytes: Vec<u8> = depth
        .to_raw()
        .iter()
        .flat_map(|r| r.to_be_bytes())
        .collect();
    write_png(
        path.as_ref(),
        depth.width,
        depth.height,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &bytes,
    )
}

/// Binary mask of one mirror instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    pub instance_id: u32,
}

impl InstanceMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>, instance_id: u32) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::BadFormat(format!(
                "mask buffer has {} values for a {width}x{height} grid",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
            instance_id,
        })
    }

    pub fn empty(width: u32, height: u32, instance_id: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
            instance_id,
        }
    }

    /// Mask with the pixels `(col, row)` set.
    pub fn from_pixels(
        width: u32,
        height: u32,
        pixels: impl IntoIterator<Item = (u32, u32)>,
        instance_id: u32,
    ) -> Self {
        let mut m = Self::empty(width, height, instance_id);
        for (c, r) in pixels {
            m.set(c, r, true);
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, col: u32, row: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    pub fn set(&mut self, col: u32, row: u32, on: bool) {
        let w = self.width as usize;
        self.bits[row as usize * w + col as usize] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// `(col, row)` of every set pixel in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    /// Mean pixel coordinate of the set pixels.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (c, r) in self.pixels() {
            su += c as f64;
            sv += r as f64;
            n += 1;
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }

    /// Pixel-wise union. The result keeps `self.instance_id`.
    pub fn union(&self, other: &InstanceMask) -> Result<InstanceMask> {
        check_dims(self.dims(), other.dims())?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| *a || *b)
            .collect();
        InstanceMask::new(self.width, self.height, bits, self.instance_id)
    }
}

/// Read an 8-bit PNG mask; any nonzero sample marks an instance pixel.
pub fn read_mask(path: impl AsRef<Path>, instance_id: u32) -> Result<InstanceMask> {
    let path = path.as_ref();
    let mut reader = open_png(path)?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::BadFormat(format!(
            "{}: expected 8-bit mask, found {:?}",
            path.display(),
            info.bit_depth
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => 1,
    };
    let (width, height) = (info.width, info.height);
    let bytes = read_frame(&mut reader, path)?;
    let bits = bytes
        .chunks_exact(channels)
        .map(|px| {
            // Alpha is ignored.
            let color = if channels == 2 || channels == 4 {
                &px[..channels - 1]
            } else {
                px
            };
            color.iter().any(|b| *b != 0)
        })
        .collect();
    InstanceMask::new(width, height, bits, instance_id)
}

/// Write a mask as an 8-bit grayscale PNG (255 = instance).
pub fn write_mask(path: impl AsRef<Path>, mask: &InstanceMask) -> Result<()> {
    let bytes: Vec<u8> = mask.bits.iter().map(|b| if *b { 255 } else { 0 }).collect();
    write_png(
        path.as_ref(),
        mask.width,
        mask.height,
        png::ColorType::Grayscale,
        png::BitDepth::Eight,
        &bytes,
    )
}

/// Read an 8-bit RGB(A) PNG as packed RGB triples.
pub fn read_rgb(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<[u8; 3]>)> {
    let path = path.as_ref();
    let mut reader = open_png(path)?;
    let info = reader.info();
    let channels = match (info.color_type, info.bit_depth) {
        (png::ColorType::Rgb, png::BitDepth::Eight) => 3,
        (png::ColorType::Rgba, png::BitDepth::Eight) => 4,
        (c, d) => {
            return Err(Error::BadFormat(format!(
                "{}: expected 8-bit RGB, found {d:?} {c:?}",
                path.display()
            )))
        }
    };
    let (width, height) = (info.width, info.height);
    let bytes = read_frame(&mut reader, path)?;
    let rgb = bytes
        .chunks_exact(channels)
        .map(|px| [px[0], px[1], px[2]])
        .collect();
    Ok((width, height, rgb))
}

/// One entry of a frame's instance index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceIndexEntry {
    pub instance_id: u32,
    pub mask_path: String,
    pub plane_path: Option<String>,
}

pub fn read_instance_index(path: impl AsRef<Path>) -> Result<Vec<InstanceIndexEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Distance used to grow the border band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMetric {
    #[default]
    Euclidean,
    Chebyshev,
}

/// Ring of non-mask pixels within `width_px` of a mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BorderBand {
    pub bits: InstanceMask,
    pub width_px: u32,
}

impl BorderBand {
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.bits.pixels()
    }

    pub fn count(&self) -> usize {
        self.bits.count()
    }
}

/// Pixels outside `mask` whose distance to the nearest mask pixel is at most
/// `width_px`, clipped to the image.
pub fn border_band(mask: &InstanceMask, width_px: u32, metric: BandMetric) -> Result<BorderBand> {
    if width_px < 1 {
        return Err(Error::InvalidConfig("band width must be at least 1".into()));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let within = match metric {
        BandMetric::Euclidean => {
            let limit = width_px as f64 * width_px as f64;
            squared_edt(mask)
                .into_iter()
                .map(|d2| d2 <= limit)
                .collect::<Vec<_>>()
        }
        BandMetric::Chebyshev => chebyshev_dilate(mask, width_px as usize),
    };
    let bits = within
        .iter()
        .zip(mask.bits())
        .map(|(near, inside)| *near && !*inside)
        .collect();
    Ok(BorderBand {
        bits: InstanceMask::new(mask.width, mask.height, bits, mask.instance_id)?,
        width_px,
    })
}

/// Exact squared Euclidean distance to the nearest set pixel, computed with
/// the separable lower-envelope-of-parabolas transform.
fn squared_edt(mask: &InstanceMask) -> Vec<f64> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    // Integer-valued and far below 2^53, so every sum below stays exact.
    let far = 1e12;
    let mut grid: Vec<f64> = mask.bits.iter().map(|b| if *b { 0.0 } else { far }).collect();

    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for c in 0..w {
        for r in 0..h {
            f[r] = grid[r * w + c];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for r in 0..h {
            grid[r * w + c] = out[r];
        }
    }
    for r in 0..h {
        f[..w].copy_from_slice(&grid[r * w..(r + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[r * w..(r + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let pf = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for q in 0..n {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        d[q] = (qf - p) * (qf - p) + f[v[k]];
    }
}

/// Square dilation of radius `r` via separable sliding-window counts.
fn chebyshev_dilate(mask: &InstanceMask, r: usize) -> Vec<bool> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let dilate_line = |line: &[bool]| -> Vec<bool> {
        let n = line.len();
        let mut prefix = vec![0usize; n + 1];
        for (i, b) in line.iter().enumerate() {
            prefix[i + 1] = prefix[i] + *b as usize;
        }
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(r);
                let hi = (i + r + 1).min(n);
                prefix[hi] > prefix[lo]
            })
            .collect()
    };
    let mut rows = vec![false; w * h];
    for r_idx in 0..h {
        let out = dilate_line(&mask.bits[r_idx * w..(r_idx + 1) * w]);
        rows[r_idx * w..(r_idx + 1) * w].copy_from_slice(&out);
    }
    let mut out = vec![false; w * h];
    let mut col = vec![false; h];
    for c in 0..w {
        for r_idx in 0..h {
            col[r_idx] = rows[r_idx * w + c];
        }
        for (r_idx, b) in dilate_line(&col).into_iter().enumerate() {
            out[r_idx * w + c] = b;
        }
    }
    out
}

/// Intersection over union; 0 when both masks are empty.
pub fn iou(a: &InstanceMask, b: &InstanceMask) -> Result<f64> {
    check_dims(a.dims(), b.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.bits.iter().zip(&b.bits) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub position: Point3,
    pub color: Option<[u8; 3]>,
}

/// Back-project every pixel with a depth reading.
pub fn to_pointcloud(
    depth: &DepthMap,
    k: &CameraIntrinsics,
    color: Option<&[[u8; 3]]>,
) -> Result<Vec<CloudPoint>> {
    check_dims(k.dims(), depth.dims())?;
    if let Some(rgb) = color {
        if rgb.len() != depth.len() {
            return Err(Error::DimensionMismatch {
                expected: depth.dims(),
                actual: (rgb.len() as u32, 1),
            });
        }
    }
    let w = depth.width as usize;
    let mut points = Vec::new();
    for (i, &z) in depth.data.iter().enumerate() {
        if z > 0.0 {
            let position = backproject((i % w) as f64, (i / w) as f64, z, k)?;
            points.push(CloudPoint {
                position,
                color: color.map(|c| c[i]),
            });
        }
    }
    Ok(points)
}

/// Serialize points as ASCII PLY 1.0. Colors are written only when every
/// point carries one.
pub fn write_ply_to<W: Write>(mut out: W, points: &[CloudPoint]) -> std::io::Result<()> {
    let colored = !points.is_empty() && points.iter().all(|p| p.color.is_some());
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", points.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    if colored {
        writeln!(out, "property uchar red")?;
        writeln!(out, "property uchar green")?;
        writeln!(out, "property uchar blue")?;
    }
    writeln!(out, "end_header")?;
    for p in points {
        let q = p.position;
        write!(out, "{} {} {}", q.x as f32, q.y as f32, q.z as f32)?;
        if colored {
            let [r, g, b] = p.color.unwrap_or_default();
            write!(out, " {r} {g} {b}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_ply(path: impl AsRef<Path>, points: &[CloudPoint]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply_to(BufWriter::new(file), points).map_err(|e| Error::io(path, e))
}
