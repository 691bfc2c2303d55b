//! Top-down orthographic rasterization of a scene.
//!
//! Pixel `(col, row)` samples the workspace point
//! `((col + 0.5) / ppm, (row + 0.5) / ppm)`; row 0 is the `y = 0` edge.

use std::io::Cursor;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::WorkspaceConfig;
use super::object::{ObjectInstance, ObjectKind};
use super::scene::SceneState;
use super::WorldError;

pub const TABLE_RGB: [u8; 3] = [48, 48, 48];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorRaster {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub data: Vec<u8>,
}

impl ColorRaster {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = (width * height) as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    pub fn pixel(&self, col: u32, row: u32) -> [u8; 3] {
        let i = ((row * self.width + col) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>, WorldError> {
        encode_png(self.width, self.height, png::ColorType::Rgb, png::BitDepth::Eight, &self.data)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, WorldError> {
        let (info, buf) = decode_png(bytes)?;
        if info.0 != png::ColorType::Rgb || info.1 != png::BitDepth::Eight {
            return Err(WorldError::Png("expected 8-bit RGB".into()));
        }
        Ok(Self {
            width: info.2,
            height: info.3,
            data: buf,
        })
    }
}

/// Heights above the table in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl DepthRaster {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; (width * height) as usize],
        }
    }

    pub fn at(&self, col: u32, row: u32) -> f32 {
        self.data[(row * self.width + col) as usize]
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(0.0, f32::max)
    }

    /// 16-bit grayscale PNG holding `round(depth * 1000)` millimeters.
    pub fn to_png(&self) -> Result<Vec<u8>, WorldError> {
        let mut bytes = Vec::with_capacity(self.data.len() * 2);
        for &d in &self.data {
            let mm = (f64::from(d) * 1000.0).round().clamp(0.0, f64::from(u16::MAX)) as u16;
            bytes.extend_from_slice(&mm.to_be_bytes());
        }
        encode_png(self.width, self.height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &bytes)
    }

    /// Decodes to integer millimeters.
    pub fn millimeters_from_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u16>), WorldError> {
        let (info, buf) = decode_png(bytes)?;
        if info.0 != png::ColorType::Grayscale || info.1 != png::BitDepth::Sixteen {
            return Err(WorldError::Png("expected 16-bit grayscale".into()));
        }
        let mm = buf.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Ok((info.2, info.3, mm))
    }
}

fn encode_png(
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>, WorldError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(depth);
        enc.set_compression(png::Compression::Fast);
        let mut writer = enc.write_header().map_err(|e| WorldError::Png(e.to_string()))?;
        writer.write_image_data(data).map_err(|e| WorldError::Png(e.to_string()))?;
    }
    Ok(out)
}

type PngInfo = (png::ColorType, png::BitDepth, u32, u32);

fn decode_png(bytes: &[u8]) -> Result<(PngInfo, Vec<u8>), WorldError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| WorldError::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| WorldError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| WorldError::Png(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    Ok(((frame.color_type, frame.bit_depth, frame.width, frame.height), buf))
}

fn object_rgb(o: &ObjectInstance) -> [u8; 3] {
    let base = o.color.rgb();
    match o.kind {
        // zones are painted as a darker floor marking
        ObjectKind::Zone => base.map(|c| (u16::from(c) * 3 / 5) as u8),
        _ => base,
    }
}

fn covers_pixel(o: &ObjectInstance, x: f64, y: f64) -> bool {
    let dx = x - o.pose.x;
    let dy = y - o.pose.y;
    match o.kind {
        ObjectKind::Bowl => {
            let r = o.extent().0 / 2.0;
            dx * dx + dy * dy <= r * r
        }
        ObjectKind::Zone => o.footprint().contains(x, y),
        ObjectKind::Block => {
            let half = o.extent().0 / 2.0;
            let (s, c) = o.pose.yaw.sin_cos();
            let lx = c * dx + s * dy;
            let ly = -s * dx + c * dy;
            lx.abs() <= half && ly.abs() <= half
        }
    }
}

/// Painter's-order rasterization; objects with a higher top surface are drawn last.
pub fn render_clean(state: &SceneState, cfg: &WorkspaceConfig) -> (ColorRaster, DepthRaster) {
    let (w, h) = (cfg.raster_width, cfg.raster_height);
    let ppm = cfg.pixels_per_meter;
    let mut color = ColorRaster::filled(w, h, TABLE_RGB);
    let mut depth = DepthRaster::zeros(w, h);

    let mut order: Vec<(f64, &ObjectInstance)> = state.objects.iter().map(|o| (state.top_z(o.id), o)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));

    for (top, o) in order {
        let rgb = object_rgb(o);
        // bounding box of the (possibly rotated) shape
        let r = o.extent().0 * std::f64::consts::FRAC_1_SQRT_2 + 1.0 / ppm;
        let c0 = (((o.pose.x - r - cfg.bounds.x0) * ppm).floor().max(0.0)) as u32;
        let c1 = (((o.pose.x + r - cfg.bounds.x0) * ppm).ceil().min(f64::from(w))) as u32;
        let r0 = (((o.pose.y - r - cfg.bounds.y0) * ppm).floor().max(0.0)) as u32;
        let r1 = (((o.pose.y + r - cfg.bounds.y0) * ppm).ceil().min(f64::from(h))) as u32;
        for row in r0..r1 {
            let y = cfg.bounds.y0 + (f64::from(row) + 0.5) / ppm;
            for col in c0..c1 {
                let x = cfg.bounds.x0 + (f64::from(col) + 0.5) / ppm;
                if covers_pixel(o, x, y) {
                    let i = (row * w + col) as usize;
                    color.data[i * 3..i * 3 + 3].copy_from_slice(&rgb);
                    depth.data[i] = top as f32;
                }
            }
        }
    }
    (color, depth)
}

/// Renders and optionally perturbs the rasters: Gaussian depth noise (clamped at zero)
/// and a uniform ±2 level jitter per color channel.
pub fn render<R: Rng + ?Sized>(
    state: &SceneState,
    cfg: &WorkspaceConfig,
    rng: &mut R,
    noisy: bool,
) -> (ColorRaster, DepthRaster) {
    let (mut color, mut depth) = render_clean(state, cfg);
    if !noisy {
        return (color, depth);
    }
    if cfg.noise_channels.depth && cfg.obs_noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.obs_noise_sigma).expect("sigma validated");
        for d in depth.data.iter_mut() {
            let v = f64::from(*d) + normal.sample(rng);
            *d = v.max(0.0) as f32;
        }
    }
    if cfg.noise_channels.color {
        for c in color.data.iter_mut() {
            let j: i16 = rng.random_range(-2..=2);
            *c = (i16::from(*c) + j).clamp(0, 255) as u8;
        }
    }
    (color, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::geometry::Pose;
    use crate::world::object::{BlockSize, Color, ObjectId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_scene_is_bare_table() {
        let cfg = WorkspaceConfig::default();
        let (c, d) = render_clean(&SceneState::empty(), &cfg);
        assert_eq!((c.width, c.height), (320, 160));
        assert!(c.data.chunks(3).all(|p| p == TABLE_RGB));
        assert!(d.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn big_block_depth_matches_footprint() {
        let cfg = WorkspaceConfig::default();
        let block = ObjectInstance::block(ObjectId(0), Color::Red, BlockSize::Big, Pose::new(0.5, 0.25, 0.0));
        let fp = block.footprint();
        let (_, d) = render_clean(&SceneState::new(vec![block]), &cfg);
        assert!((d.max() - 0.04).abs() < 1e-7);
        for row in 0..d.height {
            for col in 0..d.width {
                let x = (f64::from(col) + 0.5) / 320.0;
                let y = (f64::from(row) + 0.5) / 320.0;
                let v = d.at(col, row);
                if fp.contains(x, y) {
                    assert!((v - 0.04).abs() < 1e-7);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn taller_objects_paint_over_shorter() {
        let cfg = WorkspaceConfig::default();
        let mut top = ObjectInstance::block(ObjectId(1), Color::Blue, BlockSize::Small, Pose::new(0.5, 0.25, 0.0));
        top.supported_by = Some(ObjectId(0));
        let s = SceneState::new(vec![
            top,
            ObjectInstance::block(ObjectId(0), Color::Red, BlockSize::Big, Pose::new(0.5, 0.25, 0.0)),
        ]);
        let (c, d) = render_clean(&s, &cfg);
        assert_eq!(c.pixel(160, 80), Color::Blue.rgb());
        assert!((d.at(160, 80) - 0.06).abs() < 1e-7);
    }

    #[test]
    fn noise_keeps_depth_non_negative() {
        let mut cfg = WorkspaceConfig::default();
        cfg.obs_noise_sigma = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (c, d) = render(&SceneState::empty(), &cfg, &mut rng, true);
        assert!(d.data.iter().all(|&v| v >= 0.0));
        assert!(d.data.iter().any(|&v| v > 0.0));
        assert!(c.data.iter().all(|&v| (46..=50).contains(&v)));
    }

    #[test]
    fn png_round_trip() {
        let cfg = WorkspaceConfig::default();
        let block = ObjectInstance::block(ObjectId(0), Color::Red, BlockSize::Big, Pose::new(0.3, 0.2, 0.4));
        let (c, d) = render_clean(&SceneState::new(vec![block]), &cfg);
        let back = ColorRaster::from_png(&c.to_png().unwrap()).unwrap();
        assert_eq!(back, c);
        let (w, h, mm) = DepthRaster::millimeters_from_png(&d.to_png().unwrap()).unwrap();
        assert_eq!((w, h), (320, 160));
        for (m, v) in mm.iter().zip(&d.data) {
            assert_eq!(*m, (f64::from(*v) * 1000.0).round() as u16);
        }
    }
}
