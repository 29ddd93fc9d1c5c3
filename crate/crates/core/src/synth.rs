//! Seeded synthetic reference/query pairs.
//!
//! A reference image is procedural value noise with a few static shapes on
//! top. Its query counterpart is the same scene translated by a small jitter
//! (crop and edge-pad) with a global brightness gain, standing in for a
//! viewpoint and season change. Positive pairs additionally get 1-3
//! high-contrast striped objects whose boxes are the change annotations.
//!
//! Each image also gets simulated object-detector output: every salient shape
//! is detected with a configurable probability, possibly several times with
//! jittered boxes, plus a few false alarms at random places.
//!
//! Generation uses integer arithmetic only, so output is identical on every
//! platform. Everything is a function of `(seed, pair index)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::evaluation::Polarity;
use crate::geometry::BBox;
use crate::hash::{mix_seed, splitmix64};
use crate::raster::Raster;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Side of the square images.
    pub image_size: u32,
    pub n_pairs: u32,
    /// Fraction of positive pairs, in `[0, 1]`.
    pub change_rate: f64,
    /// Largest query translation per axis, in pixels.
    pub jitter_max: u32,
    /// Inclusive side-length range of static shapes and planted objects.
    pub object_size: (u32, u32),
    /// Number of value-noise octaves in the background.
    pub texture_complexity: u32,
    /// Largest brightness gain deviation of the query, in per-mille.
    pub brightness_jitter: u32,
    /// Static shapes per scene.
    pub static_shapes: u32,
    /// Probability (per-mille) that the simulated detector fires on a shape.
    pub detect_permille: u32,
    /// Largest number of boxes the detector reports for one shape.
    pub max_duplicates: u32,
    /// Largest number of false-alarm boxes per image.
    pub false_proposals: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            image_size: 256,
            n_pairs: 200,
            change_rate: 0.5,
            jitter_max: 6,
            object_size: (32, 96),
            texture_complexity: 4,
            brightness_jitter: 150,
            static_shapes: 4,
            detect_permille: 900,
            max_duplicates: 2,
            false_proposals: 3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let s = self.image_size;
        if s < 16 {
            return Err(invalid(format!("image_size {s} is below 16")));
        }
        if self.jitter_max >= s / 4 {
            return Err(invalid(format!(
                "jitter_max {} must be below image_size/4 = {}",
                self.jitter_max,
                s / 4
            )));
        }
        let (lo, hi) = self.object_size;
        if lo < 4 || lo > hi || hi > s {
            return Err(invalid(format!(
                "object_size [{lo}, {hi}] must satisfy 4 <= min <= max <= {s}"
            )));
        }
        if !(0.0..=1.0).contains(&self.change_rate) {
            return Err(invalid(format!("change_rate {} outside [0, 1]", self.change_rate)));
        }
        if self.texture_complexity == 0 {
            return Err(invalid("texture_complexity must be positive"));
        }
        if self.brightness_jitter >= 1000 {
            return Err(invalid("brightness_jitter must be below 1000 per-mille"));
        }
        if self.detect_permille > 1000 {
            return Err(invalid("detect_permille above 1000"));
        }
        if self.max_duplicates == 0 {
            return Err(invalid("max_duplicates must be at least 1"));
        }
        Ok(())
    }

    /// Number of positive pairs: `floor(n_pairs * change_rate)`.
    pub fn positive_count(&self) -> u32 {
        (f64::from(self.n_pairs) * self.change_rate) as u32
    }

    /// Positives are spread evenly: pair `i` is positive when
    /// `floor((i+1) * rate) > floor(i * rate)`. Over `0..n_pairs` this yields
    /// exactly [`positive_count`](Self::positive_count) positives.
    pub fn polarity(&self, index: u32) -> Polarity {
        let r = self.change_rate;
        let a = (f64::from(index) * r) as u64;
        let b = (f64::from(index + 1) * r) as u64;
        if b > a {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

pub fn reference_id(index: u32) -> String {
    format!("r{index:04}")
}

pub fn query_id(index: u32) -> String {
    format!("q{index:04}")
}

/// One generated test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPair {
    pub index: u32,
    pub reference: Raster,
    pub query: Raster,
    pub polarity: Polarity,
    /// Boxes of the planted objects; empty for negative pairs.
    pub gt_boxes: Vec<BBox>,
    /// Simulated detector output `(box, confidence)` on the reference image.
    pub reference_detections: Vec<(BBox, f64)>,
    /// Simulated detector output on the query image.
    pub query_detections: Vec<(BBox, f64)>,
}

const PALETTE: [[u8; 3]; 8] = [
    [235, 30, 30],
    [20, 30, 225],
    [250, 230, 20],
    [20, 205, 60],
    [250, 250, 250],
    [10, 10, 10],
    [240, 20, 220],
    [20, 225, 230],
];

/// Palette indices by luminance.
const BRIGHT: [usize; 4] = [2, 4, 6, 7];
const DARK: [usize; 4] = [0, 1, 3, 5];

#[derive(Clone, Copy)]
enum Shape {
    Rect,
    Ellipse,
}

fn inside_shape(shape: Shape, b: &BBox, x: u32, y: u32) -> bool {
    match shape {
        Shape::Rect => true,
        Shape::Ellipse => {
            // (2x - cx2)^2 / w^2 + (2y - cy2)^2 / h^2 <= 1, scaled to integers
            let (w, h) = (i64::from(b.width()), i64::from(b.height()));
            let dx = 2 * i64::from(x - b.x0) + 1 - w;
            let dy = 2 * i64::from(y - b.y0) + 1 - h;
            dx * dx * h * h + dy * dy * w * w <= w * w * h * h
        }
    }
}

fn lattice(key: u64, octave: u32, ix: u32, iy: u32) -> u32 {
    (mix_seed(key, [u64::from(octave), u64::from(ix), u64::from(iy)]) & 0xFF) as u32
}

/// Multi-octave value noise in `0..=255`, fixed-point bilinear.
fn value_noise(key: u64, octaves: u32, size: u32, x: u32, y: u32) -> u32 {
    let mut acc = 0u32;
    let mut weight = 0u32;
    for o in 0..octaves {
        let cell = ((size / 4) >> o).max(2);
        let amp = 1u32 << (octaves - 1 - o).min(8);
        let (ix, iy) = (x / cell, y / cell);
        let fx = (x % cell) * 256 / cell;
        let fy = (y % cell) * 256 / cell;
        let v00 = lattice(key, o, ix, iy);
        let v10 = lattice(key, o, ix + 1, iy);
        let v01 = lattice(key, o, ix, iy + 1);
        let v11 = lattice(key, o, ix + 1, iy + 1);
        let top = v00 * (256 - fx) + v10 * fx;
        let bottom = v01 * (256 - fx) + v11 * fx;
        let v = (top * (256 - fy) + bottom * fy) >> 16;
        acc += v * amp;
        weight += amp;
    }
    acc / weight
}

fn random_box(rng: &mut ChaCha8Rng, frame: u32, (lo, hi): (u32, u32)) -> BBox {
    let w = rng.random_range(lo..=hi);
    let h = rng.random_range(lo..=hi);
    let x0 = rng.random_range(0..=frame - w);
    let y0 = rng.random_range(0..=frame - h);
    BBox {
        x0,
        y0,
        x1: x0 + w,
        y1: y0 + h,
    }
}

struct StaticShape {
    bbox: BBox,
    shape: Shape,
    color: [u8; 3],
}

fn scene(cfg: &SynthConfig, index: u32) -> (Raster, Vec<BBox>) {
    let size = cfg.image_size;
    let key = mix_seed(cfg.seed, [u64::from(index), 0]);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let mut img = Raster::filled(size, size, [0, 0, 0]);
    let keys = [splitmix64(key ^ 1), splitmix64(key ^ 2), splitmix64(key ^ 3)];
    for y in 0..size {
        for x in 0..size {
            let mut px = [0u8; 3];
            for (c, k) in keys.iter().enumerate() {
                let v = value_noise(*k, cfg.texture_complexity, size, x, y);
                px[c] = (40 + v * 176 / 255) as u8;
            }
            img.set(x, y, px);
        }
    }
    let shapes: Vec<StaticShape> = (0..cfg.static_shapes)
        .map(|_| StaticShape {
            bbox: random_box(&mut rng, size, cfg.object_size),
            shape: if rng.random_range(0..2u32) == 0 { Shape::Rect } else { Shape::Ellipse },
            color: [
                rng.random_range(30..=225u32) as u8,
                rng.random_range(30..=225u32) as u8,
                rng.random_range(30..=225u32) as u8,
            ],
        })
        .collect();
    for s in &shapes {
        for y in s.bbox.y0..s.bbox.y1 {
            for x in s.bbox.x0..s.bbox.x1 {
                if inside_shape(s.shape, &s.bbox, x, y) {
                    img.set(x, y, s.color);
                }
            }
        }
    }
    (img, shapes.into_iter().map(|s| s.bbox).collect())
}

fn translate_clip(b: &BBox, dx: i64, dy: i64, size: u32) -> Option<BBox> {
    let s = i64::from(size);
    let x0 = (i64::from(b.x0) + dx).clamp(0, s) as u32;
    let x1 = (i64::from(b.x1) + dx).clamp(0, s) as u32;
    let y0 = (i64::from(b.y0) + dy).clamp(0, s) as u32;
    let y1 = (i64::from(b.y1) + dy).clamp(0, s) as u32;
    let moved = BBox::new(x0, y0, x1, y1).ok()?;
    (2 * moved.area() >= b.area()).then_some(moved)
}

fn paint_object(img: &mut Raster, rng: &mut ChaCha8Rng, b: &BBox) {
    // one bright and one dark colour so the stripes survive grayscale
    let a = BRIGHT[rng.random_range(0..BRIGHT.len() as u32) as usize];
    let c = DARK[rng.random_range(0..DARK.len() as u32) as usize];
    let (a, c) = if rng.random_bool(0.5) { (a, c) } else { (c, a) };
    let period = (b.width().min(b.height()) / rng.random_range(3..=5u32)).max(2);
    let orient = rng.random_range(0..3u32);
    for y in b.y0..b.y1 {
        for x in b.x0..b.x1 {
            let t = match orient {
                0 => x - b.x0,
                1 => y - b.y0,
                _ => (x - b.x0) + (y - b.y0),
            };
            let color = if (t / period).is_multiple_of(2) { PALETTE[a] } else { PALETTE[c] };
            img.set(x, y, color);
        }
    }
}

fn detect(cfg: &SynthConfig, rng: &mut ChaCha8Rng, salient: &[BBox]) -> Vec<(BBox, f64)> {
    let size = i64::from(cfg.image_size);
    let mut out = Vec::new();
    for s in salient {
        if rng.random_range(0..1000u32) >= cfg.detect_permille {
            continue;
        }
        let copies = rng.random_range(1..=cfg.max_duplicates);
        let d = i64::from((s.width().min(s.height()) / 16).max(1));
        for _ in 0..copies {
            let mut side = |v: u32| (i64::from(v) + rng.random_range(-d..=d)).clamp(0, size) as u32;
            let (x0, y0, x1, y1) = (side(s.x0), side(s.y0), side(s.x1), side(s.y1));
            let confidence = f64::from(rng.random_range(50..1000u32)) / 1000.0;
            if let Ok(b) = BBox::new(x0, y0, x1, y1) {
                out.push((b, confidence));
            }
        }
    }
    let lo = (cfg.image_size / 8).max(2);
    let hi = (cfg.image_size / 3).max(lo);
    for _ in 0..rng.random_range(0..=cfg.false_proposals) {
        let b = random_box(rng, cfg.image_size, (lo, hi));
        out.push((b, f64::from(rng.random_range(0..1000u32)) / 1000.0));
    }
    out
}

/// Generates pair `index`.
pub fn gen_pair(cfg: &SynthConfig, index: u32) -> Result<SynthPair> {
    cfg.validate()?;
    let size = cfg.image_size;
    let (reference, static_boxes) = scene(cfg, index);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, [u64::from(index), 1]));

    let j = i64::from(cfg.jitter_max);
    let dx = rng.random_range(-j..=j);
    let dy = rng.random_range(-j..=j);
    let b = cfg.brightness_jitter;
    let gain = rng.random_range(1000 - b..=1000 + b);
    let max = i64::from(size) - 1;
    let mut query = Raster::filled(size, size, [0, 0, 0]);
    for y in 0..size {
        for x in 0..size {
            let sx = (i64::from(x) - dx).clamp(0, max) as u32;
            let sy = (i64::from(y) - dy).clamp(0, max) as u32;
            let px = reference.get(sx, sy).map(|c| (u32::from(c) * gain / 1000).min(255) as u8);
            query.set(x, y, px);
        }
    }

    let polarity = cfg.polarity(index);
    let mut gt_boxes = Vec::new();
    if polarity == Polarity::Positive {
        for _ in 0..rng.random_range(1..=3u32) {
            let bbox = random_box(&mut rng, size, cfg.object_size);
            paint_object(&mut query, &mut rng, &bbox);
            gt_boxes.push(bbox);
        }
    }

    let mut query_salient: Vec<BBox> = static_boxes
        .iter()
        .filter_map(|s| translate_clip(s, dx, dy, size))
        .collect();
    query_salient.extend_from_slice(&gt_boxes);
    let mut det_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, [u64::from(index), 2]));
    let reference_detections = detect(cfg, &mut det_rng, &static_boxes);
    let mut det_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, [u64::from(index), 3]));
    let query_detections = detect(cfg, &mut det_rng, &query_salient);

    Ok(SynthPair {
        index,
        reference,
        query,
        polarity,
        gt_boxes,
        reference_detections,
        query_detections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            image_size: 64,
            n_pairs: 10,
            object_size: (8, 20),
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_rate_all_negative() {
        let cfg = SynthConfig { change_rate: 0.0, ..small() };
        for i in 0..cfg.n_pairs {
            let p = gen_pair(&cfg, i).unwrap();
            assert_eq!(p.polarity, Polarity::Negative);
            assert!(p.gt_boxes.is_empty());
        }
    }

    #[test]
    fn positive_count_floor() {
        let cfg = SynthConfig { n_pairs: 10, change_rate: 0.5, ..small() };
        let n = (0..10).filter(|&i| cfg.polarity(i) == Polarity::Positive).count();
        assert_eq!(n, 5);
        let cfg = SynthConfig { n_pairs: 7, change_rate: 0.3, ..small() };
        let n = (0..7).filter(|&i| cfg.polarity(i) == Polarity::Positive).count() as u32;
        assert_eq!(n, cfg.positive_count());
        assert_eq!(n, 2);
        let cfg = SynthConfig { change_rate: 1.0, ..small() };
        assert!((0..10).all(|i| cfg.polarity(i) == Polarity::Positive));
    }

    #[test]
    fn change_only_inside_gt_without_perturbation() {
        let cfg = SynthConfig {
            jitter_max: 0,
            brightness_jitter: 0,
            change_rate: 1.0,
            ..small()
        };
        for i in 0..5 {
            let p = gen_pair(&cfg, i).unwrap();
            assert_eq!(p.polarity, Polarity::Positive);
            let mut changed = 0;
            for y in 0..64 {
                for x in 0..64 {
                    if p.reference.get(x, y) != p.query.get(x, y) {
                        changed += 1;
                        assert!(p.gt_boxes.iter().any(|b| b.contains_pixel(x, y)));
                    }
                }
            }
            assert!(changed > 0);
        }
    }

    #[test]
    fn deterministic() {
        let cfg = small();
        assert_eq!(gen_pair(&cfg, 3).unwrap(), gen_pair(&cfg, 3).unwrap());
        assert_ne!(gen_pair(&cfg, 3).unwrap().reference, gen_pair(&cfg, 4).unwrap().reference);
    }

    #[test]
    fn detections_stay_in_frame() {
        let cfg = small();
        for i in 0..10 {
            let p = gen_pair(&cfg, i).unwrap();
            for (b, c) in p.reference_detections.iter().chain(&p.query_detections) {
                assert!(b.fits_in(64, 64));
                assert!((0.0..=1.0).contains(c));
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig { jitter_max: 16, ..small() }.validate().is_err());
        assert!(SynthConfig { object_size: (10, 80), ..small() }.validate().is_err());
        assert!(SynthConfig { change_rate: 1.5, ..small() }.validate().is_err());
        assert!(small().validate().is_ok());
        assert!(SynthConfig::default().validate().is_ok());
    }
}
