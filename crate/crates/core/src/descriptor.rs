//! Subimage descriptors.
//!
//! The built-in descriptor is a grayscale cell-mean grid computed on a
//! bilinearly resampled square crop. Externally computed vectors of any
//! dimension are accepted through [`FeatureVector::normalized`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::BBox;
use crate::raster::Raster;

/// Unit-L2-norm descriptor of one subimage.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    /// Normalizes `values` to unit length.
    pub fn normalized(values: Vec<f32>) -> Result<Self> {
        let norm = l2_norm(values.iter().map(|&v| f64::from(v)));
        if norm.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) || !norm.is_finite() {
            return Err(Error::Degenerate("feature vector has zero or non-finite norm"));
        }
        Ok(Self(values.iter().map(|&v| (f64::from(v) / norm) as f32).collect()))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean distance, accumulated in f64.
    pub fn distance(&self, other: &FeatureVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(libm::sqrt(squared_distance(&self.0, &other.0)))
    }
}

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

fn l2_norm(values: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(values.map(|v| v * v).sum::<f64>())
}

/// Scales `v` to unit L2 norm.
pub fn l2_normalize(v: &[f64]) -> Result<FeatureVector> {
    let norm = l2_norm(v.iter().copied());
    if norm.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) || !norm.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero vector"));
    }
    Ok(FeatureVector(v.iter().map(|&x| (x / norm) as f32).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DescriptorConfig {
    /// Side of the square the crop is resampled to.
    pub canonical_size: u32,
    /// Cells per side of the mean-intensity grid; the output has `grid^2` entries.
    pub grid: u32,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            canonical_size: 256,
            grid: 16,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 || self.canonical_size < self.grid {
            return Err(invalid(format!(
                "descriptor needs canonical_size >= grid >= 1 (got {} and {})",
                self.canonical_size, self.grid
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        (self.grid * self.grid) as usize
    }
}

/// Source sample positions and weights for resampling `src` pixels onto
/// `dst` pixels with pixel-centre alignment.
fn bilinear_taps(src: u32, dst: u32) -> Vec<(usize, usize, f64)> {
    let scale = f64::from(src) / f64::from(dst);
    let last = f64::from(src - 1);
    (0..dst)
        .map(|d| {
            let s = ((f64::from(d) + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s as usize;
            let i1 = (i0 + 1).min(src as usize - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Crop -> bilinear resize to `canonical_size^2` -> grayscale `(r+g+b)/3`
/// -> per-cell mean (row-major) -> L2 normalize.
///
/// Grayscale conversion is linear, so it is applied before resampling; the
/// result is the same map with a third of the interpolation work.
pub fn extract_builtin(image: &Raster, bbox: &BBox, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    if !bbox.fits_in(image.width(), image.height()) {
        return Err(invalid(format!(
            "box {bbox} outside {}x{} image",
            image.width(),
            image.height()
        )));
    }
    let (w, h) = (bbox.width(), bbox.height());
    let mut gray = Vec::with_capacity(bbox.area() as usize);
    for y in bbox.y0..bbox.y1 {
        for x in bbox.x0..bbox.x1 {
            let [r, g, b] = image.get(x, y);
            gray.push((f64::from(r) + f64::from(g) + f64::from(b)) / 3.0);
        }
    }

    let size = cfg.canonical_size;
    let xs = bilinear_taps(w, size);
    let ys = bilinear_taps(h, size);
    let grid = cfg.grid as usize;
    let cell_of = |i: u32| (i as usize * grid) / size as usize;
    let mut sums = vec![0.0f64; grid * grid];
    let mut counts = vec![0u64; grid * grid];
    let stride = w as usize;
    for (dy, &(y0, y1, fy)) in ys.iter().enumerate() {
        let row0 = &gray[y0 * stride..(y0 + 1) * stride];
        let row1 = &gray[y1 * stride..(y1 + 1) * stride];
        let cy = cell_of(dy as u32);
        for (dx, &(x0, x1, fx)) in xs.iter().enumerate() {
            let top = row0[x0] + (row0[x1] - row0[x0]) * fx;
            let bottom = row1[x0] + (row1[x1] - row1[x0]) * fx;
            let v = top + (bottom - top) * fy;
            let c = cy * grid + cell_of(dx as u32);
            sums[c] += v;
            counts[c] += 1;
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| s / n as f64)
        .collect();
    l2_normalize(&means)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &FeatureVector) -> f64 {
        libm::sqrt(v.values().iter().map(|&x| f64::from(x) * f64::from(x)).sum())
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(l2_normalize(&[3.0, 4.0]).unwrap().values(), &[0.6f32, 0.8]);
        assert_eq!(l2_normalize(&[2.0, 0.0, 0.0]).unwrap().values(), &[1.0f32, 0.0, 0.0]);
        let unit = l2_normalize(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(unit.values(), &[0.0f32, 1.0, 0.0]);
        assert!(matches!(l2_normalize(&[0.0, 0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn uniform_crop_gives_flat_vector() {
        let img = Raster::filled(40, 30, [128, 128, 128]);
        let bbox = BBox::new(5, 5, 35, 25).unwrap();
        let v = extract_builtin(&img, &bbox, &DescriptorConfig::default()).unwrap();
        assert_eq!(v.dim(), 256);
        for &x in v.values() {
            assert!((f64::from(x) - 1.0 / 16.0).abs() < 1e-7);
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let mut img = Raster::filled(50, 50, [0, 0, 0]);
        for y in 0..50 {
            for x in 0..50 {
                img.set(x, y, [(x * 5) as u8, (y * 3) as u8, ((x * y) % 251) as u8]);
            }
        }
        let bbox = BBox::new(3, 7, 41, 44).unwrap();
        let cfg = DescriptorConfig::default();
        let a = extract_builtin(&img, &bbox, &cfg).unwrap();
        let b = extract_builtin(&img, &bbox, &cfg).unwrap();
        let bits = |v: &FeatureVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!((norm(&a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn half_black_half_white() {
        // 4x4 raster, left two columns black, right two white; canonical 4 is
        // an identity resample, so the 2x2 cell means are exactly 0,255,0,255.
        let mut gray = [0u8; 16];
        for y in 0..4 {
            for x in 2..4 {
                gray[y * 4 + x] = 255;
            }
        }
        let img = Raster::from_gray(4, 4, &gray).unwrap();
        let cfg = DescriptorConfig { canonical_size: 4, grid: 2 };
        let v = extract_builtin(&img, &img.frame().unwrap(), &cfg).unwrap();
        let s = (1.0 / libm::sqrt(2.0)) as f32;
        assert_eq!(v.values(), &[0.0, s, 0.0, s]);
    }

    #[test]
    fn box_outside_image() {
        let img = Raster::filled(10, 10, [1, 2, 3]);
        let bbox = BBox::new(5, 5, 11, 10).unwrap();
        assert!(extract_builtin(&img, &bbox, &DescriptorConfig::default()).is_err());
    }

    #[test]
    fn bad_config() {
        let img = Raster::filled(10, 10, [1, 2, 3]);
        let cfg = DescriptorConfig { canonical_size: 4, grid: 8 };
        assert!(extract_builtin(&img, &img.frame().unwrap(), &cfg).is_err());
    }

    #[test]
    fn prescaled_crop_agrees() {
        // a smooth pattern and the same pattern upsampled 2x (pixel replication)
        let mut small = Raster::filled(64, 64, [0, 0, 0]);
        let mut big = Raster::filled(128, 128, [0, 0, 0]);
        for y in 0..64u32 {
            for x in 0..64u32 {
                let v = ((x * 3 + y * 2) % 200) as u8 + 20;
                small.set(x, y, [v, v / 2, 255 - v]);
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    big.set(2 * x + dx, 2 * y + dy, [v, v / 2, 255 - v]);
                }
            }
        }
        let cfg = DescriptorConfig::default();
        let a = extract_builtin(&small, &small.frame().unwrap(), &cfg).unwrap();
        let b = extract_builtin(&big, &big.frame().unwrap(), &cfg).unwrap();
        let cos: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(&x, &y)| f64::from(x) * f64::from(y))
            .sum();
        assert!(1.0 - cos < 0.05, "cosine distance {}", 1.0 - cos);
    }

    #[test]
    fn distance_dimension_check() {
        let a = l2_normalize(&[1.0, 0.0]).unwrap();
        let b = l2_normalize(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(a.distance(&b), Err(Error::DimensionMismatch { .. })));
    }
}
