//! Binary feature file.
//!
//! ```text
//! header:  b"RLFEAT01"  u32 dim  u32 count          (little endian)
//! record:  u32 len  [len bytes utf-8 image id]  i32 x0 y0 x1 y1  [dim x f32]
//! ```
//!
//! Records carry one subimage each. Vectors are re-normalized on load.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use dbloc_core::descriptor::FeatureVector;
use dbloc_core::BBox;

use super::write_atomic;
use crate::error::{io_err, Error, Result};

pub const MAGIC: &[u8; 8] = b"RLFEAT01";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub image_id: String,
    pub bbox: BBox,
    pub feature: FeatureVector,
}

pub fn encode_features(records: &[FeatureRecord]) -> std::result::Result<Vec<u8>, String> {
    let dim = records.first().map_or(0, |r| r.feature.dim());
    let mut out = Vec::with_capacity(16 + records.len() * (40 + 4 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for r in records {
        if r.feature.dim() != dim {
            return Err(format!(
                "record `{}` {} has dimension {}, file has {dim}",
                r.image_id,
                r.bbox,
                r.feature.dim()
            ));
        }
        out.extend_from_slice(&(r.image_id.len() as u32).to_le_bytes());
        out.extend_from_slice(r.image_id.as_bytes());
        for c in [r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1] {
            out.extend_from_slice(&(c as i32).to_le_bytes());
        }
        for v in r.feature.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_features(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    let bytes = encode_features(records).map_err(|msg| Error::Format {
        path: path.to_path_buf(),
        offset: 0,
        msg,
    })?;
    write_atomic(path, &bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], (usize, String)> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err((self.pos, format!("truncated: need {n} more bytes"))),
        }
    }

    fn u32(&mut self) -> std::result::Result<u32, (usize, String)> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> std::result::Result<i32, (usize, String)> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses a feature file image; errors carry the byte offset.
pub fn decode_features(bytes: &[u8]) -> std::result::Result<(usize, Vec<FeatureRecord>), (usize, String)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err((0, "bad magic, expected RLFEAT01".into()));
    }
    let dim = c.u32()? as usize;
    let count = c.u32()? as usize;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let start = c.pos;
        let len = c.u32()? as usize;
        let image_id = std::str::from_utf8(c.take(len)?)
            .map_err(|_| (start + 4, "image id is not utf-8".to_string()))?
            .to_string();
        let box_at = c.pos;
        let coords = [c.i32()?, c.i32()?, c.i32()?, c.i32()?];
        if coords.iter().any(|&v| v < 0) {
            return Err((box_at, format!("negative box coordinate {coords:?}")));
        }
        let [x0, y0, x1, y1] = coords.map(|v| v as u32);
        let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| (box_at, e.to_string()))?;
        let vec_at = c.pos;
        let raw = c.take(dim * 4)?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let feature = FeatureVector::normalized(values).map_err(|e| (vec_at, e.to_string()))?;
        records.push(FeatureRecord { image_id, bbox, feature });
    }
    if c.pos != bytes.len() {
        return Err((c.pos, format!("{} trailing bytes after {count} records", bytes.len() - c.pos)));
    }
    Ok((dim, records))
}

/// All records in file order.
pub fn read_features(path: &Path) -> Result<(usize, Vec<FeatureRecord>)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_features(&bytes).map_err(|(offset, msg)| Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        msg,
    })
}

/// Externally computed features keyed by `(image id, box)`.
#[derive(Debug, Clone, Default)]
pub struct FeatureMap {
    pub dim: usize,
    pub map: HashMap<(String, BBox), FeatureVector>,
}

impl FeatureMap {
    pub fn get(&self, image_id: &str, bbox: &BBox) -> Option<&FeatureVector> {
        self.map.get(&(image_id.to_string(), *bbox))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn load_external_features(path: &Path) -> Result<FeatureMap> {
    let (dim, records) = read_features(path)?;
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        map.insert((r.image_id, r.bbox), r.feature);
    }
    Ok(FeatureMap { dim, map })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, x: u32, v: Vec<f32>) -> FeatureRecord {
        FeatureRecord {
            image_id: id.into(),
            bbox: BBox::new(x, 0, x + 4, 4).unwrap(),
            feature: FeatureVector::normalized(v).unwrap(),
        }
    }

    #[test]
    fn roundtrip_two_records() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let v: Vec<f32> = (0..256).map(|i| i as f32).collect();
        let w: Vec<f32> = (0..256).map(|i| (255 - i) as f32 + 0.5).collect();
        let recs = vec![rec("img", 0, v), rec("img", 2, w)];
        write_features(&p, &recs).unwrap();
        let m = load_external_features(&p).unwrap();
        assert_eq!((m.dim, m.len()), (256, 2));
        for r in &recs {
            let got = m.get("img", &r.bbox).unwrap();
            let norm: f64 = got.values().iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
            for (a, b) in got.values().iter().zip(r.feature.values()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_features(&[rec("ab", 1, vec![1.0, 0.0])]).unwrap();
        assert_eq!(&bytes[..8], b"RLFEAT01");
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[16..22], &[2, 0, 0, 0, b'a', b'b']);
        assert_eq!(&bytes[22..38], &[1, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 4, 0, 0, 0]);
        assert_eq!(&bytes[38..], &[0, 0, 0x80, 0x3f, 0, 0, 0, 0]);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        assert!(encode_features(&[rec("a", 0, vec![1.0, 0.0]), rec("a", 1, vec![1.0, 0.0, 0.0])]).is_err());
        // hand-built file whose second record carries a 3-dim vector under a 2-dim header
        let mut bytes = encode_features(&[rec("a", 0, vec![1.0, 0.0]), rec("a", 1, vec![0.0, 1.0])]).unwrap();
        bytes.extend_from_slice(&0f32.to_le_bytes());
        let err = decode_features(&bytes).unwrap_err();
        assert_eq!(err.0, bytes.len() - 4);
    }

    #[test]
    fn truncation_and_magic() {
        let bytes = encode_features(&[rec("a", 0, vec![1.0, 0.0])]).unwrap();
        let (offset, _) = decode_features(&bytes[..bytes.len() - 1]).unwrap_err();
        assert_eq!(offset, bytes.len() - 8);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode_features(&bad).unwrap_err().0, 0);
    }

    #[test]
    fn negative_box_rejected() {
        let mut bytes = encode_features(&[rec("a", 0, vec![1.0, 0.0])]).unwrap();
        bytes[21..25].copy_from_slice(&(-3i32).to_le_bytes());
        assert_eq!(decode_features(&bytes).unwrap_err().0, 21);
    }
}
