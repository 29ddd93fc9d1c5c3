//! Dataset manifest: JSON lines, one test pair per line.
//!
//! ```text
//! {"query_image_id":"q0003","gt_ref_image_id":"r0003","polarity":"positive","gt_boxes":[{"x0":5,"y0":9,"x1":60,"y1":41}]}
//! ```
//!
//! Images are looked up as `<query_dir>/<query_image_id>.ppm` and
//! `<reference_dir>/<gt_ref_image_id>.ppm`.

use std::collections::HashSet;
use std::path::Path;

use dbloc_core::evaluation::Polarity;
use dbloc_core::BBox;
use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl, JsonBox};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub query_image_id: String,
    pub gt_ref_image_id: String,
    pub polarity: String,
    #[serde(default)]
    pub gt_boxes: Vec<JsonBox>,
}

/// Parsed, validated test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPair {
    pub query_image_id: String,
    pub gt_ref_image_id: String,
    pub polarity: Polarity,
    pub gt_boxes: Vec<BBox>,
}

impl From<&TestPair> for ManifestRecord {
    fn from(p: &TestPair) -> Self {
        Self {
            query_image_id: p.query_image_id.clone(),
            gt_ref_image_id: p.gt_ref_image_id.clone(),
            polarity: p.polarity.as_str().into(),
            gt_boxes: p.gt_boxes.iter().map(|&b| b.into()).collect(),
        }
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<TestPair>> {
    let records: Vec<ManifestRecord> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let fail = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let polarity =
                Polarity::parse(&r.polarity).ok_or_else(|| fail(format!("unknown polarity `{}`", r.polarity)))?;
            let gt_boxes = r
                .gt_boxes
                .iter()
                .map(|b| b.to_bbox())
                .collect::<dbloc_core::Result<Vec<_>>>()
                .map_err(|e| fail(e.to_string()))?;
            match (polarity, gt_boxes.is_empty()) {
                (Polarity::Positive, true) => return Err(fail("positive pair without change boxes".into())),
                (Polarity::Negative, false) => return Err(fail("negative pair with change boxes".into())),
                _ => {}
            }
            if !seen.insert(r.query_image_id.clone()) {
                return Err(fail(format!("duplicate query `{}`", r.query_image_id)));
            }
            Ok(TestPair {
                query_image_id: r.query_image_id,
                gt_ref_image_id: r.gt_ref_image_id,
                polarity,
                gt_boxes,
            })
        })
        .collect()
}

pub fn write_manifest(path: &Path, pairs: &[TestPair]) -> Result<()> {
    let records: Vec<ManifestRecord> = pairs.iter().map(Into::into).collect();
    write_jsonl(path, &records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let pairs = vec![
            TestPair {
                query_image_id: "q0".into(),
                gt_ref_image_id: "r0".into(),
                polarity: Polarity::Positive,
                gt_boxes: vec![BBox::new(1, 2, 3, 4).unwrap()],
            },
            TestPair {
                query_image_id: "q1".into(),
                gt_ref_image_id: "r1".into(),
                polarity: Polarity::Negative,
                gt_boxes: vec![],
            },
        ];
        write_manifest(&p, &pairs).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), pairs);

        std::fs::write(&p, r#"{"query_image_id":"q","gt_ref_image_id":"r","polarity":"positive","gt_boxes":[]}"#).unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&p, r#"{"query_image_id":"q","gt_ref_image_id":"r","polarity":"maybe"}"#).unwrap();
        assert!(read_manifest(&p).is_err());
    }

    #[test]
    fn empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(read_manifest(&p).unwrap().is_empty());
    }
}
