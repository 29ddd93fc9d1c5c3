//! Proposal ingestion file.
//!
//! JSON lines, one image per line:
//!
//! ```text
//! {"image_id":"q0001","boxes":[{"x0":10,"y0":4,"x1":60,"y1":40,"confidence":0.83,"source":"external"}]}
//! ```
//!
//! Coordinates are integer pixels, half-open. `source` is `external` (detector
//! output, filtered by the confidence threshold on ingestion) or `grid`.

use std::collections::BTreeMap;
use std::path::Path;

use dbloc_core::geometry::ingest_external;
use dbloc_core::{BBox, Proposal, ProposalSource};
use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub confidence: f64,
    #[serde(default = "external")]
    pub source: String,
}

fn external() -> String {
    "external".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub image_id: String,
    pub boxes: Vec<ProposalBox>,
}

impl ProposalRecord {
    pub fn from_detections(image_id: &str, detections: &[(BBox, f64)]) -> Self {
        Self {
            image_id: image_id.to_string(),
            boxes: detections
                .iter()
                .map(|(b, c)| ProposalBox {
                    x0: b.x0,
                    y0: b.y0,
                    x1: b.x1,
                    y1: b.y1,
                    confidence: *c,
                    source: external(),
                })
                .collect(),
        }
    }

    /// Validated proposals for an image of the given size.
    pub fn to_proposals(&self, threshold: f64, width: u32, height: u32) -> dbloc_core::Result<Vec<Proposal>> {
        let mut grid = Vec::new();
        let mut detected = Vec::new();
        for b in &self.boxes {
            let bbox = BBox::new(b.x0, b.y0, b.x1, b.y1)?;
            match ProposalSource::parse(&b.source) {
                Some(ProposalSource::External) => detected.push((bbox, b.confidence)),
                Some(ProposalSource::Grid) if bbox.fits_in(width, height) => grid.push(Proposal::grid(bbox)),
                Some(ProposalSource::Grid) => {
                    return Err(dbloc_core::Error::InvalidInput(format!(
                        "grid box {bbox} outside {width}x{height} frame"
                    )))
                }
                None => {
                    return Err(dbloc_core::Error::InvalidInput(format!(
                        "unknown proposal source `{}`",
                        b.source
                    )))
                }
            }
        }
        grid.extend(ingest_external(detected, threshold, width, height)?);
        Ok(grid)
    }
}

/// Proposal records by image id.
pub fn read_proposals(path: &Path) -> Result<BTreeMap<String, ProposalRecord>> {
    let mut out = BTreeMap::new();
    for (i, rec) in read_jsonl::<ProposalRecord>(path)?.into_iter().enumerate() {
        let id = rec.image_id.clone();
        if out.insert(id.clone(), rec).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("duplicate record for image `{id}`"),
            });
        }
    }
    Ok(out)
}

pub fn write_proposals(path: &Path, records: &[ProposalRecord]) -> Result<()> {
    write_jsonl(path, records)
}
