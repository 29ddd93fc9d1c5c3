//! Detection records: JSON lines, one test pair per line.
//!
//! A successful pair lists every query proposal with its localization result
//! and, per fusion method, the fused value over the proposals covering the
//! whole box and the mean LoC inside it:
//!
//! ```text
//! {"query_image_id":"q0001","gt_ref_image_id":"r0001","status":"ok","width":256,"height":256,
//!  "qbbs":[{"x0":85,"y0":85,"x1":170,"y1":170,"source":"grid","confidence":1.0,"n":5,
//!           "gt_rank_raw":3,"list_len":2400,"gt_rank":0.00125,"score":0.021,
//!           "methods":{"rank_fusion":{"fused":30125.0,"loc":0.02}}}]}
//! ```
//!
//! A failed pair has `"status":"error"` and an `error` message instead.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub fused: f64,
    pub loc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QbbRecord {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub source: String,
    pub confidence: f64,
    /// Number of proposals containing this box.
    pub n: usize,
    pub gt_rank_raw: u32,
    pub list_len: u32,
    pub gt_rank: f64,
    /// Distance to the nearest ground-truth reference subimage.
    pub score: f64,
    pub methods: BTreeMap<String, MethodScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub query_image_id: String,
    pub gt_ref_image_id: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
    #[serde(default)]
    pub qbbs: Vec<QbbRecord>,
}

impl DetectionRecord {
    pub fn failed(query: &str, gt_ref: &str, error: String) -> Self {
        Self {
            query_image_id: query.into(),
            gt_ref_image_id: gt_ref.into(),
            status: "error".into(),
            error: Some(error),
            width: 0,
            height: 0,
            qbbs: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn read_records(path: &Path) -> Result<Vec<DetectionRecord>> {
    read_jsonl(path)
}

pub fn write_records(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    write_jsonl(path, records)
}
