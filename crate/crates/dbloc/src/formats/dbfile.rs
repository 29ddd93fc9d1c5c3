//! Persisted reference database: a feature file holding the vectors in entry
//! order plus a JSON-lines sidecar naming each entry.
//!
//! ```text
//! {"entry_id":0,"image_id":"r0000","source":"grid","x0":85,"y0":85,"x1":170,"y1":170}
//! ```

use std::path::Path;

use dbloc_core::retrieval::{DbEntry, ReferenceDb};
use dbloc_core::ProposalSource;
use serde::{Deserialize, Serialize};

use super::features::{read_features, write_features, FeatureRecord};
use super::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};

pub const FEATURES_FILE: &str = "features.bin";
pub const ENTRIES_FILE: &str = "entries.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub entry_id: u32,
    pub image_id: String,
    pub source: String,
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

pub fn write_db(dir: &Path, db: &ReferenceDb) -> Result<()> {
    let features: Vec<FeatureRecord> = db
        .entries()
        .iter()
        .map(|e| FeatureRecord {
            image_id: e.image_id.clone(),
            bbox: e.bbox,
            feature: e.feature.clone(),
        })
        .collect();
    write_features(&dir.join(FEATURES_FILE), &features)?;
    let entries: Vec<EntryRecord> = db
        .entries()
        .iter()
        .map(|e| EntryRecord {
            entry_id: e.id,
            image_id: e.image_id.clone(),
            source: e.source.as_str().into(),
            x0: e.bbox.x0,
            y0: e.bbox.y0,
            x1: e.bbox.x1,
            y1: e.bbox.y1,
        })
        .collect();
    write_jsonl(&dir.join(ENTRIES_FILE), &entries)
}

pub fn read_db(dir: &Path) -> Result<ReferenceDb> {
    let entries_path = dir.join(ENTRIES_FILE);
    let (_, features) = read_features(&dir.join(FEATURES_FILE))?;
    let entries: Vec<EntryRecord> = read_jsonl(&entries_path)?;
    if entries.len() != features.len() {
        return Err(Error::Parse {
            path: entries_path,
            line: entries.len(),
            msg: format!("{} entries but {} feature records", entries.len(), features.len()),
        });
    }
    let mut out = Vec::with_capacity(entries.len());
    for (i, (e, f)) in entries.into_iter().zip(features).enumerate() {
        let fail = |msg: String| Error::Parse {
            path: entries_path.clone(),
            line: i + 1,
            msg,
        };
        if e.image_id != f.image_id || [e.x0, e.y0, e.x1, e.y1] != [f.bbox.x0, f.bbox.y0, f.bbox.x1, f.bbox.y1] {
            return Err(fail(format!("entry {} does not match feature record {i}", e.entry_id)));
        }
        let source = ProposalSource::parse(&e.source).ok_or_else(|| fail(format!("unknown source `{}`", e.source)))?;
        out.push(DbEntry {
            id: e.entry_id,
            image_id: e.image_id,
            bbox: f.bbox,
            source,
            feature: f.feature,
        });
    }
    Ok(ReferenceDb::from_entries(out)?)
}
