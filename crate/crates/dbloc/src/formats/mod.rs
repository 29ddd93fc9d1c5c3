//! On-disk formats.
//!
//! | File | Format |
//! |------|--------|
//! | images | binary PPM (P6) in, PGM (P5) LoC maps out |
//! | proposals | JSON lines, one image per line |
//! | features | `RLFEAT01` little-endian binary |
//! | dataset manifest | JSON lines, one test pair per line |
//! | database sidecar | JSON lines, one entry per line |
//! | detection records | JSON lines, one test pair per line |
//! | report | CSV |

pub mod dbfile;
pub mod features;
pub mod manifest;
pub mod pnm;
pub mod proposals;
pub mod records;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{io_err, Error, Result};

/// Box as it appears in the JSON formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct JsonBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl From<dbloc_core::BBox> for JsonBox {
    fn from(b: dbloc_core::BBox) -> Self {
        Self { x0: b.x0, y0: b.y0, x1: b.x1, y1: b.y1 }
    }
}

impl JsonBox {
    pub fn to_bbox(self) -> dbloc_core::Result<dbloc_core::BBox> {
        dbloc_core::BBox::new(self.x0, self.y0, self.x1, self.y1)
    }
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("in-memory serialization");
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

/// Writes through a temporary sibling and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}
