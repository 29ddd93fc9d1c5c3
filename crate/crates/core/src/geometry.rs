//! Integer pixel boxes, proposal generation and the intersection closure.
//!
//! Boxes are half-open: pixel `(px, py)` lies inside `[x0, x1) x [y0, y1)`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Default confidence below which external proposals are dropped at ingestion.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    /// Builds a box, rejecting empty or inverted extents.
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(invalid(format!(
                "box [{x0},{x1})x[{y0},{y1}) has no area"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// The whole `width x height` frame.
    pub fn frame(width: u32, height: u32) -> Result<Self> {
        Self::new(0, 0, width, height)
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    pub fn contains_pixel(&self, x: u32, y: u32) -> bool {
        self.x0 <= x && x < self.x1 && self.y0 <= y && y < self.y1
    }

    /// True when every pixel of `other` is inside `self`.
    pub fn contains(&self, other: &BBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }

    /// Largest box contained in both, or `None` when the overlap has no area.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 < x1 && y0 < y1).then_some(BBox { x0, y0, x1, y1 })
    }
}

impl core::fmt::Display for BBox {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "[{},{})x[{},{})", self.x0, self.x1, self.y0, self.y1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProposalSource {
    /// One of the five fixed boxes.
    Grid,
    /// Produced by an external object detector.
    External,
}

impl ProposalSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grid" => Some(Self::Grid),
            "external" => Some(Self::External),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub bbox: BBox,
    pub source: ProposalSource,
    /// Detector confidence in `[0, 1]`; always 1 for grid boxes.
    pub confidence: f64,
}

impl Proposal {
    pub fn grid(bbox: BBox) -> Self {
        Self {
            bbox,
            source: ProposalSource::Grid,
            confidence: 1.0,
        }
    }
}

/// The five fixed boxes: the centre ninth-block plus the four overlapping
/// two-thirds quadrants. Fractional thirds are floored.
pub fn five_box_proposals(width: u32, height: u32) -> Result<Vec<Proposal>> {
    if width < 3 || height < 3 {
        return Err(invalid(format!(
            "image {width}x{height} too small for the five-box grid (need at least 3x3)"
        )));
    }
    let (w1, w2) = (width / 3, (2 * u64::from(width) / 3) as u32);
    let (h1, h2) = (height / 3, (2 * u64::from(height) / 3) as u32);
    let boxes = [
        (w1, h1, w2, h2),
        (0, 0, w2, h2),
        (w1, 0, width, h2),
        (0, h1, w2, height),
        (w1, h1, width, height),
    ];
    boxes
        .iter()
        .map(|&(x0, y0, x1, y1)| BBox::new(x0, y0, x1, y1).map(Proposal::grid))
        .collect()
}

/// Turns raw detector output into proposals, dropping anything below
/// `threshold`. Confidences outside `[0, 1]` and boxes outside the frame are
/// rejected.
pub fn ingest_external(
    raw: impl IntoIterator<Item = (BBox, f64)>,
    threshold: f64,
    width: u32,
    height: u32,
) -> Result<Vec<Proposal>> {
    let mut out = Vec::new();
    for (bbox, confidence) in raw {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(invalid(format!("confidence {confidence} outside [0, 1]")));
        }
        if !bbox.fits_in(width, height) {
            return Err(invalid(format!(
                "proposal {bbox} outside {width}x{height} frame"
            )));
        }
        if confidence >= threshold {
            out.push(Proposal {
                bbox,
                source: ProposalSource::External,
                confidence,
            });
        }
    }
    Ok(out)
}

/// A closure region together with the original proposals covering all of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub bbox: BBox,
    /// Ascending indices into the original box list. Never empty.
    pub coverers: Vec<usize>,
}

impl Region {
    /// Overlap count.
    pub fn n(&self) -> usize {
        self.coverers.len()
    }
}

/// The set of qBBs closed under pairwise intersection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    regions: Vec<Region>,
}

impl RegionPartition {
    /// Regions sorted by box.
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Regions in descending area order (ties by box). Painting them in this
    /// order leaves every pixel holding its smallest enclosing region, whose
    /// coverer set is exactly the pixel's coverer set.
    pub fn painting_order(&self) -> Vec<&Region> {
        let mut order: Vec<&Region> = self.regions.iter().collect();
        order.sort_by(|a, b| b.bbox.area().cmp(&a.bbox.area()).then(a.bbox.cmp(&b.bbox)));
        order
    }
}

/// Registers every non-empty intersection of the input boxes until no new box
/// appears, then attaches to each resulting box the originals containing it.
///
/// Every element of the closure is the intersection of some subset of the
/// inputs, so it suffices to intersect each newly found box with the
/// originals.
pub fn intersection_closure(boxes: &[BBox]) -> Result<RegionPartition> {
    if boxes.is_empty() {
        return Err(invalid("intersection closure of an empty proposal set"));
    }
    let originals: BTreeSet<BBox> = boxes.iter().copied().collect();
    let mut seen = originals.clone();
    let mut frontier: Vec<BBox> = originals.iter().copied().collect();
    while let Some(b) = frontier.pop() {
        for o in &originals {
            if let Some(i) = b.intersect(o) {
                if seen.insert(i) {
                    frontier.push(i);
                }
            }
        }
    }
    let regions = seen
        .into_iter()
        .map(|bbox| Region {
            bbox,
            coverers: covering_indices(&bbox, boxes),
        })
        .collect();
    Ok(RegionPartition { regions })
}

/// Indices of the boxes that contain `region` entirely.
pub fn covering_indices(region: &BBox, boxes: &[BBox]) -> Vec<usize> {
    boxes
        .iter()
        .enumerate()
        .filter(|(_, b)| b.contains(region))
        .map(|(k, _)| k)
        .collect()
}

/// Indices of the boxes containing pixel `(x, y)`.
pub fn coverers_at(x: u32, y: u32, boxes: &[BBox]) -> Vec<usize> {
    boxes
        .iter()
        .enumerate()
        .filter(|(_, b)| b.contains_pixel(x, y))
        .map(|(k, _)| k)
        .collect()
}
