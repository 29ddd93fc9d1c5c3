//! Reference-subimage database and exact nearest-neighbour ranking.
//!
//! Self-localization is modelled as a ranking function: a query subimage
//! yields every reference subimage ordered by ascending L2 distance. The
//! localization quality of a query subimage is the position at which its
//! ground-truth reference image first appears in that list.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::descriptor::{squared_distance, FeatureVector};
use crate::error::{invalid, Error, Result};
use crate::geometry::{BBox, ProposalSource};

#[derive(Debug, Clone, PartialEq)]
pub struct DbEntry {
    /// Dense, `0..len`.
    pub id: u32,
    pub image_id: String,
    pub bbox: BBox,
    pub source: ProposalSource,
    pub feature: FeatureVector,
}

/// One reference subimage handed to [`ReferenceDb::build`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefSubimage {
    pub image_id: String,
    pub bbox: BBox,
    pub source: ProposalSource,
    pub feature: FeatureVector,
}

/// Whether grid and detector proposals share one retrieval engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineMode {
    /// All reference subimages in one ranking.
    #[default]
    Merged,
    /// A query proposal is ranked only against reference subimages of the
    /// same source.
    PerSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDb {
    dim: usize,
    entries: Vec<DbEntry>,
}

impl ReferenceDb {
    /// Entries are ordered by image id, then by input order within an image.
    pub fn build(subimages: Vec<RefSubimage>) -> Result<Self> {
        let Some(first) = subimages.first() else {
            return Err(invalid("reference database needs at least one subimage"));
        };
        let dim = first.feature.dim();
        if let Some(bad) = subimages.iter().find(|s| s.feature.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.feature.dim(),
            });
        }
        let mut subimages = subimages;
        // stable: keeps proposal order inside one image
        subimages.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let entries = subimages
            .into_iter()
            .enumerate()
            .map(|(i, s)| DbEntry {
                id: i as u32,
                image_id: s.image_id,
                bbox: s.bbox,
                source: s.source,
                feature: s.feature,
            })
            .collect();
        Ok(Self { dim, entries })
    }

    /// Rebuilds a database from entries in a previously persisted order.
    pub fn from_entries(entries: Vec<DbEntry>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(invalid("reference database needs at least one subimage"));
        };
        let dim = first.feature.dim();
        for (i, e) in entries.iter().enumerate() {
            if e.id as usize != i {
                return Err(invalid(format!("entry {i} carries id {}", e.id)));
            }
            if e.feature.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.feature.dim(),
                });
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[DbEntry] {
        &self.entries
    }

    pub fn entry(&self, id: u32) -> &DbEntry {
        &self.entries[id as usize]
    }

    pub fn contains_image(&self, image_id: &str) -> bool {
        self.entries.iter().any(|e| e.image_id == image_id)
    }

    /// Every entry, ascending L2 distance, ties by ascending entry id.
    pub fn rank(&self, query: &FeatureVector) -> Result<RankedList> {
        self.rank_where(query, |_| true)
    }

    /// Like [`rank`](Self::rank) but honouring the engine mode for a query
    /// proposal of the given source.
    pub fn rank_for(
        &self,
        query: &FeatureVector,
        source: ProposalSource,
        mode: EngineMode,
    ) -> Result<RankedList> {
        match mode {
            EngineMode::Merged => self.rank(query),
            EngineMode::PerSource => self.rank_where(query, |e| e.source == source),
        }
    }

    fn rank_where(&self, query: &FeatureVector, keep: impl Fn(&DbEntry) -> bool) -> Result<RankedList> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let q = query.values();
        let mut hits: Vec<Hit> = self
            .entries
            .iter()
            .filter(|e| keep(e))
            .map(|e| Hit {
                id: e.id,
                distance: libm::sqrt(squared_distance(q, e.feature.values())),
            })
            .collect();
        if hits.is_empty() {
            return Err(invalid("no reference subimage available for this engine"));
        }
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        Ok(RankedList { hits })
    }

    /// Position of the first subimage of `gt_image_id` in `list`.
    pub fn gt_rank(&self, list: &RankedList, gt_image_id: &str) -> Result<GroundTruthRank> {
        let pos = list
            .hits
            .iter()
            .position(|h| self.entry(h.id).image_id == gt_image_id)
            .ok_or_else(|| Error::MissingGroundTruth(gt_image_id.into()))?;
        Ok(GroundTruthRank::new(pos as u32 + 1, list.len() as u32))
    }

    /// Smallest distance from the ranked query to any subimage of
    /// `gt_image_id`; used as the relevance score of the score baselines.
    pub fn gt_distance(&self, list: &RankedList, gt_image_id: &str) -> Result<f64> {
        list.hits
            .iter()
            .find(|h| self.entry(h.id).image_id == gt_image_id)
            .map(|h| h.distance)
            .ok_or_else(|| Error::MissingGroundTruth(gt_image_id.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: u32,
    pub distance: f64,
}

/// Retrieval output for one query subimage.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    hits: Vec<Hit>,
}

impl RankedList {
    pub fn hits(&self) -> &[Hit] {
        &self.hits
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthRank {
    /// 1-based.
    pub raw: u32,
    /// Length of the ranked list.
    pub list_len: u32,
}

impl GroundTruthRank {
    pub fn new(raw: u32, list_len: u32) -> Self {
        debug_assert!(raw >= 1 && raw <= list_len);
        Self { raw, list_len }
    }

    /// `raw / list_len`, in `(0, 1]`.
    pub fn normalized(&self) -> f64 {
        f64::from(self.raw) / f64::from(self.list_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::l2_normalize;
    use alloc::string::ToString;
    use alloc::vec;

    fn sub(image: &str, k: u32, v: &[f64]) -> RefSubimage {
        RefSubimage {
            image_id: image.to_string(),
            bbox: BBox::new(k, 0, k + 1, 1).unwrap(),
            source: ProposalSource::Grid,
            feature: l2_normalize(v).unwrap(),
        }
    }

    #[test]
    fn build_orders_by_image_then_input() {
        let db = ReferenceDb::build(vec![
            sub("b", 0, &[1.0, 0.0]),
            sub("a", 1, &[0.0, 1.0]),
            sub("b", 2, &[1.0, 1.0]),
            sub("a", 3, &[1.0, 2.0]),
        ])
        .unwrap();
        let order: Vec<(&str, u32)> = db
            .entries()
            .iter()
            .map(|e| (e.image_id.as_str(), e.bbox.x0))
            .collect();
        assert_eq!(order, vec![("a", 1), ("a", 3), ("b", 0), ("b", 2)]);
        assert!(db.entries().iter().enumerate().all(|(i, e)| e.id as usize == i));
    }

    #[test]
    fn empty_and_mixed_dims_rejected() {
        assert!(ReferenceDb::build(vec![]).is_err());
        let r = ReferenceDb::build(vec![sub("a", 0, &[1.0, 0.0]), sub("a", 1, &[1.0, 0.0, 0.0])]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn exact_match_first() {
        let subs: Vec<_> = (0..10)
            .map(|k| sub("r", k, &[1.0, f64::from(k), f64::from(k * k)]))
            .collect();
        let db = ReferenceDb::build(subs).unwrap();
        let q = db.entry(7).feature.clone();
        let list = db.rank(&q).unwrap();
        assert_eq!(list.hits()[0].id, 7);
        assert_eq!(list.hits()[0].distance, 0.0);
        assert_eq!(list.len(), 10);
    }

    #[test]
    fn single_entry_db() {
        let db = ReferenceDb::build(vec![sub("r", 0, &[1.0, 0.0])]).unwrap();
        let list = db.rank(&l2_normalize(&[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(list.len(), 1);
        let gt = db.gt_rank(&list, "r").unwrap();
        assert_eq!((gt.raw, gt.normalized()), (1, 1.0));
    }

    #[test]
    fn ties_by_entry_id() {
        let db = ReferenceDb::build(vec![
            sub("r", 0, &[1.0, 1.0]),
            sub("r", 1, &[1.0, -1.0]),
        ])
        .unwrap();
        let list = db.rank(&l2_normalize(&[1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(list.hits()[0].distance, list.hits()[1].distance);
        assert_eq!(list.hits()[0].id, 0);
    }

    #[test]
    fn gt_rank_first_occurrence() {
        // entries: P.0, P.1, Q.0 ; query nearest Q.0, then P.1, then P.0
        let db = ReferenceDb::build(vec![
            sub("P", 0, &[0.0, 1.0]),
            sub("P", 1, &[1.0, 1.0]),
            sub("Q", 2, &[1.0, 0.1]),
        ])
        .unwrap();
        let list = db.rank(&l2_normalize(&[1.0, 0.0]).unwrap()).unwrap();
        let ids: Vec<u32> = list.hits().iter().map(|h| h.id).collect();
        assert_eq!(ids, vec![2, 1, 0]);
        let p = db.gt_rank(&list, "P").unwrap();
        assert_eq!(p.raw, 2);
        assert_eq!(p.normalized(), 2.0 / 3.0);
        assert_eq!(db.gt_rank(&list, "Q").unwrap().raw, 1);
        assert!(matches!(db.gt_rank(&list, "Z"), Err(Error::MissingGroundTruth(_))));
        let d = db.gt_distance(&list, "P").unwrap();
        assert_eq!(d, list.hits()[1].distance);
    }

    #[test]
    fn per_source_engine() {
        let mut ext = sub("r", 1, &[1.0, 0.0]);
        ext.source = ProposalSource::External;
        let db = ReferenceDb::build(vec![sub("r", 0, &[0.0, 1.0]), ext]).unwrap();
        let q = l2_normalize(&[1.0, 0.0]).unwrap();
        let merged = db.rank_for(&q, ProposalSource::Grid, EngineMode::Merged).unwrap();
        assert_eq!(merged.len(), 2);
        let split = db.rank_for(&q, ProposalSource::Grid, EngineMode::PerSource).unwrap();
        assert_eq!(split.len(), 1);
        assert_eq!(split.hits()[0].id, 0);
    }

    #[test]
    fn query_dimension_mismatch() {
        let db = ReferenceDb::build(vec![sub("r", 0, &[1.0, 0.0])]).unwrap();
        assert!(db.rank(&l2_normalize(&[1.0, 0.0, 0.0]).unwrap()).is_err());
    }
}
