//! Difficulty indices, test-set labelling and 101-point interpolated AP.
//!
//! Every query proposal (qBB) of every test pair is a candidate test item.
//! Its rate of change (RoC, share of the box covered by annotated change) and
//! size (SoB, share of the image) decide whether it enters the test set as
//! `change`, as `no_change`, or not at all. Items are scored with the mean LoC
//! inside the box and pooled over the whole test set for AP.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fusion::FusionMethod;
use crate::geometry::BBox;

/// Area of `bbox` covered by the union of `gt_boxes`, over the area of `bbox`.
pub fn roc(bbox: &BBox, gt_boxes: &[BBox]) -> f64 {
    let clipped: Vec<BBox> = gt_boxes.iter().filter_map(|g| g.intersect(bbox)).collect();
    union_area(&clipped) as f64 / bbox.area() as f64
}

/// Exact union area by sweeping x-slabs and merging y-intervals.
fn union_area(boxes: &[BBox]) -> u64 {
    let mut xs: Vec<u32> = boxes.iter().flat_map(|b| [b.x0, b.x1]).collect();
    xs.sort_unstable();
    xs.dedup();
    let mut total = 0u64;
    let mut spans: Vec<(u32, u32)> = Vec::new();
    for w in xs.windows(2) {
        let (xa, xb) = (w[0], w[1]);
        spans.clear();
        spans.extend(
            boxes
                .iter()
                .filter(|b| b.x0 <= xa && xb <= b.x1)
                .map(|b| (b.y0, b.y1)),
        );
        spans.sort_unstable();
        let mut covered = 0u64;
        let mut cur: Option<(u32, u32)> = None;
        for &(a, b) in &spans {
            cur = match cur {
                Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
                Some((ca, cb)) => {
                    covered += u64::from(cb - ca);
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
        if let Some((ca, cb)) = cur {
            covered += u64::from(cb - ca);
        }
        total += covered * u64::from(xb - xa);
    }
    total
}

/// Area of `bbox` over the image area.
pub fn sob(bbox: &BBox, width: u32, height: u32) -> f64 {
    bbox.area() as f64 / (u64::from(width) * u64::from(height)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(Self::Positive),
            "negative" => Some(Self::Negative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Change,
    NoChange,
    /// Neither; not part of the test set.
    Excluded,
}

/// Closed intervals for RoC and SoB of the change and no-change sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyConfig {
    pub roc_pos: (f64, f64),
    pub roc_neg: (f64, f64),
    pub sob_pos: (f64, f64),
    pub sob_neg: (f64, f64),
}

impl Default for DifficultyConfig {
    fn default() -> Self {
        Self {
            roc_pos: (0.9, 1.0),
            roc_neg: (0.0, 0.05),
            sob_pos: (0.0, 0.4),
            sob_neg: (0.4, 1.0),
        }
    }
}

fn within((lo, hi): (f64, f64), v: f64) -> bool {
    lo <= v && v <= hi
}

impl DifficultyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("roc_pos", self.roc_pos),
            ("roc_neg", self.roc_neg),
            ("sob_pos", self.sob_pos),
            ("sob_neg", self.sob_neg),
        ] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(invalid(format!("{name} = [{lo}, {hi}] is not an interval in [0, 1]")));
            }
        }
        if self.roc_neg.1 >= self.roc_pos.0 {
            return Err(invalid(format!(
                "no-change RoC bound {} must stay below change RoC bound {}",
                self.roc_neg.1, self.roc_pos.0
            )));
        }
        Ok(())
    }

    pub fn with_roc_neg_max(mut self, v: f64) -> Self {
        self.roc_neg.1 = v;
        self
    }
}

/// Assigns the ground-truth label of one qBB.
pub fn label_qbb(roc: f64, sob: f64, polarity: Polarity, cfg: &DifficultyConfig) -> Label {
    if polarity == Polarity::Positive && within(cfg.roc_pos, roc) && within(cfg.sob_pos, sob) {
        Label::Change
    } else if within(cfg.roc_neg, roc) && within(cfg.sob_neg, sob) {
        Label::NoChange
    } else {
        Label::Excluded
    }
}

/// 101-point interpolated average precision.
///
/// Items are ranked by descending score; equal scores keep input order.
/// Interpolated precision at recall `r` is the best precision over all
/// cutoffs reaching recall `>= r`; AP is its mean over `r = 0.00, ..., 1.00`.
pub fn ap_101(scored: &[(f64, bool)]) -> Result<f64> {
    let positives = scored.iter().filter(|s| s.1).count() as u64;
    if positives == 0 {
        return Err(Error::UndefinedMetric("AP needs at least one positive"));
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));

    // (true positives, precision) at every cutoff
    let mut cutoffs = Vec::with_capacity(order.len());
    let mut tp = 0u64;
    for (i, &k) in order.iter().enumerate() {
        tp += u64::from(scored[k].1);
        cutoffs.push((tp, tp as f64 / (i + 1) as f64));
    }
    // running max of precision from the deepest cutoff upwards
    let mut best = 0.0f64;
    let mut envelope = alloc::vec![0.0f64; cutoffs.len()];
    for (i, &(_, p)) in cutoffs.iter().enumerate().rev() {
        best = best.max(p);
        envelope[i] = best;
    }
    // recall is non-decreasing along the cutoffs, so the first cutoff with
    // recall >= j/100 carries the interpolated precision for point j
    let mut total = 0.0;
    let mut c = 0;
    for j in 0..=100u64 {
        while cutoffs[c].0 * 100 < j * positives {
            c += 1;
        }
        total += envelope[c];
    }
    Ok(total / 101.0)
}

/// One query proposal with its LoC score under each method.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredQbb {
    pub bbox: BBox,
    pub scores: BTreeMap<FusionMethod, f64>,
}

/// Everything the evaluation needs about one test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEvidence {
    pub sample_id: String,
    pub width: u32,
    pub height: u32,
    pub polarity: Polarity,
    pub gt_boxes: Vec<BBox>,
    pub qbbs: Vec<ScoredQbb>,
}

impl SampleEvidence {
    fn validate(&self) -> Result<()> {
        match (self.polarity, self.gt_boxes.is_empty()) {
            (Polarity::Positive, true) => Err(invalid(format!(
                "sample {}: positive pair without change boxes",
                self.sample_id
            ))),
            (Polarity::Negative, false) => Err(invalid(format!(
                "sample {}: negative pair with change boxes",
                self.sample_id
            ))),
            _ => Ok(()),
        }
    }
}

/// AP per (method, no-change RoC bound).
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub methods: Vec<FusionMethod>,
    pub roc_neg_max: Vec<f64>,
    /// `ap[m][c]` for method `m` and sweep column `c`.
    pub ap: Vec<Vec<f64>>,
    /// Test-set size `(change, no_change)` per column.
    pub counts: Vec<(usize, usize)>,
}

/// Labels every qBB for each sweep value and computes AP per method.
pub fn evaluate_methods(
    samples: &[SampleEvidence],
    methods: &[FusionMethod],
    base: &DifficultyConfig,
    roc_neg_max: &[f64],
) -> Result<Report> {
    if methods.is_empty() {
        return Err(invalid("no methods to evaluate"));
    }
    if roc_neg_max.is_empty() {
        return Err(invalid("empty RoC sweep"));
    }
    for s in samples {
        s.validate()?;
        for q in &s.qbbs {
            if !q.bbox.fits_in(s.width, s.height) {
                return Err(invalid(format!("sample {}: qBB {} outside image", s.sample_id, q.bbox)));
            }
            if let Some(m) = methods.iter().find(|m| !q.scores.contains_key(m)) {
                return Err(invalid(format!("sample {}: no `{m}` score for qBB {}", s.sample_id, q.bbox)));
            }
        }
    }
    // RoC and SoB do not depend on the sweep
    let indices: Vec<Vec<(f64, f64)>> = samples
        .iter()
        .map(|s| {
            s.qbbs
                .iter()
                .map(|q| (roc(&q.bbox, &s.gt_boxes), sob(&q.bbox, s.width, s.height)))
                .collect()
        })
        .collect();

    let mut ap = alloc::vec![Vec::with_capacity(roc_neg_max.len()); methods.len()];
    let mut counts = Vec::with_capacity(roc_neg_max.len());
    for &bound in roc_neg_max {
        let cfg = base.with_roc_neg_max(bound);
        cfg.validate()?;
        let mut items: Vec<(usize, usize, bool)> = Vec::new();
        for (si, s) in samples.iter().enumerate() {
            for (qi, &(r, b)) in indices[si].iter().enumerate() {
                match label_qbb(r, b, s.polarity, &cfg) {
                    Label::Change => items.push((si, qi, true)),
                    Label::NoChange => items.push((si, qi, false)),
                    Label::Excluded => {}
                }
            }
        }
        let pos = items.iter().filter(|i| i.2).count();
        counts.push((pos, items.len() - pos));
        for (mi, m) in methods.iter().enumerate() {
            let scored: Vec<(f64, bool)> = items
                .iter()
                .map(|&(si, qi, y)| (samples[si].qbbs[qi].scores[m], y))
                .collect();
            ap[mi].push(ap_101(&scored)?);
        }
    }
    Ok(Report {
        methods: methods.to_vec(),
        roc_neg_max: roc_neg_max.to_vec(),
        ap,
        counts,
    })
}
