//! Pixel-wise fusion of per-proposal localization evidence into a
//! likelihood-of-change (LoC) map.
//!
//! Rank methods fuse the normalized ground-truth ranks `r_k` of all proposals
//! covering a pixel with
//!
//! ```text
//! R = N * sum_k 1 / r_k        (N = number of covering proposals)
//! ```
//!
//! `R` grows with localization quality, so the pixel's raw LoC is
//! `1 / (1 + R)`. Score methods fuse relevance scores (distances) by max or
//! sum and use the fused value directly. Raw values are then min-max rescaled
//! over the covered pixels of the image; a constant map rescales to 0.
//!
//! The map is computed per closure region (see
//! [`intersection_closure`](crate::geometry::intersection_closure)): every
//! pixel of the smallest region enclosing it shares its coverer set, so one
//! fused value per region reproduces the per-pixel definition exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{intersection_closure, BBox};
use crate::hash::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FusionMethod {
    RankFusion,
    RankFusionCap2,
    RankFusionCap3,
    RankNoFusion,
    ScoreMax,
    ScoreSum,
}

impl FusionMethod {
    pub const ALL: [FusionMethod; 6] = [
        Self::RankFusion,
        Self::RankNoFusion,
        Self::RankFusionCap2,
        Self::RankFusionCap3,
        Self::ScoreMax,
        Self::ScoreSum,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::RankFusion => "rank_fusion",
            Self::RankFusionCap2 => "rank_fusion_cap2",
            Self::RankFusionCap3 => "rank_fusion_cap3",
            Self::RankNoFusion => "rank_no_fusion",
            Self::ScoreMax => "score_max",
            Self::ScoreSum => "score_sum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn uses_ranks(&self) -> bool {
        !matches!(self, Self::ScoreMax | Self::ScoreSum)
    }
}

impl core::fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_ranks(ranks: &[f64]) -> Result<()> {
    if ranks.is_empty() {
        return Err(invalid("rank fusion over an empty list"));
    }
    if let Some(r) = ranks.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(invalid(format!("normalized rank {r} outside (0, 1]")));
    }
    Ok(())
}

/// `N * sum(1 / r_k)` over the `N` normalized ranks.
pub fn rank_fuse(ranks: &[f64]) -> Result<f64> {
    check_ranks(ranks)?;
    let n = ranks.len() as f64;
    Ok(n * ranks.iter().map(|r| 1.0 / r).sum::<f64>())
}

/// Rank fusion over at most `k_max` ranks. With more inputs than that,
/// `k_max` of them are drawn uniformly without replacement using `seed`.
pub fn rank_fuse_capped(ranks: &[f64], k_max: usize, seed: u64) -> Result<f64> {
    check_ranks(ranks)?;
    if k_max == 0 {
        return Err(invalid("fusion cap must be at least 1"));
    }
    if ranks.len() <= k_max {
        return rank_fuse(ranks);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<u32> = (0..ranks.len() as u32).collect();
    for i in 0..k_max {
        let j = rng.random_range(i as u32..idx.len() as u32) as usize;
        idx.swap(i, j);
    }
    let mut chosen = idx[..k_max].to_vec();
    chosen.sort_unstable();
    let subset: Vec<f64> = chosen.iter().map(|&i| ranks[i as usize]).collect();
    rank_fuse(&subset)
}

fn check_scores(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid("score fusion over an empty list"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite relevance score"));
    }
    Ok(())
}

pub fn score_max(values: &[f64]) -> Result<f64> {
    check_scores(values)?;
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn score_sum(values: &[f64]) -> Result<f64> {
    check_scores(values)?;
    Ok(values.iter().sum())
}

/// Evidence attached to one original proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionInput {
    pub bbox: BBox,
    /// Normalized ground-truth rank in `(0, 1]`.
    pub rank: f64,
    /// Relevance score (distance to the ground-truth image), `>= 0`.
    pub score: f64,
}

/// Fused value of `method` over the proposals `coverers` (ascending indices
/// into `inputs`).
///
/// Capped variants draw their subset from a seed derived from `seed` and the
/// coverer set, so all pixels sharing a coverer set share the draw.
pub fn fuse_coverers(
    method: FusionMethod,
    coverers: &[usize],
    inputs: &[FusionInput],
    seed: u64,
) -> Result<f64> {
    if coverers.is_empty() {
        return Err(invalid("fusion over an empty coverer set"));
    }
    let ranks = || coverers.iter().map(|&k| inputs[k].rank).collect::<Vec<_>>();
    let scores = || coverers.iter().map(|&k| inputs[k].score).collect::<Vec<_>>();
    let capped = |k_max: usize| {
        let s = mix_seed(seed, coverers.iter().map(|&k| k as u64));
        rank_fuse_capped(&ranks(), k_max, s)
    };
    match method {
        FusionMethod::RankFusion => rank_fuse(&ranks()),
        FusionMethod::RankFusionCap2 => capped(2),
        FusionMethod::RankFusionCap3 => capped(3),
        FusionMethod::RankNoFusion => {
            let k = *coverers
                .iter()
                .min_by_key(|&&k| (inputs[k].bbox.area(), k))
                .expect("non-empty");
            rank_fuse(&[inputs[k].rank])
        }
        FusionMethod::ScoreMax => score_max(&scores()),
        FusionMethod::ScoreSum => score_sum(&scores()),
    }
}

/// Pre-rescale LoC of a fused value: `1 / (1 + R)` for rank methods, the
/// fused score itself otherwise.
pub fn raw_loc(method: FusionMethod, fused: f64) -> f64 {
    if method.uses_ranks() {
        1.0 / (1.0 + fused)
    } else {
        fused
    }
}

/// Min-max rescale of `raw` over covered pixels, in place. Uncovered pixels
/// are set to 0; a constant covered map becomes all zeros.
pub fn rescale_covered(raw: &mut [f64], covered: &[bool]) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (v, _) in raw.iter().zip(covered).filter(|(_, &c)| c) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let span = hi - lo;
    for (v, &c) in raw.iter_mut().zip(covered) {
        *v = if c && span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Per-pixel likelihood-of-change raster.
#[derive(Debug, Clone, PartialEq)]
pub struct LocMap {
    width: u32,
    height: u32,
    loc: Vec<f64>,
    covered: Vec<bool>,
    method: FusionMethod,
}

impl LocMap {
    /// Wraps precomputed values; `loc` must be 0 wherever `covered` is false.
    pub fn from_parts(
        width: u32,
        height: u32,
        loc: Vec<f64>,
        covered: Vec<bool>,
        method: FusionMethod,
    ) -> Result<Self> {
        let n = width as usize * height as usize;
        if loc.len() != n || covered.len() != n {
            return Err(invalid("LoC map buffers do not match dimensions"));
        }
        let ok = loc
            .iter()
            .zip(&covered)
            .all(|(&v, &c)| if c { (0.0..=1.0).contains(&v) } else { v == 0.0 });
        if !ok {
            return Err(invalid("LoC values must lie in [0, 1] and be 0 where uncovered"));
        }
        Ok(Self {
            width,
            height,
            loc,
            covered,
            method,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn method(&self) -> FusionMethod {
        self.method
    }

    /// Row-major LoC values in `[0, 1]`; 0 where uncovered.
    pub fn values(&self) -> &[f64] {
        &self.loc
    }

    pub fn covered(&self) -> &[bool] {
        &self.covered
    }

    pub fn loc(&self, x: u32, y: u32) -> f64 {
        self.loc[(y * self.width + x) as usize]
    }

    pub fn is_covered(&self, x: u32, y: u32) -> bool {
        self.covered[(y * self.width + x) as usize]
    }
}

fn validate_inputs(width: u32, height: u32, inputs: &[FusionInput], method: FusionMethod) -> Result<()> {
    if inputs.is_empty() {
        return Err(invalid("LoC map needs at least one proposal"));
    }
    for (k, inp) in inputs.iter().enumerate() {
        if !inp.bbox.fits_in(width, height) {
            return Err(invalid(format!(
                "proposal {k} {} outside {width}x{height} frame",
                inp.bbox
            )));
        }
        if method.uses_ranks() && !(inp.rank > 0.0 && inp.rank <= 1.0) {
            return Err(invalid(format!("proposal {k} has no valid rank ({})", inp.rank)));
        }
        if !method.uses_ranks() && !(inp.score.is_finite() && inp.score >= 0.0) {
            return Err(invalid(format!("proposal {k} has no valid score ({})", inp.score)));
        }
    }
    Ok(())
}

/// Builds the LoC map of a `width x height` image from its proposals.
pub fn build_loc_map(
    width: u32,
    height: u32,
    inputs: &[FusionInput],
    method: FusionMethod,
    seed: u64,
) -> Result<LocMap> {
    validate_inputs(width, height, inputs, method)?;
    let boxes: Vec<BBox> = inputs.iter().map(|i| i.bbox).collect();
    let partition = intersection_closure(&boxes)?;

    let n = width as usize * height as usize;
    let mut raw = vec![0.0f64; n];
    let mut covered = vec![false; n];
    for region in partition.painting_order() {
        let value = raw_loc(method, fuse_coverers(method, &region.coverers, inputs, seed)?);
        let b = region.bbox;
        for y in b.y0..b.y1 {
            let row = y as usize * width as usize;
            raw[row + b.x0 as usize..row + b.x1 as usize].fill(value);
            covered[row + b.x0 as usize..row + b.x1 as usize].fill(true);
        }
    }
    rescale_covered(&mut raw, &covered);
    Ok(LocMap {
        width,
        height,
        loc: raw,
        covered,
        method,
    })
}

/// Mean LoC over the covered pixels of `bbox`.
pub fn qbb_loc_score(map: &LocMap, bbox: &BBox) -> Result<f64> {
    if !bbox.fits_in(map.width, map.height) {
        return Err(invalid(format!(
            "box {bbox} outside {}x{} map",
            map.width, map.height
        )));
    }
    let mut sum = 0.0;
    let mut count = 0u64;
    for y in bbox.y0..bbox.y1 {
        for x in bbox.x0..bbox.x1 {
            let i = (y * map.width + x) as usize;
            if map.covered[i] {
                sum += map.loc[i];
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoEvidence);
    }
    Ok(sum / count as f64)
}
