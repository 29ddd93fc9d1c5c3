//! Brute-force reference implementations and random instance generators.
//!
//! The oracles work from the definitions only: pixels are enumerated one by
//! one, cutoffs are materialized explicitly, distances are recomputed from
//! scratch. Shared with the acceptance suite of the `dbloc` crate.

#![allow(dead_code)]

use dbloc_core::descriptor::{l2_normalize, FeatureVector};
use dbloc_core::fusion::{fuse_coverers, FusionInput, FusionMethod};
use dbloc_core::retrieval::ReferenceDb;
use dbloc_core::BBox;
use rand::Rng;

pub fn pixel_coverers(x: u32, y: u32, boxes: &[BBox]) -> Vec<usize> {
    (0..boxes.len())
        .filter(|&k| {
            let b = boxes[k];
            b.x0 <= x && x < b.x1 && b.y0 <= y && y < b.y1
        })
        .collect()
}

/// Pre-rescale value of one pixel, straight from the method definitions.
fn pixel_raw(method: FusionMethod, cov: &[usize], inputs: &[FusionInput], seed: u64) -> f64 {
    match method {
        FusionMethod::RankFusion => {
            let mut s = 0.0;
            for &k in cov {
                s += 1.0 / inputs[k].rank;
            }
            1.0 / (1.0 + cov.len() as f64 * s)
        }
        FusionMethod::RankNoFusion => {
            let mut best = cov[0];
            for &k in &cov[1..] {
                if inputs[k].bbox.area() < inputs[best].bbox.area() {
                    best = k;
                }
            }
            1.0 / (1.0 + 1.0 / inputs[best].rank)
        }
        // the random subset is part of the method's definition; the oracle
        // still evaluates it per pixel
        FusionMethod::RankFusionCap2 | FusionMethod::RankFusionCap3 => {
            1.0 / (1.0 + fuse_coverers(method, cov, inputs, seed).unwrap())
        }
        FusionMethod::ScoreMax => cov.iter().map(|&k| inputs[k].score).fold(f64::MIN, f64::max),
        FusionMethod::ScoreSum => {
            let mut s = 0.0;
            for &k in cov {
                s += inputs[k].score;
            }
            s
        }
    }
}

/// Per-pixel LoC map: `(values, covered)`, row-major.
pub fn pixel_loc_map(
    width: u32,
    height: u32,
    inputs: &[FusionInput],
    method: FusionMethod,
    seed: u64,
) -> (Vec<f64>, Vec<bool>) {
    let boxes: Vec<BBox> = inputs.iter().map(|i| i.bbox).collect();
    let mut raw = Vec::new();
    let mut covered = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let cov = pixel_coverers(x, y, &boxes);
            covered.push(!cov.is_empty());
            raw.push(if cov.is_empty() { 0.0 } else { pixel_raw(method, &cov, inputs, seed) });
        }
    }
    let vals: Vec<f64> = raw.iter().zip(&covered).filter(|(_, &c)| c).map(|(v, _)| *v).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let out = raw
        .iter()
        .zip(&covered)
        .map(|(&v, &c)| if c && hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect();
    (out, covered)
}

/// 101-point interpolated AP by materializing every cutoff.
pub fn brute_ap(scored: &[(f64, bool)]) -> f64 {
    // stable insertion sort, descending
    let mut order: Vec<usize> = Vec::new();
    for i in 0..scored.len() {
        let pos = order.iter().position(|&j| scored[j].0 < scored[i].0).unwrap_or(order.len());
        order.insert(pos, i);
    }
    let npos = scored.iter().filter(|s| s.1).count() as u64;
    // (true positives, depth) of every cutoff
    let cutoffs: Vec<(u64, u64)> = (1..=order.len())
        .map(|d| (order[..d].iter().filter(|&&i| scored[i].1).count() as u64, d as u64))
        .collect();
    let mut total = 0.0;
    for j in 0..=100u64 {
        let mut best = 0.0f64;
        for &(tp, d) in &cutoffs {
            // recall tp/npos >= j/100, compared exactly
            if tp * 100 >= j * npos {
                best = best.max(tp as f64 / d as f64);
            }
        }
        total += best;
    }
    total / 101.0
}

/// Entry ids ordered by a from-scratch distance computation.
pub fn naive_rank(db: &ReferenceDb, q: &FeatureVector) -> Vec<(u32, f64)> {
    let mut out: Vec<(u32, f64)> = db
        .entries()
        .iter()
        .map(|e| {
            let d2: f64 = e
                .feature
                .values()
                .iter()
                .zip(q.values())
                .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
                .sum();
            (e.id, d2.sqrt())
        })
        .collect();
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

/// RoC by counting pixels.
pub fn pixel_roc(b: &BBox, gt: &[BBox]) -> f64 {
    let mut hit = 0u64;
    for y in b.y0..b.y1 {
        for x in b.x0..b.x1 {
            if !pixel_coverers(x, y, gt).is_empty() {
                hit += 1;
            }
        }
    }
    hit as f64 / b.area() as f64
}

pub fn random_box(rng: &mut impl Rng, w: u32, h: u32) -> BBox {
    let x0 = rng.random_range(0..w);
    let y0 = rng.random_range(0..h);
    let x1 = rng.random_range(x0 + 1..=w);
    let y1 = rng.random_range(y0 + 1..=h);
    BBox::new(x0, y0, x1, y1).unwrap()
}

/// Random LoC-map instance: up to 64x64 pixels and 8 proposals, with
/// occasional duplicate boxes and tied ranks.
pub fn random_instance(rng: &mut impl Rng) -> (u32, u32, Vec<FusionInput>) {
    let w = rng.random_range(1..=64);
    let h = rng.random_range(1..=64);
    let n = rng.random_range(1..=8usize);
    let list_len = rng.random_range(1..=40u32);
    let mut inputs: Vec<FusionInput> = Vec::with_capacity(n);
    for _ in 0..n {
        let bbox = match inputs.last() {
            Some(prev) if rng.random_range(0..6) == 0 => prev.bbox,
            _ => random_box(rng, w, h),
        };
        inputs.push(FusionInput {
            bbox,
            rank: f64::from(rng.random_range(1..=list_len)) / f64::from(list_len),
            score: f64::from(rng.random_range(0..2000u32)) / 1000.0,
        });
    }
    (w, h, inputs)
}

/// Random scored set with at least one positive and frequent score ties.
pub fn random_scored(rng: &mut impl Rng, max_len: usize) -> Vec<(f64, bool)> {
    let n = rng.random_range(1..=max_len);
    let levels = rng.random_range(1..=n as u32 + 1);
    let mut s: Vec<(f64, bool)> = (0..n)
        .map(|_| (f64::from(rng.random_range(0..levels)) / f64::from(levels), rng.random_bool(0.5)))
        .collect();
    if !s.iter().any(|x| x.1) {
        let k = rng.random_range(0..n);
        s[k].1 = true;
    }
    s
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> FeatureVector {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Ok(f) = l2_normalize(&v) {
            return f;
        }
    }
}
