//! The four pipeline stages. Each stage reads the artifacts of the previous
//! one from disk, so any stage can be rerun on its own.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dbloc_core::descriptor::{extract_builtin, DescriptorConfig, FeatureVector};
use dbloc_core::evaluation::{evaluate_methods, Report, SampleEvidence, ScoredQbb};
use dbloc_core::fusion::{build_loc_map, fuse_coverers, qbb_loc_score, FusionInput, FusionMethod, LocMap};
use dbloc_core::geometry::{covering_indices, five_box_proposals};
use dbloc_core::retrieval::{RefSubimage, ReferenceDb};
use dbloc_core::synth::{gen_pair, query_id, reference_id, SynthConfig};
use dbloc_core::{BBox, Proposal, Raster};
use log::info;
use rayon::prelude::*;

use crate::config::{PipelineConfig, SynthSettings};
use crate::error::{io_err, Error, Result};
use crate::formats::dbfile::{read_db, write_db};
use crate::formats::features::{load_external_features, FeatureMap};
use crate::formats::manifest::{read_manifest, write_manifest, TestPair};
use crate::formats::pnm::{read_image, write_pgm, write_ppm};
use crate::formats::proposals::{read_proposals, write_proposals, ProposalRecord};
use crate::formats::records::{read_records, write_records, DetectionRecord, MethodScore, QbbRecord};
use crate::formats::report::write_report;

/// Name of the config file `synth` writes next to the generated data.
pub const SYNTH_CONFIG_FILE: &str = "dbloc.toml";

fn pool(cfg: &PipelineConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn elapsed_ms(t: Instant) -> u128 {
    t.elapsed().as_millis()
}

/// Generates a synthetic benchmark under `out` and returns the path of a
/// config file that runs the pipeline on it.
pub fn synth(settings: &SynthSettings, workers: usize, out: &Path) -> Result<PathBuf> {
    let t = Instant::now();
    let scfg: SynthConfig = settings.to_config();
    scfg.validate()?;
    let cfg = PipelineConfig {
        workers,
        synth: settings.clone(),
        ..Default::default()
    };
    fs::create_dir_all(out.join("reference")).map_err(io_err(out.join("reference")))?;
    fs::create_dir_all(out.join("query")).map_err(io_err(out.join("query")))?;
    let pairs = pool(&cfg)?.install(|| {
        (0..scfg.n_pairs)
            .into_par_iter()
            .map(|i| -> Result<_> {
                let p = gen_pair(&scfg, i)?;
                let (r, q) = (reference_id(i), query_id(i));
                write_ppm(&out.join("reference").join(format!("{r}.ppm")), &p.reference)?;
                write_ppm(&out.join("query").join(format!("{q}.ppm")), &p.query)?;
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut proposals = Vec::with_capacity(2 * pairs.len());
    let mut manifest = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let (r, q) = (reference_id(p.index), query_id(p.index));
        proposals.push(ProposalRecord::from_detections(&r, &p.reference_detections));
        proposals.push(ProposalRecord::from_detections(&q, &p.query_detections));
        manifest.push(TestPair {
            query_image_id: q,
            gt_ref_image_id: r,
            polarity: p.polarity,
            gt_boxes: p.gt_boxes.clone(),
        });
    }
    write_proposals(&out.join("proposals.jsonl"), &proposals)?;
    write_manifest(&out.join("manifest.jsonl"), &manifest)?;

    let mut run_cfg = cfg;
    run_cfg.paths.proposals = Some("proposals.jsonl".into());
    let cfg_path = out.join(SYNTH_CONFIG_FILE);
    crate::formats::write_atomic(&cfg_path, run_cfg.to_toml().as_bytes())?;
    info!("synth: {} pairs in {} ms", pairs.len(), elapsed_ms(t));
    Ok(cfg_path)
}

enum Features {
    Builtin(DescriptorConfig),
    External(FeatureMap),
}

impl Features {
    fn load(cfg: &PipelineConfig) -> Result<Self> {
        match &cfg.paths.features {
            Some(p) => Ok(Self::External(load_external_features(&cfg.resolve(p))?)),
            None => Ok(Self::Builtin(cfg.descriptor_config())),
        }
    }

    fn extract(&self, image_id: &str, image: &Raster, bbox: &BBox) -> Result<FeatureVector> {
        match self {
            Self::Builtin(d) => Ok(extract_builtin(image, bbox, d)?),
            Self::External(m) => m.get(image_id, bbox).cloned().ok_or_else(|| {
                Error::Config(format!("no external feature for image `{image_id}` box {bbox}"))
            }),
        }
    }
}

/// Inputs shared by the index and detect stages.
struct Frontend {
    grid: bool,
    threshold: f64,
    proposals: Option<BTreeMap<String, ProposalRecord>>,
    features: Features,
}

impl Frontend {
    fn load(cfg: &PipelineConfig) -> Result<Self> {
        let proposals = match (&cfg.paths.proposals, cfg.proposals.external) {
            (Some(p), true) => Some(read_proposals(&cfg.resolve(p))?),
            _ => None,
        };
        Ok(Self {
            grid: cfg.proposals.grid,
            threshold: cfg.proposals.confidence_threshold,
            proposals,
            features: Features::load(cfg)?,
        })
    }

    /// Grid boxes first, then file proposals in file order.
    fn proposals(&self, image_id: &str, image: &Raster) -> Result<Vec<Proposal>> {
        let (w, h) = (image.width(), image.height());
        let mut out = if self.grid { five_box_proposals(w, h)? } else { Vec::new() };
        if let Some(rec) = self.proposals.as_ref().and_then(|m| m.get(image_id)) {
            out.extend(rec.to_proposals(self.threshold, w, h)?);
        }
        if out.is_empty() {
            return Err(Error::Core(dbloc_core::Error::InvalidInput(format!(
                "image `{image_id}` has no proposals"
            ))));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexSummary {
    pub images: usize,
    pub entries: usize,
}

/// Builds the reference database from every ground-truth reference image
/// named in the manifest and writes it to `<work_dir>/db`.
pub fn index(cfg: &PipelineConfig) -> Result<IndexSummary> {
    let t = Instant::now();
    let pairs = read_manifest(&cfg.manifest_path())?;
    let refs: BTreeSet<&str> = pairs.iter().map(|p| p.gt_ref_image_id.as_str()).collect();
    let front = Frontend::load(cfg)?;
    let per_image = pool(cfg)?.install(|| {
        refs.par_iter()
            .map(|&id| -> Result<Vec<RefSubimage>> {
                let image = read_image(&cfg.reference_image(id))?;
                front
                    .proposals(id, &image)?
                    .into_iter()
                    .map(|p| {
                        Ok(RefSubimage {
                            image_id: id.to_string(),
                            bbox: p.bbox,
                            source: p.source,
                            feature: front.features.extract(id, &image, &p.bbox)?,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let db = ReferenceDb::build(per_image.into_iter().flatten().collect())?;
    write_db(&cfg.db_dir(), &db)?;
    info!("index: {} entries from {} images in {} ms", db.len(), refs.len(), elapsed_ms(t));
    Ok(IndexSummary {
        images: refs.len(),
        entries: db.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectSummary {
    pub samples: usize,
    /// `(query id, message)` of every failed sample.
    pub failures: Vec<(String, String)>,
}

pub fn map_file_name(query_id: &str, method: FusionMethod) -> String {
    format!("{query_id}.{method}.loc.pgm")
}

pub fn mask_file_name(query_id: &str, method: FusionMethod) -> String {
    format!("{query_id}.{method}.cov.pgm")
}

/// 8-bit quantization of a LoC map, 0 where uncovered.
pub fn quantize(map: &LocMap) -> Vec<u8> {
    map.values().iter().map(|&v| (v * 255.0).round() as u8).collect()
}

/// Localizes every query in the manifest, writes a LoC map and a coverage
/// mask per method to `<work_dir>/maps` and the per-qBB records to `<work_dir>/detections.jsonl`.
/// A failing sample yields an error record; the others still run.
pub fn detect(cfg: &PipelineConfig, methods: &[FusionMethod]) -> Result<DetectSummary> {
    if methods.is_empty() {
        return Err(Error::Usage("no fusion method selected".into()));
    }
    let t = Instant::now();
    let pairs = read_manifest(&cfg.manifest_path())?;
    let db = read_db(&cfg.db_dir())?;
    let front = Frontend::load(cfg)?;
    let ctx = DetectCtx {
        cfg,
        db: &db,
        front: &front,
        methods,
        maps_dir: cfg.maps_dir(),
    };
    fs::create_dir_all(&ctx.maps_dir).map_err(io_err(&ctx.maps_dir))?;
    let records: Vec<DetectionRecord> = pool(cfg)?.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                ctx.run(p).unwrap_or_else(|e| {
                    DetectionRecord::failed(&p.query_image_id, &p.gt_ref_image_id, e.to_string())
                })
            })
            .collect()
    });
    write_records(&cfg.detections_path(), &records)?;
    let failures: Vec<(String, String)> = records
        .iter()
        .filter(|r| !r.is_ok())
        .map(|r| (r.query_image_id.clone(), r.error.clone().unwrap_or_default()))
        .collect();
    info!(
        "detect: {} samples, {} failed, {} methods in {} ms",
        records.len(),
        failures.len(),
        methods.len(),
        elapsed_ms(t)
    );
    Ok(DetectSummary {
        samples: records.len(),
        failures,
    })
}

struct DetectCtx<'a> {
    cfg: &'a PipelineConfig,
    db: &'a ReferenceDb,
    front: &'a Frontend,
    methods: &'a [FusionMethod],
    maps_dir: PathBuf,
}

impl DetectCtx<'_> {
    fn run(&self, pair: &TestPair) -> Result<DetectionRecord> {
        let (qid, gt) = (&pair.query_image_id, &pair.gt_ref_image_id);
        if !self.db.contains_image(gt) {
            return Err(dbloc_core::Error::MissingGroundTruth(gt.clone()).into());
        }
        let image = read_image(&self.cfg.query_image(qid))?;
        let (w, h) = (image.width(), image.height());
        let proposals = self.front.proposals(qid, &image)?;
        let mode = self.cfg.engine_mode()?;
        let seed = self.cfg.fusion.seed;

        let mut inputs = Vec::with_capacity(proposals.len());
        let mut ranks = Vec::with_capacity(proposals.len());
        for p in &proposals {
            let feature = self.front.features.extract(qid, &image, &p.bbox)?;
            let list = self.db.rank_for(&feature, p.source, mode)?;
            let rank = self.db.gt_rank(&list, gt)?;
            let score = self.db.gt_distance(&list, gt)?;
            inputs.push(FusionInput {
                bbox: p.bbox,
                rank: rank.normalized(),
                score,
            });
            ranks.push(rank);
        }

        let boxes: Vec<BBox> = proposals.iter().map(|p| p.bbox).collect();
        let coverers: Vec<Vec<usize>> = boxes.iter().map(|b| covering_indices(b, &boxes)).collect();
        let mut per_qbb: Vec<BTreeMap<String, MethodScore>> = vec![BTreeMap::new(); proposals.len()];
        for &m in self.methods {
            let map = build_loc_map(w, h, &inputs, m, seed)?;
            write_pgm(&self.maps_dir.join(map_file_name(qid, m)), w, h, &quantize(&map))?;
            let mask: Vec<u8> = map.covered().iter().map(|&c| if c { 255 } else { 0 }).collect();
            write_pgm(&self.maps_dir.join(mask_file_name(qid, m)), w, h, &mask)?;
            for (k, b) in boxes.iter().enumerate() {
                per_qbb[k].insert(
                    m.name().to_string(),
                    MethodScore {
                        fused: fuse_coverers(m, &coverers[k], &inputs, seed)?,
                        loc: qbb_loc_score(&map, b)?,
                    },
                );
            }
        }

        let qbbs = proposals
            .iter()
            .zip(per_qbb)
            .enumerate()
            .map(|(k, (p, methods))| QbbRecord {
                x0: p.bbox.x0,
                y0: p.bbox.y0,
                x1: p.bbox.x1,
                y1: p.bbox.y1,
                source: p.source.as_str().into(),
                confidence: p.confidence,
                n: coverers[k].len(),
                gt_rank_raw: ranks[k].raw,
                list_len: ranks[k].list_len,
                gt_rank: inputs[k].rank,
                score: inputs[k].score,
                methods,
            })
            .collect();
        Ok(DetectionRecord {
            query_image_id: qid.clone(),
            gt_ref_image_id: gt.clone(),
            status: "ok".into(),
            error: None,
            width: w,
            height: h,
            qbbs,
        })
    }
}

/// Joins detection records with the manifest. Every manifest pair must have
/// a successful record.
pub fn load_evidence(cfg: &PipelineConfig) -> Result<Vec<SampleEvidence>> {
    let pairs = read_manifest(&cfg.manifest_path())?;
    let records = read_records(&cfg.detections_path())?;
    evidence_from(&pairs, &records)
}

pub fn evidence_from(pairs: &[TestPair], records: &[DetectionRecord]) -> Result<Vec<SampleEvidence>> {
    let by_query: HashMap<&str, &DetectionRecord> =
        records.iter().map(|r| (r.query_image_id.as_str(), r)).collect();
    let mut missing = Vec::new();
    let mut failed = Vec::new();
    for p in pairs {
        match by_query.get(p.query_image_id.as_str()) {
            None => missing.push(p.query_image_id.clone()),
            Some(r) if !r.is_ok() => failed.push(p.query_image_id.clone()),
            Some(_) => {}
        }
    }
    if !missing.is_empty() || !failed.is_empty() {
        return Err(Error::MissingRecords { missing, failed });
    }
    pairs
        .iter()
        .map(|p| {
            let r = by_query[p.query_image_id.as_str()];
            let qbbs = r
                .qbbs
                .iter()
                .map(|q| {
                    let scores = q
                        .methods
                        .iter()
                        .filter_map(|(name, s)| FusionMethod::parse(name).map(|m| (m, s.loc)))
                        .collect();
                    Ok(ScoredQbb {
                        bbox: BBox::new(q.x0, q.y0, q.x1, q.y1)?,
                        scores,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleEvidence {
                sample_id: p.query_image_id.clone(),
                width: r.width,
                height: r.height,
                polarity: p.polarity,
                gt_boxes: p.gt_boxes.clone(),
                qbbs,
            })
        })
        .collect()
}

/// Computes the AP table and writes it to `<work_dir>/report.csv`.
pub fn eval(cfg: &PipelineConfig, methods: &[FusionMethod], roc_neg_max: &[f64]) -> Result<Report> {
    if methods.is_empty() {
        return Err(Error::Usage("no fusion method selected".into()));
    }
    let t = Instant::now();
    let samples = load_evidence(cfg)?;
    let report = evaluate_methods(&samples, methods, &cfg.difficulty(), roc_neg_max)?;
    write_report(&cfg.report_path(), &report)?;
    info!(
        "eval: {} samples, {} methods x {} columns in {} ms",
        samples.len(),
        methods.len(),
        roc_neg_max.len(),
        elapsed_ms(t)
    );
    Ok(report)
}
