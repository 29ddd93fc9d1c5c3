//! Pipeline configuration (TOML).
//!
//! Every key is optional; missing keys take the defaults below. Relative
//! paths are resolved against the directory holding the config file.
//!
//! ```toml
//! workers = 0                        # 0 = one per core
//!
//! [paths]
//! manifest = "manifest.jsonl"
//! reference_dir = "reference"
//! query_dir = "query"
//! proposals = "proposals.jsonl"      # optional detector proposals
//! features = "features.bin"          # optional external features
//! work_dir = "work"
//!
//! [proposals]
//! grid = true
//! external = true
//! confidence_threshold = 0.05
//! engines = "merged"                 # or "per_source"
//!
//! [descriptor]
//! canonical_size = 256
//! grid = 16
//!
//! [fusion]
//! methods = ["rank_fusion", "rank_no_fusion", "rank_fusion_cap2",
//!            "rank_fusion_cap3", "score_max", "score_sum"]
//! seed = 0
//!
//! [evaluation]
//! roc_pos = [0.9, 1.0]
//! roc_neg = [0.0, 0.05]
//! sob_pos = [0.0, 0.4]
//! sob_neg = [0.4, 1.0]
//! roc_neg_max_sweep = [0.01, 0.02, 0.03, 0.04, 0.05]
//!
//! [synth]
//! seed = 0
//! image_size = 256
//! n_pairs = 200
//! change_rate = 0.5
//! jitter_max = 6
//! object_size = [32, 96]
//! texture_complexity = 4
//! brightness_jitter = 150
//! static_shapes = 4
//! detect_permille = 900
//! max_duplicates = 2
//! false_proposals = 3
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use dbloc_core::descriptor::DescriptorConfig;
use dbloc_core::evaluation::DifficultyConfig;
use dbloc_core::fusion::FusionMethod;
use dbloc_core::geometry::DEFAULT_CONFIDENCE_THRESHOLD;
use dbloc_core::retrieval::EngineMode;
use dbloc_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub manifest: PathBuf,
    pub reference_dir: PathBuf,
    pub query_dir: PathBuf,
    pub proposals: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub work_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            manifest: "manifest.jsonl".into(),
            reference_dir: "reference".into(),
            query_dir: "query".into(),
            proposals: None,
            features: None,
            work_dir: "work".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalSettings {
    pub grid: bool,
    pub external: bool,
    pub confidence_threshold: f64,
    pub engines: String,
}

impl Default for ProposalSettings {
    fn default() -> Self {
        Self {
            grid: true,
            external: true,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            engines: "merged".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescriptorSettings {
    pub canonical_size: u32,
    pub grid: u32,
}

impl Default for DescriptorSettings {
    fn default() -> Self {
        let d = DescriptorConfig::default();
        Self {
            canonical_size: d.canonical_size,
            grid: d.grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSettings {
    pub methods: Vec<String>,
    pub seed: u64,
}

impl Default for FusionSettings {
    fn default() -> Self {
        Self {
            methods: FusionMethod::ALL.iter().map(|m| m.name().to_string()).collect(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub roc_pos: [f64; 2],
    pub roc_neg: [f64; 2],
    pub sob_pos: [f64; 2],
    pub sob_neg: [f64; 2],
    pub roc_neg_max_sweep: Vec<f64>,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        let d = DifficultyConfig::default();
        Self {
            roc_pos: [d.roc_pos.0, d.roc_pos.1],
            roc_neg: [d.roc_neg.0, d.roc_neg.1],
            sob_pos: [d.sob_pos.0, d.sob_pos.1],
            sob_neg: [d.sob_neg.0, d.sob_neg.1],
            roc_neg_max_sweep: vec![0.01, 0.02, 0.03, 0.04, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub seed: u64,
    pub image_size: u32,
    pub n_pairs: u32,
    pub change_rate: f64,
    pub jitter_max: u32,
    pub object_size: [u32; 2],
    pub texture_complexity: u32,
    pub brightness_jitter: u32,
    pub static_shapes: u32,
    pub detect_permille: u32,
    pub max_duplicates: u32,
    pub false_proposals: u32,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self::from(&SynthConfig::default())
    }
}

impl From<&SynthConfig> for SynthSettings {
    fn from(c: &SynthConfig) -> Self {
        Self {
            seed: c.seed,
            image_size: c.image_size,
            n_pairs: c.n_pairs,
            change_rate: c.change_rate,
            jitter_max: c.jitter_max,
            object_size: [c.object_size.0, c.object_size.1],
            texture_complexity: c.texture_complexity,
            brightness_jitter: c.brightness_jitter,
            static_shapes: c.static_shapes,
            detect_permille: c.detect_permille,
            max_duplicates: c.max_duplicates,
            false_proposals: c.false_proposals,
        }
    }
}

impl SynthSettings {
    pub fn to_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            image_size: self.image_size,
            n_pairs: self.n_pairs,
            change_rate: self.change_rate,
            jitter_max: self.jitter_max,
            object_size: (self.object_size[0], self.object_size[1]),
            texture_complexity: self.texture_complexity,
            brightness_jitter: self.brightness_jitter,
            static_shapes: self.static_shapes,
            detect_permille: self.detect_permille,
            max_duplicates: self.max_duplicates,
            false_proposals: self.false_proposals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Worker threads for per-image stages; 0 picks one per core.
    pub workers: usize,
    pub paths: Paths,
    pub proposals: ProposalSettings,
    pub descriptor: DescriptorSettings,
    pub fusion: FusionSettings,
    pub evaluation: EvaluationSettings,
    pub synth: SynthSettings,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.methods()?;
        self.descriptor_config().validate()?;
        self.difficulty().validate()?;
        self.engine_mode()?;
        if !self.proposals.grid && !self.proposals.external {
            return Err(Error::Config("both grid and external proposals are disabled".into()));
        }
        if !(0.0..=1.0).contains(&self.proposals.confidence_threshold) {
            return Err(Error::Config("confidence_threshold outside [0, 1]".into()));
        }
        for &v in &self.evaluation.roc_neg_max_sweep {
            self.difficulty().with_roc_neg_max(v).validate()?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.resolve(&self.paths.manifest)
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.paths.work_dir)
    }

    pub fn db_dir(&self) -> PathBuf {
        self.work_dir().join("db")
    }

    pub fn maps_dir(&self) -> PathBuf {
        self.work_dir().join("maps")
    }

    pub fn detections_path(&self) -> PathBuf {
        self.work_dir().join("detections.jsonl")
    }

    pub fn report_path(&self) -> PathBuf {
        self.work_dir().join("report.csv")
    }

    pub fn reference_image(&self, id: &str) -> PathBuf {
        self.resolve(&self.paths.reference_dir).join(format!("{id}.ppm"))
    }

    pub fn query_image(&self, id: &str) -> PathBuf {
        self.resolve(&self.paths.query_dir).join(format!("{id}.ppm"))
    }

    pub fn methods(&self) -> Result<Vec<FusionMethod>> {
        self.fusion
            .methods
            .iter()
            .map(|m| FusionMethod::parse(m).ok_or_else(|| Error::Config(format!("unknown fusion method `{m}`"))))
            .collect()
    }

    pub fn descriptor_config(&self) -> DescriptorConfig {
        DescriptorConfig {
            canonical_size: self.descriptor.canonical_size,
            grid: self.descriptor.grid,
        }
    }

    pub fn difficulty(&self) -> DifficultyConfig {
        let e = &self.evaluation;
        DifficultyConfig {
            roc_pos: (e.roc_pos[0], e.roc_pos[1]),
            roc_neg: (e.roc_neg[0], e.roc_neg[1]),
            sob_pos: (e.sob_pos[0], e.sob_pos[1]),
            sob_neg: (e.sob_neg[0], e.sob_neg[1]),
        }
    }

    pub fn engine_mode(&self) -> Result<EngineMode> {
        match self.proposals.engines.as_str() {
            "merged" => Ok(EngineMode::Merged),
            "per_source" => Ok(EngineMode::PerSource),
            other => Err(Error::Config(format!("unknown engines mode `{other}`"))),
        }
    }
}
