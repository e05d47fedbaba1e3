//! TOML run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fairrank_core::audit::AuditSettings;
use fairrank_core::dataset::{DemographicScheme, SyntheticSpec};
use fairrank_core::ranker::DEFAULT_GRID_SIZE;
use fairrank_core::stats::DEFAULT_ALPHA;
use fairrank_core::{RangeTag, SplitConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub rank: RankConfig,
    pub metrics: MetricsConfig,
    pub output: OutputConfig,
    pub synth: SynthConfig,
}

/// Input files. Unset paths default to the files `synth` writes into the
/// output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub embeddings: Option<PathBuf>,
    pub identities: Option<PathBuf>,
    pub scheme: Option<PathBuf>,
    pub normalize: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            embeddings: None,
            identities: None,
            scheme: None,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    /// Restrict gallery images to one capture range.
    pub gallery_range: Option<RangeTag>,
    /// Threshold for the rank-1 identification rate.
    pub tau: f64,
    pub calibration_grid: usize,
    /// Rankings file; defaults to `rankings.jsonl` in the output directory.
    pub rankings: Option<PathBuf>,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            gallery_range: None,
            tau: 0.0,
            calibration_grid: DEFAULT_GRID_SIZE,
            rankings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Selects which probe-conditioned matrices go into the CSV tables.
    pub exclude_mates: bool,
    pub alpha: f64,
    /// Longest hit-ratio cutoff; defaults to `split.k`. Rankings are cut at
    /// this depth.
    pub hit_ratio_max_k: Option<usize>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            exclude_mates: false,
            alpha: DEFAULT_ALPHA,
            hit_ratio_max_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("fairrank-out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

/// Overrides on top of the six-group synthetic defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub scheme: Option<DemographicScheme>,
    /// Defaults to `split.seed`.
    pub seed: Option<u64>,
    pub identities_per_group: Option<usize>,
    pub images_per_identity: Option<usize>,
    pub dim: Option<usize>,
    pub group_dispersion: Option<f64>,
    pub identity_dispersion: Option<f64>,
    pub identity_dispersion_overrides: BTreeMap<String, f64>,
    pub image_noise: Option<f64>,
    pub long_range_fraction: Option<f64>,
}

/// Command-line values that replace config entries when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub probe_frac: Option<f64>,
    pub gallery_range: Option<RangeTag>,
    pub exclude_mates: Option<bool>,
    pub alpha: Option<f64>,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl AuditConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.split.seed = seed;
            self.synth.seed = Some(seed);
        }
        if let Some(k) = o.k {
            self.split.k = k;
        }
        if let Some(l) = o.l {
            self.split.l = l;
        }
        if let Some(f) = o.probe_frac {
            self.split.probe_frac = f;
        }
        if o.gallery_range.is_some() {
            self.rank.gallery_range = o.gallery_range;
        }
        if let Some(x) = o.exclude_mates {
            self.metrics.exclude_mates = x;
        }
        if let Some(a) = o.alpha {
            self.metrics.alpha = a;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if !o.formats.is_empty() {
            self.output.formats = o.formats.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.split.validate()?;
        self.audit_settings().validate()?;
        if self.rank.calibration_grid < 2 {
            return Err(CliError::Config(format!(
                "calibration_grid must be at least 2, got {}",
                self.rank.calibration_grid
            )));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats is empty".into()));
        }
        Ok(())
    }

    /// Ranking depth written to the rankings file.
    pub fn depth(&self) -> usize {
        self.metrics.hit_ratio_max_k.unwrap_or(self.split.k)
    }

    pub fn audit_settings(&self) -> AuditSettings {
        AuditSettings {
            k: self.split.k,
            alpha: self.metrics.alpha,
            hit_ratio_max_k: self.depth(),
            tau: self.rank.tau,
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let s = &self.synth;
        let base = SyntheticSpec::diveface_like(s.seed.unwrap_or(self.split.seed));
        SyntheticSpec {
            scheme: s.scheme.clone().unwrap_or(base.scheme),
            identities_per_group: s.identities_per_group.unwrap_or(base.identities_per_group),
            images_per_identity: s.images_per_identity.unwrap_or(base.images_per_identity),
            dim: s.dim.unwrap_or(base.dim),
            seed: base.seed,
            group_dispersion: s.group_dispersion.unwrap_or(base.group_dispersion),
            identity_dispersion: s.identity_dispersion.unwrap_or(base.identity_dispersion),
            identity_dispersion_overrides: s.identity_dispersion_overrides.clone(),
            image_noise: s.image_noise.unwrap_or(base.image_noise),
            long_range_fraction: s.long_range_fraction.unwrap_or(base.long_range_fraction),
        }
    }

    fn in_out(&self, given: &Option<PathBuf>, name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.output.dir.join(name))
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.in_out(&self.data.embeddings, "embeddings.jsonl")
    }

    pub fn identities_path(&self) -> PathBuf {
        self.in_out(&self.data.identities, "identities.csv")
    }

    pub fn scheme_path(&self) -> PathBuf {
        self.in_out(&self.data.scheme, "scheme.toml")
    }

    pub fn rankings_path(&self) -> PathBuf {
        self.in_out(&self.rank.rankings, "rankings.jsonl")
    }

    pub fn report_path(&self) -> PathBuf {
        self.output.dir.join("audit_report.json")
    }
}
