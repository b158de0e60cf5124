//! Run configuration: command-line flags over an optional TOML file over
//! built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use nifflow_core::{
    EdgeLengthMode, EstimatorConfig, EstimatorKind, ExportFormat, FlowMode, RelevanceMode,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Ksg,
    Hist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceArg {
    Literal,
    #[value(name = "per_feature")]
    PerFeature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Mi,
    Pmi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLengthArg {
    Inverse,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Dot,
    Graphml,
    Json,
}

/// Keys accepted in the `--config` TOML file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub eval: Option<PathBuf>,
    pub estimator: Option<EstimatorArg>,
    pub k: Option<usize>,
    pub bins: Option<usize>,
    pub beta: Option<f64>,
    pub relevance: Option<RelevanceArg>,
    pub mode: Option<ModeArg>,
    pub sample: Option<usize>,
    pub gamma: Option<f64>,
    pub edge_length: Option<EdgeLengthArg>,
    pub format: Option<FormatArg>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset CSV file with a `label` column.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Neighbor count for the KSG estimator (>= 1).
    #[arg(long)]
    pub k: Option<usize>,
    /// Bins per axis for the histogram estimator (>= 2).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Redundancy weight (>= 0).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub relevance: Option<RelevanceArg>,
    /// Seed for tie-breaking jitter and community detection.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Sample index for pointwise mode.
    #[arg(long)]
    pub sample: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Community resolution (> 0); smaller values give more communities.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub edge_length: Option<EdgeLengthArg>,
}

/// Fully resolved settings; serialized into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<PathBuf>,
    pub estimator: EstimatorConfig,
    pub mode: FlowMode,
    pub gamma: f64,
    pub edge_length: EdgeLengthMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<ExportFormat>,
    pub out: String,
    /// Command-specific settings.
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunConfig {
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }

    /// One-line JSON, for CSV comment headers.
    pub fn to_line(&self) -> String {
        self.to_value().to_string()
    }

    pub fn model(&self) -> Result<&Path> {
        match &self.model {
            Some(p) => Ok(p),
            None => bail!("--model is required (flag or config file)"),
        }
    }

    pub fn data(&self) -> Result<&Path> {
        match &self.data {
            Some(p) => Ok(p),
            None => bail!("--data is required (flag or config file)"),
        }
    }
}

pub struct Resolver<'a> {
    pub file: &'a FileConfig,
}

impl Resolver<'_> {
    pub fn estimator(&self, a: &EstimatorArgs) -> Result<EstimatorConfig> {
        let f = self.file;
        let d = EstimatorConfig::default();
        let cfg = EstimatorConfig {
            kind: match a.estimator.or(f.estimator) {
                Some(EstimatorArg::Ksg) => EstimatorKind::Ksg,
                Some(EstimatorArg::Hist) => EstimatorKind::Histogram,
                None => d.kind,
            },
            k: a.k.or(f.k).unwrap_or(d.k),
            bins: a.bins.or(f.bins).unwrap_or(d.bins),
            beta: a.beta.or(f.beta).unwrap_or(d.beta),
            relevance_mode: match a.relevance.or(f.relevance) {
                Some(RelevanceArg::Literal) => RelevanceMode::Literal,
                Some(RelevanceArg::PerFeature) => RelevanceMode::PerFeature,
                None => d.relevance_mode,
            },
            rng_seed: a.seed.or(f.seed).unwrap_or(d.rng_seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mode(&self, a: &ModeArgs) -> Result<FlowMode> {
        let sample = a.sample.or(self.file.sample);
        match a.mode.or(self.file.mode).unwrap_or(ModeArg::Mi) {
            ModeArg::Mi => Ok(FlowMode::MeanMi),
            ModeArg::Pmi => match sample {
                Some(sample) => Ok(FlowMode::Pmi { sample }),
                None => bail!("--mode pmi needs --sample"),
            },
        }
    }

    pub fn analysis(&self, a: &AnalysisArgs) -> Result<(f64, EdgeLengthMode)> {
        let gamma = a.gamma.or(self.file.gamma).unwrap_or(1.0);
        if !(gamma > 0.0 && gamma.is_finite()) {
            bail!("--gamma must be positive and finite, got {gamma}");
        }
        let mode = match a
            .edge_length
            .or(self.file.edge_length)
            .unwrap_or(EdgeLengthArg::Inverse)
        {
            EdgeLengthArg::Inverse => EdgeLengthMode::InverseWeight,
            EdgeLengthArg::Unit => EdgeLengthMode::Unit,
        };
        Ok((gamma, mode))
    }

    pub fn format(&self, a: Option<FormatArg>) -> ExportFormat {
        match a.or(self.file.format).unwrap_or(FormatArg::Json) {
            FormatArg::Dot => ExportFormat::Dot,
            FormatArg::Graphml => ExportFormat::Graphml,
            FormatArg::Json => ExportFormat::Json,
        }
    }

    pub fn path(&self, flag: &Option<PathBuf>, file: &Option<PathBuf>) -> Result<Option<PathBuf>> {
        let path = flag.clone().or_else(|| file.clone());
        if let Some(p) = &path {
            if !p.exists() {
                bail!("input file {} does not exist", p.display());
            }
        }
        Ok(path)
    }
}
