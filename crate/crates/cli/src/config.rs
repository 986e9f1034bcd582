use std::path::Path;

use anyhow::{Context, Result};
use isopref::io::IngestConfig;
use isopref::synth::{ExperimentConfig, UtilityFamily};
use isopref::LambdaGrid;
use serde::Deserialize;

/// Config for commands that read a ratings file.
///
/// The ingest keys sit at the top level; the optional keys give defaults
/// that command-line flags override.
#[derive(Debug, Clone, Deserialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub ingest: IngestConfig,
    pub lambda_grid: Option<String>,
    pub split: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub d: Option<usize>,
    pub m: Option<u32>,
    pub sigma: Option<f64>,
    pub sample_sizes: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub lambda_grid: Option<String>,
    pub families: Option<Vec<UtilityFamily>>,
}

impl SynthConfig {
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let base = ExperimentConfig::default();
        Ok(ExperimentConfig {
            d: self.d.unwrap_or(base.d),
            m: self.m.unwrap_or(base.m),
            sigma: self.sigma.unwrap_or(base.sigma),
            sample_sizes: self.sample_sizes.clone().unwrap_or(base.sample_sizes),
            trials: self.trials.unwrap_or(base.trials),
            seed: self.seed.unwrap_or(base.seed),
            grid: match &self.lambda_grid {
                Some(s) => parse_grid(s)?,
                None => base.grid,
            },
        })
    }
}

pub fn parse_grid(s: &str) -> Result<LambdaGrid> {
    s.parse().with_context(|| format!("bad lambda grid '{s}'"))
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("bad config {}", path.display()))
}
