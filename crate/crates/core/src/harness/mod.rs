//! Campaign execution: configuration, train/evaluate loops across allocators
//! and weather scenarios, raw CSV emission, summary statistics, and
//! plot-ready data files.
//!
//! Seed discipline: every random draw descends from a campaign seed through
//! tagged sub-streams, so for a given (weather, seed, episode index) every
//! allocator sees the identical user layout, orbital phase, and rain draws.

pub mod campaign;
pub mod plots;
pub mod records;
pub mod summary;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::allocators::AllocatorKind;
use crate::config::{ScenarioConfig, WeatherKind};
use crate::strategy::{MockProvider, RemoteProvider, StrategyProvider};
use crate::Error;

pub use campaign::run_campaign;
pub use plots::emit_plot_data;
pub use summary::{summarize_dir, CampaignReport};

/// Which strategy provider a campaign queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    Remote,
}

impl std::str::FromStr for ProviderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "mock" => Ok(ProviderKind::Mock),
            "remote" => Ok(ProviderKind::Remote),
            other => Err(Error::Config(format!("unknown provider '{other}'"))),
        }
    }
}

/// Build a provider instance. A remote provider that cannot be configured
/// degrades to the mock so campaigns never abort.
pub fn make_provider(kind: ProviderKind) -> Box<dyn StrategyProvider> {
    match kind {
        ProviderKind::Mock => Box::new(MockProvider),
        ProviderKind::Remote => match RemoteProvider::from_env() {
            Ok(p) => Box::new(p),
            Err(_) => Box::new(MockProvider),
        },
    }
}

/// Full campaign description; serializable to the TOML config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub scenario: ScenarioConfig,
    pub weathers: Vec<WeatherKind>,
    pub allocators: Vec<AllocatorKind>,
    pub episodes_train: usize,
    pub episodes_eval: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub provider: ProviderKind,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::desk(),
            weathers: vec![WeatherKind::Nominal],
            allocators: vec![
                AllocatorKind::Equal,
                AllocatorKind::Wf,
                AllocatorKind::Mmf,
                AllocatorKind::Pc,
                AllocatorKind::Drl,
                AllocatorKind::LamDrl,
            ],
            episodes_train: 300,
            episodes_eval: 100,
            seeds: vec![0],
            output_dir: PathBuf::from("out"),
            provider: ProviderKind::Mock,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.scenario.validate()?;
        if self.allocators.is_empty() {
            return Err(Error::Config("at least one allocator is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.weathers.is_empty() {
            return Err(Error::Config("at least one weather scenario is required".into()));
        }
        if self.episodes_eval < 1 {
            return Err(Error::Config("episodes_eval must be >= 1".into()));
        }
        if self.episodes_train < 1 && self.allocators.iter().any(AllocatorKind::is_learning) {
            return Err(Error::Config(
                "episodes_train must be >= 1 when a learning allocator is enabled".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_path(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let cfg: CampaignConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Stable per-allocator tag for seed derivation.
pub(crate) fn allocator_tag(kind: AllocatorKind) -> u64 {
    match kind {
        AllocatorKind::Equal => 0,
        AllocatorKind::Wf => 1,
        AllocatorKind::Mmf => 2,
        AllocatorKind::Pc => 3,
        AllocatorKind::Drl => 4,
        AllocatorKind::LamDrl => 5,
    }
}

/// Stable per-weather tag for seed derivation.
pub(crate) fn weather_tag(kind: WeatherKind) -> u64 {
    match kind {
        WeatherKind::Nominal => 0,
        WeatherKind::Extreme => 1,
    }
}
