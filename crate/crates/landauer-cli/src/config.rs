//! Run configuration: subcommand parameter sets, named presets, and TOML
//! config-file loading. Identical configurations produce byte-identical
//! output artifacts.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use landauer::games::{GameAdversary, GameVariant, MemoryGameConfig};
use landauer::protocol::{BobStrategy, EveStrategy, NoiseModel, OtParams, SkeParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("unknown preset {0:?}; available: {1}")]
    UnknownPreset(String, String),
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config file: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(ConfigError::Invalid(format!(
                "format must be json or csv, got {other:?}"
            ))),
        }
    }
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct CommonOpts {
    pub seed: u64,
    pub trials: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub jobs: Option<usize>,
}

/// A fully resolved run request.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum RunConfig {
    Ske {
        params: SkeParams,
        eve: Option<EveStrategy>,
        noise: NoiseModel,
        #[serde(flatten)]
        common: CommonOpts,
    },
    Ot {
        params: OtParams,
        bob: BobStrategy,
        #[serde(flatten)]
        common: CommonOpts,
    },
    MemoryGame {
        config: MemoryGameConfig,
        #[serde(flatten)]
        common: CommonOpts,
    },
    LandauerCount {
        len_x: usize,
        len_y: usize,
        /// `(w_in, w_out)` cells to count; each is run over `trials` random
        /// permutations plus the tightness construction.
        cells: Vec<(usize, usize)>,
        #[serde(flatten)]
        common: CommonOpts,
    },
    LhlCheck {
        distributions: u32,
        #[serde(flatten)]
        common: CommonOpts,
    },
    UniversalityCheck {
        dims: Vec<(usize, usize)>,
        pairs: u32,
        #[serde(flatten)]
        common: CommonOpts,
    },
    ReconcileBench {
        s: usize,
        p: f64,
        delta_prime: f64,
        eta: usize,
        #[serde(flatten)]
        common: CommonOpts,
    },
}

pub const PRESET_NAMES: [&str; 3] = ["ske-desk", "ot-desk", "landauer-exhaustive"];

/// The documented parameter presets, validated at construction.
pub fn preset(name: &str, common: CommonOpts) -> Result<RunConfig, ConfigError> {
    match name {
        // yields m = 767 noiseless, m > 0 up to p_test ~ 0.125
        "ske-desk" => Ok(RunConfig::Ske {
            params: SkeParams {
                nu: 12,
                k: 4,
                t: 2000,
                s: 2000,
                delta_prime: 0.05,
                eta: 30,
                epsilon_pa: 30.0,
                abort_threshold: None,
                key_len_cap: None,
            },
            eve: None,
            noise: NoiseModel::Noiseless,
            common,
        }),
        // n + eta = 168 <= 4 * 2^10 = 4096
        "ot-desk" => Ok(RunConfig::Ot {
            params: OtParams {
                nu: 10,
                n: 128,
                eta: 40,
                classicize: false,
            },
            bob: BobStrategy::Honest { choice: 0 },
            common,
        }),
        "landauer-exhaustive" => {
            let cells = [0usize, 2, 4]
                .iter()
                .flat_map(|&w_in| (w_in + 1..=w_in + 8).map(move |w_out| (w_in, w_out)))
                .collect();
            Ok(RunConfig::LandauerCount {
                len_x: 12,
                len_y: 6,
                cells,
                common,
            })
        }
        other => Err(ConfigError::UnknownPreset(
            other.to_string(),
            PRESET_NAMES.join(", "),
        )),
    }
}

pub fn parse_eve(s: &str) -> Result<Option<EveStrategy>, ConfigError> {
    match s {
        "none" => Ok(None),
        "block" => Ok(Some(EveStrategy::Block)),
        "forward" => Ok(Some(EveStrategy::Forward)),
        "substitute" => Ok(Some(EveStrategy::Substitute)),
        other => {
            if let Some(bits) = other.strip_prefix("store-fraction:") {
                let bits = bits.parse::<u64>().map_err(|_| {
                    ConfigError::Invalid(format!("bad store-fraction size {bits:?}"))
                })?;
                Ok(Some(EveStrategy::StoreFraction { bits }))
            } else {
                Err(ConfigError::Invalid(format!(
                    "eve must be none|block|forward|store-fraction:N|substitute, got {other:?}"
                )))
            }
        }
    }
}

pub fn parse_adversary(s: &str) -> Result<GameAdversary, ConfigError> {
    if let Some(bits) = s.strip_prefix("copy-prefix:") {
        let bits = bits
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("bad copy size {bits:?}")))?;
        return Ok(GameAdversary::CopyPrefix { bits });
    }
    if let Some(bits) = s.strip_prefix("copy-random:") {
        let bits = bits
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("bad copy size {bits:?}")))?;
        return Ok(GameAdversary::CopyRandom { bits });
    }
    match s {
        "no-copy" => Ok(GameAdversary::NoCopy),
        "perfect-copy" => Ok(GameAdversary::PerfectCopy),
        other => Err(ConfigError::Invalid(format!(
            "adversary must be copy-prefix:N|copy-random:N|no-copy|perfect-copy, got {other:?}"
        ))),
    }
}

pub fn parse_variant(s: &str) -> Result<GameVariant, ConfigError> {
    if s == "exhaustive" {
        return Ok(GameVariant::Exhaustive);
    }
    if let Some(t) = s.strip_prefix("sampled:") {
        let t = t
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("bad sample size {t:?}")))?;
        return Ok(GameVariant::Sampled { t });
    }
    Err(ConfigError::Invalid(format!(
        "variant must be exhaustive or sampled:T, got {s:?}"
    )))
}

/// Optional values loadable from a TOML config file; explicit flags win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub nu: Option<u32>,
    pub k: Option<u32>,
    pub t: Option<usize>,
    pub s: Option<usize>,
    pub delta_prime: Option<f64>,
    pub eta: Option<usize>,
    pub epsilon_pa: Option<f64>,
    pub abort_threshold: Option<f64>,
    pub key_cap: Option<usize>,
    pub noise: Option<f64>,
    pub eve: Option<String>,
    pub n: Option<usize>,
    pub classicize: Option<bool>,
    pub bob_choice: Option<u8>,
    pub flip_bits: Option<usize>,
    pub variant: Option<String>,
    pub adversary: Option<String>,
    pub len_x: Option<usize>,
    pub len_y: Option<usize>,
    pub w_in: Option<usize>,
    pub w_out: Option<usize>,
    pub p: Option<f64>,
    pub distributions: Option<u32>,
    pub pairs: Option<u32>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }
}
