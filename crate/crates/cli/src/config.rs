//! Configuration loading: a flat key/value text format, with flag overrides
//! layered on top, plus the run manifest that accompanies every output file.
//!
//! A manifest JSON file is itself a valid `--config` input, so a recorded
//! run can be replayed from its manifest alone.

use std::fmt;
use std::path::Path;

use diqss_core::keyrate::{
    BasisMode, ChannelConfig, OptimizerControls, SecrecyProvider,
};
use diqss_core::montecarlo::HeraldPath;
use diqss_core::noise::Strategy;

/// Strategy selector without its q payload; q is a separate key so that the
/// two can be overridden independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StrategyKind {
    None,
    Post,
    Advanced,
}

/// Fully resolved tool configuration (channel + simulation settings).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ToolConfig {
    pub transmittance: f64,
    pub alpha_db_per_km: f64,
    pub distance_km: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub eta_d: f64,
    pub fidelity: f64,
    pub rep_rate_hz: f64,
    pub check_fraction: f64,
    pub p_key_basis: f64,
    pub strategy: StrategyKind,
    pub flip_q: f64,
    pub provider: String,
    pub basis_mode: String,
    pub opt_grid: usize,
    pub opt_refine_iters: usize,
    pub opt_tol: f64,
    pub rounds: u64,
    pub seed: u64,
    pub announce_fraction: f64,
    pub bob_w1: f64,
    pub bob_w2: f64,
    pub bob_w3: f64,
    pub herald_path: String,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            transmittance: 0.5,
            alpha_db_per_km: 0.2,
            distance_km: 0.0,
            eta_c: 1.0,
            eta_m: 1.0,
            eta_d: 1.0,
            fidelity: 1.0,
            rep_rate_hz: 1e7,
            check_fraction: 0.5,
            p_key_basis: 0.5,
            strategy: StrategyKind::None,
            flip_q: 0.0,
            provider: "pironio".into(),
            basis_mode: "two".into(),
            opt_grid: 21,
            opt_refine_iters: 24,
            opt_tol: 1e-12,
            rounds: 1_000_000,
            seed: 1,
            announce_fraction: 0.5,
            bob_w1: 1.0,
            bob_w2: 1.0,
            bob_w3: 1.0,
            herald_path: "auto".into(),
        }
    }
}

/// Configuration failure with an optional source line.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }

    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ToolConfig {
    /// Parse one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let fp = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>()
                .map_err(|_| ConfigError::at(line, format!("`{v}` is not a number")))
        };
        match key {
            "transmittance" => self.transmittance = fp(value)?,
            "alpha_db_per_km" => self.alpha_db_per_km = fp(value)?,
            "distance_km" => self.distance_km = fp(value)?,
            "eta_c" => self.eta_c = fp(value)?,
            "eta_m" => self.eta_m = fp(value)?,
            "eta_d" => self.eta_d = fp(value)?,
            "fidelity" => self.fidelity = fp(value)?,
            "rep_rate_hz" => self.rep_rate_hz = fp(value)?,
            "check_fraction" => self.check_fraction = fp(value)?,
            "p_key_basis" => self.p_key_basis = fp(value)?,
            "flip_q" => self.flip_q = fp(value)?,
            "opt_tol" => self.opt_tol = fp(value)?,
            "announce_fraction" => self.announce_fraction = fp(value)?,
            "bob_w1" => self.bob_w1 = fp(value)?,
            "bob_w2" => self.bob_w2 = fp(value)?,
            "bob_w3" => self.bob_w3 = fp(value)?,
            "strategy" => {
                self.strategy = parse_strategy(value)
                    .ok_or_else(|| ConfigError::at(line, format!("unknown strategy `{value}`")))?;
            }
            "provider" => {
                parse_provider_name(value)
                    .ok_or_else(|| ConfigError::at(line, format!("unknown provider `{value}`")))?;
                self.provider = value.to_string();
            }
            "basis_mode" => match value {
                "two" | "single" => self.basis_mode = value.to_string(),
                _ => {
                    return Err(ConfigError::at(
                        line,
                        format!("basis_mode must be `two` or `single`, got `{value}`"),
                    ))
                }
            },
            "herald_path" => match value {
                "auto" | "fast" | "optics" => self.herald_path = value.to_string(),
                _ => {
                    return Err(ConfigError::at(
                        line,
                        format!("herald_path must be auto|fast|optics, got `{value}`"),
                    ))
                }
            },
            "opt_grid" => {
                self.opt_grid = value
                    .parse()
                    .map_err(|_| ConfigError::at(line, format!("`{value}` is not a count")))?;
            }
            "opt_refine_iters" => {
                self.opt_refine_iters = value
                    .parse()
                    .map_err(|_| ConfigError::at(line, format!("`{value}` is not a count")))?;
            }
            "rounds" => {
                self.rounds = value
                    .parse()
                    .map_err(|_| ConfigError::at(line, format!("`{value}` is not a count")))?;
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| ConfigError::at(line, format!("`{value}` is not a u64")))?;
            }
            _ => return Err(ConfigError::at(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// The channel part, validated by the core on use.
    pub fn channel(&self) -> Result<ChannelConfig, ConfigError> {
        let strategy = match self.strategy {
            StrategyKind::None => Strategy::None,
            StrategyKind::Post => Strategy::Postselect,
            StrategyKind::Advanced => Strategy::Advanced(self.flip_q),
        };
        let provider = parse_provider(
            &self.provider,
            OptimizerControls {
                grid: self.opt_grid,
                refine_iters: self.opt_refine_iters,
                tol: self.opt_tol,
            },
        )
        .ok_or_else(|| ConfigError::new(format!("unknown provider `{}`", self.provider)))?;
        let basis_mode = match self.basis_mode.as_str() {
            "two" => BasisMode::TwoBasis,
            "single" => BasisMode::SingleBasis,
            other => {
                return Err(ConfigError::new(format!(
                    "basis_mode must be `two` or `single`, got `{other}`"
                )))
            }
        };
        Ok(ChannelConfig {
            transmittance: self.transmittance,
            alpha_db_per_km: self.alpha_db_per_km,
            distance_km: self.distance_km,
            eta_c: self.eta_c,
            eta_m: self.eta_m,
            eta_d: self.eta_d,
            fidelity: self.fidelity,
            rep_rate_hz: self.rep_rate_hz,
            check_fraction: self.check_fraction,
            p_key_basis: self.p_key_basis,
            strategy,
            provider,
            basis_mode,
        })
    }

    pub fn herald_path_enum(&self) -> HeraldPath {
        match self.herald_path.as_str() {
            "fast" => HeraldPath::Fast,
            "optics" => HeraldPath::Optics,
            _ => HeraldPath::Auto,
        }
    }
}

pub fn parse_strategy(value: &str) -> Option<StrategyKind> {
    match value {
        "none" => Some(StrategyKind::None),
        "post" => Some(StrategyKind::Post),
        "advanced" => Some(StrategyKind::Advanced),
        _ => None,
    }
}

fn parse_provider_name(value: &str) -> Option<()> {
    matches!(value, "ideal" | "pironio" | "transcribed").then_some(())
}

pub fn parse_provider(value: &str, controls: OptimizerControls) -> Option<SecrecyProvider> {
    match value {
        "ideal" => Some(SecrecyProvider::IdealCap),
        "pironio" => Some(SecrecyProvider::PironioAnalytic),
        "transcribed" => Some(SecrecyProvider::Transcribed(controls)),
        _ => None,
    }
}

/// Load a config file: flat `key = value` text, or a previously written
/// run-manifest JSON (replay).
pub fn load_config(path: &Path) -> Result<ToolConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| ConfigError::new(format!("bad manifest JSON: {e}")))?;
        return Ok(manifest.config);
    }
    let mut config = ToolConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line_no, format!("expected `key = value`, got `{line}`")))?;
        config.set(key.trim(), value.trim(), line_no)?;
    }
    Ok(config)
}

/// Provenance record accompanying every output file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Wall-clock stamp; kept out of the data files so reruns stay
    /// byte-identical.
    pub timestamp_unix: u64,
    pub seed: u64,
    pub provider: String,
    pub args: serde_json::Value,
    pub config: ToolConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &ToolConfig, args: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed: config.seed,
            provider: config.provider.clone(),
            args,
            config: config.clone(),
        }
    }
}
