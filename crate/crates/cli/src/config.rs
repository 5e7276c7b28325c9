//! Run configuration: defaults, then the `--config` file, then flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use guipipe_core::client::EndpointConfig;
use guipipe_core::conversation::DEFAULT_MAX_TURNS;
use guipipe_core::eval::{EvalConfig, GroundingRule, TextMatch, DEFAULT_DISTANCE_THRESHOLD};
use guipipe_core::planning::{HistoryMode, TransformConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<HistoryMode>,
    pub hybrid: Option<bool>,
    pub max_turns: Option<usize>,
    pub grounding_rule: Option<GroundingRule>,
    pub distance_threshold: Option<f64>,
    pub text_match: Option<TextMatch>,
    pub extract: Option<bool>,
    pub seed: Option<u64>,
    pub actions: Option<PathBuf>,
    pub endpoint: Option<EndpointFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointFile {
    pub base_url: Option<String>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub max_in_flight: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))
    }
}

/// Flag values; `None` means "not given on the command line".
#[derive(Debug, Default)]
pub struct FlagConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<HistoryMode>,
    pub hybrid: bool,
    pub max_turns: Option<usize>,
    pub grounding_rule: Option<GroundingRule>,
    pub distance_threshold: Option<f64>,
    pub text_match: Option<TextMatch>,
    pub extract: bool,
    pub seed: Option<u64>,
    pub actions: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointSettings {
    pub base_url: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
}

impl EndpointSettings {
    pub fn to_config(&self) -> EndpointConfig {
        EndpointConfig {
            timeout: Duration::from_secs_f64(self.timeout_secs),
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
            ..EndpointConfig::new(self.base_url.clone())
        }
        .with_env_token()
    }
}

/// The effective configuration, echoed next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub mode: HistoryMode,
    pub hybrid: bool,
    pub max_turns: usize,
    pub grounding_rule: GroundingRule,
    pub distance_threshold: f64,
    pub text_match: TextMatch,
    pub extract: bool,
    pub seed: u64,
    pub actions: Option<PathBuf>,
    pub endpoint: Option<EndpointSettings>,
}

pub const DEFAULT_SEED: u64 = 7;

impl RunConfig {
    pub fn resolve(flags: FlagConfig, file: FileConfig) -> anyhow::Result<Self> {
        let ep_file = file.endpoint.unwrap_or_default();
        let defaults = EndpointConfig::new("");
        let endpoint = flags.endpoint.or(ep_file.base_url).map(|base_url| EndpointSettings {
            base_url,
            timeout_secs: flags
                .timeout_secs
                .or(ep_file.timeout_secs)
                .unwrap_or(defaults.timeout.as_secs_f64()),
            max_retries: flags.max_retries.or(ep_file.max_retries).unwrap_or(defaults.max_retries),
            max_in_flight: flags
                .max_in_flight
                .or(ep_file.max_in_flight)
                .unwrap_or(defaults.max_in_flight),
        });
        let cfg = RunConfig {
            manifest: flags.manifest.or(file.manifest),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            mode: flags.mode.or(file.mode).unwrap_or_default(),
            hybrid: flags.hybrid || file.hybrid.unwrap_or(false),
            max_turns: flags.max_turns.or(file.max_turns).unwrap_or(DEFAULT_MAX_TURNS),
            grounding_rule: flags.grounding_rule.or(file.grounding_rule).unwrap_or_default(),
            distance_threshold: flags
                .distance_threshold
                .or(file.distance_threshold)
                .unwrap_or(DEFAULT_DISTANCE_THRESHOLD),
            text_match: flags.text_match.or(file.text_match).unwrap_or_default(),
            extract: flags.extract || file.extract.unwrap_or(false),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            actions: flags.actions.or(file.actions),
            endpoint,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.max_turns == 0 {
            bail!("max_turns must be at least 1");
        }
        if !(self.distance_threshold.is_finite() && self.distance_threshold >= 0.0) {
            bail!("distance_threshold must be a non-negative number");
        }
        if let Some(ep) = &self.endpoint {
            if !(ep.timeout_secs.is_finite() && ep.timeout_secs > 0.0) {
                bail!("endpoint timeout must be positive");
            }
            if ep.max_in_flight == 0 {
                bail!("max_in_flight must be at least 1");
            }
        }
        Ok(())
    }

    pub fn transform(&self) -> TransformConfig {
        TransformConfig {
            mode: self.mode,
            hybrid: self.hybrid,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            grounding_rule: self.grounding_rule,
            distance_threshold: self.distance_threshold,
            text_match: self.text_match,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_over_defaults() {
        let file: FileConfig =
            serde_json::from_str(r#"{"max_turns": 5, "mode": "action", "distance_threshold": 0.2}"#).unwrap();
        let flags = FlagConfig {
            max_turns: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(flags, file).unwrap();
        assert_eq!(cfg.max_turns, 9);
        assert_eq!(cfg.mode, HistoryMode::Action);
        assert_eq!(cfg.distance_threshold, 0.2);
        assert_eq!(cfg.grounding_rule, GroundingRule::Box);
        assert!(cfg.endpoint.is_none());
    }

    #[test]
    fn endpoint_fields_merge() {
        let file: FileConfig =
            serde_json::from_str(r#"{"endpoint": {"base_url": "http://a", "max_in_flight": 2}}"#).unwrap();
        let flags = FlagConfig {
            max_retries: Some(0),
            ..Default::default()
        };
        let ep = RunConfig::resolve(flags, file).unwrap().endpoint.unwrap();
        assert_eq!((ep.base_url.as_str(), ep.max_in_flight, ep.max_retries), ("http://a", 2, 0));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = FlagConfig {
            max_turns: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(bad, FileConfig::default()).is_err());
        assert!(serde_json::from_str::<FileConfig>(r#"{"mode": "verbose"}"#).is_err());
        assert!(serde_json::from_str::<FileConfig>(r#"{"unknown": 1}"#).is_err());
    }
}
