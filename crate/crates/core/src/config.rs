//! Simulation configuration (TOML) and the bundled presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::AgentParams;
use crate::biosignal::{GsrFluctuationParams, GsrSynthParams, PpgSynthParams};
use crate::detection::Thresholds;
use crate::error::{Error, Result};
use crate::policy::PolicyConfig;
use crate::profile::{QuestionnaireResponse, ScoringRules};
use crate::scenario::ScenarioConfig;

pub const SCHEMA_VERSION: u32 = 1;

const STUDY_PRESET: &str = include_str!("../presets/study.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VitalsConfig {
    pub smoothing_len: usize,
    pub window_ms: f64,
}

impl Default for VitalsConfig {
    fn default() -> Self {
        Self {
            smoothing_len: 9,
            window_ms: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    pub ppg: PpgSynthParams,
    pub gsr: GsrSynthParams,
}

/// How experiment sessions obtain questionnaire answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cohort {
    /// Session `i` uses answer set `i mod len`.
    Cycle { questionnaires: Vec<Vec<i64>> },
    /// Uniform random answers derived from the session seed.
    Random,
}

impl Default for Cohort {
    fn default() -> Self {
        Cohort::Random
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    #[serde(default = "defaults::tick_ms")]
    pub tick_ms: i64,
    #[serde(default = "defaults::assessment_interval_ms")]
    pub assessment_interval_ms: i64,
    #[serde(default = "defaults::baseline_ms")]
    pub baseline_ms: i64,
    /// Hard stop for sessions that never finish.
    #[serde(default = "defaults::max_session_ms")]
    pub max_session_ms: i64,
    #[serde(default)]
    pub detection: Thresholds,
    #[serde(default)]
    pub gsr: GsrFluctuationParams,
    #[serde(default)]
    pub vitals: VitalsConfig,
    #[serde(default)]
    pub scoring: ScoringRules,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub agent: AgentParams,
    #[serde(default)]
    pub signals: SignalConfig,
    #[serde(default)]
    pub cohort: Cohort,
}

mod defaults {
    pub fn tick_ms() -> i64 {
        100
    }
    pub fn assessment_interval_ms() -> i64 {
        1000
    }
    pub fn baseline_ms() -> i64 {
        60_000
    }
    pub fn max_session_ms() -> i64 {
        420_000
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tick_ms: defaults::tick_ms(),
            assessment_interval_ms: defaults::assessment_interval_ms(),
            baseline_ms: defaults::baseline_ms(),
            max_session_ms: defaults::max_session_ms(),
            detection: Thresholds::default(),
            gsr: GsrFluctuationParams::default(),
            vitals: VitalsConfig::default(),
            scoring: ScoringRules::default(),
            policy: PolicyConfig::default(),
            scenario: ScenarioConfig::default(),
            agent: AgentParams::default(),
            signals: SignalConfig::default(),
            cohort: Cohort::default(),
        }
    }
}

impl SimConfig {
    /// The calibrated study preset.
    pub fn study() -> Self {
        Self::from_toml_str(STUDY_PRESET).expect("bundled study preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "study" => Some(Self::study()),
            "default" => Some(Self::default()),
            _ => None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a TOML file, or a bundled preset when `path` names one and no
    /// such file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            if let Some(cfg) = path.to_str().and_then(Self::preset) {
                return Ok(cfg);
            }
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.tick_ms <= 0 || self.assessment_interval_ms <= 0 {
            return bad("tick_ms and assessment_interval_ms must be positive".into());
        }
        if self.assessment_interval_ms % self.tick_ms != 0 {
            return bad(format!(
                "assessment interval {} ms is not a multiple of the {} ms tick",
                self.assessment_interval_ms, self.tick_ms
            ));
        }
        if self.baseline_ms < 60_000 {
            return bad("baseline_ms must cover at least 60 s".into());
        }
        if self.max_session_ms <= 0 {
            return bad("max_session_ms must be positive".into());
        }
        if self.vitals.smoothing_len % 2 == 0 || !(self.vitals.window_ms > 0.0) {
            return bad("vitals smoothing length must be odd and window positive".into());
        }
        let th = &self.detection;
        if !(th.hr_ratio > 0.0 && th.sdnn_ratio > 0.0) {
            return bad("detection ratios must be positive".into());
        }
        let g = &self.gsr;
        if !(g.trailing_ms > 0.0 && g.reference_ms >= g.trailing_ms && g.rise_fraction >= 0.0) {
            return bad("gsr windows must satisfy 0 < trailing <= reference".into());
        }
        self.policy.validate()?;
        self.scenario.validate()?;
        self.agent.validate()?;
        if let Cohort::Cycle { questionnaires } = &self.cohort {
            if questionnaires.is_empty() {
                return bad("cohort.questionnaires must not be empty".into());
            }
            for q in questionnaires {
                QuestionnaireResponse::new(q)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_preset_loads() {
        let c = SimConfig::study();
        assert_eq!(c.tick_ms, 100);
        assert_eq!(
            c.scenario.triggers.t2_timing,
            crate::scenario::T2Timing::Fixed { at_ms: 60_000 }
        );
    }

    #[test]
    fn toml_round_trip() {
        let c = SimConfig::study();
        let text = c.to_toml_string().unwrap();
        assert_eq!(SimConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        assert!(SimConfig::from_toml_str("schema_version = 1\nbogus = 2\n").is_err());
        assert!(SimConfig::from_toml_str("schema_version = 2\n").is_err());
        assert!(SimConfig::from_toml_str("schema_version = 1\n[agent]\nstress_decay = -1.0\n").is_err());
        assert!(SimConfig::from_toml_str("schema_version = 1\ntick_ms = 300\n").is_err());
        assert!(SimConfig::from_toml_str("schema_version = 1\n").is_ok());
    }
}
