//! Deterministic fixed-step session loop, experiments and log replay.

mod core;
mod experiment;
mod log;
mod metrics;
mod replay;
mod runner;
mod signals;
mod stats;

use serde::{Deserialize, Serialize};

use crate::config::{Cohort, SimConfig};
use crate::error::Result;
use crate::profile::{score_with, InterventionProfile, QuestionnaireResponse};
use crate::seed::{combine, derive, unit};

pub use self::core::SessionCore;
pub use experiment::{run_experiment, run_experiment_with, ArmSummary, ExperimentReport, SessionEntry, CSV_HEADER};
pub use log::{AssessmentRecord, CountdownEvent, Record, SessionHeader, SessionLog};
pub use metrics::{mean, sample_sd, SessionMetrics};
pub use replay::{replay, Divergence, ReplayReport};
pub use runner::SessionRunner;
pub use signals::SignalPipeline;
pub use stats::{welch_t, WelchTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Intervention,
    Control,
}

impl std::str::FromStr for Arm {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intervention" => Ok(Arm::Intervention),
            "control" => Ok(Arm::Control),
            _ => Err(crate::Error::Config(format!(
                "unknown arm `{s}` (expected intervention or control)"
            ))),
        }
    }
}

/// Where a session's intervention profile comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Questionnaire(QuestionnaireResponse),
    Profile(InterventionProfile),
    /// Cohort member `index` from the configuration.
    Cohort(usize),
}

pub(crate) const SALT_SCENARIO: u64 = 101;
pub(crate) const SALT_COMPANION: u64 = 102;
pub(crate) const SALT_PPG: u64 = 103;
pub(crate) const SALT_GSR: u64 = 104;
const SALT_COHORT: u64 = 105;

impl ProfileSource {
    pub fn resolve(
        &self,
        config: &SimConfig,
        seed: u64,
    ) -> Result<(Option<QuestionnaireResponse>, InterventionProfile)> {
        let q = match self {
            ProfileSource::Profile(p) => {
                p.validate()?;
                return Ok((None, *p));
            }
            ProfileSource::Questionnaire(q) => q.clone(),
            ProfileSource::Cohort(i) => match &config.cohort {
                Cohort::Cycle { questionnaires } => {
                    QuestionnaireResponse::new(&questionnaires[i % questionnaires.len()])?
                }
                Cohort::Random => {
                    let items: Vec<i64> = (0..19)
                        .map(|k| 1 + (unit(combine(&[seed, SALT_COHORT, k])) * 5.0) as i64)
                        .collect();
                    QuestionnaireResponse::new(&items)?
                }
            },
        };
        let p = score_with(&q, &config.scoring);
        Ok((Some(q), p))
    }
}

/// Per-session seed for session `index` of an experiment. Both arms share it.
pub fn session_seed(experiment_seed: u64, index: usize) -> u64 {
    derive(experiment_seed, index as u64)
}

/// Run one agent-driven session end to end.
pub fn run_session(
    config: &SimConfig,
    profile: &ProfileSource,
    arm: Arm,
    seed: u64,
) -> Result<(SessionLog, SessionMetrics)> {
    let mut runner = SessionRunner::agent(config, profile, arm, seed, true)?;
    let metrics = runner.run_to_end()?;
    Ok((runner.into_log(), metrics))
}
