//! Session log records and their newline-delimited JSON encoding.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::biosignal::VitalsEstimate;
use crate::config::SimConfig;
use crate::detection::Baseline;
use crate::error::{Error, Result};
use crate::policy::Intervention;
use crate::profile::{InterventionProfile, QuestionnaireResponse};
use crate::scenario::{Action, ActionResult, ScenarioEvent, TaskPhase, TriggerKind};

use super::metrics::SessionMetrics;
use super::Arm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionHeader {
    pub t_ms: i64,
    pub seed: u64,
    pub arm: Arm,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub questionnaire: Option<QuestionnaireResponse>,
    pub profile: InterventionProfile,
    pub config: SimConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub t_ms: i64,
    /// Vitals over the trailing window, absent when too few beats.
    pub vitals: Option<VitalsEstimate>,
    pub gsr_flag: bool,
    pub hr_abnormal: bool,
    pub sdnn_abnormal: bool,
    pub gsr_abnormal: bool,
    pub latency_flag: bool,
    /// Physiological 2-of-3 quorum; episodes are tracked on this.
    pub quorum: bool,
    /// Quorum or latency flag; drives the policy.
    pub stressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Record {
    Session(Box<SessionHeader>),
    SampleSummary {
        t_ms: i64,
        baseline: Baseline,
        resting_estimates: usize,
    },
    Assessment(AssessmentRecord),
    Intervention {
        t_ms: i64,
        #[serde(flatten)]
        intervention: Intervention,
    },
    Action {
        t_ms: i64,
        #[serde(flatten)]
        action: Action,
        #[serde(flatten)]
        result: ActionResult,
    },
    Trigger {
        t_ms: i64,
        trigger: TriggerKind,
    },
    PhaseChange {
        t_ms: i64,
        from: TaskPhase,
        to: TaskPhase,
    },
    Countdown {
        t_ms: i64,
        remaining_ms: i64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        event: Option<CountdownEvent>,
    },
    Scenario {
        t_ms: i64,
        #[serde(flatten)]
        event: ScenarioEvent,
    },
    End {
        t_ms: i64,
        metrics: SessionMetrics,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountdownEvent {
    Deducted,
    Expired,
}

impl Record {
    pub fn t_ms(&self) -> i64 {
        match self {
            Record::Session(h) => h.t_ms,
            Record::Assessment(a) => a.t_ms,
            Record::SampleSummary { t_ms, .. }
            | Record::Intervention { t_ms, .. }
            | Record::Action { t_ms, .. }
            | Record::Trigger { t_ms, .. }
            | Record::PhaseChange { t_ms, .. }
            | Record::Countdown { t_ms, .. }
            | Record::Scenario { t_ms, .. }
            | Record::End { t_ms, .. } => *t_ms,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Record::Session(_) => "session",
            Record::SampleSummary { .. } => "sample-summary",
            Record::Assessment(_) => "assessment",
            Record::Intervention { .. } => "intervention",
            Record::Action { .. } => "action",
            Record::Trigger { .. } => "trigger",
            Record::PhaseChange { .. } => "phase-change",
            Record::Countdown { .. } => "countdown",
            Record::Scenario { .. } => "scenario",
            Record::End { .. } => "end",
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }
}

/// Ordered session records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionLog {
    pub records: Vec<Record>,
}

impl SessionLog {
    pub fn header(&self) -> Option<&SessionHeader> {
        match self.records.first() {
            Some(Record::Session(h)) => Some(h),
            _ => None,
        }
    }

    pub fn metrics(&self) -> Option<&SessionMetrics> {
        match self.records.last() {
            Some(Record::End { metrics, .. }) => Some(metrics),
            _ => None,
        }
    }

    pub fn to_ndjson(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_ndjson().as_bytes())?;
        Ok(())
    }

    /// Parse NDJSON. Errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut records = Vec::new();
        let mut prev_t = i64::MIN;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| Error::LogParse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if rec.t_ms() < prev_t {
                return Err(Error::LogParse {
                    line: i + 1,
                    message: format!("time {} precedes {}", rec.t_ms(), prev_t),
                });
            }
            prev_t = rec.t_ms();
            records.push(rec);
        }
        Ok(Self { records })
    }
}
