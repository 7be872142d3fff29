//! Newline-delimited JSON messages, one object per line, discriminated by
//! `type`.
//!
//! Sample timestamps (`ppg`, `gsr`) are signal time: milliseconds since the
//! session's resting period began. Every other timestamp is scenario time,
//! which starts when the resting period ends.

use serde::{Deserialize, Serialize};

use crate::biosignal::{GsrSample, PpgSample};
use crate::detection::Baseline;
use crate::harness::{Arm, AssessmentRecord, CountdownEvent, Record, SessionMetrics};
use crate::policy::Intervention;
use crate::profile::{InterventionProfile, QuestionnaireResponse};
use crate::scenario::{Action, ActionResult, Lighting, PatientVitals, ScenarioEvent, TaskPhase, TriggerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalMode {
    /// The client streams PPG and GSR samples.
    LiveSignals,
    /// Signals are synthesized from a server-side trainee agent.
    AgentSignals,
}

fn default_arm() -> Arm {
    Arm::Intervention
}

/// Client to server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Inbound {
    Start {
        mode: SignalMode,
        #[serde(default = "default_arm")]
        arm: Arm,
        #[serde(default)]
        seed: u64,
        /// Agent-signals only: the agent also chooses the actions. Defaults
        /// to true; set false to play with agent-driven physiology.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        autopilot: Option<bool>,
    },
    Questionnaire(QuestionnaireResponse),
    Ppg(PpgSample),
    Gsr(GsrSample),
    /// Applied at the next tick.
    Action {
        #[serde(flatten)]
        action: Action,
    },
    /// Advance the scenario clock to `t_ms`, in whole ticks.
    Tick { t_ms: i64 },
}

impl Inbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Inbound::Start { .. } => "start",
            Inbound::Questionnaire(_) => "questionnaire",
            Inbound::Ppg(_) => "ppg",
            Inbound::Gsr(_) => "gsr",
            Inbound::Action { .. } => "action",
            Inbound::Tick { .. } => "tick",
        }
    }

    pub fn parse(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("inbound messages always serialize")
    }
}

/// Scenario-side happenings other than countdown and patient vitals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ScenarioUpdate {
    ActionResult {
        #[serde(flatten)]
        action: Action,
        #[serde(flatten)]
        result: ActionResult,
    },
    TriggerFired { trigger: TriggerKind },
    PhaseChanged { from: TaskPhase, to: TaskPhase },
    LightingChanged { lighting: Lighting },
    AlarmEscalated,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Outbound {
    /// Exactly one per accepted inbound message, after anything it caused.
    Ack {
        of: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_ms: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<InterventionProfile>,
    },
    /// Exactly one per rejected inbound message. The server closes the
    /// connection after a fatal error.
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        of: Option<String>,
        message: String,
        fatal: bool,
    },
    Baseline {
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
    Scenario {
        t_ms: i64,
        #[serde(flatten)]
        update: ScenarioUpdate,
    },
    Vitals {
        t_ms: i64,
        #[serde(flatten)]
        vitals: PatientVitals,
    },
    Countdown {
        t_ms: i64,
        remaining_ms: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        event: Option<CountdownEvent>,
    },
    End {
        t_ms: i64,
        metrics: SessionMetrics,
    },
}

impl Outbound {
    pub fn ack(of: &str) -> Self {
        Outbound::Ack {
            of: of.into(),
            t_ms: None,
            profile: None,
        }
    }

    pub fn error(of: Option<&str>, message: impl Into<String>, fatal: bool) -> Self {
        Outbound::Error {
            of: of.map(Into::into),
            message: message.into(),
            fatal,
        }
    }

    /// Wire form of a log record. The session header has none.
    pub fn from_record(r: &Record) -> Option<Self> {
        let scenario = |t_ms, update| Some(Outbound::Scenario { t_ms, update });
        match r {
            Record::Session(_) => None,
            Record::SampleSummary {
                t_ms,
                baseline,
                resting_estimates,
            } => Some(Outbound::Baseline {
                t_ms: *t_ms,
                baseline: *baseline,
                resting_estimates: *resting_estimates,
            }),
            Record::Assessment(a) => Some(Outbound::Assessment(*a)),
            Record::Intervention { t_ms, intervention } => Some(Outbound::Intervention {
                t_ms: *t_ms,
                intervention: intervention.clone(),
            }),
            Record::Action { t_ms, action, result } => scenario(
                *t_ms,
                ScenarioUpdate::ActionResult {
                    action: *action,
                    result: result.clone(),
                },
            ),
            Record::Trigger { t_ms, trigger } => scenario(*t_ms, ScenarioUpdate::TriggerFired { trigger: *trigger }),
            Record::PhaseChange { t_ms, from, to } => {
                scenario(*t_ms, ScenarioUpdate::PhaseChanged { from: *from, to: *to })
            }
            Record::Countdown {
                t_ms,
                remaining_ms,
                event,
            } => Some(Outbound::Countdown {
                t_ms: *t_ms,
                remaining_ms: *remaining_ms,
                event: *event,
            }),
            Record::Scenario { t_ms, event } => match event {
                ScenarioEvent::VitalsChanged { vitals } => Some(Outbound::Vitals {
                    t_ms: *t_ms,
                    vitals: *vitals,
                }),
                ScenarioEvent::LightingChanged { lighting } => {
                    scenario(*t_ms, ScenarioUpdate::LightingChanged { lighting: *lighting })
                }
                ScenarioEvent::AlarmEscalated => scenario(*t_ms, ScenarioUpdate::AlarmEscalated),
                ScenarioEvent::TriggerFired { trigger } => {
                    scenario(*t_ms, ScenarioUpdate::TriggerFired { trigger: *trigger })
                }
                ScenarioEvent::PhaseChanged { from, to } => {
                    scenario(*t_ms, ScenarioUpdate::PhaseChanged { from: *from, to: *to })
                }
                ScenarioEvent::CountdownDeducted { remaining_ms, .. } => Some(Outbound::Countdown {
                    t_ms: *t_ms,
                    remaining_ms: *remaining_ms,
                    event: Some(CountdownEvent::Deducted),
                }),
                ScenarioEvent::CountdownExpired => Some(Outbound::Countdown {
                    t_ms: *t_ms,
                    remaining_ms: 0,
                    event: Some(CountdownEvent::Expired),
                }),
            },
            Record::End { t_ms, metrics } => Some(Outbound::End {
                t_ms: *t_ms,
                metrics: metrics.clone(),
            }),
        }
    }

    pub fn parse(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("outbound messages always serialize")
    }

    pub fn is_fatal(&self) -> bool {
        matches!(self, Outbound::Error { fatal: true, .. })
    }
}
