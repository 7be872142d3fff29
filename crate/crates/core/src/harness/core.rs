use crate::biosignal::VitalsEstimate;
use crate::detection::{self, Baseline, EpisodeTracker};
use crate::error::Result;
use crate::policy::{ActiveInterventions, InterventionEvent, PolicyEngine};
use crate::scenario::{ActionEvent, Action, Completion, Scenario, ScenarioEvent};
use crate::seed::combine;

use super::log::{AssessmentRecord, CountdownEvent, Record, SessionHeader, SessionLog};
use super::metrics::SessionMetrics;
use super::{Arm, SALT_COMPANION, SALT_SCENARIO};

/// Scenario, detection and policy wired together. Everything downstream of
/// the trainee's actions and the measured vitals lives here, so a session
/// can be re-derived from its log.
#[derive(Debug, Clone)]
pub struct SessionCore {
    header: SessionHeader,
    baseline: Baseline,
    scenario: Scenario,
    policy: Option<PolicyEngine>,
    episodes: EpisodeTracker,
    step_started_ms: i64,
    records: Vec<Record>,
    finished: bool,
}

impl SessionCore {
    /// Emits the header, the baseline summary and the opening guidance.
    pub fn new(header: SessionHeader, baseline: Baseline, resting_estimates: usize) -> Result<Self> {
        header.config.validate()?;
        header.profile.validate()?;
        let cfg = &header.config;
        let scenario = Scenario::new(cfg.scenario, combine(&[header.seed, SALT_SCENARIO]))?;
        let policy = match header.arm {
            Arm::Intervention => Some(PolicyEngine::new(
                header.profile,
                cfg.policy,
                combine(&[header.seed, SALT_COMPANION]),
            )?),
            Arm::Control => None,
        };
        let mut core = Self {
            records: vec![Record::Session(Box::new(header.clone()))],
            header,
            baseline,
            scenario,
            policy,
            episodes: EpisodeTracker::new(),
            step_started_ms: 0,
            finished: false,
        };
        core.records.push(Record::SampleSummary {
            t_ms: 0,
            baseline,
            resting_estimates,
        });
        let step = core.scenario.current_step();
        if let Some(p) = core.policy.as_mut() {
            let ev = p.on_step(0, step);
            core.push_interventions(ev);
        }
        Ok(core)
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn active(&self) -> ActiveInterventions {
        self.policy.as_ref().map(PolicyEngine::active).unwrap_or_default()
    }

    fn push_interventions(&mut self, ev: Vec<InterventionEvent>) {
        self.records.extend(ev.into_iter().map(|e| Record::Intervention {
            t_ms: e.t_ms,
            intervention: e.intervention,
        }));
    }

    fn push_scenario_events(&mut self, t_ms: i64, events: Vec<ScenarioEvent>) {
        for e in events {
            let rec = match e {
                ScenarioEvent::TriggerFired { trigger } => Record::Trigger { t_ms, trigger },
                ScenarioEvent::PhaseChanged { from, to } => Record::PhaseChange { t_ms, from, to },
                ScenarioEvent::CountdownDeducted { remaining_ms, .. } => Record::Countdown {
                    t_ms,
                    remaining_ms,
                    event: Some(CountdownEvent::Deducted),
                },
                ScenarioEvent::CountdownExpired => Record::Countdown {
                    t_ms,
                    remaining_ms: 0,
                    event: Some(CountdownEvent::Expired),
                },
                other => Record::Scenario { t_ms, event: other },
            };
            self.records.push(rec);
        }
    }

    /// Time-driven scenario updates. Returns the records emitted.
    pub fn begin_tick(&mut self, t_ms: i64) -> &[Record] {
        let start = self.records.len();
        let events = self.scenario.tick(t_ms);
        self.push_scenario_events(t_ms, events);
        &self.records[start..]
    }

    /// Apply a trainee action. Returns the records emitted.
    pub fn act(&mut self, t_ms: i64, action: Action) -> &[Record] {
        let start = self.records.len();
        let step_before = self.scenario.current_step();
        let (result, events) = self.scenario.advance(&ActionEvent { t_ms, action });
        self.records.push(Record::Action { t_ms, action, result });
        let phase_done = events.iter().any(|e| matches!(e, ScenarioEvent::PhaseChanged { .. }));
        self.push_scenario_events(t_ms, events);
        let step_after = self.scenario.current_step();
        if step_after != step_before {
            self.step_started_ms = t_ms;
            if let Some(p) = self.policy.as_mut() {
                let mut ev = if phase_done { p.on_phase_complete(t_ms) } else { Vec::new() };
                ev.extend(p.on_step(t_ms, step_after));
                self.push_interventions(ev);
            }
        }
        &self.records[start..]
    }

    pub fn assessment_due(&self, t_ms: i64) -> bool {
        !self.scenario.is_done() && t_ms % self.header.config.assessment_interval_ms == 0
    }

    /// One detection cycle with externally measured inputs.
    pub fn assess(&mut self, t_ms: i64, vitals: Option<VitalsEstimate>, gsr_flag: bool) -> &[Record] {
        let start = self.records.len();
        let flags = detection::evaluate_indicators(
            vitals.as_ref(),
            gsr_flag,
            &self.baseline,
            &self.header.config.detection,
            t_ms,
        );
        let quorum = detection::assess(&flags);
        let latency_flag = self.scenario.current_step().is_some()
            && detection::latency_monitor(t_ms - self.step_started_ms, self.header.profile.guidance_threshold_ms());
        let stressed = detection::stressed(&flags, latency_flag);
        self.records.push(Record::Assessment(AssessmentRecord {
            t_ms,
            vitals,
            gsr_flag,
            hr_abnormal: flags.hr_abnormal,
            sdnn_abnormal: flags.sdnn_abnormal,
            gsr_abnormal: flags.gsr_abnormal,
            latency_flag,
            quorum,
            stressed,
        }));
        self.episodes.push(t_ms, quorum);
        if let Some(p) = self.policy.as_mut() {
            let ev = p.on_assessment(t_ms, stressed, &flags);
            self.push_interventions(ev);
        }
        self.records.push(Record::Countdown {
            t_ms,
            remaining_ms: self.scenario.remaining_ms(),
            event: None,
        });
        &self.records[start..]
    }

    pub fn should_finish(&self, t_ms: i64) -> bool {
        self.scenario.is_done() || t_ms >= self.header.config.max_session_ms
    }

    pub fn metrics(&self, t_ms: i64) -> SessionMetrics {
        let duration_ms = self.scenario.done_at_ms().unwrap_or(t_ms);
        SessionMetrics::new(
            self.scenario.completion() == Completion::Completed,
            duration_ms,
            self.scenario.critical_errors(),
            self.episodes.episodes(),
        )
    }

    /// Close open interventions and append the end record.
    pub fn finish(&mut self, t_ms: i64) -> SessionMetrics {
        if let Some(p) = self.policy.as_mut() {
            let ev = p.finish(t_ms);
            self.push_interventions(ev);
        }
        let metrics = self.metrics(t_ms);
        self.records.push(Record::End {
            t_ms,
            metrics: metrics.clone(),
        });
        self.finished = true;
        metrics
    }

    pub fn into_log(self) -> SessionLog {
        SessionLog { records: self.records }
    }
}
