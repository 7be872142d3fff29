use crate::agent::Agent;
use crate::biosignal::{GsrSample, PpgSample};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::scenario::Action;

use super::core::SessionCore;
use super::log::{Record, SessionHeader, SessionLog};
use super::metrics::SessionMetrics;
use super::signals::SignalPipeline;
use super::{Arm, ProfileSource};

/// A session advanced one tick at a time, with signals synthesized from an
/// agent or streamed from outside.
#[derive(Debug, Clone)]
pub struct SessionRunner {
    core: SessionCore,
    signals: SignalPipeline,
    agent: Option<Agent>,
    autopilot: bool,
    t_ms: i64,
    queued: Vec<Action>,
    metrics: Option<SessionMetrics>,
}

impl SessionRunner {
    /// Agent-driven session. Without `autopilot` the agent only drives the
    /// signals and actions come from [`queue_action`](Self::queue_action).
    pub fn agent(
        config: &SimConfig,
        profile: &ProfileSource,
        arm: Arm,
        seed: u64,
        autopilot: bool,
    ) -> Result<Self> {
        config.validate()?;
        let (questionnaire, profile) = profile.resolve(config, seed)?;
        let agent = Agent::new(config.agent, seed)?;
        let mut signals = SignalPipeline::synthetic(config, seed)?;
        let baseline = signals.acquire_baseline(config, agent.baseline_hr(), agent.baseline_sdnn())?;
        let header = SessionHeader {
            t_ms: 0,
            seed,
            arm,
            questionnaire,
            profile,
            config: config.clone(),
        };
        let core = SessionCore::new(header, baseline, signals.resting_estimates())?;
        Ok(Self {
            core,
            signals,
            agent: Some(agent),
            autopilot,
            t_ms: 0,
            queued: Vec::new(),
            metrics: None,
        })
    }

    /// Session over streamed samples whose resting period is already in
    /// `signals`.
    pub fn streamed(
        config: &SimConfig,
        profile: &ProfileSource,
        arm: Arm,
        seed: u64,
        mut signals: SignalPipeline,
    ) -> Result<Self> {
        config.validate()?;
        let (questionnaire, profile) = profile.resolve(config, seed)?;
        let baseline = signals.finish_streamed_baseline()?;
        let header = SessionHeader {
            t_ms: 0,
            seed,
            arm,
            questionnaire,
            profile,
            config: config.clone(),
        };
        let core = SessionCore::new(header, baseline, signals.resting_estimates())?;
        Ok(Self {
            core,
            signals,
            agent: None,
            autopilot: false,
            t_ms: 0,
            queued: Vec::new(),
            metrics: None,
        })
    }

    pub fn t_ms(&self) -> i64 {
        self.t_ms
    }

    pub fn autopilot(&self) -> bool {
        self.autopilot
    }

    /// Signals arrive through [`push_ppg`](Self::push_ppg) and
    /// [`push_gsr`](Self::push_gsr) rather than from an agent.
    pub fn streams_signals(&self) -> bool {
        self.agent.is_none()
    }

    pub fn core(&self) -> &SessionCore {
        &self.core
    }

    pub fn records(&self) -> &[Record] {
        self.core.records()
    }

    pub fn metrics(&self) -> Option<&SessionMetrics> {
        self.metrics.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.metrics.is_some()
    }

    /// Applied at the next tick, after any agent action.
    pub fn queue_action(&mut self, action: Action) -> Result<()> {
        if self.is_finished() {
            return Err(Error::Protocol("session already ended".into()));
        }
        self.queued.push(action);
        Ok(())
    }

    pub fn push_ppg(&mut self, s: PpgSample) -> Result<()> {
        self.signals.push_ppg(s)
    }

    pub fn push_gsr(&mut self, s: GsrSample) -> Result<()> {
        self.signals.push_gsr(s)
    }

    /// Signal time corresponding to scenario time `t_ms`.
    pub fn signal_time(&self, t_ms: i64) -> f64 {
        self.signals.offset_ms() + t_ms as f64
    }

    fn trigger(agent: &mut Option<Agent>, records: &[Record], own_action: bool) {
        let Some(agent) = agent.as_mut() else { return };
        for r in records {
            if let Record::Trigger { trigger, .. } = r {
                if own_action {
                    agent.apply_action_trigger(*trigger);
                } else {
                    agent.apply_trigger(*trigger);
                }
            }
        }
    }

    /// Advance one tick. Returns the index of the first record it emitted.
    pub fn tick(&mut self) -> Result<usize> {
        if self.is_finished() {
            return Err(Error::Protocol("session already ended".into()));
        }
        let start = self.core.records().len();
        let from = self.t_ms;
        let t = from + self.core.header().config.tick_ms;
        self.t_ms = t;

        // The agent integrates [from, t) against the state before any
        // trigger due at t.
        let chosen = match self.agent.as_mut() {
            Some(agent) => agent.step(from, t, self.core.scenario(), &self.core.active()),
            None => None,
        };
        Self::trigger(&mut self.agent, self.core.begin_tick(t), false);
        let mut actions = std::mem::take(&mut self.queued);
        let mut own = 0;
        if self.autopilot {
            own = usize::from(chosen.is_some());
            actions.splice(0..0, chosen);
        }
        for (i, a) in actions.into_iter().enumerate() {
            if self.core.scenario().is_done() {
                break;
            }
            Self::trigger(&mut self.agent, self.core.act(t, a), i < own);
        }
        if let Some(agent) = self.agent.as_ref() {
            self.signals.advance_synthetic(t, agent.drive())?;
        }
        if self.core.assessment_due(t) {
            let (vitals, gsr) = self.signals.measure(t);
            self.core.assess(t, vitals, gsr);
        }
        if self.core.should_finish(t) {
            self.metrics = Some(self.core.finish(t));
        }
        Ok(start)
    }

    pub fn run_to_end(&mut self) -> Result<SessionMetrics> {
        while !self.is_finished() {
            self.tick()?;
        }
        Ok(self.metrics.clone().expect("finished"))
    }

    pub fn into_log(self) -> SessionLog {
        self.core.into_log()
    }
}
