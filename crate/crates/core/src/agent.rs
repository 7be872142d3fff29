//! Synthetic trainee: stress dynamics, action timing and error generation.
//!
//! Stress decays exponentially between trigger impulses. Action progress is
//! integrated in closed form over each tick, so attempt timing does not
//! depend on the tick length apart from quantisation of emission times.
//! All per-attempt randomness is drawn from hashes of (seed, step, attempt),
//! which keeps paired sessions of the two arms coupled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{ActiveInterventions, GuidanceTier};
use crate::scenario::{Action, ClotTool, Lighting, ProcedureStep, Scenario, TriggerKind};
use crate::seed::{combine, unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerImpulses {
    pub t1a: f64,
    pub t1b: f64,
    pub t1c: f64,
    pub t2: f64,
    pub t3: f64,
}

impl Default for TriggerImpulses {
    fn default() -> Self {
        Self {
            t1a: 0.4,
            t1b: 0.4,
            t1c: 0.4,
            t2: 0.8,
            t3: 0.5,
        }
    }
}

impl TriggerImpulses {
    pub fn get(&self, kind: TriggerKind) -> f64 {
        match kind {
            TriggerKind::T1a => self.t1a,
            TriggerKind::T1b => self.t1b,
            TriggerKind::T1c => self.t1c,
            TriggerKind::T2 => self.t2,
            TriggerKind::T3 => self.t3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentParams {
    /// Median seconds per attempt for an unstressed trainee.
    pub base_action_latency_s: f64,
    /// Log-scale spread of the per-trainee speed factor.
    pub skill_sigma: f64,
    /// Log-scale spread of each attempt's latency.
    pub step_sigma: f64,
    /// Latency multiplier slope in stress (gamma).
    pub latency_stress_gain: f64,
    /// Stress decay rate per second (lambda).
    pub stress_decay: f64,
    /// Decay multiplier while a regulating intervention runs (beta).
    pub intervention_recovery_gain: f64,
    pub trigger_impulse: TriggerImpulses,
    pub initial_stress: f64,
    pub error_base: f64,
    pub error_stress_gain: f64,
    pub hr_stress_gain: f64,
    pub sdnn_stress_loss: f64,
    pub lighting_multiplier: f64,
    /// Probability that a trainee fixes degraded lighting.
    pub alt_light_prob: f64,
    /// Probability of reaching for forceps rather than removing by hand.
    pub forceps_preference: f64,
    pub baseline_hr_mean_bpm: f64,
    pub baseline_hr_sd_bpm: f64,
    pub baseline_sdnn_mean_ms: f64,
    pub baseline_sdnn_sd_ms: f64,
    /// Honour guidance-tier latency caps.
    pub guidance_caps: bool,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            base_action_latency_s: 9.0,
            skill_sigma: 0.15,
            step_sigma: 0.25,
            latency_stress_gain: 1.5,
            stress_decay: 0.05,
            intervention_recovery_gain: 3.0,
            trigger_impulse: TriggerImpulses::default(),
            initial_stress: 0.0,
            error_base: 0.0,
            error_stress_gain: 0.1,
            hr_stress_gain: 0.6,
            sdnn_stress_loss: 0.5,
            lighting_multiplier: 1.5,
            alt_light_prob: 0.5,
            forceps_preference: 0.8,
            baseline_hr_mean_bpm: 72.0,
            baseline_hr_sd_bpm: 6.0,
            baseline_sdnn_mean_ms: 50.0,
            baseline_sdnn_sd_ms: 8.0,
            guidance_caps: true,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let gains = [
            ("latency_stress_gain", self.latency_stress_gain),
            ("error_base", self.error_base),
            ("error_stress_gain", self.error_stress_gain),
            ("hr_stress_gain", self.hr_stress_gain),
            ("sdnn_stress_loss", self.sdnn_stress_loss),
            ("skill_sigma", self.skill_sigma),
            ("step_sigma", self.step_sigma),
            ("baseline_hr_sd_bpm", self.baseline_hr_sd_bpm),
            ("baseline_sdnn_sd_ms", self.baseline_sdnn_sd_ms),
        ];
        for (name, v) in gains {
            if !(v >= 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be a finite value >= 0"));
            }
        }
        if !(self.stress_decay > 0.0) {
            problems.push("stress_decay must be > 0".into());
        }
        // beta = 1 is accepted so a null intervention can be configured.
        if !(self.intervention_recovery_gain >= 1.0) {
            problems.push("intervention_recovery_gain must be >= 1".into());
        }
        if !(self.base_action_latency_s > 0.0) || !(self.lighting_multiplier >= 1.0) {
            problems.push("latency and lighting multiplier must be positive".into());
        }
        if !(self.sdnn_stress_loss < 1.0) {
            problems.push("sdnn_stress_loss must be < 1".into());
        }
        let imp = self.trigger_impulse;
        let unit_range = [
            ("initial_stress", self.initial_stress),
            ("alt_light_prob", self.alt_light_prob),
            ("forceps_preference", self.forceps_preference),
            ("trigger_impulse.t1a", imp.t1a),
            ("trigger_impulse.t1b", imp.t1b),
            ("trigger_impulse.t1c", imp.t1c),
            ("trigger_impulse.t2", imp.t2),
            ("trigger_impulse.t3", imp.t3),
        ];
        for (name, v) in unit_range {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.baseline_hr_mean_bpm > 0.0 && self.baseline_sdnn_mean_ms > 0.0) {
            problems.push("baseline means must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Physiological targets for the signal synthesizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalDrive {
    pub hr_bpm: f64,
    pub sdnn_ms: f64,
    pub gsr_arousal: f64,
}

pub fn drive_signals(params: &AgentParams, baseline_hr: f64, baseline_sdnn: f64, stress: f64) -> SignalDrive {
    SignalDrive {
        hr_bpm: baseline_hr * (1.0 + params.hr_stress_gain * stress),
        sdnn_ms: baseline_sdnn * (1.0 - params.sdnn_stress_loss * stress),
        gsr_arousal: stress,
    }
}

/// `s + impulse`, clamped to 1.
pub fn apply_impulse(stress: f64, impulse: f64) -> f64 {
    (stress + impulse).min(1.0)
}

/// Stress after `dt_s` seconds of decay at rate `rate`.
pub fn decay(stress: f64, rate: f64, dt_s: f64) -> f64 {
    stress * (-rate * dt_s).exp()
}

/// Absorbs rounding in accumulated progress.
const PROGRESS_EPS: f64 = 1e-9;

const SALT_SKILL: u64 = 1;
const SALT_LATENCY: u64 = 2;
const SALT_ERROR: u64 = 3;
const SALT_CHOICE: u64 = 4;
const SALT_LIGHT: u64 = 5;
const SALT_BASELINE: u64 = 6;

#[derive(Debug, Clone, Copy)]
struct Crossing {
    t_ms: f64,
    stress: f64,
    rate_per_s: f64,
    tick_end_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    params: AgentParams,
    seed: u64,
    skill: f64,
    baseline_hr: f64,
    baseline_sdnn: f64,
    stress: f64,
    /// Exact time the current attempt started.
    attempt_start_ms: f64,
    attempt_key: (usize, u64),
    progress: f64,
    /// Work done after the last crossing, in unstressed milliseconds; it is
    /// normalised once the next attempt's latency is known.
    carry_ms: Option<f64>,
    /// The crossing behind the action emitted by the latest `step`.
    crossing: Option<Crossing>,
    attempt_latency_ms: f64,
    wants_light: bool,
}

impl Agent {
    pub fn new(params: AgentParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(combine(&[seed, SALT_BASELINE]));
        let hr = Normal::new(params.baseline_hr_mean_bpm, params.baseline_hr_sd_bpm)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(&mut rng)
            .clamp(50.0, 100.0);
        let sdnn = Normal::new(params.baseline_sdnn_mean_ms, params.baseline_sdnn_sd_ms)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(&mut rng)
            .clamp(20.0, 100.0);
        let mut skill_rng = ChaCha8Rng::seed_from_u64(combine(&[seed, SALT_SKILL]));
        let skill = LogNormal::new(0.0, params.skill_sigma)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(&mut skill_rng);
        let mut agent = Self {
            params,
            seed,
            skill,
            baseline_hr: hr,
            baseline_sdnn: sdnn,
            stress: params.initial_stress,
            attempt_start_ms: 0.0,
            attempt_key: (0, 0),
            progress: 0.0,
            carry_ms: None,
            crossing: None,
            attempt_latency_ms: 0.0,
            wants_light: false,
        };
        agent.attempt_latency_ms = agent.draw_latency();
        Ok(agent)
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn stress(&self) -> f64 {
        self.stress
    }

    pub fn baseline_hr(&self) -> f64 {
        self.baseline_hr
    }

    pub fn baseline_sdnn(&self) -> f64 {
        self.baseline_sdnn
    }

    pub fn drive(&self) -> SignalDrive {
        drive_signals(&self.params, self.baseline_hr, self.baseline_sdnn, self.stress)
    }

    pub fn apply_trigger(&mut self, kind: TriggerKind) {
        self.stress = apply_impulse(self.stress, self.params.trigger_impulse.get(kind));
        self.light_choice(kind);
    }

    /// Apply a trigger caused by the agent's own latest action. The impulse
    /// lands at the exact crossing time rather than at the tick end.
    pub fn apply_action_trigger(&mut self, kind: TriggerKind) {
        let Some(c) = self.crossing.as_mut() else {
            return self.apply_trigger(kind);
        };
        let before = c.stress;
        c.stress = apply_impulse(before, self.params.trigger_impulse.get(kind));
        let added = decay(c.stress - before, c.rate_per_s, (c.tick_end_ms - c.t_ms) / 1000.0);
        self.stress = (self.stress + added).min(1.0);
        self.light_choice(kind);
    }

    fn light_choice(&mut self, kind: TriggerKind) {
        if kind == TriggerKind::T1c {
            self.wants_light = unit(combine(&[self.seed, SALT_LIGHT])) < self.params.alt_light_prob;
        }
    }

    fn draw_latency(&self) -> f64 {
        let (step, attempt) = self.attempt_key;
        let h = combine(&[self.seed, SALT_LATENCY, step as u64, attempt]);
        let factor = LogNormal::new(0.0, self.params.step_sigma)
            .map(|d| d.sample(&mut ChaCha8Rng::seed_from_u64(h)))
            .unwrap_or(1.0);
        self.params.base_action_latency_s * 1000.0 * self.skill * factor
    }

    fn decay_rate(&self, active: &ActiveInterventions) -> f64 {
        let lambda = self.params.stress_decay;
        if active.regulating {
            lambda * self.params.intervention_recovery_gain
        } else {
            lambda
        }
    }

    /// Progress gained over `dt_ms` starting at stress `s0`:
    /// `(1/(L m)) * integral of 1/(1 + g s0 e^{-k t}) dt`.
    fn progress_over(&self, s0: f64, rate_per_ms: f64, dt_ms: f64, light: f64) -> f64 {
        let g = self.params.latency_stress_gain;
        let a = g * s0;
        let integral = if a == 0.0 {
            dt_ms
        } else {
            let k = rate_per_ms;
            dt_ms + ((1.0 + a * (-k * dt_ms).exp()) / (1.0 + a)).ln() / k
        };
        integral / (self.attempt_latency_ms * light)
    }

    fn latency_cap_ms(&self, active: &ActiveInterventions) -> Option<f64> {
        if !self.params.guidance_caps {
            return None;
        }
        let th = active.threshold_ms? as f64;
        match active.tier? {
            GuidanceTier::StepInstruction => Some(th),
            GuidanceTier::VisualGuidance => Some(th / 2.0),
            _ => None,
        }
    }

    /// Advance over the tick `[from_ms, to_ms)` and possibly act at `to_ms`.
    pub fn step(
        &mut self,
        from_ms: i64,
        to_ms: i64,
        scenario: &Scenario,
        active: &ActiveInterventions,
    ) -> Option<Action> {
        self.crossing = None;
        let dt = (to_ms - from_ms) as f64;
        let rate = self.decay_rate(active) / 1000.0;
        let s0 = self.stress;
        self.stress = decay(s0, rate * 1000.0, dt / 1000.0);

        let step = scenario.current_step()?;
        let key = (scenario.completed_steps().len(), self.attempt_key.1);
        if key.0 != self.attempt_key.0 {
            // A new step began since the last action; attempts restart.
            self.attempt_key = (key.0, 0);
            self.attempt_latency_ms = self.draw_latency();
        }
        if let Some(c) = self.carry_ms.take() {
            self.progress = (c / self.attempt_latency_ms).min(0.999_999);
        }
        let light = if scenario.lighting() == Lighting::Degraded {
            self.params.lighting_multiplier
        } else {
            1.0
        };

        let gained = self.progress_over(s0, rate, dt, light);
        let mut crossing = None;
        if self.progress + gained >= 1.0 - PROGRESS_EPS {
            // Bisection on the exact crossing time within this tick.
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.progress + self.progress_over(s0, rate, mid, light) >= 1.0 - PROGRESS_EPS {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            crossing = Some(from_ms as f64 + hi);
        }
        if let Some(cap) = self.latency_cap_ms(active) {
            let capped = (self.attempt_start_ms + cap).max(from_ms as f64);
            if capped <= to_ms as f64 && crossing.is_none_or(|c| capped < c) {
                crossing = Some(capped);
            }
        }
        let Some(t_cross) = crossing else {
            self.progress += gained;
            return None;
        };

        let s_cross = decay(s0, rate * 1000.0, (t_cross - from_ms as f64) / 1000.0);
        let action = self.choose(step, scenario, s_cross);
        self.crossing = Some(Crossing {
            t_ms: t_cross,
            stress: s_cross,
            rate_per_s: rate * 1000.0,
            tick_end_ms: to_ms as f64,
        });
        self.attempt_key.1 += 1;
        self.attempt_latency_ms = self.draw_latency();
        self.attempt_start_ms = t_cross;
        // Time left in the tick counts towards the next attempt at the
        // stress level reached at the crossing.
        self.carry_ms = Some(self.progress_over(s_cross, rate, to_ms as f64 - t_cross, light) * self.attempt_latency_ms);
        self.progress = 0.0;
        Some(action)
    }

    fn choose(&mut self, step: ProcedureStep, scenario: &Scenario, stress: f64) -> Action {
        let (step_idx, attempt) = self.attempt_key;
        let h = |salt| unit(combine(&[self.seed, salt, step_idx as u64, attempt]));
        if self.wants_light && scenario.lighting() == Lighting::Degraded {
            self.wants_light = false;
            return Action::ActivateAltLight;
        }
        let p_err = (self.params.error_base + self.params.error_stress_gain * stress).min(1.0);
        if h(SALT_ERROR) < p_err {
            let candidates = scenario.critical_error_candidates();
            if !candidates.is_empty() {
                let i = (h(SALT_CHOICE) * candidates.len() as f64) as usize;
                return candidates[i.min(candidates.len() - 1)];
            }
        }
        let expected = scenario.expected_actions();
        match step {
            ProcedureStep::RemoveClot => {
                let tool = if h(SALT_CHOICE) < self.params.forceps_preference {
                    ClotTool::Forceps
                } else {
                    ClotTool::Manual
                };
                Action::RemoveClot { tool }
            }
            _ => {
                let i = (h(SALT_CHOICE) * expected.len() as f64) as usize;
                expected[i.min(expected.len() - 1)]
            }
        }
    }
}
