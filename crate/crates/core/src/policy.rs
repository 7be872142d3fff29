//! The adaptive intervention engine: activates the trainee's enabled
//! modalities on stress onset, deactivates them on recovery or phase
//! completion, maintains the stress light and runs tiered procedure guidance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detection::IndicatorFlags;
use crate::error::{Error, Result};
use crate::profile::InterventionProfile;
use crate::scenario::{NoiseChannel, ProcedureStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GuidanceTier {
    None,
    GoalPrompt,
    StepInstruction,
    VisualGuidance,
}

impl GuidanceTier {
    fn next(self) -> Self {
        match self {
            Self::None => Self::None,
            Self::GoalPrompt => Self::StepInstruction,
            Self::StepInstruction | Self::VisualGuidance => Self::VisualGuidance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StressLight {
    Green,
    Yellow,
    Red,
}

pub fn stress_light(flags: &IndicatorFlags) -> StressLight {
    match flags.count() {
        0 => StressLight::Green,
        1 => StressLight::Yellow,
        _ => StressLight::Red,
    }
}

/// Tier after one assessment tick. Moves up at most one level per call and
/// never moves down; resets happen through [`PolicyEngine::on_step`].
pub fn escalate(inactivity_ms: i64, threshold_s: u32, current: GuidanceTier) -> GuidanceTier {
    escalate_with(inactivity_ms, threshold_s as i64 * 1000, 2.0, current)
}

fn escalate_with(inactivity_ms: i64, threshold_ms: i64, visual_multiplier: f64, current: GuidanceTier) -> GuidanceTier {
    if current == GuidanceTier::None {
        return current;
    }
    let target = if inactivity_ms as f64 > visual_multiplier * threshold_ms as f64 {
        GuidanceTier::VisualGuidance
    } else if inactivity_ms > threshold_ms {
        GuidanceTier::StepInstruction
    } else {
        GuidanceTier::GoalPrompt
    };
    if target > current {
        current.next()
    } else {
        current
    }
}

pub const UTTERANCES: [&str; 8] = [
    "Stay calm, you can handle this",
    "Focus on the next critical step",
    "Take a breath, you are doing fine",
    "One thing at a time",
    "You have trained for this",
    "Steady hands, clear head",
    "You are not alone, help is coming",
    "Keep going, you are on track",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    /// Visual guidance fires past this multiple of the guidance threshold.
    pub visual_multiplier: f64,
    pub companion_min_gap_ms: i64,
    pub breathing_inhale_s: u32,
    pub breathing_exhale_s: u32,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            visual_multiplier: 2.0,
            companion_min_gap_ms: 15_000,
            breathing_inhale_s: 4,
            breathing_exhale_s: 4,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.visual_multiplier >= 1.0) || self.companion_min_gap_ms < 0 {
            return Err(Error::Config(
                "visual_multiplier must be >= 1 and companion gap non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "intervention")]
pub enum Intervention {
    BreathingCueOn { inhale_s: u32, exhale_s: u32 },
    BreathingCueOff,
    StressLightChange { color: StressLight },
    GuidanceTierChange {
        tier: GuidanceTier,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        text: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        target: Option<String>,
    },
    NoiseSuppressOn { channels: Vec<NoiseChannel> },
    NoiseSuppressOff,
    CompanionUtterance { text: String },
}

impl Intervention {
    /// Whether `profile` permits this kind of event.
    pub fn allowed_by(&self, profile: &InterventionProfile) -> bool {
        match self {
            Self::BreathingCueOn { .. } | Self::BreathingCueOff => profile.breathing_guidance,
            Self::StressLightChange { .. } => profile.stress_feedback,
            Self::GuidanceTierChange { .. } => profile.procedure_guidance,
            Self::NoiseSuppressOn { .. } | Self::NoiseSuppressOff => profile.noise_reduction,
            Self::CompanionUtterance { .. } => profile.companion_support,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionEvent {
    pub t_ms: i64,
    #[serde(flatten)]
    pub intervention: Intervention,
}

/// Seeded, rate-limited draw from [`UTTERANCES`].
#[derive(Debug, Clone)]
pub struct Companion {
    rng: ChaCha8Rng,
    min_gap_ms: i64,
    last_ms: Option<i64>,
}

impl Companion {
    pub fn new(seed: u64, min_gap_ms: i64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            min_gap_ms,
            last_ms: None,
        }
    }

    pub fn utter(&mut self, t_ms: i64) -> Option<&'static str> {
        if self.last_ms.is_some_and(|last| t_ms - last < self.min_gap_ms) {
            return None;
        }
        self.last_ms = Some(t_ms);
        Some(UTTERANCES[self.rng.random_range(0..UTTERANCES.len())])
    }
}

/// What the trainee currently experiences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActiveInterventions {
    /// A stress-regulating modality is running.
    pub regulating: bool,
    pub tier: Option<GuidanceTier>,
    pub threshold_ms: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct PolicyEngine {
    profile: InterventionProfile,
    config: PolicyConfig,
    companion: Companion,
    engaged: bool,
    light: Option<StressLight>,
    tier: GuidanceTier,
    step: Option<ProcedureStep>,
    step_started_ms: i64,
}

impl PolicyEngine {
    pub fn new(profile: InterventionProfile, config: PolicyConfig, seed: u64) -> Result<Self> {
        profile.validate()?;
        config.validate()?;
        Ok(Self {
            profile,
            config,
            companion: Companion::new(seed, config.companion_min_gap_ms),
            engaged: false,
            light: None,
            tier: GuidanceTier::None,
            step: None,
            step_started_ms: 0,
        })
    }

    pub fn profile(&self) -> &InterventionProfile {
        &self.profile
    }

    pub fn engaged(&self) -> bool {
        self.engaged
    }

    pub fn tier(&self) -> GuidanceTier {
        self.tier
    }

    pub fn active(&self) -> ActiveInterventions {
        ActiveInterventions {
            regulating: self.engaged && self.profile.has_regulating_modality(),
            tier: self.profile.procedure_guidance.then_some(self.tier),
            threshold_ms: self.profile.guidance_threshold_ms(),
        }
    }

    fn ev(t_ms: i64, intervention: Intervention) -> InterventionEvent {
        InterventionEvent { t_ms, intervention }
    }

    fn engage(&mut self, t_ms: i64, out: &mut Vec<InterventionEvent>) {
        self.engaged = true;
        let p = self.profile;
        if p.breathing_guidance {
            out.push(Self::ev(
                t_ms,
                Intervention::BreathingCueOn {
                    inhale_s: self.config.breathing_inhale_s,
                    exhale_s: self.config.breathing_exhale_s,
                },
            ));
        }
        if p.noise_reduction {
            out.push(Self::ev(
                t_ms,
                Intervention::NoiseSuppressOn {
                    channels: NoiseChannel::IRRELEVANT.to_vec(),
                },
            ));
        }
        if p.companion_support {
            if let Some(text) = self.companion.utter(t_ms) {
                out.push(Self::ev(t_ms, Intervention::CompanionUtterance { text: text.into() }));
            }
        }
    }

    fn disengage(&mut self, t_ms: i64, out: &mut Vec<InterventionEvent>) {
        self.engaged = false;
        if self.profile.breathing_guidance {
            out.push(Self::ev(t_ms, Intervention::BreathingCueOff));
        }
        if self.profile.noise_reduction {
            out.push(Self::ev(t_ms, Intervention::NoiseSuppressOff));
        }
    }

    fn set_light(&mut self, t_ms: i64, color: StressLight, out: &mut Vec<InterventionEvent>) {
        if self.profile.stress_feedback && self.light != Some(color) {
            self.light = Some(color);
            out.push(Self::ev(t_ms, Intervention::StressLightChange { color }));
        }
    }

    fn set_tier(&mut self, t_ms: i64, tier: GuidanceTier, out: &mut Vec<InterventionEvent>) {
        if tier == self.tier {
            return;
        }
        self.tier = tier;
        let (text, target) = match (tier, self.step) {
            (GuidanceTier::GoalPrompt, Some(s)) => (Some(s.goal_text().to_string()), None),
            (GuidanceTier::StepInstruction, Some(s)) => (Some(s.instruction_text().to_string()), None),
            (GuidanceTier::VisualGuidance, Some(s)) => {
                (Some(s.instruction_text().to_string()), Some(s.target().to_string()))
            }
            _ => (None, None),
        };
        out.push(Self::ev(t_ms, Intervention::GuidanceTierChange { tier, text, target }));
    }

    /// One assessment tick: stress response, stress light, then guidance
    /// escalation.
    pub fn on_assessment(&mut self, t_ms: i64, stressed: bool, flags: &IndicatorFlags) -> Vec<InterventionEvent> {
        let mut out = Vec::new();
        if stressed && !self.engaged {
            self.engage(t_ms, &mut out);
        } else if !stressed && self.engaged {
            self.disengage(t_ms, &mut out);
        }
        let color = if stressed { StressLight::Red } else { stress_light(flags) };
        self.set_light(t_ms, color, &mut out);
        if let (true, Some(th)) = (self.step.is_some(), self.profile.guidance_threshold_ms()) {
            let next = escalate_with(t_ms - self.step_started_ms, th, self.config.visual_multiplier, self.tier);
            self.set_tier(t_ms, next, &mut out);
        }
        out
    }

    /// A new required step begins (or `None` once the task is finished).
    pub fn on_step(&mut self, t_ms: i64, step: Option<ProcedureStep>) -> Vec<InterventionEvent> {
        let mut out = Vec::new();
        self.step = step;
        self.step_started_ms = t_ms;
        if self.profile.procedure_guidance {
            // Force a fresh prompt even when the tier is already GoalPrompt.
            if step.is_some() && self.tier == GuidanceTier::GoalPrompt {
                self.tier = GuidanceTier::None;
            }
            let tier = if step.is_some() { GuidanceTier::GoalPrompt } else { GuidanceTier::None };
            self.set_tier(t_ms, tier, &mut out);
        }
        out
    }

    /// A task phase finished: regulation stops until the next stressed tick.
    pub fn on_phase_complete(&mut self, t_ms: i64) -> Vec<InterventionEvent> {
        let mut out = Vec::new();
        if self.engaged {
            self.disengage(t_ms, &mut out);
        }
        out
    }

    /// Session end: close everything still open.
    pub fn finish(&mut self, t_ms: i64) -> Vec<InterventionEvent> {
        let mut out = self.on_phase_complete(t_ms);
        self.step = None;
        self.set_tier(t_ms, GuidanceTier::None, &mut out);
        out
    }

    pub fn step_started_ms(&self) -> i64 {
        self.step_started_ms
    }
}
