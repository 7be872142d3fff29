use jitai_core::detection::IndicatorFlags;
use jitai_core::policy::{
    escalate, stress_light, Companion, GuidanceTier, Intervention, InterventionEvent, PolicyConfig, PolicyEngine,
    StressLight, UTTERANCES,
};
use jitai_core::profile::{score, InterventionProfile, QuestionnaireResponse};
use jitai_core::scenario::ProcedureStep;
use proptest::prelude::*;

use GuidanceTier::{GoalPrompt, StepInstruction, VisualGuidance};

fn flags(h: bool, s: bool, g: bool) -> IndicatorFlags {
    IndicatorFlags {
        hr_abnormal: h,
        sdnn_abnormal: s,
        gsr_abnormal: g,
        t_ms: 0,
    }
}

const CALM: IndicatorFlags = IndicatorFlags {
    hr_abnormal: false,
    sdnn_abnormal: false,
    gsr_abnormal: false,
    t_ms: 0,
};

fn guidance_only(threshold_s: u32) -> InterventionProfile {
    InterventionProfile {
        procedure_guidance: true,
        guidance_threshold_s: Some(threshold_s),
        ..InterventionProfile::all_off()
    }
}

fn tiers(events: &[InterventionEvent]) -> Vec<(i64, GuidanceTier)> {
    events
        .iter()
        .filter_map(|e| match &e.intervention {
            Intervention::GuidanceTierChange { tier, .. } => Some((e.t_ms, *tier)),
            _ => None,
        })
        .collect()
}

/// Calm assessments every second up to `end_ms`, with new steps starting
/// at `steps` (ms).
fn guidance_trace(threshold_s: u32, steps: &[i64], end_ms: i64) -> Vec<InterventionEvent> {
    let mut p = PolicyEngine::new(guidance_only(threshold_s), PolicyConfig::default(), 1).unwrap();
    let mut out = p.on_step(0, Some(ProcedureStep::RemoveSteriStrips));
    let mut pending = steps.iter().copied().peekable();
    let mut t = 0;
    while t < end_ms {
        let next_tick = t + 1000;
        while let Some(s) = pending.next_if(|&s| s <= next_tick) {
            out.extend(p.on_step(s, Some(ProcedureStep::FetchScissors)));
        }
        t = next_tick;
        out.extend(p.on_assessment(t, false, &CALM));
    }
    out
}

#[test]
fn golden_uninterrupted_inactivity() {
    let ev = guidance_trace(10, &[], 40_000);
    assert_eq!(tiers(&ev), vec![(0, GoalPrompt), (11_000, StepInstruction), (21_000, VisualGuidance)]);
}

#[test]
fn golden_step_between_ticks() {
    // next step starts at 3.4 s; thresholds pass at 13.4 s and 23.4 s
    let ev = guidance_trace(10, &[3_400], 40_000);
    assert_eq!(
        tiers(&ev),
        vec![(0, GoalPrompt), (3_400, GoalPrompt), (14_000, StepInstruction), (24_000, VisualGuidance)]
    );
}

#[test]
fn golden_action_resets_tier() {
    let ev = guidance_trace(10, &[15_500], 45_000);
    assert_eq!(
        tiers(&ev),
        vec![
            (0, GoalPrompt),
            (11_000, StepInstruction),
            (15_500, GoalPrompt),
            (26_000, StepInstruction),
            (36_000, VisualGuidance),
        ]
    );
}

#[test]
fn tier_texts() {
    let ev = guidance_trace(10, &[], 25_000);
    let texts: Vec<_> = ev
        .iter()
        .filter_map(|e| match &e.intervention {
            Intervention::GuidanceTierChange { text, target, .. } => Some((text.clone(), target.clone())),
            _ => None,
        })
        .collect();
    assert_eq!(texts[1].0.as_deref(), Some("Please remove the Steri-strips covering the wound"));
    assert_eq!(texts[1].1, None);
    assert!(texts[2].1.is_some());
    assert_ne!(texts[0].0, texts[1].0);
}

#[test]
fn escalate_examples() {
    assert_eq!(escalate(10_001, 10, GoalPrompt), StepInstruction);
    assert_eq!(escalate(10_000, 10, GoalPrompt), GoalPrompt);
    assert_eq!(escalate(20_001, 10, StepInstruction), VisualGuidance);
    // one level per tick, never down
    assert_eq!(escalate(20_001, 10, GoalPrompt), StepInstruction);
    assert_eq!(escalate(0, 10, VisualGuidance), VisualGuidance);
    assert_eq!(escalate(60_000, 10, GuidanceTier::None), GuidanceTier::None);
}

#[test]
fn light_mapping() {
    assert_eq!(stress_light(&flags(false, false, false)), StressLight::Green);
    assert_eq!(stress_light(&flags(true, false, false)), StressLight::Yellow);
    assert_eq!(stress_light(&flags(false, false, true)), StressLight::Yellow);
    assert_eq!(stress_light(&flags(true, true, false)), StressLight::Red);
    assert_eq!(stress_light(&flags(true, true, true)), StressLight::Red);
}

#[test]
fn all_off_profile_is_silent() {
    let mut p = PolicyEngine::new(InterventionProfile::all_off(), PolicyConfig::default(), 3).unwrap();
    assert!(p.on_step(0, Some(ProcedureStep::CallForHelp)).is_empty());
    assert!(p.on_assessment(61_000, true, &flags(true, true, true)).is_empty());
    assert!(p.on_assessment(62_000, false, &CALM).is_empty());
    assert!(p.finish(63_000).is_empty());
}

#[test]
fn breathing_and_feedback_onset() {
    let profile = InterventionProfile {
        self_regulation: true,
        breathing_guidance: true,
        stress_feedback: true,
        ..InterventionProfile::all_off()
    };
    let mut p = PolicyEngine::new(profile, PolicyConfig::default(), 3).unwrap();
    assert!(p.on_step(0, Some(ProcedureStep::CallForHelp)).is_empty());
    let on = p.on_assessment(61_000, true, &flags(true, true, false));
    assert_eq!(
        on,
        vec![
            InterventionEvent {
                t_ms: 61_000,
                intervention: Intervention::BreathingCueOn { inhale_s: 4, exhale_s: 4 },
            },
            InterventionEvent {
                t_ms: 61_000,
                intervention: Intervention::StressLightChange { color: StressLight::Red },
            },
        ]
    );
    let off = p.on_assessment(70_000, false, &flags(true, false, false));
    assert_eq!(
        off,
        vec![
            InterventionEvent {
                t_ms: 70_000,
                intervention: Intervention::BreathingCueOff,
            },
            InterventionEvent {
                t_ms: 70_000,
                intervention: Intervention::StressLightChange { color: StressLight::Yellow },
            },
        ]
    );
}

#[test]
fn phase_completion_ends_regulation() {
    let profile = InterventionProfile {
        self_regulation: true,
        breathing_guidance: true,
        noise_reduction: true,
        ..InterventionProfile::all_off()
    };
    let mut p = PolicyEngine::new(profile, PolicyConfig::default(), 3).unwrap();
    assert_eq!(p.on_assessment(1_000, true, &flags(true, true, true)).len(), 2);
    let off = p.on_phase_complete(1_500);
    assert!(matches!(off[0].intervention, Intervention::BreathingCueOff));
    assert!(matches!(off[1].intervention, Intervention::NoiseSuppressOff));
    assert!(!p.engaged());
    // still stressed on the next tick: regulation restarts
    assert_eq!(p.on_assessment(2_000, true, &flags(true, true, true)).len(), 2);
}

#[test]
fn companion_pool_and_rate_limit() {
    let mut c = Companion::new(1, 15_000);
    let first = c.utter(60_000).unwrap();
    assert!(UTTERANCES.contains(&first));
    assert_eq!(c.utter(65_000), None);
    assert!(c.utter(75_000).is_some());
    assert_eq!(Companion::new(1, 15_000).utter(0), Companion::new(1, 15_000).utter(0));
    assert!(UTTERANCES.contains(&"Stay calm, you can handle this"));
    assert!(UTTERANCES.contains(&"Focus on the next critical step"));
    assert_eq!(UTTERANCES.len(), 8);
}

#[derive(Debug, Clone)]
enum Input {
    Assess(bool, u8),
    Step,
    PhaseDone,
}

fn input() -> impl Strategy<Value = Input> {
    prop_oneof![
        6 => (any::<bool>(), 0u8..8).prop_map(|(s, f)| Input::Assess(s, f)),
        1 => Just(Input::Step),
        1 => Just(Input::PhaseDone),
    ]
}

proptest! {
    #[test]
    fn gating_soundness(
        items in prop::array::uniform19(1i64..=5),
        trace in prop::collection::vec(input(), 0..200),
        seed: u64,
    ) {
        let profile = score(&QuestionnaireResponse::new(&items).unwrap());
        let mut p = PolicyEngine::new(profile, PolicyConfig::default(), seed).unwrap();
        let mut events = p.on_step(0, Some(ProcedureStep::CallForHelp));
        for (i, inp) in trace.iter().enumerate() {
            let t = (i as i64 + 1) * 1000;
            match inp {
                Input::Assess(s, f) => {
                    let fl = flags(f & 1 != 0, f & 2 != 0, f & 4 != 0);
                    events.extend(p.on_assessment(t, *s, &fl));
                }
                Input::Step => events.extend(p.on_step(t, Some(ProcedureStep::BriefTeam))),
                Input::PhaseDone => events.extend(p.on_phase_complete(t)),
            }
        }
        events.extend(p.finish(trace.len() as i64 * 1000 + 1000));

        let mut breathing = false;
        let mut noise = false;
        let mut tier = None;
        for w in events.windows(2) {
            prop_assert!(w[0].t_ms <= w[1].t_ms);
        }
        for e in &events {
            prop_assert!(e.intervention.allowed_by(&profile), "{:?} under {:?}", e, profile);
            match &e.intervention {
                Intervention::BreathingCueOn { .. } => { prop_assert!(!breathing); breathing = true; }
                Intervention::BreathingCueOff => { prop_assert!(breathing); breathing = false; }
                Intervention::NoiseSuppressOn { .. } => { prop_assert!(!noise); noise = true; }
                Intervention::NoiseSuppressOff => { prop_assert!(noise); noise = false; }
                Intervention::GuidanceTierChange { tier: t, .. } => {
                    // escalation never skips a level
                    if let (Some(prev), true) = (tier, *t > GoalPrompt) {
                        prop_assert!(*t as u8 == prev as u8 + 1 || *t == prev, "{prev:?} -> {t:?}");
                    }
                    tier = Some(*t);
                }
                _ => {}
            }
        }
        prop_assert!(!breathing && !noise, "activation left open");
        prop_assert!(tier.is_none() || tier == Some(GuidanceTier::None));
    }
}
