//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p jitai-core --test acceptance`.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jitai_core::biosignal::{compute_sdnn, synthesize_ppg, NnSeries, VitalsEstimate, VitalsTracker};
use jitai_core::config::SimConfig;
use jitai_core::detection::{assess, evaluate_indicators, Baseline, IndicatorFlags, Thresholds};
use jitai_core::harness::{replay, run_experiment, run_session, Arm, ProfileSource, SessionLog};
use jitai_core::policy::{GuidanceTier, Intervention, InterventionEvent, PolicyConfig, PolicyEngine};
use jitai_core::profile::{score, InterventionProfile, QuestionnaireResponse};
use jitai_core::scenario::{
    Action, ActionEvent, PatientVitals, ProcedureStep, Scenario, ScenarioConfig, ScenarioEvent, TaskPhase,
    TriggerConfig, TriggerKind,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn signal_pipeline() -> Check {
    let start = Instant::now();
    let cfg = SimConfig::study();
    let mut worst: f64 = 0.0;
    for bpm in [55.0, 75.0, 100.0, 130.0] {
        for seed in [1, 11, 23] {
            let ppg = synthesize_ppg(120_000.0, |_| bpm, 40.0, seed).map_err(|e| e.to_string())?;
            let mut tracker = VitalsTracker::new(cfg.vitals.smoothing_len, 120_000.0).map_err(|e| e.to_string())?;
            tracker.extend(&ppg.samples).map_err(|e| e.to_string())?;
            let v = tracker.estimate(120_000.0).map_err(|e| format!("{bpm} bpm: {e}"))?;
            worst = worst.max((v.hr_bpm - bpm).abs());
            ensure((v.hr_bpm - bpm).abs() <= 2.0, || format!("{bpm} bpm seed {seed} -> {:.2}", v.hr_bpm))?;
        }
    }
    let nn = [800.0, 810.0, 790.0, 805.0, 795.0];
    let sdnn = compute_sdnn(&NnSeries::from_intervals(nn)).map_err(|e| e.to_string())?;
    let mean = nn.iter().sum::<f64>() / 5.0;
    let oracle = (nn.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
    ensure((sdnn - oracle).abs() < 1e-6 && (sdnn - 7.0711).abs() < 1e-4, || format!("sdnn {sdnn}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "worst HR error {worst:.2} bpm, SDNN {sdnn:.4} ms, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn detection_constants() -> Check {
    let th = Thresholds::default();
    let vitals = |hr, sdnn| VitalsEstimate {
        hr_bpm: hr,
        sdnn_ms: sdnn,
        window_start_ms: 0.0,
        window_end_ms: 10_000.0,
    };
    for (hr, sdnn) in [(70.0, 50.0), (61.0, 27.0), (100.0, 40.0), (83.0, 64.0)] {
        let b = Baseline {
            hr_mean_bpm: hr,
            sdnn_mean_ms: sdnn,
            acquisition_span_ms: 60_000.0,
        };
        let at = evaluate_indicators(Some(&vitals(1.30 * hr, 0.65 * sdnn)), false, &b, &th, 0);
        ensure(!at.hr_abnormal && !at.sdnn_abnormal, || format!("boundary flagged for {hr}/{sdnn}"))?;
        let past = evaluate_indicators(Some(&vitals((1.30 * hr).next_up(), (0.65 * sdnn).next_down())), false, &b, &th, 0);
        ensure(past.hr_abnormal && past.sdnn_abnormal, || format!("no flag past boundary for {hr}/{sdnn}"))?;
    }
    for bits in 0..8u8 {
        let f = IndicatorFlags {
            hr_abnormal: bits & 1 != 0,
            sdnn_abnormal: bits & 2 != 0,
            gsr_abnormal: bits & 4 != 0,
            t_ms: 0,
        };
        ensure(assess(&f) == (bits.count_ones() >= 2), || format!("vote wrong for {f:?}"))?;
    }
    Ok("boundaries and 8/8 voting cases".into())
}

fn scoring_oracle(x: &[i64; 19]) -> InterventionProfile {
    let i = |n: usize| x[n - 1];
    let sr = i(2) + i(4) + i(6) <= i(1) + i(3) + i(5);
    let pns: i64 = x[8..13].iter().sum();
    let th = match pns {
        22.. => Some(10),
        18..=21 => Some(15),
        15..=17 => Some(30),
        _ => None,
    };
    InterventionProfile {
        self_regulation: sr,
        breathing_guidance: sr && i(7) >= 3,
        stress_feedback: sr && i(8) >= 3,
        procedure_guidance: th.is_some(),
        guidance_threshold_s: th,
        companion_support: x[13..17].iter().sum::<i64>() >= 12,
        noise_reduction: x[17..19].iter().sum::<i64>() >= 6,
    }
}

fn questionnaire_scoring() -> Check {
    let profile = |x: &[i64; 19]| QuestionnaireResponse::new(x).map(|q| score(&q)).map_err(|e| e.to_string());
    let with = |o: &[(usize, i64)]| {
        let mut x = [3i64; 19];
        for &(n, v) in o {
            x[n - 1] = v;
        }
        x
    };
    let branches: Vec<[i64; 19]> = vec![
        with(&[(1, 2), (2, 5), (3, 2), (4, 5), (5, 2), (6, 5)]),
        with(&[(1, 4), (2, 3), (3, 2), (4, 4), (5, 3), (6, 2)]),
        with(&[(7, 2), (8, 3)]),
        with(&[(7, 3), (8, 2)]),
        with(&[(9, 5), (10, 5), (11, 5), (12, 4), (13, 4)]),
        with(&[(9, 4), (10, 4), (11, 4), (12, 4), (13, 3)]),
        with(&[(9, 4), (10, 4), (11, 4), (12, 3), (13, 3)]),
        with(&[(9, 4), (10, 3), (11, 3), (12, 3), (13, 3)]),
        with(&[(9, 3), (10, 3), (11, 3), (12, 3), (13, 2)]),
        with(&[(14, 3), (15, 3), (16, 3), (17, 2)]),
        with(&[(18, 2), (19, 3)]),
        [5; 19],
        [1; 19],
    ];
    for x in &branches {
        let p = profile(x)?;
        ensure(p == scoring_oracle(x), || format!("branch {x:?}: {p:?}"))?;
    }
    let expected_thresholds = [Some(10), Some(15), Some(15), Some(30), None];
    for (x, th) in branches[4..9].iter().zip(expected_thresholds) {
        ensure(profile(x)?.guidance_threshold_s == th, || format!("band for {x:?}"))?;
    }
    ensure(!profile(&branches[0])?.self_regulation, || "external locus kept self-regulation".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let x: [i64; 19] = std::array::from_fn(|_| rng.random_range(1..=5));
        let p = profile(&x)?;
        ensure(p == scoring_oracle(&x), || format!("{x:?}: {p:?}"))?;
        ensure(p.validate().is_ok(), || format!("invalid profile for {x:?}"))?;
        ensure(!(p.breathing_guidance || p.stress_feedback) || p.self_regulation, || format!("{x:?}"))?;
    }
    Ok(format!("{} branch cases, 10000 random responses", branches.len()))
}

fn guidance_trace(steps: &[i64], end_ms: i64) -> Result<Vec<(i64, GuidanceTier)>, String> {
    let profile = InterventionProfile {
        procedure_guidance: true,
        guidance_threshold_s: Some(10),
        ..InterventionProfile::all_off()
    };
    let calm = IndicatorFlags {
        hr_abnormal: false,
        sdnn_abnormal: false,
        gsr_abnormal: false,
        t_ms: 0,
    };
    let mut p = PolicyEngine::new(profile, PolicyConfig::default(), 1).map_err(|e| e.to_string())?;
    let mut events: Vec<InterventionEvent> = p.on_step(0, Some(ProcedureStep::RemoveSteriStrips));
    let mut pending = steps.iter().copied().peekable();
    let mut t = 0;
    while t < end_ms {
        while let Some(s) = pending.next_if(|&s| s <= t + 1000) {
            events.extend(p.on_step(s, Some(ProcedureStep::FetchScissors)));
        }
        t += 1000;
        events.extend(p.on_assessment(t, false, &calm));
    }
    Ok(events
        .into_iter()
        .filter_map(|e| match e.intervention {
            Intervention::GuidanceTierChange { tier, .. } => Some((e.t_ms, tier)),
            _ => None,
        })
        .collect())
}

fn escalation() -> Check {
    use GuidanceTier::{GoalPrompt as G, StepInstruction as S, VisualGuidance as V};
    let goldens: [(&[i64], i64, Vec<(i64, GuidanceTier)>); 3] = [
        (&[], 40_000, vec![(0, G), (11_000, S), (21_000, V)]),
        (&[3_400], 40_000, vec![(0, G), (3_400, G), (14_000, S), (24_000, V)]),
        (&[15_500], 45_000, vec![(0, G), (11_000, S), (15_500, G), (26_000, S), (36_000, V)]),
    ];
    for (steps, end, expected) in goldens {
        let got = guidance_trace(steps, end)?;
        ensure(got == expected, || format!("steps {steps:?}: {got:?}"))?;
    }
    Ok("3 golden traces".into())
}

fn explore(root: Scenario, depth: usize) -> Result<usize, String> {
    let order = |p: TaskPhase| {
        [
            TaskPhase::Preparation,
            TaskPhase::WoundOpening,
            TaskPhase::ClotRemoving,
            TaskPhase::StatusMonitoring,
            TaskPhase::EmergencyResponse,
            TaskPhase::Done,
        ]
        .iter()
        .position(|&q| q == p)
        .unwrap()
    };
    let mut frontier = vec![root];
    let mut seen = HashSet::new();
    let mut sequences = 0;
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            let t = s.now_ms() + 1000;
            for a in Action::ALL {
                let mut after = s.clone();
                after.tick(t);
                let before = after.clone();
                after.advance(&ActionEvent { t_ms: t, action: a });
                let (from, to) = (before.phase(), after.phase());
                let legal = from == to
                    || match (from, to) {
                        (TaskPhase::StatusMonitoring, TaskPhase::EmergencyResponse) => before.vitals().is_unstable(),
                        (TaskPhase::StatusMonitoring, TaskPhase::Done) => !before.vitals().is_unstable(),
                        (TaskPhase::EmergencyResponse, TaskPhase::Done) => true,
                        (a, b) => order(b) == order(a) + 1 && b != TaskPhase::EmergencyResponse,
                    };
                ensure(legal, || format!("{from:?} -> {to:?} via {a:?}"))?;
                let phases: Vec<usize> = after.completed_steps().iter().map(|p| order(p.phase())).collect();
                ensure(phases.windows(2).all(|w| w[0] <= w[1]), || format!("{:?}", after.completed_steps()))?;
                sequences += 1;
                if seen.insert(after.clone()) {
                    next.push(after);
                }
            }
        }
        frontier = next;
    }
    Ok(sequences)
}

fn scenario() -> Check {
    let mut s = Scenario::new(ScenarioConfig::study(), 42).map_err(|e| e.to_string())?;
    ensure(s.tick(59_900).is_empty(), || "events before 60 s".into())?;
    let ev = s.tick(60_000);
    ensure(ev.contains(&ScenarioEvent::TriggerFired { trigger: TriggerKind::T2 }), || format!("{ev:?}"))?;
    ensure(s.deducted_ms() == 120_000, || format!("deducted {}", s.deducted_ms()))?;
    ensure(s.remaining_ms() == 180_000, || format!("remaining {}", s.remaining_ms()))?;
    ensure(s.vitals() == PatientVitals { hr_bpm: 130, spo2_percent: 80 }, || format!("{:?}", s.vitals()))?;

    let mut total = 0;
    for triggers in [TriggerConfig::default(), TriggerConfig::none()] {
        let cfg = ScenarioConfig {
            triggers,
            ..ScenarioConfig::default()
        };
        total += explore(Scenario::new(cfg, 0).map_err(|e| e.to_string())?, 8)?;
    }
    Ok(format!("T2 at 60000 ms, -120000 ms, vitals 130/80; {total} transitions to depth 8 safe"))
}

fn experiment() -> Check {
    let start = Instant::now();
    let cfg = SimConfig::study();
    let (mut completion, mut duration, mut recovery) = (0, 0, 0);
    let (mut rec_i, mut rec_c) = (0.0, 0.0);
    const RUNS: u64 = 20;
    for seed in 1..=RUNS {
        let r = run_experiment(&cfg, 13, seed).map_err(|e| e.to_string())?;
        let (i, c) = (&r.intervention, &r.control);
        completion += usize::from(i.completion_rate > c.completion_rate);
        duration += usize::from(i.duration_mean_s < c.duration_mean_s);
        let (ri, rc) = (i.recovery_mean_s.unwrap_or(f64::NAN), c.recovery_mean_s.unwrap_or(f64::NAN));
        recovery += usize::from(ri < rc);
        rec_i += ri / RUNS as f64;
        rec_c += rc / RUNS as f64;
    }
    let summary = format!(
        "completion {completion}/20, duration {duration}/20, recovery {recovery}/20; \
         mean recovery {rec_i:.2} s vs {rec_c:.2} s; {:.1} s",
        start.elapsed().as_secs_f64()
    );
    ensure(completion >= 19 && duration >= 19 && recovery >= 19, || summary.clone())?;
    ensure((3.0..=8.0).contains(&rec_i) && (8.0..=15.0).contains(&rec_c), || summary.clone())?;
    within(start.elapsed(), 60.0).map_err(|e| format!("{summary}; {e}"))?;
    Ok(summary)
}

fn determinism() -> Check {
    let cfg = SimConfig::study();
    for (arm, seed) in [(Arm::Intervention, 42), (Arm::Control, 42), (Arm::Intervention, 7)] {
        let a = run_session(&cfg, &ProfileSource::Cohort(0), arm, seed).map_err(|e| e.to_string())?.0;
        let b = run_session(&cfg, &ProfileSource::Cohort(0), arm, seed).map_err(|e| e.to_string())?.0;
        ensure(a.to_ndjson() == b.to_ndjson(), || format!("{arm:?} {seed} not byte-identical"))?;
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut verified = 0;
    let mut entries: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    entries.sort();
    for path in entries.iter().filter(|p| p.extension().is_some_and(|x| x == "ndjson")) {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let log = SessionLog::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let report = replay(&log).map_err(|e| e.to_string())?;
        ensure(report.verified(), || format!("{}: {:?}", path.display(), report.divergence))?;
        verified += 1;
    }
    ensure(verified > 0, || "no golden logs".into())?;
    Ok(format!("byte-identical reruns, {verified} golden logs replayed"))
}

fn null_intervention() -> Check {
    let mut cfg = SimConfig::study();
    cfg.agent.intervention_recovery_gain = 1.0;
    cfg.agent.guidance_caps = false;
    let off = ProfileSource::Profile(InterventionProfile::all_off());
    for seed in 0..20 {
        let (_, a) = run_session(&cfg, &off, Arm::Intervention, seed).map_err(|e| e.to_string())?;
        let (_, b) = run_session(&cfg, &off, Arm::Control, seed).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("seed {seed}: {a:?} vs {b:?}"))?;
    }
    Ok("20 paired sessions identical".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("signal pipeline", signal_pipeline),
        ("detection constants", detection_constants),
        ("questionnaire scoring", questionnaire_scoring),
        ("guidance escalation", escalation),
        ("scenario triggers and phase safety", scenario),
        ("two-arm experiment", experiment),
        ("determinism and golden replay", determinism),
        ("null intervention", null_intervention),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
