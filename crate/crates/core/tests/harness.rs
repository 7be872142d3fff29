use std::path::PathBuf;

use jitai_core::config::SimConfig;
use jitai_core::detection::track_episodes;
use jitai_core::harness::{
    replay, run_experiment, run_experiment_with, run_session, session_seed, Arm, ProfileSource, Record, SessionLog,
};
use jitai_core::profile::{InterventionProfile, QuestionnaireResponse};
use jitai_core::scenario::TriggerKind;
use jitai_core::Error;

fn study() -> SimConfig {
    SimConfig::study()
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Golden sessions: (file stem, arm, seed, cohort member).
const GOLDEN: [(&str, Arm, u64, usize); 3] = [
    ("intervention-42", Arm::Intervention, 42, 0),
    ("control-42", Arm::Control, 42, 0),
    ("intervention-7-cohort-5", Arm::Intervention, 7, 5),
];

#[test]
fn logs_are_byte_identical() {
    let cfg = study();
    for seed in [1, 42, 9001] {
        let (a, ma) = run_session(&cfg, &ProfileSource::Cohort(2), Arm::Intervention, seed).unwrap();
        let (b, mb) = run_session(&cfg, &ProfileSource::Cohort(2), Arm::Intervention, seed).unwrap();
        assert_eq!(a.to_ndjson(), b.to_ndjson());
        assert_eq!(ma, mb);
    }
}

#[test]
fn golden_logs_reproduce_and_replay() {
    let cfg = study();
    let bless = std::env::var_os("JITAI_BLESS").is_some();
    for (stem, arm, seed, member) in GOLDEN {
        let path = golden_dir().join(format!("{stem}.ndjson"));
        let (log, _) = run_session(&cfg, &ProfileSource::Cohort(member), arm, seed).unwrap();
        if bless {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, log.to_ndjson()).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text == log.to_ndjson(), "{stem} differs from a fresh run");
        let report = replay(&SessionLog::parse(&text).unwrap()).unwrap();
        assert!(report.verified(), "{stem}: {:?}", report.divergence);
    }
}

#[test]
fn study_session_has_deterioration_at_sixty_seconds() {
    let (log, _) = run_session(&study(), &ProfileSource::Cohort(0), Arm::Intervention, 42).unwrap();
    let t2: Vec<i64> = log
        .records
        .iter()
        .filter_map(|r| match r {
            Record::Trigger {
                t_ms,
                trigger: TriggerKind::T2,
            } => Some(*t_ms),
            _ => None,
        })
        .collect();
    assert_eq!(t2, vec![60_000]);
    assert!(log.records.iter().any(|r| matches!(
        r,
        Record::Countdown { t_ms: 60_000, remaining_ms: 180_000, .. }
    )));
}

#[test]
fn control_arm_logs_no_interventions() {
    let cfg = study();
    for seed in 0..5 {
        let (log, _) = run_session(&cfg, &ProfileSource::Profile(all_on()), Arm::Control, seed).unwrap();
        assert!(!log.records.iter().any(|r| matches!(r, Record::Intervention { .. })));
        let (log, _) = run_session(&cfg, &ProfileSource::Profile(all_on()), Arm::Intervention, seed).unwrap();
        assert!(log.records.iter().any(|r| matches!(r, Record::Intervention { .. })));
    }
}

fn all_on() -> InterventionProfile {
    jitai_core::profile::score(&QuestionnaireResponse::new(&[5; 19]).unwrap())
}

#[test]
fn null_intervention_has_no_effect() {
    let mut cfg = study();
    cfg.agent.intervention_recovery_gain = 1.0;
    cfg.agent.guidance_caps = false;
    let off = ProfileSource::Profile(InterventionProfile::all_off());
    for seed in 0..10 {
        let (_, a) = run_session(&cfg, &off, Arm::Intervention, seed).unwrap();
        let (_, b) = run_session(&cfg, &off, Arm::Control, seed).unwrap();
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn replay_verifies_fresh_logs() {
    let cfg = study();
    for seed in 0..6 {
        for arm in [Arm::Intervention, Arm::Control] {
            let (log, _) = run_session(&cfg, &ProfileSource::Cohort(seed as usize), arm, seed).unwrap();
            let reparsed = SessionLog::parse(&log.to_ndjson()).unwrap();
            assert_eq!(reparsed, log);
            let report = replay(&reparsed).unwrap();
            assert!(report.verified(), "{arm:?} {seed}: {:?}", report.divergence);
            assert_eq!(report.records, log.records.len());
        }
    }
}

#[test]
fn deleted_intervention_is_detected() {
    let (mut log, _) = run_session(&study(), &ProfileSource::Profile(all_on()), Arm::Intervention, 3).unwrap();
    let i = log
        .records
        .iter()
        .position(|r| matches!(r, Record::Intervention { .. }))
        .unwrap();
    let removed = log.records.remove(i);
    let d = replay(&log).unwrap().divergence.unwrap();
    assert_eq!(d.line, i + 1);
    assert_eq!(d.t_ms, removed.t_ms());
    assert_eq!(d.expected, Some(removed.to_line()));
}

#[test]
fn flipped_assessment_is_detected() {
    let (mut log, _) = run_session(&study(), &ProfileSource::Cohort(0), Arm::Intervention, 3).unwrap();
    let i = log
        .records
        .iter()
        .position(|r| matches!(r, Record::Assessment(a) if a.t_ms > 30_000))
        .unwrap();
    let Record::Assessment(a) = &mut log.records[i] else { unreachable!() };
    a.stressed = !a.stressed;
    let flipped = a.stressed;
    let d = replay(&log).unwrap().divergence.unwrap();
    assert_eq!(d.line, i + 1);
    let stressed = |line: &str| match serde_json::from_str::<Record>(line).unwrap() {
        Record::Assessment(a) => a.stressed,
        other => panic!("{other:?}"),
    };
    assert_eq!(stressed(d.found.as_deref().unwrap()), flipped);
    assert_eq!(stressed(d.expected.as_deref().unwrap()), !flipped);
}

#[test]
fn malformed_log_reports_line() {
    let (log, _) = run_session(&study(), &ProfileSource::Cohort(0), Arm::Control, 1).unwrap();
    let mut lines: Vec<String> = log.to_ndjson().lines().map(str::to_owned).collect();
    lines[4] = "{\"kind\":\"assessment\",\"t_ms\":".into();
    match SessionLog::parse(&lines.join("\n")) {
        Err(Error::LogParse { line, .. }) => assert_eq!(line, 5),
        other => panic!("{other:?}"),
    }
    lines[4] = lines[10].clone();
    match SessionLog::parse(&lines.join("\n")) {
        Err(Error::LogParse { line, .. }) => assert_eq!(line, 6),
        other => panic!("{other:?}"),
    }
    let headless = SessionLog {
        records: log.records[1..].to_vec(),
    };
    assert!(matches!(replay(&headless), Err(Error::LogParse { line: 1, .. })));
}

#[test]
fn mean_recovery_identity() {
    let cfg = study();
    for seed in 0..12 {
        let arm = if seed % 2 == 0 { Arm::Intervention } else { Arm::Control };
        let (log, m) = run_session(&cfg, &ProfileSource::Cohort(seed as usize), arm, seed).unwrap();
        let episodes = track_episodes(log.records.iter().filter_map(|r| match r {
            Record::Assessment(a) => Some((a.t_ms, a.quorum)),
            _ => None,
        }));
        let brute: Vec<i64> = episodes.iter().filter_map(|e| e.recovery_time_ms()).collect();
        assert_eq!(m.recovery_times_ms, brute);
        match m.mean_recovery_ms {
            Some(mean) => {
                let b = brute.iter().sum::<i64>() as f64 / brute.len() as f64;
                assert!((mean - b).abs() < 1e-9);
            }
            None => assert!(brute.is_empty()),
        }
    }
}

fn durations(cfg: &SimConfig, arm: Arm, seeds: std::ops::Range<u64>) -> Vec<f64> {
    seeds
        .map(|seed| run_session(cfg, &ProfileSource::Cohort(seed as usize), arm, seed).unwrap().1.duration_s)
        .collect()
}

#[test]
fn halving_the_tick_moves_duration_by_at_most_a_tick() {
    let coarse = study();
    let mut fine = study();
    fine.tick_ms = 50;
    let a = durations(&coarse, Arm::Control, 0..40);
    let b = durations(&fine, Arm::Control, 0..40);
    for (seed, (x, y)) in a.iter().zip(&b).enumerate() {
        assert!((x - y).abs() <= 0.1 + 1e-9, "seed {seed}: {x} vs {y}");
    }
}

#[test]
fn halving_the_tick_keeps_arm_means() {
    // Detection feeds back into the trainee in this arm, so single sessions
    // can drift by more than a tick; the arm mean stays put.
    let coarse = study();
    let mut fine = study();
    fine.tick_ms = 50;
    let a = durations(&coarse, Arm::Intervention, 0..40);
    let b = durations(&fine, Arm::Intervention, 0..40);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean(&a) - mean(&b)).abs() < 0.5, "{} vs {}", mean(&a), mean(&b));
}

#[test]
fn report_lists_every_seed() {
    let cfg = study();
    let r = run_experiment(&cfg, 3, 11).unwrap();
    let expect: Vec<u64> = (0..3).flat_map(|i| [session_seed(11, i); 2]).collect();
    assert_eq!(r.seeds(), expect);
    assert_eq!(r.sessions.len(), 6);
    assert_eq!(r.intervention.n, 3);
    let serial = run_experiment_with(&cfg, 3, 11, 1).unwrap();
    assert_eq!(serial.to_json(), r.to_json());
    assert!(run_experiment(&cfg, 0, 11).is_err());
}

#[test]
fn null_single_pair_experiment() {
    let mut cfg = study();
    cfg.agent.intervention_recovery_gain = 1.0;
    cfg.agent.guidance_caps = false;
    cfg.cohort = jitai_core::config::Cohort::Cycle {
        questionnaires: vec![vec![1; 19]],
    };
    cfg.scoring.companion_min_sum = 100;
    cfg.scoring.noise_min_sum = 100;
    let r = run_experiment(&cfg, 1, 5).unwrap();
    assert_eq!(r.sessions[0].metrics, r.sessions[1].metrics);
}

#[test]
fn csv_has_table_columns() {
    let r = run_experiment(&study(), 2, 3).unwrap();
    let csv = r.to_csv();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], jitai_core::harness::CSV_HEADER);
    let metrics: Vec<&str> = rows[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(metrics, ["completion_rate", "duration_s", "critical_errors", "recovery_s"]);
}
