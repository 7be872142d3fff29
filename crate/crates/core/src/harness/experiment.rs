use std::fmt::Write as _;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};

use super::metrics::{mean, sample_sd, SessionMetrics};
use super::stats::{welch_t, WelchTest};
use super::{run_session, session_seed, Arm, ProfileSource};

pub const CSV_HEADER: &str = "metric,intervention,control,t_statistic,p_value";

const NOTE: &str = "Synthetic trainees calibrated against published aggregate outcomes \
(completion rate, operation duration, recovery time) only; no individual behavioural \
traces were available for fitting. p-values are approximate.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub n: usize,
    pub completion_rate: f64,
    pub duration_mean_s: f64,
    pub duration_sd_s: Option<f64>,
    pub critical_errors_mean: f64,
    /// Mean over sessions of each session's mean recovery time.
    pub recovery_mean_s: Option<f64>,
    pub recovery_sd_s: Option<f64>,
    pub sessions_with_recovery: usize,
}

impl ArmSummary {
    fn from_metrics(ms: &[&SessionMetrics]) -> Self {
        let n = ms.len();
        let durations: Vec<f64> = ms.iter().map(|m| m.duration_s).collect();
        let recoveries = recovery_means_s(ms);
        Self {
            n,
            completion_rate: ms.iter().filter(|m| m.completed).count() as f64 / n as f64,
            duration_mean_s: mean(durations.iter().copied()).unwrap_or(0.0),
            duration_sd_s: sample_sd(&durations),
            critical_errors_mean: mean(ms.iter().map(|m| m.critical_errors as f64)).unwrap_or(0.0),
            recovery_mean_s: mean(recoveries.iter().copied()),
            recovery_sd_s: sample_sd(&recoveries),
            sessions_with_recovery: recoveries.len(),
        }
    }
}

fn recovery_means_s(ms: &[&SessionMetrics]) -> Vec<f64> {
    ms.iter().filter_map(|m| m.mean_recovery_ms.map(|r| r / 1000.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub index: usize,
    pub arm: Arm,
    pub seed: u64,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub note: String,
    pub experiment_seed: u64,
    pub n_per_arm: usize,
    pub intervention: ArmSummary,
    pub control: ArmSummary,
    pub duration_test: Option<WelchTest>,
    pub recovery_test: Option<WelchTest>,
    /// Every session with its derived seed, ordered by index then arm.
    pub sessions: Vec<SessionEntry>,
}

impl ExperimentReport {
    pub fn seeds(&self) -> Vec<u64> {
        self.sessions.iter().map(|s| s.seed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }

    /// Table of per-arm means; columns as in [`CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let (i, c) = (&self.intervention, &self.control);
        let mut s = String::new();
        let mut row = |metric: &str, a: Option<f64>, b: Option<f64>, test: Option<&WelchTest>| {
            let _ = writeln!(
                s,
                "{metric},{},{},{},{}",
                opt(a),
                opt(b),
                opt(test.map(|t| t.t_statistic)),
                opt(test.map(|t| t.p_value))
            );
        };
        row("completion_rate", Some(i.completion_rate), Some(c.completion_rate), None);
        row("duration_s", Some(i.duration_mean_s), Some(c.duration_mean_s), self.duration_test.as_ref());
        row("critical_errors", Some(i.critical_errors_mean), Some(c.critical_errors_mean), None);
        row("recovery_s", i.recovery_mean_s, c.recovery_mean_s, self.recovery_test.as_ref());
        format!("{CSV_HEADER}\n{s}")
    }
}

/// Run `n_per_arm` paired sessions per arm. Session `i` of both arms shares
/// one derived seed and cohort member `i`.
pub fn run_experiment(config: &SimConfig, n_per_arm: usize, seed: u64) -> Result<ExperimentReport> {
    run_experiment_with(config, n_per_arm, seed, worker_count())
}

fn worker_count() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn run_experiment_with(
    config: &SimConfig,
    n_per_arm: usize,
    seed: u64,
    workers: usize,
) -> Result<ExperimentReport> {
    if n_per_arm == 0 {
        return Err(Error::Config("n_per_arm must be at least 1".into()));
    }
    config.validate()?;
    let jobs: Vec<(usize, Arm, u64)> = (0..n_per_arm)
        .flat_map(|i| {
            let s = session_seed(seed, i);
            [(i, Arm::Intervention, s), (i, Arm::Control, s)]
        })
        .collect();
    let workers = workers.clamp(1, jobs.len());
    let chunk = jobs.len().div_ceil(workers);
    let results: Vec<Result<SessionEntry>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&(index, arm, seed)| {
                            let (_, metrics) = run_session(config, &ProfileSource::Cohort(index), arm, seed)?;
                            Ok(SessionEntry { index, arm, seed, metrics })
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("session worker panicked"))
            .collect()
    });
    let sessions = results.into_iter().collect::<Result<Vec<_>>>()?;

    let arm_metrics = |arm| sessions.iter().filter(|s| s.arm == arm).map(|s| &s.metrics).collect::<Vec<_>>();
    let (im, cm) = (arm_metrics(Arm::Intervention), arm_metrics(Arm::Control));
    let durations = |ms: &[&SessionMetrics]| ms.iter().map(|m| m.duration_s).collect::<Vec<_>>();
    Ok(ExperimentReport {
        note: NOTE.into(),
        experiment_seed: seed,
        n_per_arm,
        intervention: ArmSummary::from_metrics(&im),
        control: ArmSummary::from_metrics(&cm),
        duration_test: welch_t(&durations(&im), &durations(&cm)),
        recovery_test: welch_t(&recovery_means_s(&im), &recovery_means_s(&cm)),
        sessions,
    })
}
