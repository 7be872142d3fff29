use serde::{Deserialize, Serialize};

use crate::detection::StressEpisode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMetrics {
    pub completed: bool,
    /// Scenario start to the final required action, or to the session end
    /// when the task was never finished.
    pub duration_s: f64,
    pub critical_errors: u32,
    /// Closed episodes only; an episode still open at the end is dropped.
    pub recovery_times_ms: Vec<i64>,
    pub mean_recovery_ms: Option<f64>,
}

impl SessionMetrics {
    pub fn new(completed: bool, duration_ms: i64, critical_errors: u32, episodes: &[StressEpisode]) -> Self {
        let recovery_times_ms: Vec<i64> = episodes.iter().filter_map(|e| e.recovery_time_ms()).collect();
        Self {
            completed,
            duration_s: duration_ms as f64 / 1000.0,
            critical_errors,
            mean_recovery_ms: mean(recovery_times_ms.iter().map(|&r| r as f64)),
            recovery_times_ms,
        }
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values.iter().copied())?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}
