//! Resting baseline, per-indicator thresholds, 2-of-3 voting, the
//! task-duration latency rule and stress-episode bookkeeping.

use serde::{Deserialize, Serialize};

use crate::biosignal::VitalsEstimate;
use crate::error::{Error, Result};

/// Span of resting data a baseline must cover.
pub const BASELINE_SPAN_MS: f64 = 60_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub hr_mean_bpm: f64,
    pub sdnn_mean_ms: f64,
    pub acquisition_span_ms: f64,
}

/// Mean HR and SDNN over at least one minute of resting vitals.
pub fn acquire_baseline(vitals: &[VitalsEstimate]) -> Result<Baseline> {
    let (first, last) = match (vitals.first(), vitals.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InsufficientBaseline("no resting vitals".into())),
    };
    let span = last.window_end_ms - first.window_start_ms;
    if span < BASELINE_SPAN_MS {
        return Err(Error::InsufficientBaseline(format!(
            "resting vitals span {:.0} ms, need {:.0} ms",
            span, BASELINE_SPAN_MS
        )));
    }
    let n = vitals.len() as f64;
    let hr = vitals.iter().map(|v| v.hr_bpm).sum::<f64>() / n;
    let sdnn = vitals.iter().map(|v| v.sdnn_ms).sum::<f64>() / n;
    if !(hr > 0.0 && sdnn > 0.0) {
        return Err(Error::InsufficientBaseline(format!(
            "baseline means must be positive (hr {hr}, sdnn {sdnn})"
        )));
    }
    Ok(Baseline {
        hr_mean_bpm: hr,
        sdnn_mean_ms: sdnn,
        acquisition_span_ms: BASELINE_SPAN_MS,
    })
}

/// Ratio thresholds relative to baseline. Comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// HR is abnormal when `hr > hr_ratio * baseline`.
    pub hr_ratio: f64,
    /// SDNN is abnormal when `sdnn < sdnn_ratio * baseline`.
    pub sdnn_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hr_ratio: 1.30,
            sdnn_ratio: 0.65,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorFlags {
    pub hr_abnormal: bool,
    pub sdnn_abnormal: bool,
    pub gsr_abnormal: bool,
    pub t_ms: i64,
}

impl IndicatorFlags {
    pub fn count(&self) -> usize {
        [self.hr_abnormal, self.sdnn_abnormal, self.gsr_abnormal]
            .iter()
            .filter(|&&f| f)
            .count()
    }
}

/// Flag each indicator independently. Missing vitals (too few beats in the
/// window) flag neither HR nor SDNN.
pub fn evaluate_indicators(
    current: Option<&VitalsEstimate>,
    gsr_flag: bool,
    base: &Baseline,
    thresholds: &Thresholds,
    t_ms: i64,
) -> IndicatorFlags {
    let (hr_abnormal, sdnn_abnormal) = match current {
        Some(v) => (
            v.hr_bpm > thresholds.hr_ratio * base.hr_mean_bpm,
            v.sdnn_ms < thresholds.sdnn_ratio * base.sdnn_mean_ms,
        ),
        None => (false, false),
    };
    IndicatorFlags {
        hr_abnormal,
        sdnn_abnormal,
        gsr_abnormal: gsr_flag,
        t_ms,
    }
}

/// At least two of the three indicators.
pub fn assess(flags: &IndicatorFlags) -> bool {
    flags.count() >= 2
}

/// Decision-latency rule: elapsed time on the current step strictly exceeds
/// the threshold. `None` disables the monitor.
pub fn latency_monitor(phase_elapsed_ms: i64, threshold_ms: Option<i64>) -> bool {
    threshold_ms.is_some_and(|th| phase_elapsed_ms > th)
}

/// Combined decision: a latency flag forces the stressed state.
pub fn stressed(flags: &IndicatorFlags, latency_flag: bool) -> bool {
    latency_flag || assess(flags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressEpisode {
    pub onset_ms: i64,
    pub offset_ms: Option<i64>,
}

impl StressEpisode {
    pub fn recovery_time_ms(&self) -> Option<i64> {
        self.offset_ms.map(|off| off - self.onset_ms)
    }
}

/// Opens an episode on the first stressed assessment after a calm one and
/// closes it on the next calm assessment.
#[derive(Debug, Clone, Default)]
pub struct EpisodeTracker {
    episodes: Vec<StressEpisode>,
}

impl EpisodeTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t_ms: i64, stressed: bool) {
        match self.episodes.last_mut() {
            Some(ep) if ep.offset_ms.is_none() => {
                if !stressed {
                    ep.offset_ms = Some(t_ms);
                }
            }
            _ => {
                if stressed {
                    self.episodes.push(StressEpisode {
                        onset_ms: t_ms,
                        offset_ms: None,
                    });
                }
            }
        }
    }

    pub fn episodes(&self) -> &[StressEpisode] {
        &self.episodes
    }

    pub fn in_episode(&self) -> bool {
        self.episodes.last().is_some_and(|e| e.offset_ms.is_none())
    }

    pub fn recovery_times_ms(&self) -> Vec<i64> {
        self.episodes.iter().filter_map(|e| e.recovery_time_ms()).collect()
    }
}

pub fn track_episodes(assessments: impl IntoIterator<Item = (i64, bool)>) -> Vec<StressEpisode> {
    let mut tracker = EpisodeTracker::new();
    for (t, s) in assessments {
        tracker.push(t, s);
    }
    tracker.episodes
}
