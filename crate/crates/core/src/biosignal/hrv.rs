use serde::{Deserialize, Serialize};

use super::VitalsEstimate;
use crate::error::{Error, Result};

/// Inter-beat intervals that passed the physiological plausibility gate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NnSeries {
    intervals_ms: Vec<f64>,
}

impl NnSeries {
    pub const MIN_INTERVAL_MS: f64 = 250.0;
    /// Exclusive upper bound: a single dropped beat at 60 bpm (2000 ms) is rejected.
    pub const MAX_INTERVAL_MS: f64 = 2000.0;

    pub fn is_plausible(interval_ms: f64) -> bool {
        interval_ms.is_finite()
            && interval_ms >= Self::MIN_INTERVAL_MS
            && interval_ms < Self::MAX_INTERVAL_MS
    }

    /// Gate raw intervals, silently dropping implausible ones.
    pub fn from_intervals<I: IntoIterator<Item = f64>>(intervals: I) -> Self {
        Self {
            intervals_ms: intervals.into_iter().filter(|&x| Self::is_plausible(x)).collect(),
        }
    }

    /// Intervals between consecutive beats. Differences are taken on whole
    /// microseconds so equal spacings compare exactly.
    pub fn from_beats(beats_ms: &[f64]) -> Self {
        Self::from_intervals(beats_ms.windows(2).map(|w| {
            let a = (w[0] * 1000.0).round() as i64;
            let b = (w[1] * 1000.0).round() as i64;
            (b - a) as f64 / 1000.0
        }))
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals_ms
    }

    pub fn len(&self) -> usize {
        self.intervals_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals_ms.is_empty()
    }
}

/// Heart rate in bpm: 60000 / mean interval.
pub fn compute_hr(nn: &NnSeries) -> Result<f64> {
    if nn.is_empty() {
        return Err(Error::InsufficientData(
            "heart rate needs at least one NN interval".into(),
        ));
    }
    let mean = nn.intervals().iter().sum::<f64>() / nn.len() as f64;
    Ok(60_000.0 / mean)
}

/// Population standard deviation of the NN intervals.
pub fn compute_sdnn(nn: &NnSeries) -> Result<f64> {
    if nn.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "SDNN needs at least two NN intervals, got {}",
            nn.len()
        )));
    }
    let n = nn.len() as f64;
    let mean = nn.intervals().iter().sum::<f64>() / n;
    let ss: f64 = nn.intervals().iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok((ss / n).sqrt())
}

/// HR and SDNN from the beats falling inside `[start, end]`.
pub fn vitals_from_beats(beats_ms: &[f64], start_ms: f64, end_ms: f64) -> Result<VitalsEstimate> {
    let lo = beats_ms.partition_point(|&b| b < start_ms);
    let hi = beats_ms.partition_point(|&b| b <= end_ms);
    let nn = NnSeries::from_beats(&beats_ms[lo..hi]);
    Ok(VitalsEstimate {
        hr_bpm: compute_hr(&nn)?,
        sdnn_ms: compute_sdnn(&nn)?,
        window_start_ms: start_ms,
        window_end_ms: end_ms,
    })
}
