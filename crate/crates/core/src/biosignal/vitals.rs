use std::collections::VecDeque;

use super::{
    peaks::PeakDetector, vitals_from_beats, MovingAverage, PeakParams, PpgSample, VitalsEstimate,
};
use crate::error::Result;

/// Streaming PPG pipeline: smoothing, beat extraction and sliding-window
/// HR/SDNN.
#[derive(Debug, Clone)]
pub struct VitalsTracker {
    window_ms: f64,
    smoother: MovingAverage,
    detector: PeakDetector,
    beats: VecDeque<f64>,
    scratch: Vec<PpgSample>,
    beat_count: usize,
}

impl VitalsTracker {
    pub const DEFAULT_SMOOTHING: usize = 9;
    pub const DEFAULT_WINDOW_MS: f64 = 10_000.0;

    pub fn new(smoothing_len: usize, window_ms: f64) -> Result<Self> {
        Ok(Self {
            window_ms,
            smoother: MovingAverage::new(smoothing_len)?,
            detector: PeakDetector::new(PeakParams::default()),
            beats: VecDeque::new(),
            scratch: Vec::with_capacity(4),
            beat_count: 0,
        })
    }

    pub fn push(&mut self, sample: PpgSample) -> Result<()> {
        self.scratch.clear();
        self.smoother.push(sample, &mut self.scratch)?;
        for i in 0..self.scratch.len() {
            if let Some(b) = self.detector.push(self.scratch[i]) {
                self.beats.push_back(b);
                self.beat_count += 1;
            }
        }
        Ok(())
    }

    pub fn extend(&mut self, samples: &[PpgSample]) -> Result<()> {
        samples.iter().try_for_each(|&s| self.push(s))
    }

    /// Total beats detected since construction.
    pub fn beat_count(&self) -> usize {
        self.beat_count
    }

    /// HR/SDNN over `[end - window, end]`. Older beats are discarded.
    pub fn estimate(&mut self, end_ms: f64) -> Result<VitalsEstimate> {
        let start = end_ms - self.window_ms;
        while self.beats.front().is_some_and(|&b| b < start - self.window_ms) {
            self.beats.pop_front();
        }
        let beats = self.beats.make_contiguous();
        vitals_from_beats(beats, start, end_ms)
    }
}
