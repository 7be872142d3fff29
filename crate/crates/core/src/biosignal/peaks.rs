use std::collections::VecDeque;

use super::PpgSample;

/// Tuning for the adaptive-threshold peak detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Minimum spacing between accepted beats.
    pub refractory_ms: f64,
    /// No beat is reported before this much signal has been seen.
    pub warmup_ms: f64,
    /// Span of the trailing min/max envelope.
    pub envelope_ms: f64,
    /// Threshold position between envelope min (0) and max (1).
    pub threshold_fraction: f64,
    /// Samples on each side a candidate must dominate.
    pub neighborhood: usize,
    /// Envelope ranges below this are treated as a flat signal.
    pub min_range: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            refractory_ms: 250.0,
            warmup_ms: 3000.0,
            envelope_ms: 2000.0,
            threshold_fraction: 0.6,
            neighborhood: 2,
            min_range: 1e-6,
        }
    }
}

/// Streaming local-maximum beat detector with an adaptive threshold and a
/// refractory period. Feed it smoothed samples; it reports beat times
/// refined by parabolic interpolation and rounded to whole microseconds.
#[derive(Debug, Clone)]
pub struct PeakDetector {
    params: PeakParams,
    start_t: Option<f64>,
    last_beat: Option<f64>,
    recent: VecDeque<PpgSample>,
    maxq: VecDeque<PpgSample>,
    minq: VecDeque<PpgSample>,
}

impl PeakDetector {
    pub fn new(params: PeakParams) -> Self {
        Self {
            params,
            start_t: None,
            last_beat: None,
            recent: VecDeque::with_capacity(2 * params.neighborhood + 2),
            maxq: VecDeque::new(),
            minq: VecDeque::new(),
        }
    }

    pub fn push(&mut self, s: PpgSample) -> Option<f64> {
        let n = self.params.neighborhood;
        self.start_t.get_or_insert(s.t_ms);

        while self.maxq.back().is_some_and(|b| b.value <= s.value) {
            self.maxq.pop_back();
        }
        self.maxq.push_back(s);
        while self.minq.back().is_some_and(|b| b.value >= s.value) {
            self.minq.pop_back();
        }
        self.minq.push_back(s);
        let horizon = s.t_ms - self.params.envelope_ms;
        while self.maxq.front().is_some_and(|f| f.t_ms < horizon) {
            self.maxq.pop_front();
        }
        while self.minq.front().is_some_and(|f| f.t_ms < horizon) {
            self.minq.pop_front();
        }

        self.recent.push_back(s);
        if self.recent.len() > 2 * n + 1 {
            self.recent.pop_front();
        }
        if self.recent.len() < 2 * n + 1 {
            return None;
        }
        self.check_candidate()
    }

    fn check_candidate(&mut self) -> Option<f64> {
        let n = self.params.neighborhood;
        let c = self.recent[n];
        let left_ok = (0..n).all(|k| self.recent[k].value < c.value);
        let right_ok = (n + 1..2 * n + 1).all(|k| self.recent[k].value <= c.value);
        if !(left_ok && right_ok) {
            return None;
        }
        let hi = self.maxq.front()?.value;
        let lo = self.minq.front()?.value;
        let range = hi - lo;
        if range < self.params.min_range {
            return None;
        }
        if c.value <= lo + self.params.threshold_fraction * range {
            return None;
        }
        if c.t_ms - self.start_t.unwrap_or(c.t_ms) < self.params.warmup_ms {
            return None;
        }
        let t = self.refine(n);
        if let Some(prev) = self.last_beat {
            if t - prev < self.params.refractory_ms {
                return None;
            }
        }
        self.last_beat = Some(t);
        Some(t)
    }

    fn refine(&self, n: usize) -> f64 {
        let (a, b, c) = (self.recent[n - 1], self.recent[n], self.recent[n + 1]);
        let denom = a.value - 2.0 * b.value + c.value;
        let mut delta = if denom.abs() > f64::EPSILON {
            0.5 * (a.value - c.value) / denom
        } else {
            0.0
        };
        delta = delta.clamp(-0.5, 0.5);
        let t = b.t_ms + delta * 0.5 * (c.t_ms - a.t_ms);
        (t * 1000.0).round() / 1000.0
    }
}

/// Beat times (ms) of a filtered PPG stream.
pub fn detect_peaks(filtered: &[PpgSample]) -> Vec<f64> {
    detect_peaks_with(filtered, PeakParams::default())
}

pub fn detect_peaks_with(filtered: &[PpgSample], params: PeakParams) -> Vec<f64> {
    let mut det = PeakDetector::new(params);
    filtered.iter().filter_map(|&s| det.push(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_signal_has_no_beats() {
        let s: Vec<PpgSample> = (0..2000)
            .map(|i| PpgSample { t_ms: i as f64 * 8.0, value: 0.7 })
            .collect();
        assert!(detect_peaks(&s).is_empty());
    }

    #[test]
    fn refractory_and_warmup_enforced() {
        // a spike every 100 ms: only one per 250 ms may pass, none in the first 3 s
        let s: Vec<PpgSample> = (0..1250)
            .map(|i| PpgSample {
                t_ms: i as f64 * 8.0,
                value: if i % 12 == 6 { 1.0 } else { 0.0 },
            })
            .collect();
        let beats = detect_peaks(&s);
        assert!(!beats.is_empty());
        assert!(beats[0] >= 3000.0);
        for w in beats.windows(2) {
            assert!(w[1] - w[0] >= 250.0);
        }
    }

    #[test]
    fn parabolic_refinement_finds_true_apex() {
        // y = 1 - (t - 101)^2 / 1e4 sampled every 8 ms around the apex, repeated
        let mut s = Vec::new();
        for i in 0..1500 {
            let t = i as f64 * 8.0;
            let phase = (t - 101.0).rem_euclid(1000.0);
            let d = phase.min(1000.0 - phase);
            s.push(PpgSample { t_ms: t, value: 1.0 - d * d / 1e4 });
        }
        let beats = detect_peaks(&s);
        for b in &beats {
            let off = (b - 101.0).rem_euclid(1000.0);
            assert!(off.min(1000.0 - off) < 0.01, "beat at {b}");
        }
    }
}
