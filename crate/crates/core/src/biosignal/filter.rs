use std::collections::VecDeque;

use super::PpgSample;
use crate::error::{Error, Result};

/// Streaming centered moving average.
///
/// Samples near either end of the stream are averaged over a shrunken
/// symmetric window, so a constant stream passes through unchanged and the
/// output has exactly one sample per input sample with the same timestamp.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    half: usize,
    buf: VecDeque<PpgSample>,
    // stream index of buf[0]
    base: usize,
    next_out: usize,
    pushed: usize,
    last_t: Option<f64>,
}

impl MovingAverage {
    pub fn new(window_len: usize) -> Result<Self> {
        if window_len == 0 || window_len % 2 == 0 {
            return Err(Error::Config(format!(
                "moving average window must be odd and >= 1, got {window_len}"
            )));
        }
        Ok(Self {
            half: window_len / 2,
            buf: VecDeque::with_capacity(window_len + 1),
            base: 0,
            next_out: 0,
            pushed: 0,
            last_t: None,
        })
    }

    /// Push one sample, appending every output that became final.
    pub fn push(&mut self, sample: PpgSample, out: &mut Vec<PpgSample>) -> Result<()> {
        if let Some(prev) = self.last_t {
            if !(sample.t_ms > prev) {
                return Err(Error::NonMonotonicTimestamps {
                    prev_ms: prev,
                    t_ms: sample.t_ms,
                });
            }
        }
        self.last_t = Some(sample.t_ms);
        self.buf.push_back(sample);
        self.pushed += 1;
        let newest = self.pushed - 1;
        while self.next_out <= newest && self.next_out + self.half.min(self.next_out) <= newest {
            let h = self.half.min(self.next_out);
            out.push(self.average(self.next_out, h));
            self.next_out += 1;
        }
        while self.base + self.half < self.next_out {
            self.buf.pop_front();
            self.base += 1;
        }
        Ok(())
    }

    /// Flush the tail of the stream using shrunken windows.
    pub fn finish(&mut self, out: &mut Vec<PpgSample>) {
        if self.pushed == 0 {
            return;
        }
        let last = self.pushed - 1;
        while self.next_out <= last {
            let i = self.next_out;
            let h = self.half.min(i).min(last - i);
            out.push(self.average(i, h));
            self.next_out += 1;
        }
    }

    fn average(&self, center: usize, h: usize) -> PpgSample {
        let lo = center - h - self.base;
        let hi = center + h - self.base;
        let sum: f64 = (lo..=hi).map(|k| self.buf[k].value).sum();
        PpgSample {
            t_ms: self.buf[center - self.base].t_ms,
            value: sum / (2 * h + 1) as f64,
        }
    }
}

/// Centered moving average over a whole stream.
pub fn moving_average(samples: &[PpgSample], window_len: usize) -> Result<Vec<PpgSample>> {
    let mut ma = MovingAverage::new(window_len)?;
    let mut out = Vec::with_capacity(samples.len());
    for &s in samples {
        ma.push(s, &mut out)?;
    }
    ma.finish(&mut out);
    Ok(out)
}
