use crate::agent::{drive_signals, SignalDrive};
use crate::biosignal::{GsrSample, GsrSynth, GsrWindow, PpgSample, PpgSynth, VitalsEstimate, VitalsTracker};
use crate::config::SimConfig;
use crate::detection::{acquire_baseline, Baseline};
use crate::error::{Error, Result};
use crate::seed::combine;

use super::{SALT_GSR, SALT_PPG};

/// Measurement side of a session: vitals tracking and the GSR window, fed
/// either by seeded synthesizers or by externally streamed samples.
///
/// Signal time runs ahead of scenario time by the baseline duration.
#[derive(Debug, Clone)]
pub struct SignalPipeline {
    offset_ms: f64,
    vitals: VitalsTracker,
    gsr: GsrWindow,
    synth: Option<(PpgSynth, GsrSynth)>,
    ppg_buf: Vec<PpgSample>,
    gsr_buf: Vec<GsrSample>,
    resting_estimates: usize,
    rest: RestingWindow,
}

/// Baseline bookkeeping for streamed samples: vitals are taken at every
/// assessment boundary of the resting period.
#[derive(Debug, Clone)]
struct RestingWindow {
    step_ms: i64,
    first_mark_ms: i64,
    end_ms: i64,
    next_mark_ms: i64,
    estimates: Vec<VitalsEstimate>,
    last_ppg_ms: Option<f64>,
}

impl SignalPipeline {
    pub fn live(config: &SimConfig) -> Result<Self> {
        Ok(Self {
            offset_ms: config.baseline_ms as f64,
            vitals: VitalsTracker::new(config.vitals.smoothing_len, config.vitals.window_ms)?,
            gsr: GsrWindow::new(config.gsr),
            synth: None,
            ppg_buf: Vec::new(),
            gsr_buf: Vec::new(),
            resting_estimates: 0,
            rest: RestingWindow {
                step_ms: config.assessment_interval_ms,
                first_mark_ms: config.vitals.window_ms.ceil() as i64,
                end_ms: config.baseline_ms,
                next_mark_ms: config.assessment_interval_ms,
                estimates: Vec::new(),
                last_ppg_ms: None,
            },
        })
    }

    pub fn synthetic(config: &SimConfig, seed: u64) -> Result<Self> {
        let mut p = Self::live(config)?;
        p.synth = Some((
            PpgSynth::with_params(combine(&[seed, SALT_PPG]), config.signals.ppg.clone()),
            GsrSynth::new(combine(&[seed, SALT_GSR]), config.signals.gsr.clone()),
        ));
        Ok(p)
    }

    pub fn offset_ms(&self) -> f64 {
        self.offset_ms
    }

    pub fn resting_estimates(&self) -> usize {
        self.resting_estimates
    }

    /// Synthesize the resting period at zero stress and derive the baseline.
    pub fn acquire_baseline(&mut self, config: &SimConfig, hr: f64, sdnn: f64) -> Result<Baseline> {
        let drive = drive_signals(&config.agent, hr, sdnn, 0.0);
        let mut estimates = Vec::new();
        let step = config.assessment_interval_ms;
        let mut t = 0;
        while t < config.baseline_ms {
            t = (t + step).min(config.baseline_ms);
            self.synthesize_until(t as f64, drive)?;
            if t as f64 >= config.vitals.window_ms {
                if let Ok(v) = self.vitals.estimate(t as f64) {
                    estimates.push(v);
                }
            }
        }
        self.resting_estimates = estimates.len();
        acquire_baseline(&estimates)
    }

    fn synthesize_until(&mut self, signal_t: f64, drive: SignalDrive) -> Result<()> {
        let Some((ppg, gsr)) = self.synth.as_mut() else {
            return Ok(());
        };
        self.ppg_buf.clear();
        ppg.generate_until(signal_t, drive.hr_bpm, drive.sdnn_ms, &mut self.ppg_buf)?;
        self.vitals.extend(&self.ppg_buf)?;
        self.gsr_buf.clear();
        gsr.generate_until(signal_t, drive.gsr_arousal.clamp(0.0, 1.0), &mut self.gsr_buf)?;
        for &s in &self.gsr_buf {
            self.gsr.push(s)?;
        }
        Ok(())
    }

    /// Synthesize signals up to scenario time `t_ms`.
    pub fn advance_synthetic(&mut self, t_ms: i64, drive: SignalDrive) -> Result<()> {
        self.synthesize_until(self.offset_ms + t_ms as f64, drive)
    }

    /// Feed one externally streamed PPG sample (signal time). Samples must
    /// be strictly increasing in time.
    pub fn push_ppg(&mut self, s: PpgSample) -> Result<()> {
        if let Some(prev) = self.rest.last_ppg_ms {
            if !(s.t_ms > prev) {
                return Err(Error::NonMonotonicTimestamps {
                    prev_ms: prev,
                    t_ms: s.t_ms,
                });
            }
        }
        if !s.value.is_finite() {
            return Err(Error::InsufficientData(format!("invalid PPG value {}", s.value)));
        }
        self.take_resting_marks(s.t_ms);
        self.vitals.push(s)?;
        self.rest.last_ppg_ms = Some(s.t_ms);
        Ok(())
    }

    fn take_resting_marks(&mut self, before_ms: f64) {
        let r = &mut self.rest;
        while r.next_mark_ms <= r.end_ms && (r.next_mark_ms as f64) < before_ms {
            if r.next_mark_ms >= r.first_mark_ms {
                if let Ok(v) = self.vitals.estimate(r.next_mark_ms as f64) {
                    r.estimates.push(v);
                }
            }
            r.next_mark_ms += r.step_ms;
        }
    }

    /// Signal time of the last streamed PPG sample.
    pub fn last_ppg_ms(&self) -> Option<f64> {
        self.rest.last_ppg_ms
    }

    /// Baseline from streamed resting samples. The PPG stream must already
    /// reach the end of the resting period.
    pub fn finish_streamed_baseline(&mut self) -> Result<Baseline> {
        let reached = self.rest.last_ppg_ms.unwrap_or(f64::NEG_INFINITY);
        if reached < self.rest.end_ms as f64 {
            return Err(Error::InsufficientBaseline(format!(
                "resting PPG reaches {reached:.0} ms of {} ms",
                self.rest.end_ms
            )));
        }
        self.take_resting_marks(f64::INFINITY);
        self.resting_estimates = self.rest.estimates.len();
        acquire_baseline(&self.rest.estimates)
    }

    pub fn push_gsr(&mut self, s: GsrSample) -> Result<()> {
        self.gsr.push(s)
    }

    /// Vitals and GSR flag at scenario time `t_ms`; vitals windows are
    /// reported in scenario time.
    pub fn measure(&mut self, t_ms: i64) -> (Option<VitalsEstimate>, bool) {
        let signal_t = self.offset_ms + t_ms as f64;
        let vitals = self.vitals.estimate(signal_t).ok().map(|v| VitalsEstimate {
            window_start_ms: v.window_start_ms - self.offset_ms,
            window_end_ms: v.window_end_ms - self.offset_ms,
            ..v
        });
        (vitals, self.gsr.flag().unwrap_or(false))
    }

    /// Vitals at signal time, for baseline acquisition from streamed data.
    pub fn estimate_at_signal_time(&mut self, signal_t: f64) -> Option<VitalsEstimate> {
        self.vitals.estimate(signal_t).ok()
    }
}
