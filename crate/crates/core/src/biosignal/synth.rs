use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GsrSample, PpgSample, PPG_SAMPLE_PERIOD_MS};
use crate::error::{Error, Result};

/// Shape and variability of the synthetic pulse wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpgSynthParams {
    pub sample_period_ms: f64,
    pub noise_sd: f64,
    pub systolic_delay_ms: f64,
    pub systolic_width_ms: f64,
    pub dicrotic_delay_ms: f64,
    pub dicrotic_width_ms: f64,
    pub dicrotic_amplitude: f64,
    /// Respiratory modulation period of the beat intervals.
    pub rsa_period_ms: f64,
    /// Share of the interval variance carried by respiratory modulation;
    /// the rest is white jitter.
    pub rsa_share: f64,
    pub wander_amplitude: f64,
    /// Beat indices whose pulse is omitted from the waveform.
    pub dropped_beats: Vec<usize>,
}

impl Default for PpgSynthParams {
    fn default() -> Self {
        Self {
            sample_period_ms: PPG_SAMPLE_PERIOD_MS,
            noise_sd: 0.02,
            systolic_delay_ms: 120.0,
            systolic_width_ms: 40.0,
            dicrotic_delay_ms: 300.0,
            dicrotic_width_ms: 50.0,
            dicrotic_amplitude: 0.3,
            rsa_period_ms: 5000.0,
            rsa_share: 0.8,
            wander_amplitude: 0.05,
            dropped_beats: Vec::new(),
        }
    }
}

const PULSE_SPAN_MS: f64 = 700.0;
const PULSE_LEAD_MS: f64 = 100.0;

/// Seeded streaming PPG generator. Heart rate and SDNN targets may change
/// between calls; each new beat interval uses the targets current at the
/// time it is scheduled.
#[derive(Debug, Clone)]
pub struct PpgSynth {
    params: PpgSynthParams,
    rng: ChaCha8Rng,
    next_sample_t: f64,
    next_beat_t: Option<f64>,
    beat_index: usize,
    active: VecDeque<(f64, f64)>,
    rsa_phase: f64,
    wander_phase: f64,
    beats: Vec<f64>,
}

impl PpgSynth {
    pub fn new(seed: u64) -> Self {
        Self::with_params(seed, PpgSynthParams::default())
    }

    pub fn with_params(seed: u64, params: PpgSynthParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rsa_phase = rng.random::<f64>() * 2.0 * PI;
        let wander_phase = rng.random::<f64>() * 2.0 * PI;
        Self {
            params,
            rng,
            next_sample_t: 0.0,
            next_beat_t: None,
            beat_index: 0,
            active: VecDeque::new(),
            rsa_phase,
            wander_phase,
            beats: Vec::new(),
        }
    }

    /// Ground-truth pulse onsets generated so far, including dropped ones.
    pub fn beat_onsets(&self) -> &[f64] {
        &self.beats
    }

    /// Timestamp of the next sample to be produced.
    pub fn next_sample_t(&self) -> f64 {
        self.next_sample_t
    }

    /// Produce every sample with `t < t_end_ms`.
    pub fn generate_until(
        &mut self,
        t_end_ms: f64,
        bpm: f64,
        sdnn_ms: f64,
        out: &mut Vec<PpgSample>,
    ) -> Result<()> {
        if !(bpm.is_finite() && bpm > 0.0) {
            return Err(Error::Config(format!("heart rate must be positive, got {bpm}")));
        }
        if !(sdnn_ms.is_finite() && sdnn_ms >= 0.0) {
            return Err(Error::Config(format!("SDNN target must be >= 0, got {sdnn_ms}")));
        }
        let p = &self.params;
        while self.next_sample_t < t_end_ms {
            let t = self.next_sample_t;
            let mut next_beat = match self.next_beat_t {
                Some(b) => b,
                None => (t + PULSE_LEAD_MS + self.rng.random::<f64>() * 500.0).round(),
            };
            while next_beat <= t + PULSE_LEAD_MS {
                let amp = if p.dropped_beats.contains(&self.beat_index) {
                    0.0
                } else {
                    1.0 + 0.05 * self.rng.sample::<f64, _>(StandardNormal)
                };
                self.beats.push(next_beat);
                self.active.push_back((next_beat, amp));
                self.beat_index += 1;
                let mean = 60_000.0 / bpm;
                let rsa_amp = (2.0 * p.rsa_share).sqrt() * sdnn_ms;
                let jitter_sd = (1.0 - p.rsa_share).max(0.0).sqrt() * sdnn_ms;
                let rsa = rsa_amp * (2.0 * PI * next_beat / p.rsa_period_ms + self.rsa_phase).sin();
                let jitter = jitter_sd * self.rng.sample::<f64, _>(StandardNormal);
                next_beat += (mean + rsa + jitter).clamp(280.0, 1900.0);
            }
            self.next_beat_t = Some(next_beat);
            while self.active.front().is_some_and(|&(onset, _)| t - onset > PULSE_SPAN_MS) {
                self.active.pop_front();
            }
            let mut v = 0.0;
            for &(onset, amp) in &self.active {
                let tau = t - onset;
                let sys = (tau - p.systolic_delay_ms) / p.systolic_width_ms;
                let dic = (tau - p.dicrotic_delay_ms) / p.dicrotic_width_ms;
                v += amp * ((-0.5 * sys * sys).exp() + p.dicrotic_amplitude * (-0.5 * dic * dic).exp());
            }
            v += p.wander_amplitude * (2.0 * PI * t / p.rsa_period_ms + self.wander_phase).sin();
            v += p.noise_sd * self.rng.sample::<f64, _>(StandardNormal);
            out.push(PpgSample { t_ms: t, value: v });
            self.next_sample_t += p.sample_period_ms;
        }
        Ok(())
    }
}

/// Whole-stream PPG synthesis output.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedPpg {
    pub samples: Vec<PpgSample>,
    /// Ground-truth pulse onsets.
    pub beat_onsets_ms: Vec<f64>,
}

const PROFILE_STEP_MS: f64 = 100.0;

/// Synthesize `duration_ms` of PPG following `hr_profile` (time in ms to bpm).
pub fn synthesize_ppg(
    duration_ms: f64,
    hr_profile: impl Fn(f64) -> f64,
    sdnn_target_ms: f64,
    seed: u64,
) -> Result<SynthesizedPpg> {
    synthesize_ppg_with(duration_ms, hr_profile, sdnn_target_ms, seed, PpgSynthParams::default())
}

pub fn synthesize_ppg_with(
    duration_ms: f64,
    hr_profile: impl Fn(f64) -> f64,
    sdnn_target_ms: f64,
    seed: u64,
    params: PpgSynthParams,
) -> Result<SynthesizedPpg> {
    let mut synth = PpgSynth::with_params(seed, params);
    let mut samples = Vec::with_capacity((duration_ms / PPG_SAMPLE_PERIOD_MS) as usize + 1);
    let mut t = 0.0;
    while t < duration_ms {
        let end = (t + PROFILE_STEP_MS).min(duration_ms);
        synth.generate_until(end, hr_profile(t), sdnn_target_ms, &mut samples)?;
        t = end;
    }
    Ok(SynthesizedPpg {
        samples,
        beat_onsets_ms: synth.beat_onsets().to_vec(),
    })
}

/// Skin-conductance generator parameters.
///
/// Conductance is `base * (1 + tonic_gain * a_lp) * exp(g)` where `a_lp` is
/// the low-passed arousal and `g` integrates arousal above
/// `habituation_level` at `growth_rate_per_s`, relaxing back to zero once
/// arousal falls below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GsrSynthParams {
    pub sample_period_ms: f64,
    pub base_conductance: f64,
    pub tonic_gain: f64,
    pub tonic_tau_ms: f64,
    pub growth_rate_per_s: f64,
    pub habituation_level: f64,
    pub recovery_tau_ms: f64,
    pub max_growth: f64,
    pub noise_fraction: f64,
}

impl Default for GsrSynthParams {
    fn default() -> Self {
        Self {
            sample_period_ms: 100.0,
            base_conductance: 2.0,
            tonic_gain: 0.3,
            tonic_tau_ms: 2000.0,
            growth_rate_per_s: 0.25,
            habituation_level: 0.55,
            recovery_tau_ms: 20_000.0,
            max_growth: 4.0,
            noise_fraction: 0.002,
        }
    }
}

/// Seeded streaming skin-conductance generator driven by arousal in [0, 1].
#[derive(Debug, Clone)]
pub struct GsrSynth {
    params: GsrSynthParams,
    rng: ChaCha8Rng,
    next_sample_t: f64,
    tonic: f64,
    growth: f64,
}

impl GsrSynth {
    pub fn new(seed: u64, params: GsrSynthParams) -> Self {
        Self {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_sample_t: 0.0,
            tonic: 0.0,
            growth: 0.0,
        }
    }

    pub fn generate_until(&mut self, t_end_ms: f64, arousal: f64, out: &mut Vec<GsrSample>) -> Result<()> {
        if !(0.0..=1.0).contains(&arousal) {
            return Err(Error::Config(format!("arousal must lie in [0, 1], got {arousal}")));
        }
        let p = &self.params;
        let dt = p.sample_period_ms;
        let tonic_keep = (-dt / p.tonic_tau_ms).exp();
        let relax = (-dt / p.recovery_tau_ms).exp();
        while self.next_sample_t < t_end_ms {
            self.tonic = arousal + (self.tonic - arousal) * tonic_keep;
            if arousal > p.habituation_level {
                self.growth += p.growth_rate_per_s * (arousal - p.habituation_level) * dt / 1000.0;
                self.growth = self.growth.min(p.max_growth);
            } else {
                self.growth *= relax;
            }
            let clean = p.base_conductance * (1.0 + p.tonic_gain * self.tonic) * self.growth.exp();
            let noise = 1.0 + p.noise_fraction * self.rng.sample::<f64, _>(StandardNormal);
            out.push(GsrSample {
                t_ms: self.next_sample_t,
                conductance: (clean * noise).max(0.0),
            });
            self.next_sample_t += dt;
        }
        Ok(())
    }
}

/// Synthesize `duration_ms` of skin conductance following `arousal_profile`.
pub fn synthesize_gsr(
    duration_ms: f64,
    arousal_profile: impl Fn(f64) -> f64,
    seed: u64,
) -> Result<Vec<GsrSample>> {
    let mut synth = GsrSynth::new(seed, GsrSynthParams::default());
    let mut out = Vec::with_capacity((duration_ms / 100.0) as usize + 1);
    let mut t = 0.0;
    while t < duration_ms {
        let end = (t + PROFILE_STEP_MS).min(duration_ms);
        synth.generate_until(end, arousal_profile(t), &mut out)?;
        t = end;
    }
    Ok(out)
}
