//! PPG/GSR processing: smoothing, beat extraction, HR/SDNN, skin-conductance
//! fluctuation flags, and seeded signal synthesis.

mod filter;
mod gsr;
mod hrv;
mod peaks;
mod synth;
mod vitals;

use serde::{Deserialize, Serialize};

pub use filter::{moving_average, MovingAverage};
pub use gsr::{gsr_fluctuation, GsrFluctuationParams, GsrWindow};
pub use hrv::{compute_hr, compute_sdnn, vitals_from_beats, NnSeries};
pub use peaks::{detect_peaks, detect_peaks_with, PeakDetector, PeakParams};
pub use synth::{
    synthesize_gsr, synthesize_ppg, synthesize_ppg_with, GsrSynth, GsrSynthParams, PpgSynth, PpgSynthParams,
    SynthesizedPpg,
};
pub use vitals::VitalsTracker;

/// Nominal PPG sample spacing (125 Hz).
pub const PPG_SAMPLE_PERIOD_MS: f64 = 8.0;

/// One optical pulse sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpgSample {
    pub t_ms: f64,
    pub value: f64,
}

/// One skin-conductance sample in microsiemens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsrSample {
    pub t_ms: f64,
    pub conductance: f64,
}

/// Heart rate and SDNN over one sliding window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalsEstimate {
    pub hr_bpm: f64,
    pub sdnn_ms: f64,
    pub window_start_ms: f64,
    pub window_end_ms: f64,
}
