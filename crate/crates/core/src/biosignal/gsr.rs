use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::GsrSample;
use crate::error::{Error, Result};

/// Skin-conductance fluctuation rule: the trailing mean rising above the
/// rolling reference mean by more than `rise_fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GsrFluctuationParams {
    pub reference_ms: f64,
    pub trailing_ms: f64,
    pub rise_fraction: f64,
}

impl Default for GsrFluctuationParams {
    fn default() -> Self {
        Self {
            reference_ms: 5000.0,
            trailing_ms: 1000.0,
            rise_fraction: 0.10,
        }
    }
}

/// Evaluate the fluctuation rule at the end of `window`.
///
/// The reference mean covers `[end - reference_ms, end]`, the trailing mean
/// covers `(end - trailing_ms, end]`. The window must reach back at least
/// `reference_ms` from its last sample.
pub fn gsr_fluctuation(window: &[GsrSample], params: &GsrFluctuationParams) -> Result<bool> {
    let (first, last) = match (window.first(), window.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InsufficientData("empty GSR window".into())),
    };
    let end = last.t_ms;
    if end - first.t_ms < params.reference_ms {
        return Err(Error::InsufficientData(format!(
            "GSR window spans {:.0} ms, reference needs {:.0} ms",
            end - first.t_ms,
            params.reference_ms
        )));
    }
    let mean_since = |from: f64, inclusive: bool| {
        let (sum, n) = window
            .iter()
            .rev()
            .take_while(|s| if inclusive { s.t_ms >= from } else { s.t_ms > from })
            .fold((0.0, 0usize), |(sum, n), s| (sum + s.conductance, n + 1));
        sum / n as f64
    };
    let reference = mean_since(end - params.reference_ms, true);
    let trailing = mean_since(end - params.trailing_ms, false);
    Ok(trailing > reference * (1.0 + params.rise_fraction))
}

/// Rolling buffer of recent GSR samples for periodic flag evaluation.
#[derive(Debug, Clone)]
pub struct GsrWindow {
    params: GsrFluctuationParams,
    samples: VecDeque<GsrSample>,
}

impl GsrWindow {
    pub fn new(params: GsrFluctuationParams) -> Self {
        Self {
            params,
            samples: VecDeque::new(),
        }
    }

    pub fn push(&mut self, s: GsrSample) -> Result<()> {
        if let Some(prev) = self.samples.back() {
            if !(s.t_ms > prev.t_ms) {
                return Err(Error::NonMonotonicTimestamps {
                    prev_ms: prev.t_ms,
                    t_ms: s.t_ms,
                });
            }
        }
        if !(s.conductance.is_finite() && s.conductance >= 0.0) {
            return Err(Error::InsufficientData(format!(
                "invalid conductance {}",
                s.conductance
            )));
        }
        self.samples.push_back(s);
        // keep exactly one sample at or before the reference horizon
        let horizon = s.t_ms - self.params.reference_ms;
        while self.samples.len() > 1 && self.samples[1].t_ms <= horizon {
            self.samples.pop_front();
        }
        Ok(())
    }

    pub fn flag(&self) -> Result<bool> {
        let v: Vec<GsrSample> = self.samples.iter().copied().collect();
        gsr_fluctuation(&v, &self.params)
    }

    pub fn mean_conductance(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        Some(self.samples.iter().map(|s| s.conductance).sum::<f64>() / self.samples.len() as f64)
    }

    pub fn last_t(&self) -> Option<f64> {
        self.samples.back().map(|s| s.t_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(values: impl Fn(usize) -> f64, n: usize) -> Vec<GsrSample> {
        (0..n)
            .map(|i| GsrSample { t_ms: i as f64 * 100.0, conductance: values(i) })
            .collect()
    }

    #[test]
    fn constant_is_quiet() {
        let w = window(|_| 2.0, 51);
        assert!(!gsr_fluctuation(&w, &GsrFluctuationParams::default()).unwrap());
    }

    #[test]
    fn fifteen_percent_rise_flags_five_does_not() {
        // 51 samples over 5 s; the last 10 form the trailing second
        let build = |trailing: f64| {
            let rest = (2.0 * 51.0 - 10.0 * trailing) / 41.0;
            window(move |i| if i > 40 { trailing } else { rest }, 51)
        };
        let p = GsrFluctuationParams::default();
        let hi = build(2.3);
        let ref_mean = hi.iter().map(|s| s.conductance).sum::<f64>() / 51.0;
        assert!((ref_mean - 2.0).abs() < 1e-12);
        assert!(gsr_fluctuation(&hi, &p).unwrap());
        assert!(!gsr_fluctuation(&build(2.1), &p).unwrap());
    }

    #[test]
    fn short_window_is_an_error() {
        let w = window(|_| 2.0, 30);
        assert!(matches!(
            gsr_fluctuation(&w, &GsrFluctuationParams::default()),
            Err(Error::InsufficientData(_))
        ));
        assert!(gsr_fluctuation(&[], &GsrFluctuationParams::default()).is_err());
    }

    #[test]
    fn rolling_window_keeps_reference_span() {
        let mut w = GsrWindow::new(GsrFluctuationParams::default());
        assert!(w.flag().is_err());
        for s in window(|_| 2.0, 200) {
            w.push(s).unwrap();
        }
        assert!(!w.flag().unwrap());
        assert_eq!(w.samples.len(), 51);
        assert!(w.push(GsrSample { t_ms: 0.0, conductance: 2.0 }).is_err());
    }
}
