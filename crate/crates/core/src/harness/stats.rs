//! Welch's unequal-variance t test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::metrics::mean;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t_statistic: f64,
    pub df: f64,
    /// Two-sided, from the Student t distribution at the Welch degrees of
    /// freedom. Approximate.
    pub p_value: f64,
}

/// `None` when either sample has fewer than two values or both variances
/// vanish.
pub fn welch_t(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let var = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64;
    let (ma, mb) = (mean(a.iter().copied())?, mean(b.iter().copied())?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (var(a, ma) / na, var(b, mb) / nb);
    let se2 = qa + qb;
    if !(se2 > 0.0) {
        return None;
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Some(WelchTest {
        t_statistic: t,
        df,
        p_value: p,
    })
}
