//! Scoring of the 19-item preference questionnaire into an intervention
//! profile.
//!
//! Items 1-6 weigh internal against external locus of control, 7-8 gate the
//! two self-regulation aids, 9-13 measure need for structure (procedure
//! guidance and its latency threshold), 14-17 gate companion support and
//! 18-19 gate noise reduction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ITEM_COUNT: usize = 19;

/// Likert answers, item 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "QuestionnaireWire", into = "QuestionnaireWire")]
pub struct QuestionnaireResponse {
    items: [u8; ITEM_COUNT],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionnaireWire {
    items: Vec<i64>,
}

impl TryFrom<QuestionnaireWire> for QuestionnaireResponse {
    type Error = Error;
    fn try_from(w: QuestionnaireWire) -> Result<Self> {
        Self::new(&w.items)
    }
}

impl From<QuestionnaireResponse> for QuestionnaireWire {
    fn from(q: QuestionnaireResponse) -> Self {
        QuestionnaireWire {
            items: q.items.iter().map(|&x| x as i64).collect(),
        }
    }
}

impl QuestionnaireResponse {
    pub fn new(items: &[i64]) -> Result<Self> {
        if items.len() != ITEM_COUNT {
            return Err(Error::InvalidQuestionnaire(format!(
                "expected {ITEM_COUNT} items, got {}",
                items.len()
            )));
        }
        let mut out = [0u8; ITEM_COUNT];
        for (i, &v) in items.iter().enumerate() {
            if !(1..=5).contains(&v) {
                return Err(Error::InvalidQuestionnaire(format!(
                    "item {} = {v} is outside 1..=5",
                    i + 1
                )));
            }
            out[i] = v as u8;
        }
        Ok(Self { items: out })
    }

    /// Answer to item `n` (1-based).
    pub fn item(&self, n: usize) -> u32 {
        self.items[n - 1] as u32
    }

    fn sum(&self, first: usize, last: usize) -> u32 {
        (first..=last).map(|n| self.item(n)).sum()
    }

    pub fn items(&self) -> &[u8; ITEM_COUNT] {
        &self.items
    }
}

/// Cutoffs the questionnaire leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringRules {
    pub companion_min_sum: u32,
    pub noise_min_sum: u32,
}

impl Default for ScoringRules {
    fn default() -> Self {
        Self {
            companion_min_sum: 12,
            noise_min_sum: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionProfile {
    pub self_regulation: bool,
    pub breathing_guidance: bool,
    pub stress_feedback: bool,
    pub procedure_guidance: bool,
    pub guidance_threshold_s: Option<u32>,
    pub companion_support: bool,
    pub noise_reduction: bool,
}

impl InterventionProfile {
    pub fn all_off() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("inconsistent profile: {m}")));
        if (self.breathing_guidance || self.stress_feedback) && !self.self_regulation {
            return bad("self-regulation aids enabled without self-regulation");
        }
        if self.procedure_guidance != self.guidance_threshold_s.is_some() {
            return bad("guidance threshold must be set exactly when guidance is enabled");
        }
        if let Some(th) = self.guidance_threshold_s {
            if th == 0 {
                return bad("guidance threshold must be positive");
            }
        }
        Ok(())
    }

    pub fn guidance_threshold_ms(&self) -> Option<i64> {
        self.guidance_threshold_s.map(|s| s as i64 * 1000)
    }

    /// Whether any modality that acts on stress recovery is enabled.
    pub fn has_regulating_modality(&self) -> bool {
        self.breathing_guidance || self.stress_feedback || self.companion_support || self.noise_reduction
    }
}

pub fn score(resp: &QuestionnaireResponse) -> InterventionProfile {
    score_with(resp, &ScoringRules::default())
}

pub fn score_with(resp: &QuestionnaireResponse, rules: &ScoringRules) -> InterventionProfile {
    let internal = resp.item(1) + resp.item(3) + resp.item(5);
    let external = resp.item(2) + resp.item(4) + resp.item(6);
    // ties keep self-regulation: only a strictly higher external score disables it
    let self_regulation = external <= internal;
    let breathing_guidance = self_regulation && resp.item(7) >= 3;
    let stress_feedback = self_regulation && resp.item(8) >= 3;

    let structure = resp.sum(9, 13);
    let guidance_threshold_s = match structure {
        s if s >= 22 => Some(10),
        18..=21 => Some(15),
        15..=17 => Some(30),
        _ => None,
    };

    InterventionProfile {
        self_regulation,
        breathing_guidance,
        stress_feedback,
        procedure_guidance: guidance_threshold_s.is_some(),
        guidance_threshold_s,
        companion_support: resp.sum(14, 17) >= rules.companion_min_sum,
        noise_reduction: resp.sum(18, 19) >= rules.noise_min_sum,
    }
}
