use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::biosignal::VitalsEstimate;
use crate::error::{Error, Result};
use crate::scenario::Action;

use super::core::SessionCore;
use super::log::{Record, SessionLog};

/// First record where the log and its re-derivation disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// 1-based line in the log.
    pub line: usize,
    pub t_ms: i64,
    pub expected: Option<String>,
    pub found: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub records: usize,
    pub divergence: Option<Divergence>,
}

impl ReplayReport {
    pub fn verified(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Re-derive every record from the log's inputs (header, baseline, actions
/// and measured vitals/GSR flags) and compare line by line.
pub fn replay(log: &SessionLog) -> Result<ReplayReport> {
    let malformed = |line: usize, m: &str| Error::LogParse {
        line,
        message: m.into(),
    };
    let header = log.header().ok_or_else(|| malformed(1, "first record must be a session header"))?;
    let (baseline, resting) = match log.records.get(1) {
        Some(Record::SampleSummary {
            baseline,
            resting_estimates,
            ..
        }) => (*baseline, *resting_estimates),
        _ => return Err(malformed(2, "second record must be the baseline sample-summary")),
    };
    let end_t = match log.records.last() {
        Some(Record::End { t_ms, .. }) => *t_ms,
        _ => return Err(malformed(log.records.len(), "log must close with an end record")),
    };

    let mut actions: HashMap<i64, Vec<Action>> = HashMap::new();
    let mut measured: HashMap<i64, (Option<VitalsEstimate>, bool)> = HashMap::new();
    for r in &log.records {
        match r {
            Record::Action { t_ms, action, .. } => actions.entry(*t_ms).or_default().push(*action),
            Record::Assessment(a) => {
                measured.insert(a.t_ms, (a.vitals, a.gsr_flag));
            }
            _ => {}
        }
    }

    let mut core = SessionCore::new(header.clone(), baseline, resting)?;
    let tick = header.config.tick_ms;
    let mut t = 0;
    while t < end_t {
        t += tick;
        core.begin_tick(t);
        for &a in actions.get(&t).map(Vec::as_slice).unwrap_or(&[]) {
            core.act(t, a);
        }
        if core.assessment_due(t) {
            let (v, g) = measured.get(&t).copied().unwrap_or((None, false));
            core.assess(t, v, g);
        }
        if core.should_finish(t) {
            core.finish(t);
            break;
        }
    }
    if !core.is_finished() {
        core.finish(end_t);
    }

    let expected = core.records();
    let n = expected.len().max(log.records.len());
    for i in 0..n {
        let e = expected.get(i).map(Record::to_line);
        let f = log.records.get(i).map(Record::to_line);
        if e != f {
            // A missing record is reported at its own time, not at the next one.
            let t_ms = [log.records.get(i), expected.get(i)]
                .into_iter()
                .flatten()
                .map(Record::t_ms)
                .min()
                .unwrap_or(end_t);
            return Ok(ReplayReport {
                records: log.records.len(),
                divergence: Some(Divergence {
                    line: i + 1,
                    t_ms,
                    expected: e,
                    found: f,
                }),
            });
        }
    }
    Ok(ReplayReport {
        records: log.records.len(),
        divergence: None,
    })
}
