//! Decision trace records: one line per routing decision.
//!
//! Tab-separated fields, in order:
//!   tick, request id, sensitivity, tier class, eligible count, outcome,
//!   island, score, cost term, latency term, privacy term, sanitization, cost
//!
//! Score terms are emitted for orchestrated decisions only; baseline
//! policies and rejections emit `-`. The format is pinned by golden-file
//! tests; wall-clock timings are deliberately excluded so trace files are
//! byte-identical across same-seed runs.

use crate::registry::IslandId;
use crate::tide::Tick;
use crate::waves::{TermBreakdown, TierClass};

use super::workload::RequestId;

/// Decision outcome token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOutcome {
    Routed,
    FailsafeLocal,
    Rejected,
}

impl TraceOutcome {
    pub fn label(self) -> &'static str {
        match self {
            TraceOutcome::Routed => "routed",
            TraceOutcome::FailsafeLocal => "failsafe",
            TraceOutcome::Rejected => "rejected",
        }
    }
}

/// One trace line.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub tick: Tick,
    pub request_id: RequestId,
    pub sensitivity: f64,
    pub tier_class: TierClass,
    pub eligible: usize,
    pub outcome: TraceOutcome,
    pub island: Option<IslandId>,
    pub breakdown: Option<TermBreakdown>,
    /// `Some(true)` applied, `Some(false)` bypassed, `None` not dispatched.
    pub sanitization: Option<bool>,
    pub cost: f64,
}

impl std::fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let island = self
            .island
            .as_ref()
            .map_or_else(|| "-".to_owned(), |id| id.to_string());
        let (score, c, l, p) = match &self.breakdown {
            Some(b) => (
                format!("{:.4}", b.score),
                format!("{:.4}", b.cost_term),
                format!("{:.4}", b.latency_term),
                format!("{:.4}", b.privacy_term),
            ),
            None => ("-".into(), "-".into(), "-".into(), "-".into()),
        };
        let sanitization = match self.sanitization {
            Some(true) => "applied",
            Some(false) => "bypassed",
            None => "-",
        };
        write!(
            f,
            "{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4}",
            self.tick,
            self.request_id,
            self.sensitivity,
            self.tier_class.label(),
            self.eligible,
            self.outcome.label(),
            island,
            score,
            c,
            l,
            p,
            sanitization,
            self.cost
        )
    }
}

/// Render trace records as the line-delimited file body.
pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}
