//! Aggregated run metrics and the structured text report.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::registry::{IslandId, TierLevel};

/// Counters and distributions aggregated over one scenario run.
///
/// `privacy_violations` is asserted to be zero under the orchestrated
/// policy; baselines report it as a statistic.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMetrics {
    pub total_requests: u64,
    pub routed: u64,
    pub failsafe_local: u64,
    pub rejections_fail_closed: u64,
    pub privacy_violations: u64,
    pub queued: u64,
    pub routed_tier1: u64,
    pub routed_tier2: u64,
    pub routed_tier3: u64,
    pub sanitizations_applied: u64,
    pub sanitizations_bypassed: u64,
    pub desanitize_warnings: u64,
    pub total_cost: f64,
    /// Cost accrued on Tier 3 islands only.
    pub cloud_cost: f64,
    /// Requests executed per island (routed plus failsafe).
    pub per_island: BTreeMap<IslandId, u64>,
    /// Wall-clock routing latencies in microseconds; not part of any
    /// determinism guarantee.
    pub decision_latency_us: Vec<u64>,
    /// Simulated service time accumulated across executed requests.
    pub simulated_service_ms: f64,
    /// Offload-mode changes observed by the per-island hysteresis trackers.
    pub offload_transitions: u64,
}

impl RunMetrics {
    pub(crate) fn record_routed_tier(&mut self, tier: TierLevel) {
        match tier {
            TierLevel::Tier1Personal => self.routed_tier1 += 1,
            TierLevel::Tier2PrivateEdge => self.routed_tier2 += 1,
            TierLevel::Tier3Cloud => self.routed_tier3 += 1,
        }
    }

    /// Fraction of requests executed on Tier 1 islands.
    pub fn local_utilization(&self) -> f64 {
        if self.total_requests == 0 {
            return 0.0;
        }
        let tier1_executed: u64 = self.routed_tier1 + self.failsafe_local;
        tier1_executed as f64 / self.total_requests as f64
    }

    /// Nearest-rank percentile of the decision latency distribution.
    pub fn latency_percentile_us(&self, percentile: f64) -> u64 {
        if self.decision_latency_us.is_empty() {
            return 0;
        }
        let mut sorted = self.decision_latency_us.clone();
        sorted.sort_unstable();
        let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
        sorted[rank.clamp(1, sorted.len()) - 1]
    }

    /// Structured text report. Every line except the decision-latency line
    /// is deterministic for a fixed seed.
    pub fn report(&self, scenario: &str, policy: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario: {scenario}\n"));
        out.push_str(&format!("policy: {policy}\n"));
        out.push_str(&format!("requests: {}\n", self.total_requests));
        out.push_str(&format!(
            "routed: {} (tier1 {}, tier2 {}, tier3 {})\n",
            self.routed, self.routed_tier1, self.routed_tier2, self.routed_tier3
        ));
        out.push_str(&format!("failsafe-local: {}\n", self.failsafe_local));
        out.push_str(&format!(
            "rejected-fail-closed: {}\n",
            self.rejections_fail_closed
        ));
        out.push_str(&format!("queued: {}\n", self.queued));
        out.push_str(&format!("privacy-violations: {}\n", self.privacy_violations));
        out.push_str(&format!(
            "sanitizations: applied {}, bypassed {}\n",
            self.sanitizations_applied, self.sanitizations_bypassed
        ));
        out.push_str(&format!("desanitize-warnings: {}\n", self.desanitize_warnings));
        out.push_str(&format!("total-cost: {:.4}\n", self.total_cost));
        out.push_str(&format!("cloud-cost: {:.4}\n", self.cloud_cost));
        out.push_str(&format!(
            "local-utilization: {:.4}\n",
            self.local_utilization()
        ));
        out.push_str(&format!(
            "simulated-service-ms: {:.1}\n",
            self.simulated_service_ms
        ));
        out.push_str(&format!("offload-transitions: {}\n", self.offload_transitions));
        out.push_str(&format!(
            "decision-latency-us: p50 {}, p99 {}\n",
            self.latency_percentile_us(50.0),
            self.latency_percentile_us(99.0)
        ));
        out.push_str("per-island:\n");
        for (island, count) in &self.per_island {
            out.push_str(&format!("  {island}: {count}\n"));
        }
        out
    }
}
