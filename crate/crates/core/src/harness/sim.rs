//! Deterministic scenario execution: the per-request route-then-sanitize
//! pipeline, baseline policies, ablations, and metrics/trace aggregation.
//!
//! The event loop is single-threaded; a fixed seed and fixed config produce
//! byte-identical trace files.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, Scenario, ScenarioConfig};
use crate::lighthouse::Lighthouse;
use crate::mist::{self, desanitize, SessionId};
use crate::registry::{Island, IslandId, TierLevel};
use crate::tide::{step_hysteresis, HysteresisState, Tick};
use crate::waves::{
    sanitization_gate, Outcome, RejectReason, RouteContext, RoutingDecision, Sanitization,
    TermBreakdown,
};

use super::metrics::RunMetrics;
use super::trace::{render_trace, TraceOutcome, TraceRecord};
use super::workload::{generate_workload, GeneratedRequest, WorkloadError};

/// Routing policy under simulation: the orchestrated router plus the four
/// baselines used in comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    IslandRun,
    CloudOnly,
    LocalOnly,
    LatencyGreedy,
    PrivacyOnly,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::IslandRun,
        Policy::CloudOnly,
        Policy::LocalOnly,
        Policy::LatencyGreedy,
        Policy::PrivacyOnly,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Policy::IslandRun => "islandrun",
            Policy::CloudOnly => "cloud-only",
            Policy::LocalOnly => "local-only",
            Policy::LatencyGreedy => "latency-greedy",
            Policy::PrivacyOnly => "privacy-only",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| format!("unknown policy {s:?}"))
    }
}

/// Agent disabled in an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Mist,
    Tide,
    Lighthouse,
}

impl Agent {
    pub fn label(self) -> &'static str {
        match self {
            Agent::Mist => "mist",
            Agent::Tide => "tide",
            Agent::Lighthouse => "lighthouse",
        }
    }
}

impl std::str::FromStr for Agent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Agent::Mist, Agent::Tide, Agent::Lighthouse]
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| format!("unknown agent {s:?}"))
    }
}

/// Simulation errors. A privacy violation under the orchestrated policy is
/// a bug in the router, not a statistic, and aborts the run.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(
        "privacy violation at tick {tick}: request {request_id} (s={sensitivity:.2}) \
         routed to {island} (P={privacy:.2})"
    )]
    PrivacyViolation {
        tick: Tick,
        request_id: u64,
        island: IslandId,
        privacy: f64,
        sensitivity: f64,
    },
}

/// Metrics and trace from one scenario run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub scenario: String,
    pub policy: Policy,
    pub metrics: RunMetrics,
    pub trace: Vec<TraceRecord>,
}

impl SimOutput {
    pub fn trace_text(&self) -> String {
        render_trace(&self.trace)
    }

    pub fn report(&self) -> String {
        self.metrics.report(&self.scenario, self.policy.label())
    }
}

const SIM_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Execute one scenario under `policy`, optionally with one agent disabled.
pub fn run_scenario(
    config: &ScenarioConfig,
    policy: Policy,
    disabled: Option<Agent>,
) -> Result<SimOutput, SimError> {
    let mut scenario = config.build()?;
    let requests = generate_workload(&scenario.workload, scenario.seed)?;

    // mesh formation: every registered island announces at tick 0
    let mut mesh = Lighthouse::new(scenario.lighthouse_config);
    let island_ids: Vec<IslandId> = scenario.catalog.iter().map(|i| i.id.clone()).collect();
    for id in &island_ids {
        mesh.announce(id, 0, &scenario.catalog)
            .expect("announcing a registered island");
    }
    match disabled {
        Some(Agent::Lighthouse) => mesh.set_failed(true),
        Some(Agent::Tide) => scenario.tide.set_failed(true),
        Some(Agent::Mist) | None => {}
    }
    let mist_disabled = disabled == Some(Agent::Mist);

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(SIM_STREAM_SALT));
    let mut metrics = RunMetrics {
        total_requests: requests.len() as u64,
        ..Default::default()
    };
    let mut trace = Vec::with_capacity(requests.len());
    let mut hysteresis: BTreeMap<IslandId, HysteresisState> = scenario
        .catalog
        .iter()
        .filter(|i| i.bounded)
        .map(|i| (i.id.clone(), i.buffer_profile.hysteresis()))
        .collect();

    let max_tick = requests.last().map_or(0, |r| r.tick);
    let mut cursor = 0usize;
    for tick in 0..=max_tick {
        if !mesh.is_failed() {
            for id in &island_ids {
                let _ = mesh.heartbeat(id, tick);
            }
            mesh.prune(tick);
        }
        for island in scenario.catalog.iter().filter(|i| i.bounded) {
            let available = scenario.tide.get_capacity(island, tick).available;
            if let Some(state) = hysteresis.get_mut(&island.id) {
                let next = step_hysteresis(*state, available);
                if next.mode != state.mode {
                    metrics.offload_transitions += 1;
                }
                *state = next;
            }
        }
        let alive: BTreeSet<IslandId> = mesh.get_islands(tick).ids.into_iter().collect();
        while cursor < requests.len() && requests[cursor].tick == tick {
            let generated = &requests[cursor];
            cursor += 1;
            process_request(
                generated,
                policy,
                mist_disabled,
                &scenario,
                &alive,
                tick,
                &mut rng,
                &mut metrics,
                &mut trace,
            )?;
        }
    }
    debug_assert_eq!(
        metrics.routed + metrics.failsafe_local + metrics.rejections_fail_closed,
        metrics.total_requests
    );
    Ok(SimOutput {
        scenario: scenario.name.clone(),
        policy,
        metrics,
        trace,
    })
}

/// Ablation run: the orchestrated policy with exactly one agent disabled.
pub fn ablate(config: &ScenarioConfig, agent: Agent) -> Result<SimOutput, SimError> {
    run_scenario(config, Policy::IslandRun, Some(agent))
}

/// Run every policy on the identical seeded workload.
pub fn compare(config: &ScenarioConfig) -> Result<Vec<SimOutput>, SimError> {
    Policy::ALL
        .into_iter()
        .map(|policy| run_scenario(config, policy, None))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn process_request(
    generated: &GeneratedRequest,
    policy: Policy,
    mist_disabled: bool,
    scenario: &Scenario,
    alive: &BTreeSet<IslandId>,
    tick: Tick,
    rng: &mut ChaCha8Rng,
    metrics: &mut RunMetrics,
    trace: &mut Vec<TraceRecord>,
) -> Result<(), SimError> {
    let analyzer = mist::shared_analyzer();
    let mut request = generated.request.clone();
    let report = if mist_disabled {
        mist::fallback_sensitivity()
    } else {
        analyzer.analyze_sensitivity(&request.prompt)
    };
    request.sensitivity = report.score;
    let session = SessionId::from_rng(rng);

    let decision = match policy {
        Policy::IslandRun => scenario.router.route(
            &request,
            RouteContext {
                catalog: &scenario.catalog,
                alive: Some(alive),
                tide: &scenario.tide,
                tick,
                sanitizer: analyzer,
                session,
            },
        ),
        baseline => baseline_route(baseline, &request, scenario, alive, tick, session),
    };
    metrics.decision_latency_us.push(decision.decision_latency_us);

    let mut record = TraceRecord {
        tick,
        request_id: generated.id,
        sensitivity: request.sensitivity,
        tier_class: request.tier_class,
        eligible: decision.eligible_count,
        outcome: TraceOutcome::Rejected,
        island: None,
        breakdown: None,
        sanitization: None,
        cost: 0.0,
    };

    match &decision.outcome {
        Outcome::Routed {
            island,
            breakdown,
            sanitization,
            queued,
        } => {
            let island = scenario.catalog.get(island).expect("routed island exists");
            check_privacy(policy, &request, island, generated, tick, metrics)?;
            metrics.routed += 1;
            metrics.record_routed_tier(island.tier);
            if *queued {
                metrics.queued += 1;
            }
            record.outcome = TraceOutcome::Routed;
            record.breakdown = (policy == Policy::IslandRun).then_some(*breakdown);
            execute_on(island, sanitization, rng, metrics, &mut record);
        }
        Outcome::FailsafeLocal {
            island,
            sanitization,
            ..
        } => {
            let island = scenario.catalog.get(island).expect("local island exists");
            check_privacy(policy, &request, island, generated, tick, metrics)?;
            metrics.failsafe_local += 1;
            record.outcome = TraceOutcome::FailsafeLocal;
            execute_on(island, sanitization, rng, metrics, &mut record);
        }
        Outcome::RejectedFailClosed { .. } => {
            metrics.rejections_fail_closed += 1;
        }
    }
    trace.push(record);
    Ok(())
}

fn check_privacy(
    policy: Policy,
    request: &crate::waves::InferenceRequest,
    island: &Island,
    generated: &GeneratedRequest,
    tick: Tick,
    metrics: &mut RunMetrics,
) -> Result<(), SimError> {
    if island.privacy_score < request.sensitivity {
        metrics.privacy_violations += 1;
        if policy == Policy::IslandRun {
            return Err(SimError::PrivacyViolation {
                tick,
                request_id: generated.id.0,
                island: island.id.clone(),
                privacy: island.privacy_score,
                sensitivity: request.sensitivity,
            });
        }
    }
    Ok(())
}

/// Simulated execution sink: accrues cost and scripted service latency and
/// exercises the desanitization backward pass for sanitized dispatches.
fn execute_on(
    island: &Island,
    sanitization: &Sanitization,
    rng: &mut ChaCha8Rng,
    metrics: &mut RunMetrics,
    record: &mut TraceRecord,
) {
    record.island = Some(island.id.clone());
    record.cost = island.cost_per_request;
    metrics.total_cost += island.cost_per_request;
    if island.tier == TierLevel::Tier3Cloud {
        metrics.cloud_cost += island.cost_per_request;
    }
    *metrics.per_island.entry(island.id.clone()).or_insert(0) += 1;

    let (low, high) = match island.tier {
        TierLevel::Tier1Personal => (50.0, 500.0),
        TierLevel::Tier2PrivateEdge => (100.0, 1000.0),
        TierLevel::Tier3Cloud => (200.0, 2000.0),
    };
    metrics.simulated_service_ms += rng.random_range(low..high);

    match sanitization {
        Sanitization::Applied(history) => {
            metrics.sanitizations_applied += 1;
            record.sanitization = Some(true);
            // the sink answers in placeholder space; reverse it for the client
            let response = format!(
                "regarding \"{}\": acknowledged",
                history.turns.last().map_or("", String::as_str)
            );
            let restored = desanitize(&response, &history.map);
            metrics.desanitize_warnings += restored.unknown_placeholders.len() as u64;
        }
        Sanitization::Bypassed => {
            metrics.sanitizations_bypassed += 1;
            record.sanitization = Some(false);
        }
    }
}

/// Baseline selectors. They ignore the orchestrator's gates by design and
/// exist to quantify what the gates buy.
fn baseline_route(
    policy: Policy,
    request: &crate::waves::InferenceRequest,
    scenario: &Scenario,
    alive: &BTreeSet<IslandId>,
    tick: Tick,
    session: SessionId,
) -> RoutingDecision {
    let started = Instant::now();
    let analyzer = mist::shared_analyzer();
    let catalog = &scenario.catalog;
    let candidates: Vec<&Island> = catalog.iter().filter(|i| alive.contains(&i.id)).collect();
    let choice: Option<(&Island, bool)> = match policy {
        // prefers cloud islands; a catalog without any degenerates to the
        // remaining candidates so single-island catalogs stay comparable
        Policy::CloudOnly => candidates
            .iter()
            .filter(|i| i.tier == TierLevel::Tier3Cloud)
            .min_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms).then(a.id.cmp(&b.id)))
            .or_else(|| {
                candidates
                    .iter()
                    .min_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms).then(a.id.cmp(&b.id)))
            })
            .map(|island| (*island, false)),
        Policy::LocalOnly => catalog.local_island().map(|island| {
            let available = scenario.tide.get_capacity(island, tick).available;
            let queued =
                island.bounded && available < island.buffer_profile.offload_below();
            (island, queued)
        }),
        Policy::LatencyGreedy => candidates
            .iter()
            .min_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms).then(a.id.cmp(&b.id)))
            .map(|island| (*island, false)),
        Policy::PrivacyOnly => candidates
            .iter()
            .min_by(|a, b| {
                b.privacy_score
                    .total_cmp(&a.privacy_score)
                    .then(a.latency_ms.total_cmp(&b.latency_ms))
                    .then(a.id.cmp(&b.id))
            })
            .map(|island| (*island, false)),
        Policy::IslandRun => unreachable!("handled by the router"),
    };
    let outcome = match choice {
        Some((island, queued)) => Outcome::Routed {
            island: island.id.clone(),
            breakdown: TermBreakdown {
                cost_term: 0.0,
                latency_term: 0.0,
                privacy_term: 0.0,
                score: 0.0,
            },
            sanitization: sanitization_gate(request, island, analyzer, &session),
            queued,
        },
        None => Outcome::RejectedFailClosed {
            reason: RejectReason::NoEligibleIsland {
                cause: format!("{} policy has no candidate", policy.label()),
            },
        },
    };
    RoutingDecision {
        outcome,
        candidates_considered: candidates.len(),
        eligible_count: 1,
        decision_latency_us: started.elapsed().as_micros() as u64,
    }
}

#[cfg(test)]
mod tests {
    use std::str::FromStr as _;

    use super::*;

    fn mini_config() -> ScenarioConfig {
        ScenarioConfig::from_str(
            r#"
[scenario]
name = "sim-mini"
seed = 5

[weights]
cost = 0.3
latency = 0.3
privacy = 0.4

[[islands]]
id = "laptop"
tier = "tier1-personal"
privacy = 1.0
latency_ms = 300.0
trust = { base = 1.0, certification = 1.0, jurisdiction = 1.0 }
cost = { model = "free" }
local = true

[[islands]]
id = "cloud"
tier = "tier3-cloud"
privacy = 0.5
latency_ms = 250.0
trust = { base = 0.5, certification = 0.9, jurisdiction = 1.0 }
cost = { model = "fixed", per_request = 0.02 }

[workload]
total = 60
requests_per_tick = 6
history_rate = 0.5

[workload.sensitivity_mix]
high = 0.2
moderate = 0.3
low = 0.5

[workload.tier_mix]
primary = 0.2
secondary = 0.5
burstable = 0.3

[[workload.templates]]
band = "high"
text = "Patient {person} takes {medication}"

[[workload.templates]]
band = "moderate"
text = "Summarize the internal roadmap draft"

[[workload.templates]]
band = "low"
text = "What is photosynthesis?"
"#,
        )
        .unwrap()
    }

    #[test]
    fn outcome_counts_conserve_the_workload() {
        for policy in Policy::ALL {
            let output = run_scenario(&mini_config(), policy, None).unwrap();
            let m = &output.metrics;
            assert_eq!(
                m.routed + m.failsafe_local + m.rejections_fail_closed,
                m.total_requests,
                "{policy:?}"
            );
            assert_eq!(output.trace.len() as u64, m.total_requests);
        }
    }

    #[test]
    fn cloud_only_cost_is_total_times_cloud_price() {
        let output = run_scenario(&mini_config(), Policy::CloudOnly, None).unwrap();
        assert!((output.metrics.total_cost - 60.0 * 0.02).abs() < 1e-9);
        assert_eq!(output.metrics.cloud_cost, output.metrics.total_cost);
    }

    #[test]
    fn privacy_only_never_pays_the_cloud() {
        let output = run_scenario(&mini_config(), Policy::PrivacyOnly, None).unwrap();
        assert_eq!(output.metrics.cloud_cost, 0.0);
        assert_eq!(output.metrics.privacy_violations, 0);
    }

    #[test]
    fn islandrun_cost_never_exceeds_cloud_only() {
        let islandrun = run_scenario(&mini_config(), Policy::IslandRun, None).unwrap();
        let cloud_only = run_scenario(&mini_config(), Policy::CloudOnly, None).unwrap();
        assert!(islandrun.metrics.total_cost <= cloud_only.metrics.total_cost);
    }

    #[test]
    fn single_island_catalog_makes_all_policies_coincide() {
        let mut config = mini_config();
        config.islands.truncate(1); // keep only the local laptop
        // drop the incurably high-sensitivity band so every request routes
        config.workload.sensitivity_mix = crate::config::SensitivityMix {
            high: 0.0,
            moderate: 0.5,
            low: 0.5,
        };
        let outputs: Vec<_> = Policy::ALL
            .iter()
            .map(|policy| run_scenario(&config, *policy, None).unwrap())
            .collect();
        let reference = &outputs[0].metrics;
        for output in &outputs[1..] {
            assert_eq!(output.metrics.routed, reference.routed, "{:?}", output.policy);
            assert_eq!(output.metrics.total_cost, reference.total_cost);
            assert_eq!(
                output.metrics.per_island, reference.per_island,
                "{:?}",
                output.policy
            );
        }
    }

    #[test]
    fn local_only_queues_under_scripted_exhaustion() {
        let mut config = mini_config();
        config.capacity.insert(
            "laptop".to_owned(),
            vec![crate::tide::ScriptRow {
                tick: 0,
                cpu_pct: 99.0,
                gpu_pct: 0.0,
                mem_used: 0,
                mem_total: 1,
            }],
        );
        let output = run_scenario(&config, Policy::LocalOnly, None).unwrap();
        assert!(output.metrics.queued > 0);
        assert_eq!(output.metrics.cloud_cost, 0.0);
    }
}
