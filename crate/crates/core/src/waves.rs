//! Multi-objective router: eligibility filtering (privacy, capacity, data
//! locality), composite scoring, tier policy, the constraint-based variant,
//! and the sanitization gate.
//!
//! `route` is reentrant: it reads immutable catalog entries and the latest
//! capacity snapshots, and every sanitization map is confined to one request.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::mist::{Analyzer, SanitizedHistory, SessionId};
use crate::registry::{Catalog, DataAssetId, Island, IslandId, TierLevel};
use crate::tide::{Tick, TideMonitor};

/// Request modality. Carried through the data model; routing does not
/// currently consume it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    #[default]
    TextGeneration,
    ImageSynthesis,
    CodeCompletion,
}

/// Per-request priority controlling local-vs-offload preference under load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TierClass {
    /// Must execute on personal islands, queueing if necessary.
    Primary,
    /// Prefers local; offloads when local capacity is at or below 0.50.
    Secondary,
    /// Uses local opportunistically; offloads at or below 0.80.
    Burstable,
}

impl TierClass {
    pub fn label(self) -> &'static str {
        match self {
            TierClass::Primary => "primary",
            TierClass::Secondary => "secondary",
            TierClass::Burstable => "burstable",
        }
    }
}

/// Conversation history with the privacy score of the island that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub turns: Vec<String>,
    /// Privacy score of the provenance island.
    pub provenance_privacy: f64,
}

impl History {
    pub fn empty() -> Self {
        Self {
            turns: Vec::new(),
            provenance_privacy: 1.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

impl Default for History {
    fn default() -> Self {
        Self::empty()
    }
}

/// An inference request as seen by the router, with sensitivity already
/// attached (or the conservative fallback).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRequest {
    pub prompt: String,
    #[serde(default)]
    pub modality: Modality,
    /// Sensitivity s in [0, 1].
    pub sensitivity: f64,
    /// Latency deadline in milliseconds; must be positive.
    pub deadline_ms: f64,
    #[serde(default = "History::empty")]
    pub history: History,
    pub tier_class: TierClass,
    #[serde(default)]
    pub required_assets: BTreeSet<DataAssetId>,
}

/// Router configuration errors.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WavesError {
    #[error("weights must be nonnegative and finite, got ({0}, {1}, {2})")]
    InvalidWeights(f64, f64, f64),
    #[error("weights must not all be zero")]
    ZeroWeights,
}

/// Normalized preference weights over cost, latency, and the privacy
/// complement. Stored pre-normalized so they always sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub cost: f64,
    pub latency: f64,
    pub privacy: f64,
}

impl Weights {
    /// Build weights, normalizing so the three components sum to 1.
    pub fn new(cost: f64, latency: f64, privacy: f64) -> Result<Self, WavesError> {
        for w in [cost, latency, privacy] {
            if !w.is_finite() || w < 0.0 {
                return Err(WavesError::InvalidWeights(cost, latency, privacy));
            }
        }
        let sum = cost + latency + privacy;
        if sum == 0.0 {
            return Err(WavesError::ZeroWeights);
        }
        Ok(Self {
            cost: cost / sum,
            latency: latency / sum,
            privacy: privacy / sum,
        })
    }
}

/// Scalarized weighted-sum routing or the constraint-based variant
/// (filter on privacy/capacity/budget, then minimize latency).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMode {
    #[default]
    Scalarized,
    ConstraintBased,
}

/// Which term space the composite score uses. `Normalized` maps every term
/// into [0, 1] so the weights are commensurable; `Raw` keeps the raw
/// dollars/milliseconds weighted sum for fidelity testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringSpace {
    #[default]
    Normalized,
    Raw,
}

/// Per-island score terms and the combined score (lower is better).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermBreakdown {
    pub cost_term: f64,
    pub latency_term: f64,
    pub privacy_term: f64,
    pub score: f64,
}

/// Whether history crossed a trust boundary and was sanitized for dispatch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Sanitization {
    Bypassed,
    Applied(SanitizedHistory),
}

impl Sanitization {
    pub fn is_applied(&self) -> bool {
        matches!(self, Sanitization::Applied(_))
    }

    /// Session id of the placeholder map, when sanitization was applied.
    pub fn map_id(&self) -> Option<&SessionId> {
        match self {
            Sanitization::Bypassed => None,
            Sanitization::Applied(history) => Some(history.map.session()),
        }
    }
}

/// Why a request was rejected fail-closed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    /// No registered island satisfies the privacy constraint.
    PrivacyUnsatisfiable,
    /// Primary-tier requests are confined to personal islands and none
    /// passes privacy and data locality.
    PrimaryPersonalUnavailable,
    /// Eligibility emptied (capacity, locality, liveness, or budget) and no
    /// local failsafe applies.
    NoEligibleIsland { cause: String },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::PrivacyUnsatisfiable => f.write_str("privacy unsatisfiable"),
            RejectReason::PrimaryPersonalUnavailable => {
                f.write_str("no privacy-compliant personal island for primary request")
            }
            RejectReason::NoEligibleIsland { cause } => {
                write!(f, "no eligible island ({cause})")
            }
        }
    }
}

/// The routing verdict for one request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Outcome {
    /// Chosen island with its score breakdown and sanitization action.
    Routed {
        island: IslandId,
        breakdown: TermBreakdown,
        sanitization: Sanitization,
        /// Set when a primary request lands on a capacity-exhausted
        /// personal island and must wait.
        queued: bool,
    },
    /// No island passed every gate, but the local personal island satisfies
    /// privacy and locality; execute there (possibly queued).
    FailsafeLocal {
        island: IslandId,
        reason: String,
        sanitization: Sanitization,
    },
    /// Fail-closed rejection.
    RejectedFailClosed { reason: RejectReason },
}

/// A routing decision plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingDecision {
    pub outcome: Outcome,
    /// Alive islands examined by the eligibility filter.
    pub candidates_considered: usize,
    /// Islands surviving every gate and the tier policy.
    pub eligible_count: usize,
    /// Wall-clock routing latency in microseconds.
    pub decision_latency_us: u64,
}

impl RoutingDecision {
    /// Island the request executes on, for routed and failsafe outcomes.
    pub fn chosen_island(&self) -> Option<&IslandId> {
        match &self.outcome {
            Outcome::Routed { island, .. } | Outcome::FailsafeLocal { island, .. } => Some(island),
            Outcome::RejectedFailClosed { .. } => None,
        }
    }

    pub fn sanitization(&self) -> Option<&Sanitization> {
        match &self.outcome {
            Outcome::Routed { sanitization, .. } | Outcome::FailsafeLocal { sanitization, .. } => {
                Some(sanitization)
            }
            Outcome::RejectedFailClosed { .. } => None,
        }
    }
}

/// Gate evaluation for one island.
#[derive(Debug, Clone, Copy)]
pub struct GateReport<'a> {
    pub island: &'a Island,
    pub alive: bool,
    pub privacy_ok: bool,
    pub assets_ok: bool,
    pub capacity_ok: bool,
    pub available: f64,
}

impl GateReport<'_> {
    /// Passes every eligibility gate.
    pub fn eligible(&self) -> bool {
        self.alive && self.privacy_ok && self.assets_ok && self.capacity_ok
    }

    /// Passes privacy and locality; capacity may still queue.
    pub fn compliant(&self) -> bool {
        self.alive && self.privacy_ok && self.assets_ok
    }
}

/// Per-island gate evaluations in catalog order.
#[derive(Debug)]
pub struct Eligibility<'a> {
    pub reports: Vec<GateReport<'a>>,
}

impl<'a> Eligibility<'a> {
    /// Evaluate all gates for every island the mesh reports alive.
    pub fn evaluate(
        request: &InferenceRequest,
        catalog: &'a Catalog,
        alive: Option<&BTreeSet<IslandId>>,
        available: impl Fn(&Island) -> f64,
    ) -> Self {
        let reports = catalog
            .iter()
            .map(|island| {
                let avail = available(island);
                GateReport {
                    island,
                    alive: alive.is_none_or(|set| set.contains(&island.id)),
                    privacy_ok: island.privacy_score >= request.sensitivity,
                    assets_ok: island.hosts_all(&request.required_assets),
                    capacity_ok: !island.bounded
                        || avail >= island.buffer_profile.offload_below(),
                    available: avail,
                }
            })
            .collect();
        Self { reports }
    }

    /// Islands passing every gate, catalog order.
    pub fn eligible(&self) -> Vec<&'a Island> {
        self.reports
            .iter()
            .filter(|r| r.eligible())
            .map(|r| r.island)
            .collect()
    }
}

/// Eligibility filter: an island is included iff it satisfies privacy
/// (P >= s), the capacity gate (bounded islands need availability at or
/// above their buffer-profile threshold; unbounded always pass), and hosts
/// every required asset.
pub fn filter_eligible<'a>(
    request: &InferenceRequest,
    catalog: &'a Catalog,
    available: impl Fn(&Island) -> f64,
) -> Vec<&'a Island> {
    Eligibility::evaluate(request, catalog, None, available).eligible()
}

/// Score terms for `island` normalized against the candidate set:
/// cost against the maximum candidate cost (zero when all candidates are
/// free), latency against the request deadline (clamped to 1), and the
/// privacy complement `1 - P`.
pub fn normalize_terms(
    island: &Island,
    candidates: &[&Island],
    request: &InferenceRequest,
) -> (f64, f64, f64) {
    let max_cost = candidates
        .iter()
        .map(|i| i.cost_per_request)
        .fold(0.0_f64, f64::max);
    let cost_term = if max_cost > 0.0 {
        island.cost_per_request / max_cost
    } else {
        0.0
    };
    let latency_term = (island.latency_ms / request.deadline_ms).min(1.0);
    let privacy_term = 1.0 - island.privacy_score;
    (cost_term, latency_term, privacy_term)
}

/// Composite score in the normalized term space; lower is better.
pub fn score(
    request: &InferenceRequest,
    island: &Island,
    candidates: &[&Island],
    weights: &Weights,
) -> f64 {
    let (c, l, p) = normalize_terms(island, candidates, request);
    weights.cost * c + weights.latency * l + weights.privacy * p
}

fn breakdown(
    request: &InferenceRequest,
    island: &Island,
    candidates: &[&Island],
    weights: &Weights,
    space: ScoringSpace,
) -> TermBreakdown {
    let (cost_term, latency_term, privacy_term) = match space {
        ScoringSpace::Normalized => normalize_terms(island, candidates, request),
        ScoringSpace::Raw => (
            island.cost_per_request,
            island.latency_ms,
            1.0 - island.privacy_score,
        ),
    };
    TermBreakdown {
        cost_term,
        latency_term,
        privacy_term,
        score: weights.cost * cost_term
            + weights.latency * latency_term
            + weights.privacy * privacy_term,
    }
}

/// A tier-policy survivor; `queued` marks primary requests that must wait
/// for local capacity.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub island: &'a Island,
    pub queued: bool,
}

/// Restrict the eligible set by the request's tier class.
///
/// Primary requests run only on personal islands (waiving the capacity gate
/// and queueing instead); rejection is fail-closed when no personal island
/// passes privacy and locality. Secondary keeps personal islands only while
/// local capacity R > 0.50, burstable only while R > 0.80.
pub fn apply_tier_policy<'a>(
    request: &InferenceRequest,
    eligibility: &Eligibility<'a>,
    local_available: f64,
) -> Result<Vec<Candidate<'a>>, RejectReason> {
    match request.tier_class {
        TierClass::Primary => {
            let personal: Vec<Candidate<'a>> = eligibility
                .reports
                .iter()
                .filter(|r| r.compliant() && r.island.is_personal())
                .map(|r| Candidate {
                    island: r.island,
                    queued: !r.capacity_ok,
                })
                .collect();
            if personal.is_empty() {
                Err(RejectReason::PrimaryPersonalUnavailable)
            } else {
                Ok(personal)
            }
        }
        TierClass::Secondary => Ok(restrict_personal(eligibility, local_available > 0.50)),
        TierClass::Burstable => Ok(restrict_personal(eligibility, local_available > 0.80)),
    }
}

fn restrict_personal<'a>(
    eligibility: &Eligibility<'a>,
    personal_allowed: bool,
) -> Vec<Candidate<'a>> {
    eligibility
        .reports
        .iter()
        .filter(|r| r.eligible() && (personal_allowed || !r.island.is_personal()))
        .map(|r| Candidate {
            island: r.island,
            queued: false,
        })
        .collect()
}

/// Per-call routing inputs: the catalog, the mesh's alive view, capacity
/// lookups, and the sanitization session for this request.
pub struct RouteContext<'a> {
    pub catalog: &'a Catalog,
    /// Alive islands per the mesh coordinator; `None` treats every
    /// registered island as alive.
    pub alive: Option<&'a BTreeSet<IslandId>>,
    pub tide: &'a TideMonitor,
    pub tick: Tick,
    pub sanitizer: &'a Analyzer,
    pub session: SessionId,
}

/// The multi-objective router.
#[derive(Debug, Clone)]
pub struct Router {
    pub weights: Weights,
    pub mode: RoutingMode,
    pub scoring: ScoringSpace,
    /// Per-request cost ceiling for constraint-based routing.
    pub budget: Option<f64>,
}

impl Router {
    pub fn new(weights: Weights) -> Self {
        Self {
            weights,
            mode: RoutingMode::Scalarized,
            scoring: ScoringSpace::Normalized,
            budget: None,
        }
    }

    pub fn with_mode(mut self, mode: RoutingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_scoring(mut self, scoring: ScoringSpace) -> Self {
        self.scoring = scoring;
        self
    }

    pub fn with_budget(mut self, budget: Option<f64>) -> Self {
        self.budget = budget;
        self
    }

    /// Route one request. Fail-closed: when no island satisfies the privacy
    /// constraint the request is rejected, never degraded.
    pub fn route(&self, request: &InferenceRequest, ctx: RouteContext<'_>) -> RoutingDecision {
        let started = Instant::now();
        let eligibility = Eligibility::evaluate(request, ctx.catalog, ctx.alive, |island| {
            ctx.tide.get_capacity(island, ctx.tick).available
        });
        let candidates_considered = eligibility.reports.iter().filter(|r| r.alive).count();
        let local_available = ctx
            .catalog
            .local_island()
            .and_then(|local| {
                eligibility
                    .reports
                    .iter()
                    .find(|r| r.island.id == local.id)
                    .map(|r| r.available)
            })
            .unwrap_or(0.0);

        let mut eligible_count = 0;
        let outcome = match apply_tier_policy(request, &eligibility, local_available) {
            Err(reason) => Outcome::RejectedFailClosed { reason },
            Ok(candidates) => {
                let pool: Vec<Candidate<'_>> = match self.mode {
                    RoutingMode::Scalarized => candidates,
                    RoutingMode::ConstraintBased => {
                        let budget = self.budget.unwrap_or(f64::INFINITY);
                        candidates
                            .into_iter()
                            .filter(|c| c.island.cost_per_request <= budget)
                            .collect()
                    }
                };
                eligible_count = pool.len();
                if pool.is_empty() {
                    self.empty_pool_outcome(request, ctx.catalog, &ctx)
                } else {
                    self.select(request, pool, &ctx)
                }
            }
        };
        RoutingDecision {
            outcome,
            candidates_considered,
            eligible_count,
            decision_latency_us: started.elapsed().as_micros() as u64,
        }
    }

    fn select(
        &self,
        request: &InferenceRequest,
        pool: Vec<Candidate<'_>>,
        ctx: &RouteContext<'_>,
    ) -> Outcome {
        let islands: Vec<&Island> = pool.iter().map(|c| c.island).collect();
        let scored: Vec<(Candidate<'_>, TermBreakdown)> = pool
            .iter()
            .map(|c| {
                (
                    *c,
                    breakdown(request, c.island, &islands, &self.weights, self.scoring),
                )
            })
            .collect();
        // Candidates that can run now beat candidates that would queue; this
        // only differentiates primary requests, the one source of queueing.
        let best = match self.mode {
            RoutingMode::Scalarized => scored.into_iter().min_by(|(a, ba), (b, bb)| {
                a.queued
                    .cmp(&b.queued)
                    .then(ba.score.total_cmp(&bb.score))
                    .then(b.island.privacy_score.total_cmp(&a.island.privacy_score))
                    .then(a.island.latency_ms.total_cmp(&b.island.latency_ms))
                    .then(a.island.id.cmp(&b.island.id))
            }),
            RoutingMode::ConstraintBased => scored.into_iter().min_by(|(a, ba), (b, bb)| {
                a.queued
                    .cmp(&b.queued)
                    .then(a.island.latency_ms.total_cmp(&b.island.latency_ms))
                    .then(b.island.privacy_score.total_cmp(&a.island.privacy_score))
                    .then(ba.score.total_cmp(&bb.score))
                    .then(a.island.id.cmp(&b.island.id))
            }),
        };
        let (candidate, breakdown) = best.expect("pool is nonempty");
        Outcome::Routed {
            island: candidate.island.id.clone(),
            breakdown,
            sanitization: self.sanitization_for(request, candidate.island, ctx),
            queued: candidate.queued,
        }
    }

    /// Handle an empty post-policy pool: local failsafe when the personal
    /// island still satisfies privacy and locality, otherwise fail closed.
    fn empty_pool_outcome(
        &self,
        request: &InferenceRequest,
        catalog: &Catalog,
        ctx: &RouteContext<'_>,
    ) -> Outcome {
        let privacy_satisfiable = catalog
            .iter()
            .any(|island| island.privacy_score >= request.sensitivity);
        if !privacy_satisfiable {
            return Outcome::RejectedFailClosed {
                reason: RejectReason::PrivacyUnsatisfiable,
            };
        }
        if let Some(local) = catalog.local_island() {
            if local.privacy_score >= request.sensitivity
                && local.hosts_all(&request.required_assets)
            {
                return Outcome::FailsafeLocal {
                    island: local.id.clone(),
                    reason: "no island passed capacity/locality gates".to_owned(),
                    sanitization: self.sanitization_for(request, local, ctx),
                };
            }
        }
        Outcome::RejectedFailClosed {
            reason: RejectReason::NoEligibleIsland {
                cause: "capacity, locality, or budget gates emptied the candidate set".to_owned(),
            },
        }
    }

    fn sanitization_for(
        &self,
        request: &InferenceRequest,
        chosen: &Island,
        ctx: &RouteContext<'_>,
    ) -> Sanitization {
        sanitization_gate(request, chosen, ctx.sanitizer, &ctx.session)
    }
}

/// Sanitization gate. Empty history has nothing to carry; personal (Tier 1)
/// and fully trusted targets are bypassed; Tier 3 targets with history are
/// always sanitized; Tier 2 targets are sanitized when history descends a
/// privacy boundary.
pub fn sanitization_gate(
    request: &InferenceRequest,
    chosen: &Island,
    sanitizer: &Analyzer,
    session: &SessionId,
) -> Sanitization {
    if request.history.is_empty() || chosen.tier == TierLevel::Tier1Personal {
        return Sanitization::Bypassed;
    }
    let mandatory = chosen.tier == TierLevel::Tier3Cloud;
    let fully_trusted = chosen.privacy_score >= 1.0;
    let descends = request.history.provenance_privacy > chosen.privacy_score;
    if mandatory || (!fully_trusted && descends) {
        Sanitization::Applied(sanitizer.sanitize(
            &request.history.turns,
            chosen.privacy_score,
            session.clone(),
        ))
    } else {
        Sanitization::Bypassed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{AssetKind, CostModel, IslandDeclaration, TrustInputs, TrustMode};
    use crate::tide::{BufferProfile, CapacityScript, ScriptRow};

    fn decl(
        id: &str,
        tier: TierLevel,
        privacy: f64,
        latency_ms: f64,
        cost: f64,
    ) -> IslandDeclaration {
        let trust = match tier {
            TierLevel::Tier1Personal => TrustInputs::new(1.0, 1.0, 1.0),
            TierLevel::Tier2PrivateEdge => TrustInputs::new(0.8, 0.9, 0.9),
            TierLevel::Tier3Cloud => TrustInputs::new(0.5, 0.9, 0.9),
        };
        IslandDeclaration {
            id: IslandId::from(id),
            name: None,
            tier,
            privacy,
            trust,
            latency_ms,
            cost: if cost == 0.0 {
                CostModel::Free
            } else {
                CostModel::Fixed { per_request: cost }
            },
            assets: BTreeSet::new(),
            buffer_profile: Some(BufferProfile::Conservative),
            capacity: None,
            local: false,
        }
    }

    fn catalog3() -> Catalog {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("laptop", TierLevel::Tier1Personal, 1.0, 350.0, 0.0))
            .unwrap();
        catalog
            .register(decl("edge", TierLevel::Tier2PrivateEdge, 0.8, 400.0, 0.005))
            .unwrap();
        catalog
            .register(decl("cloud", TierLevel::Tier3Cloud, 0.4, 250.0, 0.02))
            .unwrap();
        catalog
    }

    fn request(sensitivity: f64, tier_class: TierClass) -> InferenceRequest {
        InferenceRequest {
            prompt: String::new(),
            modality: Modality::TextGeneration,
            sensitivity,
            deadline_ms: 1000.0,
            history: History::empty(),
            tier_class,
            required_assets: BTreeSet::new(),
        }
    }

    fn busy_script() -> CapacityScript {
        CapacityScript::new(vec![ScriptRow {
            tick: 0,
            cpu_pct: 95.0,
            gpu_pct: 0.0,
            mem_used: 0,
            mem_total: 1,
        }])
    }

    fn router() -> Router {
        Router::new(Weights::new(0.3, 0.3, 0.4).unwrap())
    }

    fn ctx<'a>(catalog: &'a Catalog, tide: &'a TideMonitor) -> RouteContext<'a> {
        RouteContext {
            catalog,
            alive: None,
            tide,
            tick: 0,
            sanitizer: crate::mist::shared_analyzer(),
            session: SessionId::new("test-session"),
        }
    }

    #[test]
    fn normalize_terms_hand_example() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("a", TierLevel::Tier3Cloud, 0.4, 200.0, 0.02))
            .unwrap();
        catalog
            .register(decl("b", TierLevel::Tier3Cloud, 0.5, 900.0, 0.04))
            .unwrap();
        let islands: Vec<&Island> = catalog.iter().collect();
        let req = request(0.2, TierClass::Secondary);
        let (c, l, p) = normalize_terms(islands[0], &islands, &req);
        assert!((c - 0.5).abs() < 1e-12);
        assert!((l - 0.2).abs() < 1e-12);
        assert!((p - 0.6).abs() < 1e-12);
    }

    #[test]
    fn all_free_candidates_have_zero_cost_term() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("a", TierLevel::Tier1Personal, 1.0, 100.0, 0.0))
            .unwrap();
        catalog
            .register(decl("b", TierLevel::Tier1Personal, 1.0, 200.0, 0.0))
            .unwrap();
        let islands: Vec<&Island> = catalog.iter().collect();
        let req = request(0.2, TierClass::Secondary);
        for island in &islands {
            assert_eq!(normalize_terms(island, &islands, &req).0, 0.0);
        }
    }

    #[test]
    fn latency_at_deadline_saturates() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("a", TierLevel::Tier1Personal, 1.0, 1000.0, 0.0))
            .unwrap();
        let islands: Vec<&Island> = catalog.iter().collect();
        let req = request(0.2, TierClass::Secondary);
        assert_eq!(normalize_terms(islands[0], &islands, &req).1, 1.0);
    }

    #[test]
    fn score_hand_example() {
        // weights (0.3, 0.3, 0.4) x terms (0.5, 0.2, 0.6) = 0.45
        let weights = Weights::new(0.3, 0.3, 0.4).unwrap();
        let s = weights.cost * 0.5 + weights.latency * 0.2 + weights.privacy * 0.6;
        assert!((s - 0.45).abs() < 1e-12);
    }

    #[test]
    fn perfect_island_scores_zero() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("a", TierLevel::Tier1Personal, 1.0, 0.0, 0.0))
            .unwrap();
        let islands: Vec<&Island> = catalog.iter().collect();
        let req = request(0.2, TierClass::Secondary);
        let weights = Weights::new(0.3, 0.3, 0.4).unwrap();
        assert_eq!(score(&req, islands[0], &islands, &weights), 0.0);
    }

    #[test]
    fn privacy_filter_excludes_low_privacy_islands() {
        let catalog = catalog3();
        let tide = TideMonitor::new();
        let req = request(0.9, TierClass::Secondary);
        let eligible = filter_eligible(&req, &catalog, |island| {
            tide.get_capacity(island, 0).available
        });
        let ids: Vec<_> = eligible.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, vec!["laptop"]);
    }

    #[test]
    fn low_sensitivity_passes_all_idle_islands() {
        let catalog = catalog3();
        let tide = TideMonitor::new();
        let req = request(0.3, TierClass::Secondary);
        let eligible = filter_eligible(&req, &catalog, |island| {
            tide.get_capacity(island, 0).available
        });
        assert_eq!(eligible.len(), 3);
    }

    #[test]
    fn asset_filter_keeps_hosting_islands_only() {
        let asset = DataAssetId::new("case-law-index", AssetKind::VectorIndex);
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("laptop", TierLevel::Tier1Personal, 1.0, 350.0, 0.0))
            .unwrap();
        let mut server = decl("firm-server", TierLevel::Tier2PrivateEdge, 0.9, 400.0, 0.0);
        server.assets.insert(asset.clone());
        catalog.register(server).unwrap();
        let tide = TideMonitor::new();
        let mut req = request(0.3, TierClass::Secondary);
        req.required_assets.insert(asset);
        let eligible = filter_eligible(&req, &catalog, |island| {
            tide.get_capacity(island, 0).available
        });
        let ids: Vec<_> = eligible.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, vec!["firm-server"]);
    }

    #[test]
    fn busy_bounded_island_fails_capacity_gate() {
        let catalog = catalog3();
        let mut tide = TideMonitor::new();
        tide.set_script(IslandId::from("laptop"), busy_script());
        let req = request(0.9, TierClass::Secondary);
        let eligible = filter_eligible(&req, &catalog, |island| {
            tide.get_capacity(island, 0).available
        });
        assert!(eligible.is_empty());
    }

    #[test]
    fn tier_policy_secondary_keeps_local_above_half() {
        let catalog = catalog3();
        let req = request(0.3, TierClass::Secondary);
        let eligibility = Eligibility::evaluate(&req, &catalog, None, |_| 1.0);
        let kept = apply_tier_policy(&req, &eligibility, 0.6).unwrap();
        assert!(kept.iter().any(|c| c.island.id.as_str() == "laptop"));
        let kept = apply_tier_policy(&req, &eligibility, 0.5).unwrap();
        assert!(!kept.iter().any(|c| c.island.is_personal()));
    }

    #[test]
    fn tier_policy_burstable_needs_080() {
        let catalog = catalog3();
        let req = request(0.3, TierClass::Burstable);
        let eligibility = Eligibility::evaluate(&req, &catalog, None, |_| 1.0);
        let kept = apply_tier_policy(&req, &eligibility, 0.6).unwrap();
        assert!(!kept.iter().any(|c| c.island.is_personal()));
        assert!(kept.iter().any(|c| c.island.id.as_str() == "cloud"));
        let kept = apply_tier_policy(&req, &eligibility, 0.81).unwrap();
        assert!(kept.iter().any(|c| c.island.is_personal()));
    }

    #[test]
    fn tier_policy_primary_queues_on_exhausted_local() {
        let catalog = catalog3();
        let req = request(0.3, TierClass::Primary);
        // local capacity 0.1: below every threshold
        let eligibility = Eligibility::evaluate(&req, &catalog, None, |island| {
            if island.is_personal() {
                0.1
            } else {
                1.0
            }
        });
        let kept = apply_tier_policy(&req, &eligibility, 0.1).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].island.id.as_str(), "laptop");
        assert!(kept[0].queued);
    }

    #[test]
    fn tier_policy_primary_rejects_without_personal() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("cloud", TierLevel::Tier3Cloud, 0.4, 250.0, 0.02))
            .unwrap();
        let req = request(0.3, TierClass::Primary);
        let eligibility = Eligibility::evaluate(&req, &catalog, None, |_| 1.0);
        assert_eq!(
            apply_tier_policy(&req, &eligibility, 1.0).unwrap_err(),
            RejectReason::PrimaryPersonalUnavailable
        );
    }

    #[test]
    fn healthcare_request_routes_to_idle_personal_island() {
        // laptop busy, NAS (second personal island) idle; a primary request
        // prefers the island that can run now over queueing on the laptop
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("laptop", TierLevel::Tier1Personal, 1.0, 350.0, 0.0))
            .unwrap();
        catalog
            .register(decl("nas", TierLevel::Tier1Personal, 1.0, 500.0, 0.0))
            .unwrap();
        catalog
            .register(decl("cloud", TierLevel::Tier3Cloud, 0.4, 250.0, 0.02))
            .unwrap();
        let mut tide = TideMonitor::new();
        tide.set_script(IslandId::from("laptop"), busy_script());
        let req = request(0.9, TierClass::Primary);
        let decision = router().route(&req, ctx(&catalog, &tide));
        match decision.outcome {
            Outcome::Routed {
                island,
                sanitization,
                queued,
                ..
            } => {
                assert_eq!(island.as_str(), "nas");
                assert_eq!(sanitization, Sanitization::Bypassed);
                assert!(!queued);
            }
            other => panic!("expected routed, got {other:?}"),
        }
    }

    #[test]
    fn low_sensitivity_crossing_boundary_sanitizes_history() {
        let catalog = catalog3();
        let mut tide = TideMonitor::new();
        // laptop asleep: capacity 0; edge also busy so cloud wins
        tide.set_script(IslandId::from("laptop"), busy_script());
        tide.set_script(IslandId::from("edge"), busy_script());
        let mut req = request(0.3, TierClass::Secondary);
        req.history = History {
            turns: vec!["Patient John Doe visited Chicago".to_owned()],
            provenance_privacy: 0.9,
        };
        let decision = router().route(&req, ctx(&catalog, &tide));
        match decision.outcome {
            Outcome::Routed {
                island,
                sanitization,
                ..
            } => {
                assert_eq!(island.as_str(), "cloud");
                match sanitization {
                    Sanitization::Applied(history) => {
                        assert_eq!(
                            history.turns,
                            vec!["Patient [PERSON_1] visited [LOCATION_1]"]
                        );
                    }
                    Sanitization::Bypassed => panic!("expected applied sanitization"),
                }
            }
            other => panic!("expected routed, got {other:?}"),
        }
    }

    #[test]
    fn fully_sensitive_request_rejects_on_cloud_only_catalog() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog
            .register(decl("cloud-a", TierLevel::Tier3Cloud, 0.4, 250.0, 0.02))
            .unwrap();
        catalog
            .register(decl("cloud-b", TierLevel::Tier3Cloud, 0.5, 300.0, 0.01))
            .unwrap();
        let tide = TideMonitor::new();
        let req = request(1.0, TierClass::Secondary);
        let decision = router().route(&req, ctx(&catalog, &tide));
        assert_eq!(
            decision.outcome,
            Outcome::RejectedFailClosed {
                reason: RejectReason::PrivacyUnsatisfiable
            }
        );
    }

    #[test]
    fn capacity_emptiness_falls_back_to_local() {
        let catalog = catalog3();
        let mut tide = TideMonitor::new();
        tide.set_script(IslandId::from("laptop"), busy_script());
        tide.set_script(IslandId::from("edge"), busy_script());
        // sensitivity 0.9: only laptop satisfies privacy, but it is busy
        let req = request(0.9, TierClass::Secondary);
        let decision = router().route(&req, ctx(&catalog, &tide));
        match decision.outcome {
            Outcome::FailsafeLocal { island, .. } => assert_eq!(island.as_str(), "laptop"),
            other => panic!("expected failsafe, got {other:?}"),
        }
    }

    #[test]
    fn constraint_mode_minimizes_latency_within_budget() {
        let catalog = catalog3();
        let tide = TideMonitor::new();
        let req = request(0.3, TierClass::Secondary);
        // budget excludes the 0.02 cloud; edge at 0.005 is within budget
        let router = router()
            .with_mode(RoutingMode::ConstraintBased)
            .with_budget(Some(0.01));
        let decision = router.route(&req, ctx(&catalog, &tide));
        match decision.outcome {
            // laptop (350ms) beats edge (400ms)
            Outcome::Routed { island, .. } => assert_eq!(island.as_str(), "laptop"),
            other => panic!("expected routed, got {other:?}"),
        }
    }

    #[test]
    fn uniform_cost_scaling_preserves_choice() {
        let tide = TideMonitor::new();
        let req = request(0.3, TierClass::Secondary);
        let choose = |scale: f64| {
            let mut catalog = Catalog::new(TrustMode::Min);
            catalog
                .register(decl("laptop", TierLevel::Tier1Personal, 1.0, 350.0, 0.0))
                .unwrap();
            catalog
                .register(decl(
                    "edge",
                    TierLevel::Tier2PrivateEdge,
                    0.8,
                    400.0,
                    0.005 * scale,
                ))
                .unwrap();
            catalog
                .register(decl(
                    "cloud",
                    TierLevel::Tier3Cloud,
                    0.4,
                    250.0,
                    0.02 * scale,
                ))
                .unwrap();
            let decision = router().route(&req, ctx(&catalog, &tide));
            decision.chosen_island().unwrap().clone()
        };
        let baseline = choose(1.0);
        for scale in [0.01, 0.5, 10.0, 1000.0] {
            assert_eq!(choose(scale), baseline, "scale {scale}");
        }
    }

    #[test]
    fn raw_scoring_mode_is_the_unnormalized_weighted_sum() {
        let catalog = catalog3();
        let tide = TideMonitor::new();
        let req = request(0.3, TierClass::Secondary);
        let weights = Weights::new(0.3, 0.3, 0.4).unwrap();
        let router = Router::new(weights).with_scoring(ScoringSpace::Raw);
        let decision = router.route(&req, ctx(&catalog, &tide));
        let Outcome::Routed { island, breakdown, .. } = decision.outcome else {
            panic!("expected routed");
        };
        let chosen = catalog.get(&island).unwrap();
        assert_eq!(breakdown.cost_term, chosen.cost_per_request);
        assert_eq!(breakdown.latency_term, chosen.latency_ms);
        assert_eq!(breakdown.privacy_term, 1.0 - chosen.privacy_score);
        let expected = weights.cost * chosen.cost_per_request
            + weights.latency * chosen.latency_ms
            + weights.privacy * (1.0 - chosen.privacy_score);
        assert!((breakdown.score - expected).abs() < 1e-12);
    }

    #[test]
    fn dead_islands_are_not_candidates() {
        let catalog = catalog3();
        let tide = TideMonitor::new();
        let alive: BTreeSet<IslandId> =
            [IslandId::from("edge"), IslandId::from("cloud")].into();
        let req = request(0.3, TierClass::Secondary);
        let context = RouteContext {
            alive: Some(&alive),
            ..ctx(&catalog, &tide)
        };
        let decision = router().route(&req, context);
        let chosen = decision.chosen_island().unwrap();
        assert_ne!(chosen.as_str(), "laptop");
        assert_eq!(decision.candidates_considered, 2);
    }
}
