//! Island catalog: registration, trust composition, tier classification,
//! data-asset hosting, and cost models.
//!
//! Islands are immutable once registered and safe to share across threads;
//! the catalog takes `&mut self` only while registering.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tide::BufferProfile;

/// Opaque, caller-supplied island identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IslandId(pub String);

impl IslandId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IslandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IslandId {
    fn from(value: &str) -> Self {
        Self(value.to_owned())
    }
}

/// Ownership-based trust stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TierLevel {
    /// User's own devices; trust 1.0, zero marginal cost, bounded capacity.
    Tier1Personal,
    /// Organization-controlled edge infrastructure; trust 0.6-0.8.
    Tier2PrivateEdge,
    /// Public cloud; trust 0.3-0.5, unbounded capacity.
    Tier3Cloud,
}

impl TierLevel {
    /// Inclusive trust-score range an island of this tier must declare.
    pub fn trust_range(self) -> (f64, f64) {
        match self {
            TierLevel::Tier1Personal => (1.0, 1.0),
            TierLevel::Tier2PrivateEdge => (0.6, 0.8),
            TierLevel::Tier3Cloud => (0.3, 0.5),
        }
    }

    /// Bounded islands exhaust; Tier 3 cloud capacity is treated as infinite.
    pub fn bounded(self) -> bool {
        !matches!(self, TierLevel::Tier3Cloud)
    }

    pub fn label(self) -> &'static str {
        match self {
            TierLevel::Tier1Personal => "tier1-personal",
            TierLevel::Tier2PrivateEdge => "tier2-private-edge",
            TierLevel::Tier3Cloud => "tier3-cloud",
        }
    }
}

/// Kind of a hosted data asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssetKind {
    VectorIndex,
    FineTunedModel,
    FileStore,
}

/// Identifier of a data asset an island can host (vector index, fine-tuned
/// model, or file store).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataAssetId {
    pub id: String,
    pub kind: AssetKind,
}

impl DataAssetId {
    pub fn new(id: impl Into<String>, kind: AssetKind) -> Self {
        Self { id: id.into(), kind }
    }
}

impl fmt::Display for DataAssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            AssetKind::VectorIndex => "vector-index",
            AssetKind::FineTunedModel => "fine-tuned-model",
            AssetKind::FileStore => "file-store",
        };
        write!(f, "{}:{}", self.id, kind)
    }
}

/// Owner-declared trust components, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustInputs {
    /// Local device 1.0, private edge 0.8, public cloud 0.5.
    pub base: f64,
    /// ISO 27001 1.0, SOC 2 0.9, self-certified 0.7.
    pub certification: f64,
    /// Same country 1.0, EU/GDPR 0.9, foreign 0.6.
    pub jurisdiction: f64,
}

impl TrustInputs {
    pub fn new(base: f64, certification: f64, jurisdiction: f64) -> Self {
        Self {
            base,
            certification,
            jurisdiction,
        }
    }

    fn components(&self) -> [(&'static str, f64); 3] {
        [
            ("base", self.base),
            ("certification", self.certification),
            ("jurisdiction", self.jurisdiction),
        ]
    }
}

/// How declared trust components combine into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustMode {
    /// Conservative componentwise minimum (the default).
    #[default]
    Min,
    /// Product of the three components; never exceeds the Min composition.
    Product,
}

/// Per-request pricing declared at registration. Variable pricing has no
/// defined dynamics and is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum CostModel {
    Free,
    Fixed { per_request: f64 },
    Variable,
}

/// Where an island's capacity readings come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacitySource {
    /// Scenario-scripted utilization rows.
    #[default]
    Scripted,
    /// Live probe adapter (stubbed in this artifact).
    LiveProbe,
    /// Tier 3 islands: never exhaust, always fully available.
    Unbounded,
}

/// Raw island declaration as ingested from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandDeclaration {
    pub id: IslandId,
    #[serde(default)]
    pub name: Option<String>,
    pub tier: TierLevel,
    /// Privacy score P in [0, 1] set by the island owner.
    pub privacy: f64,
    pub trust: TrustInputs,
    /// Expected round-trip latency in milliseconds.
    pub latency_ms: f64,
    pub cost: CostModel,
    #[serde(default)]
    pub assets: BTreeSet<DataAssetId>,
    #[serde(default)]
    pub buffer_profile: Option<BufferProfile>,
    #[serde(default)]
    pub capacity: Option<CapacitySource>,
    /// Marks the user's current device, the failsafe execution target.
    #[serde(default)]
    pub local: bool,
}

/// A registered computational endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Island {
    pub id: IslandId,
    pub name: String,
    /// Expected round-trip latency L in milliseconds.
    pub latency_ms: f64,
    /// Flat per-request cost C; zero for personal devices.
    pub cost_per_request: f64,
    /// Privacy score P in [0, 1].
    pub privacy_score: f64,
    /// Composed trust score T in [0, 1].
    pub trust_score: f64,
    pub tier: TierLevel,
    pub assets: BTreeSet<DataAssetId>,
    pub capacity_source: CapacitySource,
    pub buffer_profile: BufferProfile,
    /// True for Tier 1/2; false for unbounded Tier 3.
    pub bounded: bool,
}

impl Island {
    pub fn hosts(&self, asset: &DataAssetId) -> bool {
        self.assets.contains(asset)
    }

    pub fn hosts_all<'a>(&self, assets: impl IntoIterator<Item = &'a DataAssetId>) -> bool {
        assets.into_iter().all(|asset| self.hosts(asset))
    }

    pub fn is_personal(&self) -> bool {
        self.tier == TierLevel::Tier1Personal
    }
}

/// Registration and trust-composition errors.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RegistryError {
    #[error("trust component {component} = {value} is outside [0, 1]")]
    TrustComponentOutOfRange { component: &'static str, value: f64 },
    #[error("privacy score {0} is outside [0, 1]")]
    PrivacyOutOfRange(f64),
    #[error("latency {0} ms must be nonnegative and finite")]
    InvalidLatency(f64),
    #[error(
        "composed trust {trust:.3} is outside the {tier} range [{lo}, {hi}]",
        tier = tier.label(), lo = tier.trust_range().0, hi = tier.trust_range().1
    )]
    TierTrustMismatch { tier: TierLevel, trust: f64 },
    #[error("personal (Tier 1) islands must declare zero cost, got {0}")]
    NonZeroPersonalCost(f64),
    #[error("per-request cost {0} must be nonnegative and finite")]
    InvalidCost(f64),
    #[error("variable pricing has no defined dynamics; declare free or fixed cost")]
    VariablePricingUnsupported,
    #[error("island {0} is already registered")]
    DuplicateIsland(IslandId),
    #[error("island {0} marks itself local but only Tier 1 islands may")]
    NonPersonalLocal(IslandId),
    #[error("islands {0} and {1} both mark themselves local")]
    MultipleLocalIslands(IslandId, IslandId),
}

/// Compose a trust score from owner-declared components.
pub fn compose_trust(inputs: &TrustInputs, mode: TrustMode) -> Result<f64, RegistryError> {
    for (component, value) in inputs.components() {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(RegistryError::TrustComponentOutOfRange { component, value });
        }
    }
    Ok(match mode {
        TrustMode::Min => inputs
            .base
            .min(inputs.certification)
            .min(inputs.jurisdiction),
        TrustMode::Product => inputs.base * inputs.certification * inputs.jurisdiction,
    })
}

/// The island catalog. Registration validates every invariant before any
/// mutation, so a rejected declaration leaves the catalog unchanged.
#[derive(Debug, Default)]
pub struct Catalog {
    islands: Vec<Island>,
    trust_mode: TrustMode,
    local: Option<usize>,
}

impl Catalog {
    pub fn new(trust_mode: TrustMode) -> Self {
        Self {
            islands: Vec::new(),
            trust_mode,
            local: None,
        }
    }

    pub fn trust_mode(&self) -> TrustMode {
        self.trust_mode
    }

    /// Validate a declaration and add the composed island to the catalog.
    pub fn register(&mut self, declaration: IslandDeclaration) -> Result<&Island, RegistryError> {
        let island = self.validate(&declaration)?;
        if declaration.local {
            self.local = Some(self.islands.len());
        }
        self.islands.push(island);
        Ok(self.islands.last().expect("just pushed"))
    }

    /// Run every registration check without mutating the catalog.
    pub fn validate(&self, declaration: &IslandDeclaration) -> Result<Island, RegistryError> {
        if self.islands.iter().any(|i| i.id == declaration.id) {
            return Err(RegistryError::DuplicateIsland(declaration.id.clone()));
        }
        if !(0.0..=1.0).contains(&declaration.privacy) || declaration.privacy.is_nan() {
            return Err(RegistryError::PrivacyOutOfRange(declaration.privacy));
        }
        if !declaration.latency_ms.is_finite() || declaration.latency_ms < 0.0 {
            return Err(RegistryError::InvalidLatency(declaration.latency_ms));
        }
        let trust = compose_trust(&declaration.trust, self.trust_mode)?;
        let (lo, hi) = declaration.tier.trust_range();
        if trust < lo || trust > hi {
            return Err(RegistryError::TierTrustMismatch {
                tier: declaration.tier,
                trust,
            });
        }
        let cost = match declaration.cost {
            CostModel::Free => 0.0,
            CostModel::Fixed { per_request } => {
                if !per_request.is_finite() || per_request < 0.0 {
                    return Err(RegistryError::InvalidCost(per_request));
                }
                per_request
            }
            CostModel::Variable => return Err(RegistryError::VariablePricingUnsupported),
        };
        if declaration.tier == TierLevel::Tier1Personal && cost != 0.0 {
            return Err(RegistryError::NonZeroPersonalCost(cost));
        }
        if declaration.local {
            if declaration.tier != TierLevel::Tier1Personal {
                return Err(RegistryError::NonPersonalLocal(declaration.id.clone()));
            }
            if let Some(existing) = self.local.map(|idx| &self.islands[idx]) {
                return Err(RegistryError::MultipleLocalIslands(
                    existing.id.clone(),
                    declaration.id.clone(),
                ));
            }
        }
        let capacity_source = if declaration.tier.bounded() {
            match declaration.capacity {
                Some(CapacitySource::Unbounded) | None => CapacitySource::Scripted,
                Some(source) => source,
            }
        } else {
            CapacitySource::Unbounded
        };
        Ok(Island {
            id: declaration.id.clone(),
            name: declaration
                .name
                .clone()
                .unwrap_or_else(|| declaration.id.0.clone()),
            latency_ms: declaration.latency_ms,
            cost_per_request: cost,
            privacy_score: declaration.privacy,
            trust_score: trust,
            tier: declaration.tier,
            assets: declaration.assets.clone(),
            capacity_source,
            buffer_profile: declaration.buffer_profile.unwrap_or(BufferProfile::Conservative),
            bounded: declaration.tier.bounded(),
        })
    }

    pub fn get(&self, id: &IslandId) -> Option<&Island> {
        self.islands.iter().find(|island| &island.id == id)
    }

    /// Islands in registration (catalog) order.
    pub fn iter(&self) -> impl Iterator<Item = &Island> {
        self.islands.iter()
    }

    pub fn len(&self) -> usize {
        self.islands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.islands.is_empty()
    }

    /// Every island hosting `asset`, in catalog order.
    pub fn islands_hosting(&self, asset: &DataAssetId) -> Vec<&Island> {
        self.islands.iter().filter(|i| i.hosts(asset)).collect()
    }

    /// The user's designated device: the island marked `local`, else the
    /// first registered Tier 1 island.
    pub fn local_island(&self) -> Option<&Island> {
        self.local
            .map(|idx| &self.islands[idx])
            .or_else(|| self.islands.iter().find(|i| i.is_personal()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn declaration(id: &str, tier: TierLevel) -> IslandDeclaration {
        let trust = match tier {
            TierLevel::Tier1Personal => TrustInputs::new(1.0, 1.0, 1.0),
            TierLevel::Tier2PrivateEdge => TrustInputs::new(0.8, 0.9, 0.9),
            TierLevel::Tier3Cloud => TrustInputs::new(0.5, 0.9, 0.9),
        };
        IslandDeclaration {
            id: IslandId::from(id),
            name: None,
            tier,
            privacy: match tier {
                TierLevel::Tier1Personal => 1.0,
                TierLevel::Tier2PrivateEdge => 0.8,
                TierLevel::Tier3Cloud => 0.4,
            },
            trust,
            latency_ms: 300.0,
            cost: match tier {
                TierLevel::Tier3Cloud => CostModel::Fixed { per_request: 0.02 },
                _ => CostModel::Free,
            },
            assets: BTreeSet::new(),
            buffer_profile: None,
            capacity: None,
            local: false,
        }
    }

    #[test]
    fn min_composition_identity() {
        let t = compose_trust(&TrustInputs::new(1.0, 1.0, 1.0), TrustMode::Min).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn min_composition_takes_weakest_component() {
        let t = compose_trust(&TrustInputs::new(1.0, 0.9, 0.6), TrustMode::Min).unwrap();
        assert_eq!(t, 0.6);
    }

    #[test]
    fn product_composition_multiplies() {
        let t = compose_trust(&TrustInputs::new(0.8, 0.9, 0.9), TrustMode::Product).unwrap();
        assert!((t - 0.648).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_component_is_rejected() {
        let err = compose_trust(&TrustInputs::new(1.2, 0.9, 0.9), TrustMode::Min).unwrap_err();
        assert!(matches!(
            err,
            RegistryError::TrustComponentOutOfRange { component: "base", .. }
        ));
    }

    #[test]
    fn laptop_registers_with_full_trust() {
        let mut catalog = Catalog::new(TrustMode::Min);
        let island = catalog.register(declaration("laptop", TierLevel::Tier1Personal)).unwrap();
        assert_eq!(island.trust_score, 1.0);
        assert!(island.bounded);
        assert_eq!(island.cost_per_request, 0.0);
    }

    #[test]
    fn cloud_registers_unbounded() {
        let mut catalog = Catalog::new(TrustMode::Product);
        let mut decl = declaration("cloud", TierLevel::Tier3Cloud);
        decl.trust = TrustInputs::new(0.5, 0.9, 1.0); // 0.45
        let island = catalog.register(decl).unwrap();
        assert!((island.trust_score - 0.45).abs() < 1e-12);
        assert!(!island.bounded);
        assert_eq!(island.capacity_source, CapacitySource::Unbounded);
    }

    #[test]
    fn tier_trust_mismatch_is_rejected_and_catalog_unchanged() {
        let mut catalog = Catalog::new(TrustMode::Min);
        let mut decl = declaration("laptop", TierLevel::Tier1Personal);
        decl.trust = TrustInputs::new(0.7, 1.0, 1.0); // composes to 0.7, not 1.0
        let err = catalog.register(decl).unwrap_err();
        assert!(matches!(err, RegistryError::TierTrustMismatch { .. }));
        assert!(catalog.is_empty());
    }

    #[test]
    fn duplicate_id_is_a_conflict() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog.register(declaration("laptop", TierLevel::Tier1Personal)).unwrap();
        let err = catalog
            .register(declaration("laptop", TierLevel::Tier1Personal))
            .unwrap_err();
        assert_eq!(err, RegistryError::DuplicateIsland(IslandId::from("laptop")));
        assert_eq!(catalog.len(), 1);
    }

    #[test]
    fn variable_pricing_is_rejected() {
        let mut catalog = Catalog::new(TrustMode::Min);
        let mut decl = declaration("cloud", TierLevel::Tier3Cloud);
        decl.cost = CostModel::Variable;
        assert_eq!(
            catalog.register(decl).unwrap_err(),
            RegistryError::VariablePricingUnsupported
        );
    }

    #[test]
    fn personal_islands_must_be_free() {
        let mut catalog = Catalog::new(TrustMode::Min);
        let mut decl = declaration("laptop", TierLevel::Tier1Personal);
        decl.cost = CostModel::Fixed { per_request: 0.01 };
        assert_eq!(
            catalog.register(decl).unwrap_err(),
            RegistryError::NonZeroPersonalCost(0.01)
        );
    }

    #[test]
    fn hosting_lookup_preserves_catalog_order() {
        let asset = DataAssetId::new("case-law-index", AssetKind::VectorIndex);
        let mut catalog = Catalog::new(TrustMode::Min);
        let mut a = declaration("laptop", TierLevel::Tier1Personal);
        a.assets.insert(asset.clone());
        catalog.register(a).unwrap();
        let mut b = declaration("firm-server", TierLevel::Tier2PrivateEdge);
        b.assets.insert(asset.clone());
        catalog.register(b).unwrap();
        catalog.register(declaration("cloud", TierLevel::Tier3Cloud)).unwrap();

        let hosts = catalog.islands_hosting(&asset);
        let ids: Vec<_> = hosts.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, vec!["laptop", "firm-server"]);

        let unknown = DataAssetId::new("nothing", AssetKind::FileStore);
        assert!(catalog.islands_hosting(&unknown).is_empty());
    }

    #[test]
    fn local_island_defaults_to_first_personal() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog.register(declaration("edge", TierLevel::Tier2PrivateEdge)).unwrap();
        catalog.register(declaration("laptop", TierLevel::Tier1Personal)).unwrap();
        catalog.register(declaration("phone", TierLevel::Tier1Personal)).unwrap();
        assert_eq!(catalog.local_island().unwrap().id.as_str(), "laptop");
    }

    #[test]
    fn explicit_local_flag_wins() {
        let mut catalog = Catalog::new(TrustMode::Min);
        catalog.register(declaration("laptop", TierLevel::Tier1Personal)).unwrap();
        let mut phone = declaration("phone", TierLevel::Tier1Personal);
        phone.local = true;
        catalog.register(phone).unwrap();
        assert_eq!(catalog.local_island().unwrap().id.as_str(), "phone");
    }
}
