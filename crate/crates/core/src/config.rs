//! Scenario configuration: a single TOML document declaring islands,
//! weights, workload, capacity scripts, membership timeouts, and mode flags.
//!
//! `validate` performs exactly the checks `build` performs, so a config the
//! validator accepts never fails config-stage checks at run time.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lighthouse::LighthouseConfig;
use crate::registry::{Catalog, IslandDeclaration, TrustMode};
use crate::tide::{CapacityScript, ScriptRow, TideMonitor};
use crate::waves::{Router, RoutingMode, ScoringSpace, Weights};

/// Workload sensitivity bands, classified from the analyzed score:
/// High at or above 0.8, Moderate at or above 0.5, Low below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityBand {
    Low,
    Moderate,
    High,
}

impl SensitivityBand {
    pub fn classify(score: f64) -> Self {
        if score >= 0.8 {
            SensitivityBand::High
        } else if score >= 0.5 {
            SensitivityBand::Moderate
        } else {
            SensitivityBand::Low
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SensitivityBand::Low => "low",
            SensitivityBand::Moderate => "moderate",
            SensitivityBand::High => "high",
        }
    }
}

/// Top-level scenario document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub weights: WeightsSection,
    pub islands: Vec<IslandDeclaration>,
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub lighthouse: LighthouseConfig,
    /// Scripted capacity rows keyed by island id.
    #[serde(default)]
    pub capacity: BTreeMap<String, Vec<ScriptRow>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub routing_mode: RoutingMode,
    #[serde(default)]
    pub trust_mode: TrustMode,
    #[serde(default)]
    pub scoring: ScoringSpace,
    /// Per-request cost ceiling; required in constraint-based mode.
    #[serde(default)]
    pub budget: Option<f64>,
}

/// Raw weights as written; normalized when the router is built.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub cost: f64,
    pub latency: f64,
    pub privacy: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Total requests across the run.
    pub total: u64,
    /// Arrival schedule: requests per tick.
    #[serde(default = "default_requests_per_tick")]
    pub requests_per_tick: u32,
    /// Fraction of requests carrying nonempty chat history.
    #[serde(default)]
    pub history_rate: f64,
    /// Privacy score of the island that produced carried history.
    #[serde(default = "default_history_privacy")]
    pub history_provenance_privacy: f64,
    #[serde(default = "default_deadline_ms")]
    pub default_deadline_ms: f64,
    pub sensitivity_mix: SensitivityMix,
    pub tier_mix: TierMix,
    pub templates: Vec<TemplateSpec>,
}

fn default_requests_per_tick() -> u32 {
    1
}

fn default_history_privacy() -> f64 {
    1.0
}

fn default_deadline_ms() -> f64 {
    1000.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityMix {
    pub high: f64,
    pub moderate: f64,
    pub low: f64,
}

impl SensitivityMix {
    pub fn fraction(&self, band: SensitivityBand) -> f64 {
        match band {
            SensitivityBand::High => self.high,
            SensitivityBand::Moderate => self.moderate,
            SensitivityBand::Low => self.low,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierMix {
    pub primary: f64,
    pub secondary: f64,
    pub burstable: f64,
}

/// A prompt generator keyed to a sensitivity band. Slot markers such as
/// `{person}` or `{ssn}` are filled from seeded pools drawn from the
/// detector's vocabulary.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub band: SensitivityBand,
    pub text: String,
    #[serde(default)]
    pub deadline_ms: Option<f64>,
    #[serde(default)]
    pub modality: Option<crate::waves::Modality>,
    #[serde(default)]
    pub requires: Vec<crate::registry::DataAssetId>,
}

/// Validation finding severity. Notes never block a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Note,
}

/// One validation finding with its config location.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigIssue {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Note => "note",
        };
        write!(f, "{tag}: {}: {}", self.location, self.message)
    }
}

/// All findings from a validation pass.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ConfigIssue>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        });
    }

    fn note(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            severity: Severity::Note,
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "valid");
        }
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Configuration loading and validation errors.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] Box<toml::de::Error>),
    #[error("configuration invalid:\n{0}")]
    Invalid(ValidationReport),
}

/// Runtime artifacts built from a validated configuration.
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub catalog: Catalog,
    pub tide: TideMonitor,
    pub lighthouse_config: LighthouseConfig,
    pub router: Router,
    pub workload: WorkloadSpec,
}

impl std::str::FromStr for ScenarioConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(Box::new(e)))
    }
}

impl ScenarioConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        text.parse()
    }

    /// Static validation of every registry/tide/waves invariant reachable
    /// from configuration.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        // weights
        let w = &self.weights;
        match Weights::new(w.cost, w.latency, w.privacy) {
            Err(err) => report.error("weights", err.to_string()),
            Ok(_) => {
                let sum = w.cost + w.latency + w.privacy;
                if (sum - 1.0).abs() > 1e-9 {
                    report.note(
                        "weights",
                        format!("sum is {sum}; weights are normalized to sum to 1"),
                    );
                }
            }
        }

        // routing mode / budget
        match (self.scenario.routing_mode, self.scenario.budget) {
            (RoutingMode::ConstraintBased, None) => {
                report.error("scenario.budget", "constraint-based routing requires a budget")
            }
            (_, Some(budget)) if !(budget.is_finite() && budget >= 0.0) => {
                report.error("scenario.budget", format!("budget {budget} must be nonnegative"))
            }
            _ => {}
        }

        // islands: trial registration mirrors the runtime checks exactly
        if self.islands.is_empty() {
            report.error("islands", "at least one island must be declared");
        }
        let mut trial = Catalog::new(self.scenario.trust_mode);
        for (idx, declaration) in self.islands.iter().enumerate() {
            let location = format!("islands[{idx}] ({})", declaration.id);
            match trial.register(declaration.clone()) {
                Ok(_) => {}
                Err(err) => report.error(location, err.to_string()),
            }
        }

        // workload
        let wl = &self.workload;
        if wl.requests_per_tick == 0 {
            report.error("workload.requests_per_tick", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&wl.history_rate) {
            report.error("workload.history_rate", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&wl.history_provenance_privacy) {
            report.error("workload.history_provenance_privacy", "must lie in [0, 1]");
        }
        if !(wl.default_deadline_ms.is_finite() && wl.default_deadline_ms > 0.0) {
            report.error("workload.default_deadline_ms", "must be positive");
        }
        check_mix(
            &mut report,
            "workload.sensitivity_mix",
            &[
                ("high", wl.sensitivity_mix.high),
                ("moderate", wl.sensitivity_mix.moderate),
                ("low", wl.sensitivity_mix.low),
            ],
        );
        check_mix(
            &mut report,
            "workload.tier_mix",
            &[
                ("primary", wl.tier_mix.primary),
                ("secondary", wl.tier_mix.secondary),
                ("burstable", wl.tier_mix.burstable),
            ],
        );
        for band in [
            SensitivityBand::High,
            SensitivityBand::Moderate,
            SensitivityBand::Low,
        ] {
            if wl.sensitivity_mix.fraction(band) > 0.0
                && !wl.templates.iter().any(|t| t.band == band)
            {
                report.error(
                    "workload.templates",
                    format!("no template declared for the {} band", band.label()),
                );
            }
        }
        for (idx, template) in wl.templates.iter().enumerate() {
            if let Some(deadline) = template.deadline_ms {
                if !(deadline.is_finite() && deadline > 0.0) {
                    report.error(
                        format!("workload.templates[{idx}].deadline_ms"),
                        "must be positive",
                    );
                }
            }
            for asset in &template.requires {
                let hosted = self
                    .islands
                    .iter()
                    .any(|island| island.assets.contains(asset));
                if !hosted {
                    report.note(
                        format!("workload.templates[{idx}].requires"),
                        format!("no island hosts {asset}; such requests will be rejected"),
                    );
                }
            }
        }

        // capacity scripts
        for (island_id, rows) in &self.capacity {
            let location = format!("capacity.{island_id}");
            let Some(declaration) = self.islands.iter().find(|i| i.id.as_str() == island_id)
            else {
                report.error(&location, "script references an undeclared island");
                continue;
            };
            if !declaration.tier.bounded() {
                report.note(&location, "Tier 3 islands are unbounded; script is ignored");
            }
            let mut seen = std::collections::BTreeSet::new();
            for (idx, row) in rows.iter().enumerate() {
                let row_location = format!("{location}[{idx}]");
                if !seen.insert(row.tick) {
                    report.error(&row_location, format!("duplicate tick {}", row.tick));
                }
                if let Err(err) = crate::tide::compute_available(
                    row.cpu_pct,
                    row.gpu_pct,
                    row.mem_used,
                    row.mem_total,
                ) {
                    report.error(&row_location, err.to_string());
                }
            }
        }

        // lighthouse timeouts
        if self.lighthouse.dead_after <= self.lighthouse.suspect_after {
            report.error(
                "lighthouse",
                format!(
                    "dead_after ({}) must exceed suspect_after ({})",
                    self.lighthouse.dead_after, self.lighthouse.suspect_after
                ),
            );
        }

        report
    }

    /// Validate and construct the runtime scenario.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let report = self.validate();
        if report.has_errors() {
            return Err(ConfigError::Invalid(report));
        }
        let mut catalog = Catalog::new(self.scenario.trust_mode);
        for declaration in &self.islands {
            catalog
                .register(declaration.clone())
                .expect("declaration already validated");
        }
        let mut tide = TideMonitor::new();
        for (island_id, rows) in &self.capacity {
            tide.set_script(
                crate::registry::IslandId::new(island_id.clone()),
                CapacityScript::new(rows.clone()),
            );
        }
        let weights = Weights::new(self.weights.cost, self.weights.latency, self.weights.privacy)
            .expect("weights already validated");
        let router = Router::new(weights)
            .with_mode(self.scenario.routing_mode)
            .with_scoring(self.scenario.scoring)
            .with_budget(self.scenario.budget);
        Ok(Scenario {
            name: self.scenario.name.clone(),
            seed: self.scenario.seed,
            catalog,
            tide,
            lighthouse_config: self.lighthouse,
            router,
            workload: self.workload.clone(),
        })
    }
}

fn check_mix(report: &mut ValidationReport, location: &str, parts: &[(&str, f64)]) {
    let mut sum = 0.0;
    for (name, value) in parts {
        if !(0.0..=1.0).contains(value) || value.is_nan() {
            report.error(
                format!("{location}.{name}"),
                format!("fraction {value} must lie in [0, 1]"),
            );
            return;
        }
        sum += value;
    }
    if (sum - 1.0).abs() > 1e-9 {
        report.error(location, format!("fractions sum to {sum}, expected 1"));
    }
}

#[cfg(test)]
mod tests {
    use std::str::FromStr as _;

    use super::*;

    fn minimal_config() -> String {
        r#"
[scenario]
name = "mini"
seed = 7

[weights]
cost = 0.3
latency = 0.3
privacy = 0.4

[[islands]]
id = "laptop"
tier = "tier1-personal"
privacy = 1.0
latency_ms = 350.0
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
total = 10
requests_per_tick = 2
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
text = "Patient {person} is on {medication}"

[[workload.templates]]
band = "moderate"
text = "Summarize the internal roadmap draft"

[[workload.templates]]
band = "low"
text = "What is photosynthesis?"
"#
        .to_owned()
    }

    #[test]
    fn minimal_config_validates_and_builds() {
        let config = ScenarioConfig::from_str(&minimal_config()).unwrap();
        let report = config.validate();
        assert!(!report.has_errors(), "{report}");
        let scenario = config.build().unwrap();
        assert_eq!(scenario.catalog.len(), 2);
        assert_eq!(scenario.name, "mini");
    }

    #[test]
    fn non_unit_weights_get_a_note_not_an_error() {
        let text = minimal_config().replace("cost = 0.3", "cost = 0.5").replace(
            "latency = 0.3",
            "latency = 0.5",
        );
        let config = ScenarioConfig::from_str(&text).unwrap();
        let report = config.validate();
        assert!(!report.has_errors(), "{report}");
        assert!(report
            .issues
            .iter()
            .any(|i| i.severity == Severity::Note && i.location == "weights"));
    }

    #[test]
    fn tier1_cost_violation_is_reported_with_location() {
        let text = minimal_config().replace(
            "cost = { model = \"free\" }",
            "cost = { model = \"fixed\", per_request = 0.01 }",
        );
        let config = ScenarioConfig::from_str(&text).unwrap();
        let report = config.validate();
        assert!(report.has_errors());
        assert!(report
            .issues
            .iter()
            .any(|i| i.location.contains("islands[0]") && i.message.contains("zero cost")));
    }

    #[test]
    fn bad_mix_sum_is_an_error() {
        let text = minimal_config().replace("low = 0.5", "low = 0.6");
        let config = ScenarioConfig::from_str(&text).unwrap();
        let report = config.validate();
        assert!(report.has_errors());
    }

    #[test]
    fn constraint_mode_requires_budget() {
        let text = minimal_config().replace(
            "seed = 7",
            "seed = 7\nrouting_mode = \"constraint_based\"",
        );
        let config = ScenarioConfig::from_str(&text).unwrap();
        assert!(config.validate().has_errors());
    }

    #[test]
    fn capacity_script_for_unknown_island_is_an_error() {
        let mut text = minimal_config();
        text.push_str("\n[[capacity.ghost]]\ntick = 0\ncpu_pct = 10.0\ngpu_pct = 0.0\nmem_used = 1\nmem_total = 4\n");
        let config = ScenarioConfig::from_str(&text).unwrap();
        let report = config.validate();
        assert!(report.has_errors());
    }

    #[test]
    fn unknown_fields_fail_parsing() {
        let text = minimal_config().replace("seed = 7", "seed = 7\nbanana = true");
        assert!(ScenarioConfig::from_str(&text).is_err());
    }
}
