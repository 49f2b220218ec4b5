//! Sensitivity scoring and reversible typed-placeholder sanitization.
//!
//! Stage 1 matches PII/HIPAA/financial patterns; Stage 2 is a deterministic
//! rule-based contextual classifier (keyword lexicons per class). Both stages
//! and entity detection are pure functions of their input, so identical text
//! always produces identical reports.

mod patterns;
mod placeholder;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use patterns::{PatternError, PatternSet};
pub use placeholder::{PlaceholderMap, SanitizedHistory, SessionId};

/// Coarse-grained entity kinds. Deliberately no fine-grained subtypes
/// (PATIENT, DOCTOR, ...): coarser types reduce placeholder uniqueness.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum EntityKind {
    Person,
    Location,
    Id,
    Org,
    MedicalCondition,
    TemporalReference,
    Financial,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Person,
        EntityKind::Location,
        EntityKind::Id,
        EntityKind::Org,
        EntityKind::MedicalCondition,
        EntityKind::TemporalReference,
        EntityKind::Financial,
    ];

    /// Placeholder token prefix.
    pub fn label(self) -> &'static str {
        match self {
            EntityKind::Person => "PERSON",
            EntityKind::Location => "LOCATION",
            EntityKind::Id => "ID",
            EntityKind::Org => "ORG",
            EntityKind::MedicalCondition => "MEDICAL_CONDITION",
            EntityKind::TemporalReference => "TEMPORAL_REFERENCE",
            EntityKind::Financial => "FINANCIAL",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|kind| kind.label() == label)
    }
}

/// Stage 2 contextual class with its score value.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Class {
    #[default]
    Public,
    Internal,
    Confidential,
    Restricted,
}

impl Stage2Class {
    pub fn value(self) -> f64 {
        match self {
            Stage2Class::Public => 0.2,
            Stage2Class::Internal => 0.5,
            Stage2Class::Confidential => 0.8,
            Stage2Class::Restricted => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Stage2Class::Public => "public",
            Stage2Class::Internal => "internal",
            Stage2Class::Confidential => "confidential",
            Stage2Class::Restricted => "restricted",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            Stage2Class::Public,
            Stage2Class::Internal,
            Stage2Class::Confidential,
            Stage2Class::Restricted,
        ]
        .into_iter()
        .find(|class| class.label() == label)
    }
}

/// One pattern hit: category plus the byte-offset span it matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trigger {
    pub category: String,
    pub start: usize,
    pub end: usize,
}

/// Result of sensitivity analysis. The score is the maximum of every
/// triggered category floor and the Stage 2 class value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub score: f64,
    pub triggers: Vec<Trigger>,
    pub stage2_class: Stage2Class,
}

/// A detected entity occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityMatch {
    pub kind: EntityKind,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl EntityMatch {
    fn len(&self) -> usize {
        self.end - self.start
    }

    fn overlaps(&self, other: &EntityMatch) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Desanitized response text plus any placeholder tokens that were not in
/// the map (left verbatim).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Desanitized {
    pub text: String,
    pub unknown_placeholders: Vec<String>,
}

/// Sensitivity analyzer and entity detector over a compiled pattern set.
#[derive(Debug, Clone)]
pub struct Analyzer {
    patterns: PatternSet,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Analyzer {
    pub fn new(patterns: PatternSet) -> Self {
        Self { patterns }
    }

    /// Analyzer over the shipped pattern file.
    pub fn builtin() -> Self {
        Self::new(PatternSet::builtin())
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    /// Score a prompt. Deterministic; an empty prompt reads as Public (0.2).
    pub fn analyze_sensitivity(&self, prompt: &str) -> SensitivityReport {
        let mut triggers = Vec::new();
        let mut floor: f64 = 0.0;
        for rule in &self.patterns.stage1 {
            for span in rule.matcher.find_spans(prompt) {
                triggers.push(Trigger {
                    category: rule.category.clone(),
                    start: span.start,
                    end: span.end,
                });
                floor = floor.max(rule.floor);
            }
        }
        let mut class = Stage2Class::Public;
        for rule in &self.patterns.stage2 {
            for span in rule.matcher.find_spans(prompt) {
                triggers.push(Trigger {
                    category: format!("class:{}", rule.class.label()),
                    start: span.start,
                    end: span.end,
                });
                class = class.max(rule.class);
            }
        }
        triggers.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then(a.end.cmp(&b.end))
                .then(a.category.cmp(&b.category))
        });
        SensitivityReport {
            score: floor.max(class.value()),
            triggers,
            stage2_class: class,
        }
    }

    /// Detect entities: non-overlapping spans sorted by start offset.
    /// Overlaps resolve to the longest match, then earliest start, then
    /// entity-kind order.
    pub fn detect_entities(&self, text: &str) -> Vec<EntityMatch> {
        let mut candidates = Vec::new();
        for rule in &self.patterns.entities {
            for span in rule.matcher.find_spans(text) {
                candidates.push(EntityMatch {
                    kind: rule.kind,
                    start: span.start,
                    end: span.end,
                    surface: text[span.start..span.end].to_owned(),
                });
            }
        }
        candidates.sort_by(|a, b| {
            b.len()
                .cmp(&a.len())
                .then(a.start.cmp(&b.start))
                .then(a.kind.cmp(&b.kind))
        });
        let mut chosen: Vec<EntityMatch> = Vec::new();
        for candidate in candidates {
            if !chosen.iter().any(|kept| kept.overlaps(&candidate)) {
                chosen.push(candidate);
            }
        }
        chosen.sort_by_key(|m| m.start);
        chosen
    }

    /// Replace every detected entity in `history` with a typed placeholder,
    /// reusing placeholders for repeated surfaces and recording the
    /// bidirectional map under `session`.
    ///
    /// Callers route fully trusted targets (`target_privacy = 1.0`) around
    /// sanitization entirely; the parameter records the boundary crossed.
    pub fn sanitize(
        &self,
        history: &[String],
        target_privacy: f64,
        session: SessionId,
    ) -> SanitizedHistory {
        debug_assert!(
            target_privacy < 1.0,
            "fully trusted targets bypass sanitization"
        );
        let _ = target_privacy;
        let mut map = PlaceholderMap::new(session);
        let turns = history
            .iter()
            .map(|turn| {
                let mut sanitized = turn.clone();
                for entity in self.detect_entities(turn).iter().rev() {
                    let token = map.placeholder_for(entity.kind, &entity.surface);
                    sanitized.replace_range(entity.start..entity.end, &token);
                }
                sanitized
            })
            .collect();
        SanitizedHistory { turns, map }
    }
}

/// Conservative report used when the analyzer is marked failed: everything
/// is treated as Restricted.
pub fn fallback_sensitivity() -> SensitivityReport {
    SensitivityReport {
        score: 1.0,
        triggers: Vec::new(),
        stage2_class: Stage2Class::Restricted,
    }
}

fn placeholder_token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let kinds = EntityKind::ALL
            .iter()
            .map(|k| k.label())
            .collect::<Vec<_>>()
            .join("|");
        Regex::new(&format!(r"\[(?:{kinds})_\d+\]")).expect("static regex")
    })
}

/// Parse a `[KIND_n]` token into its kind and ordinal.
pub(crate) fn parse_placeholder(token: &str) -> Option<(EntityKind, u32)> {
    let inner = token.strip_prefix('[')?.strip_suffix(']')?;
    let (label, ordinal) = inner.rsplit_once('_')?;
    let kind = EntityKind::from_label(label)?;
    Some((kind, ordinal.parse().ok()?))
}

/// Replace every placeholder token present in `map` with its original
/// surface string. Grammar-valid tokens missing from the map are left
/// verbatim and reported; all other text is unchanged.
pub fn desanitize(response: &str, map: &PlaceholderMap) -> Desanitized {
    let mut text = String::with_capacity(response.len());
    let mut unknown = Vec::new();
    let mut cursor = 0;
    for token in placeholder_token_regex().find_iter(response) {
        text.push_str(&response[cursor..token.start()]);
        match map.original_for(token.as_str()) {
            Some(original) => text.push_str(original),
            None => {
                unknown.push(token.as_str().to_owned());
                text.push_str(token.as_str());
            }
        }
        cursor = token.end();
    }
    text.push_str(&response[cursor..]);
    Desanitized {
        text,
        unknown_placeholders: unknown,
    }
}

/// The process-wide analyzer over the shipped pattern set.
pub fn shared_analyzer() -> &'static Analyzer {
    static ANALYZER: OnceLock<Analyzer> = OnceLock::new();
    ANALYZER.get_or_init(Analyzer::builtin)
}
