//! Session-scoped bidirectional placeholder maps.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::EntityKind;

/// Opaque per-session token. Fresh maps get fresh session ids so placeholder
/// ordinals cannot be linked across sessions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    pub fn new(token: impl Into<String>) -> Self {
        Self(token.into())
    }

    /// Random session token from the caller's RNG (seedable for
    /// reproducible simulations).
    pub fn from_rng(rng: &mut impl RngCore) -> Self {
        Self(format!("{:016x}", rng.next_u64()))
    }

    /// Random session token from the OS entropy source.
    pub fn random() -> Self {
        Self::from_rng(&mut rand::rng())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Bidirectional entity/placeholder mapping for one session.
///
/// The mapping is a bijection: an original surface string maps to exactly one
/// placeholder and vice versa. Ordinals are assigned per entity kind in
/// first-appearance order and restart for every new map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlaceholderMapRepr", try_from = "PlaceholderMapRepr")]
pub struct PlaceholderMap {
    session: SessionId,
    forward: BTreeMap<String, String>,
    reverse: BTreeMap<String, String>,
    counters: BTreeMap<EntityKind, u32>,
}

impl PlaceholderMap {
    pub fn new(session: SessionId) -> Self {
        Self {
            session,
            forward: BTreeMap::new(),
            reverse: BTreeMap::new(),
            counters: BTreeMap::new(),
        }
    }

    pub fn session(&self) -> &SessionId {
        &self.session
    }

    /// Placeholder for `surface`, minting `[KIND_n]` on first appearance and
    /// reusing the existing token afterwards.
    pub fn placeholder_for(&mut self, kind: EntityKind, surface: &str) -> String {
        if let Some(existing) = self.forward.get(surface) {
            return existing.clone();
        }
        let ordinal = self.counters.entry(kind).or_insert(0);
        *ordinal += 1;
        let token = format!("[{}_{}]", kind.label(), ordinal);
        self.forward.insert(surface.to_owned(), token.clone());
        self.reverse.insert(token.clone(), surface.to_owned());
        token
    }

    /// Original surface string behind a placeholder token, if known.
    pub fn original_for(&self, placeholder: &str) -> Option<&str> {
        self.reverse.get(placeholder).map(String::as_str)
    }

    /// Existing placeholder for an original surface string, if any.
    pub fn placeholder_of(&self, surface: &str) -> Option<&str> {
        self.forward.get(surface).map(String::as_str)
    }

    /// (placeholder, original) pairs in placeholder order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.reverse.iter().map(|(p, o)| (p.as_str(), o.as_str()))
    }

    /// Original surface strings recorded in this map.
    pub fn originals(&self) -> impl Iterator<Item = &str> {
        self.forward.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

/// Serialized form: session id plus (placeholder, original) pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlaceholderMapRepr {
    session_id: SessionId,
    entries: Vec<(String, String)>,
}

impl From<PlaceholderMap> for PlaceholderMapRepr {
    fn from(map: PlaceholderMap) -> Self {
        Self {
            session_id: map.session.clone(),
            entries: map
                .reverse
                .iter()
                .map(|(p, o)| (p.clone(), o.clone()))
                .collect(),
        }
    }
}

impl TryFrom<PlaceholderMapRepr> for PlaceholderMap {
    type Error = String;

    fn try_from(repr: PlaceholderMapRepr) -> Result<Self, Self::Error> {
        let mut map = PlaceholderMap::new(repr.session_id);
        for (placeholder, original) in repr.entries {
            let (kind, ordinal) = super::parse_placeholder(&placeholder)
                .ok_or_else(|| format!("malformed placeholder token {placeholder:?}"))?;
            if map.reverse.contains_key(&placeholder) || map.forward.contains_key(&original) {
                return Err(format!("duplicate mapping for {placeholder:?}"));
            }
            map.forward.insert(original.clone(), placeholder.clone());
            map.reverse.insert(placeholder, original);
            let counter = map.counters.entry(kind).or_insert(0);
            *counter = (*counter).max(ordinal);
        }
        Ok(map)
    }
}

/// Sanitized conversation turns together with the map that reverses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanitizedHistory {
    pub turns: Vec<String>,
    pub map: PlaceholderMap,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_count_per_kind_in_first_appearance_order() {
        let mut map = PlaceholderMap::new(SessionId::new("s1"));
        assert_eq!(map.placeholder_for(EntityKind::Person, "John Doe"), "[PERSON_1]");
        assert_eq!(map.placeholder_for(EntityKind::Location, "Chicago"), "[LOCATION_1]");
        assert_eq!(map.placeholder_for(EntityKind::Person, "Jane Roe"), "[PERSON_2]");
        // repeated surface reuses the token
        assert_eq!(map.placeholder_for(EntityKind::Person, "John Doe"), "[PERSON_1]");
        assert_eq!(map.len(), 3);
    }

    #[test]
    fn mapping_is_a_bijection() {
        let mut map = PlaceholderMap::new(SessionId::new("s1"));
        let token = map.placeholder_for(EntityKind::Person, "John Doe");
        assert_eq!(map.original_for(&token), Some("John Doe"));
        assert_eq!(map.placeholder_of("John Doe"), Some(token.as_str()));
        // same surface under a different kind keeps the original token
        assert_eq!(map.placeholder_for(EntityKind::Org, "John Doe"), token);
    }

    #[test]
    fn serde_round_trip_preserves_map() {
        let mut map = PlaceholderMap::new(SessionId::new("abc"));
        map.placeholder_for(EntityKind::Person, "John Doe");
        map.placeholder_for(EntityKind::Location, "Chicago");
        let json = serde_json::to_string(&map).unwrap();
        let back: PlaceholderMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
        // counters continue after the highest restored ordinal
        let mut back = back;
        assert_eq!(back.placeholder_for(EntityKind::Person, "Maria Cruz"), "[PERSON_2]");
    }
}
