//! Pattern/lexicon data file parsing and matching primitives.
//!
//! The shipped definitions live in `data/patterns.mist`; deployments may load
//! a replacement file with the same line format. See the file header for the
//! grammar.

use regex::Regex;

use super::{EntityKind, Stage2Class};

/// Errors raised while parsing a pattern definition file.
#[derive(Debug, thiserror::Error)]
pub enum PatternError {
    #[error("line {line}: expected 'section category floor expression'")]
    Malformed { line: usize },
    #[error("line {line}: unknown section {section:?}")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown stage 2 class {class:?}")]
    UnknownClass { line: usize, class: String },
    #[error("line {line}: unknown entity kind {kind:?}")]
    UnknownEntityKind { line: usize, kind: String },
    #[error("line {line}: floor {floor} does not match class value {expected}")]
    ClassFloorMismatch { line: usize, floor: f64, expected: f64 },
    #[error("line {line}: floor {floor:?} is not a number in [0, 1]")]
    BadFloor { line: usize, floor: String },
    #[error("line {line}: unknown expression form {expr:?}")]
    UnknownExpression { line: usize, expr: String },
    #[error("line {line}: bad regex: {source}")]
    BadRegex {
        line: usize,
        #[source]
        source: Box<regex::Error>,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A single match producer: either a compiled regex (optionally narrowing to
/// the `e` capture group) or the Luhn-validated digit-group scanner.
#[derive(Debug, Clone)]
pub(crate) enum Matcher {
    Regex { re: Regex, entity_group: bool },
    Luhn,
}

/// Byte-offset span of a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Span {
    pub start: usize,
    pub end: usize,
}

impl Matcher {
    fn from_expression(line: usize, expr: &str) -> Result<Self, PatternError> {
        let compile = |pattern: String| {
            Regex::new(&pattern).map_err(|source| PatternError::BadRegex {
                line,
                source: Box::new(source),
            })
        };
        if let Some(raw) = expr.strip_prefix("re:") {
            let re = compile(raw.to_owned())?;
            let entity_group = re.capture_names().flatten().any(|name| name == "e");
            return Ok(Matcher::Regex { re, entity_group });
        }
        if let Some(word) = expr.strip_prefix("word:") {
            let re = compile(format!(r"(?i)\b{}\b", regex::escape(word)))?;
            return Ok(Matcher::Regex { re, entity_group: false });
        }
        if let Some(word) = expr.strip_prefix("lex:") {
            let re = compile(format!(r"\b{}\b", regex::escape(word)))?;
            return Ok(Matcher::Regex { re, entity_group: false });
        }
        if let Some(name) = expr.strip_prefix("firstname:") {
            let re = compile(format!(
                r"\b{}(?: [A-Z][A-Za-z'\-]+)+\b",
                regex::escape(name)
            ))?;
            return Ok(Matcher::Regex { re, entity_group: false });
        }
        if expr == "luhn:" {
            return Ok(Matcher::Luhn);
        }
        Err(PatternError::UnknownExpression {
            line,
            expr: expr.to_owned(),
        })
    }

    /// All non-overlapping match spans in `text`.
    pub(crate) fn find_spans(&self, text: &str) -> Vec<Span> {
        match self {
            Matcher::Regex { re, entity_group } => {
                let mut spans = Vec::new();
                for captures in re.captures_iter(text) {
                    let m = if *entity_group {
                        captures.name("e").unwrap_or_else(|| {
                            captures.get(0).expect("group 0 always present")
                        })
                    } else {
                        captures.get(0).expect("group 0 always present")
                    };
                    spans.push(Span {
                        start: m.start(),
                        end: m.end(),
                    });
                }
                spans
            }
            Matcher::Luhn => luhn_spans(text),
        }
    }
}

fn luhn_base_regex() -> &'static Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b\d(?:[ -]?\d){12,18}\b").expect("static regex"))
}

fn luhn_spans(text: &str) -> Vec<Span> {
    luhn_base_regex()
        .find_iter(text)
        .filter(|m| {
            let digits: Vec<u32> = m
                .as_str()
                .chars()
                .filter_map(|c| c.to_digit(10))
                .collect();
            (13..=19).contains(&digits.len()) && luhn_valid(&digits)
        })
        .map(|m| Span {
            start: m.start(),
            end: m.end(),
        })
        .collect()
}

fn luhn_valid(digits: &[u32]) -> bool {
    let sum: u32 = digits
        .iter()
        .rev()
        .enumerate()
        .map(|(i, &d)| {
            if i % 2 == 1 {
                let doubled = d * 2;
                if doubled > 9 {
                    doubled - 9
                } else {
                    doubled
                }
            } else {
                d
            }
        })
        .sum();
    sum.is_multiple_of(10)
}

/// Stage 1 scoring pattern: any match contributes `floor` to the score.
#[derive(Debug, Clone)]
pub(crate) struct ScoringRule {
    pub category: String,
    pub floor: f64,
    pub matcher: Matcher,
}

/// Stage 2 classifier lexicon entry.
#[derive(Debug, Clone)]
pub(crate) struct ClassRule {
    pub class: Stage2Class,
    pub matcher: Matcher,
}

/// Entity detection rule.
#[derive(Debug, Clone)]
pub(crate) struct EntityRule {
    pub kind: EntityKind,
    pub matcher: Matcher,
}

/// Compiled pattern set loaded from a definitions file.
#[derive(Debug, Clone, Default)]
pub struct PatternSet {
    pub(crate) stage1: Vec<ScoringRule>,
    pub(crate) stage2: Vec<ClassRule>,
    pub(crate) entities: Vec<EntityRule>,
}

impl PatternSet {
    /// Parse and compile a definitions file.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let mut set = PatternSet::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.splitn(4, ' ');
            let (section, category, floor, expr) = match (
                parts.next(),
                parts.next(),
                parts.next(),
                parts.next(),
            ) {
                (Some(s), Some(c), Some(f), Some(e)) => (s, c, f, e.trim()),
                _ => return Err(PatternError::Malformed { line }),
            };
            let floor: f64 = floor.parse().map_err(|_| PatternError::BadFloor {
                line,
                floor: floor.to_owned(),
            })?;
            if !(0.0..=1.0).contains(&floor) {
                return Err(PatternError::BadFloor {
                    line,
                    floor: floor.to_string(),
                });
            }
            let matcher = Matcher::from_expression(line, expr)?;
            match section {
                "stage1" => set.stage1.push(ScoringRule {
                    category: category.to_owned(),
                    floor,
                    matcher,
                }),
                "stage2" => {
                    let class = Stage2Class::from_label(category).ok_or_else(|| {
                        PatternError::UnknownClass {
                            line,
                            class: category.to_owned(),
                        }
                    })?;
                    if (floor - class.value()).abs() > 1e-9 {
                        return Err(PatternError::ClassFloorMismatch {
                            line,
                            floor,
                            expected: class.value(),
                        });
                    }
                    set.stage2.push(ClassRule { class, matcher });
                }
                "entity" => {
                    let kind = EntityKind::from_label(category).ok_or_else(|| {
                        PatternError::UnknownEntityKind {
                            line,
                            kind: category.to_owned(),
                        }
                    })?;
                    set.entities.push(EntityRule { kind, matcher });
                }
                other => {
                    return Err(PatternError::UnknownSection {
                        line,
                        section: other.to_owned(),
                    })
                }
            }
        }
        Ok(set)
    }

    /// Load a replacement definitions file.
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, PatternError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|source| {
            PatternError::Io {
                path: path.as_ref().display().to_string(),
                source,
            }
        })?;
        Self::parse(&text)
    }

    /// The pattern set shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/patterns.mist"))
            .expect("shipped pattern file parses")
    }

    /// Number of stage 1 + stage 2 scoring entries.
    pub fn scoring_len(&self) -> usize {
        self.stage1.len() + self.stage2.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_file_parses_with_roughly_fifty_scoring_patterns() {
        let set = PatternSet::builtin();
        assert!(
            (45..=60).contains(&set.scoring_len()),
            "scoring patterns = {}",
            set.scoring_len()
        );
        assert!(!set.entities.is_empty());
    }

    #[test]
    fn luhn_accepts_valid_card_and_rejects_others() {
        let spans = luhn_spans("pay with 4111 1111 1111 1111 today");
        assert_eq!(spans.len(), 1);
        // same digits, last one off by one: checksum fails
        assert!(luhn_spans("pay with 4111 1111 1111 1112 today").is_empty());
        // SSN-length digit runs are out of range
        assert!(luhn_spans("ssn 123-45-6789").is_empty());
    }

    #[test]
    fn malformed_lines_are_rejected_with_location() {
        let err = PatternSet::parse("stage1 pii:email 0.80").unwrap_err();
        assert!(matches!(err, PatternError::Malformed { line: 1 }));
        let err = PatternSet::parse("nope a 0.5 word:x").unwrap_err();
        assert!(matches!(err, PatternError::UnknownSection { .. }));
    }

    #[test]
    fn class_floor_must_match_class_value() {
        let err = PatternSet::parse("stage2 internal 0.60 word:roadmap").unwrap_err();
        assert!(matches!(err, PatternError::ClassFloorMismatch { .. }));
    }
}
