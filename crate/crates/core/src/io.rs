//! Instance files: parsing with positions, the canonical echo, and its digest.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::instance::{ActSpec, DecisionInstance, InstanceError, Outcome};
use crate::rational::{format_rational, Exact};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: {source}")]
    Invalid {
        line: usize,
        column: usize,
        #[source]
        source: InstanceError,
    },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, column, .. } | ParseError::Invalid { line, column, .. } => (*line, *column),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    id: String,
    u: Exact,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAct {
    id: String,
    map: BTreeMap<String, String>,
    v: Exact,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    states: Vec<String>,
    outcomes: Vec<RawOutcome>,
    acts: Vec<RawAct>,
    ref_low: String,
    ref_high: String,
}

/// 1-based line and column of byte offset `at`.
fn line_column(text: &str, at: usize) -> (usize, usize) {
    let before = &text[..at.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Position of the string literal `needle`, searched after the key `section`.
fn locate(text: &str, section: &str, needle: &str) -> (usize, usize) {
    let start = text.find(&format!("\"{section}\"")).unwrap_or(0);
    let quoted = serde_json::to_string(needle).unwrap_or_default();
    match text[start..].find(&quoted) {
        Some(off) => line_column(text, start + off),
        None => line_column(text, start),
    }
}

fn position_of(text: &str, err: &InstanceError) -> (usize, usize) {
    match err {
        InstanceError::DuplicateId { kind: "state", id } => locate(text, "states", id),
        InstanceError::DuplicateId { kind: "outcome", id } => locate(text, "outcomes", id),
        InstanceError::DuplicateId { id, .. } => locate(text, "acts", id),
        InstanceError::UnknownOutcome { act, .. }
        | InstanceError::MissingState { act, .. }
        | InstanceError::UnknownState { act, .. } => locate(text, "acts", act),
        InstanceError::DuplicateAct { second, .. } => {
            let first = locate(text, "acts", second);
            // The second act with that id text is the duplicate; fall back to the first hit.
            let start = text.find("\"acts\"").unwrap_or(0);
            let quoted = serde_json::to_string(second).unwrap_or_default();
            text[start..]
                .match_indices(&quoted)
                .map(|(i, _)| line_column(text, start + i))
                .last()
                .unwrap_or(first)
        }
        InstanceError::UnknownReference(_) | InstanceError::IdenticalReferences => locate(text, "ref_high", ""),
        InstanceError::NonConstantReference(name) => locate(text, "acts", name),
        _ => (1, 1),
    }
}

/// Parses the instance format. Acts keep file order; map keys are matched to
/// the state list, so every state needs exactly one entry.
pub fn parse_instance(text: &str) -> Result<DecisionInstance, ParseError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let invalid = |source: InstanceError| {
        let (line, column) = position_of(text, &source);
        ParseError::Invalid { line, column, source }
    };
    let mut specs = Vec::with_capacity(raw.acts.len());
    for act in raw.acts {
        if let Some(s) = act.map.keys().find(|s| !raw.states.contains(s)) {
            return Err(invalid(InstanceError::UnknownState {
                act: act.id.clone(),
                state: s.clone(),
            }));
        }
        let mut outcomes = Vec::with_capacity(raw.states.len());
        for s in &raw.states {
            match act.map.get(s) {
                Some(o) => outcomes.push(o.clone()),
                None => {
                    return Err(invalid(InstanceError::MissingState {
                        act: act.id.clone(),
                        state: s.clone(),
                    }))
                }
            }
        }
        specs.push(ActSpec {
            id: act.id,
            outcomes,
            value: act.v.0,
        });
    }
    let outcomes = raw
        .outcomes
        .into_iter()
        .map(|o| Outcome { id: o.id, utility: o.u.0 })
        .collect();
    DecisionInstance::new(raw.states, outcomes, specs, &raw.ref_low, &raw.ref_high).map_err(invalid)
}

/// The instance in file format; parsing the echo gives back an equal instance.
pub fn instance_to_json(instance: &DecisionInstance) -> Value {
    let outcomes: Vec<Value> = instance
        .outcomes()
        .iter()
        .map(|o| json!({"id": o.id, "u": format_rational(&o.utility)}))
        .collect();
    let acts: Vec<Value> = instance
        .acts()
        .iter()
        .map(|a| {
            let map: serde_json::Map<String, Value> = instance
                .states()
                .iter()
                .zip(&a.map)
                .map(|(s, o)| (s.clone(), Value::String(instance.outcomes()[o.0].id.clone())))
                .collect();
            json!({"id": a.id, "map": map, "v": format_rational(&a.value)})
        })
        .collect();
    json!({
        "states": instance.states(),
        "outcomes": outcomes,
        "acts": acts,
        "ref_low": instance.act(instance.ref_low()).id,
        "ref_high": instance.act(instance.ref_high()).id,
    })
}

/// Hex SHA-256 of the compact canonical echo.
pub fn instance_digest(instance: &DecisionInstance) -> String {
    let canonical = serde_json::to_string(&instance_to_json(instance)).expect("values serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const E1: &str = r#"{
  "states": ["w1", "w2"],
  "outcomes": [{"id": "x0", "u": "0"}, {"id": "x1", "u": "1"}],
  "acts": [
    {"id": "xbar", "map": {"w1": "x0", "w2": "x0"}, "v": "0"},
    {"id": "f", "map": {"w1": "x1", "w2": "x0"}, "v": "3/10"},
    {"id": "g", "map": {"w1": "x0", "w2": "x1"}, "v": "7/10"},
    {"id": "ybar", "map": {"w1": "x1", "w2": "x1"}, "v": "1"}
  ],
  "ref_low": "xbar",
  "ref_high": "ybar"
}"#;

    #[test]
    fn parses_e1() {
        let inst = parse_instance(E1).unwrap();
        assert_eq!(inst, fixtures::e1());
        assert_eq!(inst.acts().len(), 4);
    }

    #[test]
    fn echo_round_trips() {
        for inst in [fixtures::e1(), fixtures::e4()] {
            let text = serde_json::to_string_pretty(&instance_to_json(&inst)).unwrap();
            assert_eq!(parse_instance(&text).unwrap(), inst);
        }
    }

    #[test]
    fn digest_is_stable_and_value_sensitive() {
        assert_eq!(instance_digest(&fixtures::e1()), instance_digest(&parse_instance(E1).unwrap()));
        assert_ne!(instance_digest(&fixtures::e1()), instance_digest(&fixtures::e2()));
        assert_eq!(instance_digest(&fixtures::e1()).len(), 64);
    }

    #[test]
    fn decimals_are_rejected() {
        let text = E1.replace("\"3/10\"", "\"0.3\"");
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 6, .. }), "{err}");
    }

    #[test]
    fn missing_map_entry_has_a_position() {
        let text = E1.replace(r#"{"w1": "x1", "w2": "x0"}"#, r#"{"w1": "x1"}"#);
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(err, ParseError::Invalid { source: InstanceError::MissingState { .. }, .. }));
        assert_eq!(err.position(), (6, 12));
    }

    #[test]
    fn identical_references_rejected() {
        let text = E1.replace(r#""ref_high": "ybar""#, r#""ref_high": "xbar""#);
        assert!(matches!(
            parse_instance(&text),
            Err(ParseError::Invalid { source: InstanceError::IdenticalReferences, .. })
        ));
    }

    #[test]
    fn duplicate_maps_rejected() {
        let text = E1.replace(r#""id": "g", "map": {"w1": "x0", "w2": "x1"}"#, r#""id": "g", "map": {"w1": "x1", "w2": "x0"}"#);
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(err, ParseError::Invalid { source: InstanceError::DuplicateAct { .. }, .. }));
        assert_eq!(err.position().0, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = E1.replace(r#""ref_low""#, r#""note": "x", "ref_low""#);
        assert!(matches!(parse_instance(&text), Err(ParseError::Syntax { .. })));
        let text = E1.replace(r#""v": "0"}"#, r#""v": "0", "w": "1"}"#);
        assert!(matches!(parse_instance(&text), Err(ParseError::Syntax { .. })));
    }
}
