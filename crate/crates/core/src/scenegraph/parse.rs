//! JSON tree → [`SceneGraph`].
//!
//! The document is decoded into an order-preserving JSON tree first (the
//! `serde_json::Value` map loses key order and duplicate keys without the
//! `std`-only `preserve_order` feature), then converted node by node.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};

use super::labels::suffix_duplicates;
use super::{GraphError, Node, RelationType, SceneGraph, ROOT_LABELS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject repeated labels instead of suffixing them.
    pub strict_labels: bool,
}

/// Parse a scene-graph document with the default (suffixing) label policy.
pub fn parse_graph(text: &str) -> Result<SceneGraph, GraphError> {
    parse_graph_with(text, ParseOptions::default())
}

pub fn parse_graph_with(text: &str, opts: ParseOptions) -> Result<SceneGraph, GraphError> {
    let mut errors = Vec::new();
    let graph = build(text, opts, &mut errors);
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(graph.expect("graph is built when no error was recorded")),
    }
}

/// Convert `text`, pushing every problem found into `errors`. Returns a graph
/// only when no error was recorded.
pub(super) fn build(text: &str, opts: ParseOptions, errors: &mut Vec<GraphError>) -> Option<SceneGraph> {
    match serde_json::from_str(text) {
        Ok(doc) => build_from(doc, opts, errors),
        Err(e) => {
            errors.push(GraphError::MalformedJson(e.to_string()));
            None
        }
    }
}

fn build_from(doc: Json, opts: ParseOptions, errors: &mut Vec<GraphError>) -> Option<SceneGraph> {
    let Json::Object(entries) = doc else {
        errors.push(GraphError::Structure("top-level value must be an object".into()));
        return None;
    };

    let mut roots: [Option<Node>; 3] = [None, None, None];
    for (key, value) in entries {
        let key = key.trim();
        let Some(slot) = ROOT_LABELS.iter().position(|r| *r == key) else {
            errors.push(GraphError::NonRootTopLevelKey(key.to_string()));
            continue;
        };
        if roots[slot].is_some() {
            errors.push(GraphError::DuplicateLabel(key.to_string()));
            continue;
        }
        let mut node = Node::new(key);
        fill_children(&mut node, value, errors);
        roots[slot] = Some(node);
    }
    let [c, w, f] = roots;
    let mut roots = [
        c.unwrap_or_else(|| Node::new(ROOT_LABELS[0])),
        w.unwrap_or_else(|| Node::new(ROOT_LABELS[1])),
        f.unwrap_or_else(|| Node::new(ROOT_LABELS[2])),
    ];

    apply_label_policy(&mut roots, opts, errors);
    if errors.is_empty() {
        Some(SceneGraph { roots })
    } else {
        None
    }
}

/// Embedded graphs (e.g. record payloads) are read with strict labels.
impl<'de> Deserialize<'de> for SceneGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = Json::deserialize(deserializer)?;
        let mut errors = Vec::new();
        let opts = ParseOptions { strict_labels: true };
        match build_from(doc, opts, &mut errors) {
            Some(g) => Ok(g),
            None => Err(de::Error::custom(errors.remove(0))),
        }
    }
}

fn fill_children(node: &mut Node, body: Json, errors: &mut Vec<GraphError>) {
    let entries = match body {
        Json::Object(entries) => entries,
        Json::Null => return,
        other => {
            errors.push(GraphError::Structure(format!(
                "node `{}` must map to an object, found {}",
                node.label,
                other.kind()
            )));
            return;
        }
    };
    for (key, value) in entries {
        let relation = match key.parse::<RelationType>() {
            Ok(r) => r,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        let Json::Array(items) = value else {
            errors.push(GraphError::Structure(format!(
                "relation `{relation}` under `{}` must map to a list",
                node.label
            )));
            continue;
        };
        for item in items {
            let Json::Object(children) = item else {
                errors.push(GraphError::Structure(format!(
                    "entries under `{}`/{relation} must be objects",
                    node.label
                )));
                continue;
            };
            if children.is_empty() {
                errors.push(GraphError::Structure(format!(
                    "empty child entry under `{}`/{relation}",
                    node.label
                )));
            }
            // Multi-key entries are read as several siblings in document order.
            for (label, grandchildren) in children {
                let label = label.trim();
                if label.is_empty() {
                    errors.push(GraphError::EmptyLabel);
                    continue;
                }
                let mut child = Node::new(label);
                fill_children(&mut child, grandchildren, errors);
                node.push_child(relation, child);
            }
        }
    }
}

fn apply_label_policy(roots: &mut [Node; 3], opts: ParseOptions, errors: &mut Vec<GraphError>) {
    let mut labels = Vec::new();
    for root in roots.iter() {
        for (_, child) in root.children() {
            child.visit(1, &mut |n, _| labels.push(n.label.clone()));
        }
    }

    if opts.strict_labels {
        let mut seen: alloc::collections::BTreeSet<&str> = ROOT_LABELS.into_iter().collect();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            errors.push(GraphError::DuplicateLabel(dup.clone()));
        }
        return;
    }

    let original = labels.clone();
    suffix_duplicates(&mut labels, &ROOT_LABELS);
    if labels == original {
        return;
    }
    let mut renamed = labels.into_iter();
    for root in roots.iter_mut() {
        for group in root.children.iter_mut() {
            for child in group.iter_mut() {
                child.visit_mut(&mut |n| {
                    if let Some(l) = renamed.next() {
                        n.label = l;
                    }
                });
            }
        }
    }
}

/// Minimal order-preserving JSON tree.
#[derive(Debug, Clone, PartialEq)]
pub(super) enum Json {
    Null,
    Bool,
    Number,
    String,
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    fn kind(&self) -> &'static str {
        match self {
            Json::Null => "null",
            Json::Bool => "a boolean",
            Json::Number => "a number",
            Json::String => "a string",
            Json::Array(_) => "a list",
            Json::Object(_) => "an object",
        }
    }
}

impl<'de> Deserialize<'de> for Json {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(JsonVisitor)
    }
}

struct JsonVisitor;

impl<'de> Visitor<'de> for JsonVisitor {
    type Value = Json;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E: de::Error>(self, _: bool) -> Result<Json, E> {
        Ok(Json::Bool)
    }
    fn visit_i64<E: de::Error>(self, _: i64) -> Result<Json, E> {
        Ok(Json::Number)
    }
    fn visit_u64<E: de::Error>(self, _: u64) -> Result<Json, E> {
        Ok(Json::Number)
    }
    fn visit_f64<E: de::Error>(self, _: f64) -> Result<Json, E> {
        Ok(Json::Number)
    }
    fn visit_str<E: de::Error>(self, _: &str) -> Result<Json, E> {
        Ok(Json::String)
    }
    fn visit_unit<E: de::Error>(self) -> Result<Json, E> {
        Ok(Json::Null)
    }
    fn visit_none<E: de::Error>(self) -> Result<Json, E> {
        Ok(Json::Null)
    }
    fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Json, D::Error> {
        Json::deserialize(d)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Json, A::Error> {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element::<Json>()? {
            items.push(item);
        }
        Ok(Json::Array(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Json, A::Error> {
        let mut entries = Vec::new();
        while let Some((k, v)) = map.next_entry::<String, Json>()? {
            entries.push((k, v));
        }
        Ok(Json::Object(entries))
    }
}
