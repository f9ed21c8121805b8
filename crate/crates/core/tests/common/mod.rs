//! Shared test helpers: random scene-graph documents and a brute-force
//! enumerator that reads the raw JSON without going through the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

pub const TOY: &str = include_str!("../fixtures/toy.json");
pub const BEDROOM: &str = include_str!("../fixtures/bedroom.json");

pub const RELATIONS: [&str; 4] = ["support", "contain", "hang", "attach"];
pub const ROOTS: [&str; 3] = ["ceiling", "wall", "floor"];

const WORDS: [&str; 12] = [
    "desk", "mug", "lamp", "shelf", "book", "chair", "pillow", "sofa", "vase", "clock", "rug", "tv stand",
];

/// Random document with at most `max_nodes` nodes including the three roots.
/// Labels are unique; every relation list holds single-key objects.
pub fn random_doc(rng: &mut ChaCha8Rng, max_nodes: usize) -> Value {
    // parent index, relation, label
    let mut nodes: Vec<(Option<usize>, &str, String)> =
        ROOTS.iter().map(|r| (None, "", (*r).to_string())).collect();
    let extra = rng.random_range(0..=max_nodes.saturating_sub(3));
    for i in 0..extra {
        let parent = rng.random_range(0..nodes.len());
        let rel = RELATIONS[rng.random_range(0..RELATIONS.len())];
        let label = format!("{} {}", WORDS[rng.random_range(0..WORDS.len())], i);
        nodes.push((Some(parent), rel, label));
    }
    fn body(idx: usize, nodes: &[(Option<usize>, &str, String)]) -> Value {
        let mut by_rel: BTreeMap<&str, Vec<Value>> = BTreeMap::new();
        for (i, (p, rel, label)) in nodes.iter().enumerate() {
            if *p == Some(idx) {
                let mut one = Map::new();
                one.insert(label.clone(), body(i, nodes));
                by_rel.entry(rel).or_default().push(Value::Object(one));
            }
        }
        Value::Object(by_rel.into_iter().map(|(k, v)| (k.to_string(), Value::Array(v))).collect())
    }
    let mut doc = Map::new();
    for (i, r) in ROOTS.iter().enumerate() {
        doc.insert((*r).to_string(), body(i, &nodes));
    }
    Value::Object(doc)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub type Triple = (String, String, String);

/// Everything the decompositions should produce, enumerated directly.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Enumerated {
    pub triples: BTreeSet<Triple>,
    /// label -> every triple touching it
    pub units: BTreeMap<String, BTreeSet<Triple>>,
    /// depth -> labels
    pub layers: BTreeMap<usize, BTreeSet<String>>,
    pub nodes: BTreeSet<String>,
}

pub fn enumerate(doc: &Value) -> Enumerated {
    fn visit(label: &str, body: &Value, depth: usize, out: &mut Enumerated) {
        out.nodes.insert(label.to_string());
        out.layers.entry(depth).or_default().insert(label.to_string());
        out.units.entry(label.to_string()).or_default();
        let Value::Object(rels) = body else { panic!("node body must be an object") };
        for (rel, children) in rels {
            for child in children.as_array().expect("relation list") {
                let (name, sub) = child.as_object().and_then(|m| m.iter().next()).expect("single-key child");
                let t = (label.to_string(), rel.clone(), name.clone());
                out.triples.insert(t.clone());
                out.units.entry(label.to_string()).or_default().insert(t.clone());
                out.units.entry(name.clone()).or_default().insert(t);
                visit(name, sub, depth + 1, out);
            }
        }
    }
    let mut out = Enumerated::default();
    for root in ROOTS {
        let body = doc.get(root).cloned().unwrap_or(Value::Object(Map::new()));
        visit(root, &body, 0, &mut out);
    }
    out
}
