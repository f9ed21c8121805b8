//! Templated reasoning paragraph for graph answers.
//!
//! Children are grouped by (parent, relation); each group becomes one
//! sentence, emitted in depth-first order of the parent, so every edge is
//! mentioned exactly once.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::scenegraph::{Node, RelationType, SceneGraph};

pub const EMPTY_SCENE_SENTENCE: &str = "The room contains no annotated objects.";

/// "a", "a and b", "a, b, and c".
fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn article(label: &str) -> &'static str {
    match label.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn group_sentence(parent: &str, parent_is_root: bool, relation: RelationType, children: &[Node]) -> String {
    let bare: Vec<String> = children.iter().map(|c| String::from(c.label())).collect();
    let plural = children.len() > 1;
    let verb = if plural { "are" } else { "is" };
    let subject = format!("The {}", join_list(&bare));
    let there = || {
        let listed: Vec<String> = bare.iter().map(|l| format!("{} {l}", article(l))).collect();
        format!("there {verb} {}", join_list(&listed))
    };
    match (relation, parent_is_root) {
        (RelationType::Support, false) => format!("On top of the {parent}, {}.", there()),
        (RelationType::Contain, false) => format!("Inside the {parent}, {}.", there()),
        (RelationType::Support, true) => format!("{subject} {verb} supported by the {parent}."),
        (RelationType::Contain, true) => format!("{subject} {verb} contained in the {parent}."),
        (RelationType::Hang, _) => format!("{subject} {verb} hanging on the {parent}."),
        (RelationType::Attach, _) => format!("{subject} {verb} attached to the {parent}."),
    }
}

/// One sentence per non-empty (parent, relation) group.
pub fn cot_sentences(g: &SceneGraph) -> Vec<String> {
    let mut out = Vec::new();
    g.walk(|node, depth| {
        for relation in RelationType::ALL {
            let children = node.children_of(relation);
            if !children.is_empty() {
                out.push(group_sentence(node.label(), depth == 0, relation, children));
            }
        }
    });
    out
}

pub fn gen_graph_cot(g: &SceneGraph) -> String {
    let sentences = cot_sentences(g);
    if sentences.is_empty() {
        return String::from(EMPTY_SCENE_SENTENCE);
    }
    sentences.join(" ")
}
