//! Hierarchical scene graphs rooted at `ceiling`, `wall` and `floor`.
//!
//! A graph is a forest of three fixed roots. Every other object hangs below
//! exactly one parent through one of four relations. Children are stored
//! grouped by relation (in canonical relation order) and keep insertion order
//! within a group, so structural equality coincides with equality of the
//! canonical JSON form.

mod edit;
mod extract;
mod labels;
mod parse;
mod serialize;
mod validate;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use edit::{EditError, EditOp};
pub use extract::extract_json_block;
pub use labels::suffix_duplicates;
pub use parse::{parse_graph, parse_graph_with, ParseOptions};
pub use serialize::serialize_graph;
pub use validate::{validate, validate_document, ValidationReport, Warning};

/// Root labels in canonical order.
pub const ROOT_LABELS: [&str; 3] = ["ceiling", "wall", "floor"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("top-level key `{0}` is not one of ceiling, wall, floor")]
    NonRootTopLevelKey(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("empty object label")]
    EmptyLabel,
    #[error("unexpected structure: {0}")]
    Structure(String),
}

/// One of the four hierarchical relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationType {
    /// Child rests on the parent's upper surface.
    Support,
    /// Child sits inside the parent's interior.
    Contain,
    /// Child is suspended from the parent (typically a wall).
    Hang,
    /// Child is fixed below the parent (typically the ceiling).
    Attach,
}

impl RelationType {
    /// Canonical order.
    pub const ALL: [RelationType; 4] = [
        RelationType::Support,
        RelationType::Contain,
        RelationType::Hang,
        RelationType::Attach,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Support => "support",
            RelationType::Contain => "contain",
            RelationType::Hang => "hang",
            RelationType::Attach => "attach",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        RelationType::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| GraphError::UnknownRelation(t.to_string()))
    }
}

/// A labeled object and its children grouped by relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    label: String,
    children: [Vec<Node>; 4],
}

impl Node {
    pub fn new(label: impl Into<String>) -> Self {
        Node {
            label: label.into(),
            children: Default::default(),
        }
    }

    /// Builder-style child insertion.
    pub fn with_child(mut self, relation: RelationType, child: Node) -> Self {
        self.push_child(relation, child);
        self
    }

    pub fn push_child(&mut self, relation: RelationType, child: Node) {
        self.children[relation.index()].push(child);
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children_of(&self, relation: RelationType) -> &[Node] {
        &self.children[relation.index()]
    }

    /// All children in canonical order: relation order first, then insertion order.
    pub fn children(&self) -> impl Iterator<Item = (RelationType, &Node)> {
        RelationType::ALL
            .into_iter()
            .flat_map(move |r| self.children[r.index()].iter().map(move |c| (r, c)))
    }

    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(Vec::is_empty)
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children().map(|(_, c)| c.size()).sum::<usize>()
    }

    fn visit<'a>(&'a self, depth: usize, f: &mut impl FnMut(&'a Node, usize)) {
        f(self, depth);
        for (_, child) in self.children() {
            child.visit(depth + 1, f);
        }
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut Node)) {
        f(self);
        for group in self.children.iter_mut() {
            for child in group.iter_mut() {
                child.visit_mut(f);
            }
        }
    }

    fn find(&self, label: &str) -> Option<&Node> {
        if self.label == label {
            return Some(self);
        }
        self.children().find_map(|(_, c)| c.find(label))
    }

    fn find_mut(&mut self, label: &str) -> Option<&mut Node> {
        if self.label == label {
            return Some(self);
        }
        self.children
            .iter_mut()
            .flat_map(|g| g.iter_mut())
            .find_map(|c| c.find_mut(label))
    }

    /// Removes the direct-or-nested child `label`, returning its old parent
    /// label, relation and subtree.
    fn detach(&mut self, label: &str) -> Option<(String, RelationType, Node)> {
        for relation in RelationType::ALL {
            let group = &mut self.children[relation.index()];
            if let Some(pos) = group.iter().position(|c| c.label == label) {
                let node = group.remove(pos);
                return Some((self.label.clone(), relation, node));
            }
        }
        self.children
            .iter_mut()
            .flat_map(|g| g.iter_mut())
            .find_map(|c| c.detach(label))
    }
}

/// A validated hierarchical scene graph.
///
/// Labels are unique across the whole graph, roots included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneGraph {
    roots: [Node; 3],
}

impl Default for SceneGraph {
    fn default() -> Self {
        Self::empty()
    }
}

impl SceneGraph {
    /// The graph with three childless roots.
    pub fn empty() -> Self {
        SceneGraph {
            roots: ROOT_LABELS.map(Node::new),
        }
    }

    /// Assemble a graph from root subtrees. Root labels are forced to the
    /// canonical names; labels must be non-empty and unique.
    pub fn from_roots(ceiling: Node, wall: Node, floor: Node) -> Result<Self, GraphError> {
        let mut roots = [ceiling, wall, floor];
        for (root, name) in roots.iter_mut().zip(ROOT_LABELS) {
            root.label = name.to_string();
        }
        let graph = SceneGraph { roots };
        graph.check_labels()?;
        Ok(graph)
    }

    fn check_labels(&self) -> Result<(), GraphError> {
        let mut seen = BTreeSet::new();
        for root in &self.roots {
            let mut err = None;
            root.visit(0, &mut |n, _| {
                if err.is_some() {
                    return;
                }
                if n.label.trim().is_empty() {
                    err = Some(GraphError::EmptyLabel);
                } else if !seen.insert(n.label.as_str()) {
                    err = Some(GraphError::DuplicateLabel(n.label.clone()));
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }

    pub fn roots(&self) -> &[Node; 3] {
        &self.roots
    }

    pub fn root(&self, label: &str) -> Option<&Node> {
        self.roots.iter().find(|r| r.label == label)
    }

    pub fn node_count(&self) -> usize {
        self.roots.iter().map(Node::size).sum()
    }

    pub fn find(&self, label: &str) -> Option<&Node> {
        self.roots.iter().find_map(|r| r.find(label))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.find(label).is_some()
    }

    /// Parent label and relation of `label`; `None` for roots and unknown labels.
    pub fn parent_of(&self, label: &str) -> Option<(&str, RelationType)> {
        let mut found = None;
        self.for_each_edge(|parent, relation, child| {
            if found.is_none() && child.label == label {
                found = Some((parent.label.as_str(), relation));
            }
        });
        found
    }

    /// Depth-first walk over nodes with their depth (roots at 0).
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a Node, usize)) {
        for root in &self.roots {
            root.visit(0, &mut f);
        }
    }

    fn for_each_edge<'a>(&'a self, mut f: impl FnMut(&'a Node, RelationType, &'a Node)) {
        fn go<'a>(node: &'a Node, f: &mut impl FnMut(&'a Node, RelationType, &'a Node)) {
            for (relation, child) in node.children() {
                f(node, relation, child);
                go(child, f);
            }
        }
        for root in &self.roots {
            go(root, &mut f);
        }
    }

    /// All labels, roots included.
    pub fn nodes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(|n, _| {
            out.insert(n.label.clone());
        });
        out
    }

    /// One triple per parent→child edge, in depth-first canonical order.
    pub fn to_pairwise(&self) -> Vec<RelationTriple> {
        let mut out = Vec::new();
        self.for_each_edge(|p, r, c| out.push(RelationTriple::new(p.label(), r, c.label())));
        out
    }

    /// One unit per node (roots included) holding every triple that touches it.
    pub fn to_objectwise(&self) -> Vec<ObjectRelationUnit> {
        let mut by_label: BTreeMap<&str, Vec<RelationTriple>> = BTreeMap::new();
        let mut order = Vec::new();
        self.walk(|n, _| {
            by_label.insert(n.label(), Vec::new());
            order.push(n.label());
        });
        for triple in self.to_pairwise() {
            if let Some(v) = by_label.get_mut(triple.parent.as_str()) {
                v.push(triple.clone());
            }
            if let Some(v) = by_label.get_mut(triple.child.as_str()) {
                v.push(triple);
            }
        }
        order
            .into_iter()
            .map(|label| {
                let relations = by_label.remove(label).unwrap_or_default();
                ObjectRelationUnit::new(label, relations)
            })
            .collect()
    }

    /// Nodes grouped by tree depth; depth 0 holds the three roots.
    pub fn layers(&self) -> Vec<LayerUnit> {
        let mut layers: Vec<BTreeSet<String>> = Vec::new();
        self.walk(|n, depth| {
            if layers.len() <= depth {
                layers.resize_with(depth + 1, BTreeSet::new);
            }
            layers[depth].insert(n.label.clone());
        });
        layers
            .into_iter()
            .enumerate()
            .map(|(depth, labels)| LayerUnit { depth, labels })
            .collect()
    }

    /// Non-root labels in depth-first canonical order.
    pub fn object_labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(|n, depth| {
            if depth > 0 {
                out.push(n.label());
            }
        });
        out
    }
}

/// `(parent, relation, child)`, the unit of pairwise evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationTriple {
    pub parent: String,
    pub relation: RelationType,
    pub child: String,
}

impl RelationTriple {
    pub fn new(parent: impl Into<String>, relation: RelationType, child: impl Into<String>) -> Self {
        RelationTriple {
            parent: parent.into(),
            relation,
            child: child.into(),
        }
    }
}

impl fmt::Display for RelationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.parent, self.relation, self.child)
    }
}

/// Every relation touching one object, canonically sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectRelationUnit {
    pub label: String,
    pub relations: Vec<RelationTriple>,
}

impl ObjectRelationUnit {
    pub fn new(label: impl Into<String>, mut relations: Vec<RelationTriple>) -> Self {
        relations.sort();
        ObjectRelationUnit {
            label: label.into(),
            relations,
        }
    }
}

/// All labels found at one tree depth.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerUnit {
    pub depth: usize,
    pub labels: BTreeSet<String>,
}
