//! Structural edits used by the human correction loop.

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use super::{Node, RelationType, SceneGraph, ROOT_LABELS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    /// Attach a new leaf `child` below `parent`.
    AddRelation {
        parent: String,
        relation: RelationType,
        child: String,
    },
    /// Delete the edge `parent → child` together with the child's subtree.
    RemoveRelation { parent: String, child: String },
    /// Re-parent `child` (with its subtree) under `new_parent`.
    MoveSubtree {
        child: String,
        new_parent: String,
        relation: RelationType,
    },
    Rename { old: String, new: String },
    /// Change the relation of an existing edge.
    SetRelation {
        parent: String,
        child: String,
        relation: RelationType,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("edit #{index} rejected: {reason}")]
pub struct EditError {
    pub index: usize,
    pub reason: String,
}

impl SceneGraph {
    /// Apply `ops` in order to a copy of the graph. The result is always a
    /// valid tree; the first failing op aborts the whole batch.
    pub fn apply_edits(&self, ops: &[EditOp]) -> Result<SceneGraph, EditError> {
        let mut g = self.clone();
        for (index, op) in ops.iter().enumerate() {
            g.apply_one(op).map_err(|reason| EditError { index, reason })?;
        }
        Ok(g)
    }

    fn apply_one(&mut self, op: &EditOp) -> Result<(), String> {
        match op {
            EditOp::AddRelation {
                parent,
                relation,
                child,
            } => {
                let child = child.trim();
                if child.is_empty() {
                    return Err("empty label".into());
                }
                if self.contains(child) {
                    return Err(format!("`{child}` already has a parent"));
                }
                let parent = self.find_mut(parent)?;
                parent.push_child(*relation, Node::new(child));
                Ok(())
            }
            EditOp::RemoveRelation { parent, child } => {
                self.expect_edge(parent, child)?;
                self.detach(child);
                Ok(())
            }
            EditOp::MoveSubtree {
                child,
                new_parent,
                relation,
            } => {
                if is_root(child) {
                    return Err(format!("root `{child}` cannot be moved"));
                }
                let subtree = self.find(child).ok_or_else(|| unknown(child))?;
                if !self.contains(new_parent) {
                    return Err(unknown(new_parent));
                }
                if subtree.find(new_parent).is_some() {
                    return Err(format!("`{new_parent}` lies inside the subtree of `{child}`"));
                }
                let (_, _, node) = self.detach(child).ok_or_else(|| unknown(child))?;
                self.find_mut(new_parent)?.push_child(*relation, node);
                Ok(())
            }
            EditOp::Rename { old, new } => {
                let new = new.trim();
                if is_root(old) {
                    return Err(format!("root `{old}` cannot be renamed"));
                }
                if new.is_empty() {
                    return Err("empty label".into());
                }
                if old != new && self.contains(new) {
                    return Err(format!("label `{new}` already exists"));
                }
                self.find_mut(old)?.label = new.to_string();
                Ok(())
            }
            EditOp::SetRelation {
                parent,
                child,
                relation,
            } => {
                self.expect_edge(parent, child)?;
                let parent_label = parent.clone();
                let (_, _, node) = self.detach(child).ok_or_else(|| unknown(child))?;
                self.find_mut(&parent_label)?.push_child(*relation, node);
                Ok(())
            }
        }
    }

    fn expect_edge(&self, parent: &str, child: &str) -> Result<(), String> {
        match self.parent_of(child) {
            Some((p, _)) if p == parent => Ok(()),
            Some((p, _)) => Err(format!("`{child}` is a child of `{p}`, not `{parent}`")),
            None if self.contains(child) => Err(format!("`{child}` is a root")),
            None => Err(unknown(child)),
        }
    }

    fn find_mut(&mut self, label: &str) -> Result<&mut Node, String> {
        self.roots
            .iter_mut()
            .find_map(|r| r.find_mut(label))
            .ok_or_else(|| unknown(label))
    }

    fn detach(&mut self, label: &str) -> Option<(String, RelationType, Node)> {
        self.roots.iter_mut().find_map(|r| r.detach(label))
    }
}

fn is_root(label: &str) -> bool {
    ROOT_LABELS.contains(&label)
}

fn unknown(label: &str) -> String {
    format!("unknown object `{label}`")
}
