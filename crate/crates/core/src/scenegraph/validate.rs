use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use super::parse::build;
use super::{GraphError, ParseOptions, RelationType, SceneGraph};

/// An edge that contradicts the usual placement prior. Advisory only: real
/// rooms routinely break priors (a pillow on the floor), so these never block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub parent: String,
    pub relation: RelationType,
    pub child: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<GraphError>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Expected relation from each root to its direct children.
fn root_prior(root: &str) -> Option<RelationType> {
    match root {
        "ceiling" => Some(RelationType::Attach),
        "wall" => Some(RelationType::Hang),
        "floor" => Some(RelationType::Support),
        _ => None,
    }
}

/// Prior checks on an already-valid graph.
pub fn validate(g: &SceneGraph) -> ValidationReport {
    let mut warnings = Vec::new();
    for root in g.roots() {
        let expected = root_prior(root.label());
        for (relation, child) in root.children() {
            if Some(relation) != expected {
                warnings.push(Warning {
                    parent: root.label().into(),
                    relation,
                    child: child.label().into(),
                    message: format!(
                        "`{}` usually relates to its children by `{}`, not `{relation}`",
                        root.label(),
                        expected.map(RelationType::as_str).unwrap_or("?"),
                    ),
                });
            }
        }
    }
    ValidationReport {
        errors: Vec::new(),
        warnings,
    }
}

/// Full check of a document: every hard error found, plus prior warnings when
/// the document is structurally valid.
pub fn validate_document(text: &str, opts: ParseOptions) -> ValidationReport {
    let mut errors = Vec::new();
    match build(text, opts, &mut errors) {
        Some(g) => validate(&g),
        None => ValidationReport {
            errors,
            warnings: Vec::new(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::TOY;
    use super::super::parse_graph;
    use super::*;

    #[test]
    fn toy_is_clean() {
        let report = validate(&parse_graph(TOY).unwrap());
        assert!(report.errors.is_empty());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn floor_hang_warns() {
        let g = parse_graph(r#"{"floor":{"hang":[{"poster":{}}]}}"#).unwrap();
        let report = validate(&g);
        assert!(report.is_valid());
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].child, "poster");
    }

    #[test]
    fn unknown_relation_is_error() {
        let report = validate_document(
            r#"{"floor":{"on_top":[{"cup":{}}]}}"#,
            ParseOptions::default(),
        );
        assert_eq!(report.errors, [GraphError::UnknownRelation("on_top".into())]);
    }

    #[test]
    fn collects_several_errors() {
        let report = validate_document(
            r#"{"table":{},"floor":{"on_top":[{"cup":{}}],"support":[{"a":{}},{"a":{}}]}}"#,
            ParseOptions { strict_labels: true },
        );
        assert_eq!(report.errors.len(), 3);
        assert!(report.errors.contains(&GraphError::DuplicateLabel("a".into())));
        assert!(report.errors.contains(&GraphError::NonRootTopLevelKey("table".into())));
        assert!(report.errors.contains(&GraphError::UnknownRelation("on_top".into())));
        let dup = validate_document(
            r#"{"floor":{"support":[{"a":{}},{"a":{}}]}}"#,
            ParseOptions { strict_labels: true },
        );
        assert_eq!(dup.errors, [GraphError::DuplicateLabel("a".into())]);
    }

    #[test]
    fn nested_relations_not_flagged() {
        let g = parse_graph(r#"{"floor":{"support":[{"shelf":{"attach":[{"lamp":{}}],"hang":[{"hat":{}}]}}]}}"#)
            .unwrap();
        assert!(validate(&g).warnings.is_empty());
    }
}
