use alloc::string::String;

use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};

use super::{Node, RelationType, SceneGraph};

const INDENT: &str = "    ";

/// Canonical document: roots ceiling/wall/floor, relation keys in
/// support/contain/hang/attach order, children in insertion order, four-space
/// indentation, no trailing newline.
pub fn serialize_graph(g: &SceneGraph) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    for (i, root) in g.roots.iter().enumerate() {
        indent(&mut out, 1);
        push_key(&mut out, root.label());
        write_body(&mut out, root, 1);
        if i + 1 < g.roots.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push('}');
    out
}

/// Same tree shape as [`serialize_graph`], for embedding in other documents.
impl Serialize for SceneGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.roots.len()))?;
        for root in &self.roots {
            map.serialize_entry(root.label(), &Body(root))?;
        }
        map.end()
    }
}

struct Body<'a>(&'a Node);
struct Entry<'a>(&'a Node);
struct Group<'a>(&'a [Node]);

impl Serialize for Body<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let groups = RelationType::ALL.into_iter().filter(|r| !self.0.children_of(*r).is_empty());
        let mut map = serializer.serialize_map(Some(groups.clone().count()))?;
        for r in groups {
            map.serialize_entry(r.as_str(), &Group(self.0.children_of(r)))?;
        }
        map.end()
    }
}

impl Serialize for Group<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for child in self.0 {
            seq.serialize_element(&Entry(child))?;
        }
        seq.end()
    }
}

impl Serialize for Entry<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        map.serialize_entry(self.0.label(), &Body(self.0))?;
        map.end()
    }
}

fn write_body(out: &mut String, node: &Node, level: usize) {
    if node.is_leaf() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    let groups: alloc::vec::Vec<RelationType> = RelationType::ALL
        .into_iter()
        .filter(|r| !node.children_of(*r).is_empty())
        .collect();
    for (gi, relation) in groups.iter().enumerate() {
        indent(out, level + 1);
        push_key(out, relation.as_str());
        out.push_str("[\n");
        let children = node.children_of(*relation);
        for (ci, child) in children.iter().enumerate() {
            indent(out, level + 2);
            out.push_str("{\n");
            indent(out, level + 3);
            push_key(out, child.label());
            write_body(out, child, level + 3);
            out.push('\n');
            indent(out, level + 2);
            out.push('}');
            if ci + 1 < children.len() {
                out.push(',');
            }
            out.push('\n');
        }
        indent(out, level + 1);
        out.push(']');
        if gi + 1 < groups.len() {
            out.push(',');
        }
        out.push('\n');
    }
    indent(out, level);
    out.push('}');
}

fn push_key(out: &mut String, key: &str) {
    // Serializing a &str cannot fail.
    out.push_str(&serde_json::to_string(key).unwrap_or_default());
    out.push_str(": ");
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::TOY;
    use super::super::{parse_graph, Node, RelationType, SceneGraph};
    use super::*;

    #[test]
    fn serde_impl_agrees_with_canonical_text() {
        let g = parse_graph(TOY).unwrap();
        let mut buf = Vec::new();
        let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
        g.serialize(&mut ser).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), serialize_graph(&g));
        let back: SceneGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<SceneGraph>(r#"{"floor": {"support": [{"a": {}}, {"a": {}}]}}"#).is_err());
    }

    #[test]
    fn empty_graph_document() {
        assert_eq!(
            serialize_graph(&SceneGraph::empty()),
            "{\n    \"ceiling\": {},\n    \"wall\": {},\n    \"floor\": {}\n}"
        );
    }

    #[test]
    fn matches_serde_json_pretty_layout() {
        // The toy document differs from canonical form only in root order.
        let g = parse_graph(TOY).unwrap();
        let text = serialize_graph(&g);
        let a: serde_json::Value = serde_json::from_str(&text).unwrap();
        let b: serde_json::Value = serde_json::from_str(TOY).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
        serde::Serialize::serialize(&a, &mut ser).unwrap();
        // serde_json sorts keys, so compare line multisets rather than order.
        let mut ours: Vec<_> = text.lines().map(str::trim_end).collect();
        let theirs = String::from_utf8(buf).unwrap();
        let mut theirs: Vec<_> = theirs.lines().map(str::trim_end).collect();
        ours.sort();
        theirs.sort();
        assert_eq!(ours, theirs);
    }

    #[test]
    fn byte_stable() {
        let g = parse_graph(TOY).unwrap();
        let a = serialize_graph(&g);
        let b = serialize_graph(&parse_graph(&a).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("{\n    \"ceiling\": {},\n    \"wall\": {\n        \"hang\": ["));
    }

    #[test]
    fn escapes_labels() {
        let floor = Node::new("floor").with_child(RelationType::Support, Node::new("box \"A\" {x}"));
        let g = SceneGraph::from_roots(Node::new("ceiling"), Node::new("wall"), floor).unwrap();
        assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
    }
}
