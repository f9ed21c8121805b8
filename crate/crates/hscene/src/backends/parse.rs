use serde_json::Value;

use hscene_core::perception::ObjectDescription;
use hscene_core::scenegraph::extract_json_block;

use super::BackendError;

const NONE_SENTINEL: &str = "-1";

fn is_sentinel(text: &str) -> bool {
    let t = text.trim().trim_matches('`').trim();
    t == NONE_SENTINEL || t == "\"-1\""
}

fn parse_flag(key: &str, v: Option<&Value>) -> Result<bool, BackendError> {
    match v {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("true") => Ok(true),
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("false") => Ok(false),
        Some(other) => Err(BackendError::SchemaViolation(format!("{key}: container flag {other}"))),
    }
}

/// Object list from a model reply of the form
/// `{"object1": {"description": "...", "container": "True"}, ...}`.
///
/// Entries are ordered by their numeric suffix; `container` may be a boolean
/// or a "True"/"False" string and defaults to false. A bare `-1` means no
/// objects.
pub fn parse_model_object_json(text: &str) -> Result<Vec<ObjectDescription>, BackendError> {
    if is_sentinel(text) {
        return Ok(Vec::new());
    }
    let block = extract_json_block(text).ok_or_else(|| {
        let head: String = text.chars().take(80).collect();
        BackendError::Unparseable(format!("no JSON object in reply: {head:?}"))
    })?;
    let Value::Object(map) = serde_json::from_str::<Value>(&block).map_err(|e| BackendError::Unparseable(e.to_string()))?
    else {
        return Err(BackendError::Unparseable(format!("expected a JSON object, got {block}")));
    };
    let mut entries = Vec::with_capacity(map.len());
    for (key, value) in map {
        let index: u64 = key
            .strip_prefix("object")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| BackendError::SchemaViolation(format!("unexpected key `{key}`")))?;
        let Value::Object(body) = value else {
            return Err(BackendError::SchemaViolation(format!("{key}: expected an object")));
        };
        let description = body
            .get("description")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|d| !d.is_empty())
            .ok_or_else(|| BackendError::SchemaViolation(format!("{key}: missing description")))?
            .to_string();
        let container = parse_flag(&key, body.get("container"))?;
        entries.push((index, ObjectDescription { description, container }));
    }
    entries.sort_by_key(|(i, _)| *i);
    Ok(entries.into_iter().map(|(_, o)| o).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_prompt_example() {
        let text = r#"{"object1": {"description": "trash bin with liner", "container": "False"}, "object2": {"description": "retangular dinner table with tablecloths", "container": "True"}, "object3": {"description": "wooden shelf with electronic devices", "container": "True" }}"#;
        let objs = parse_model_object_json(text).unwrap();
        assert_eq!(objs.len(), 3);
        let flags: Vec<bool> = objs.iter().map(|o| o.container).collect();
        assert_eq!(flags, [false, true, true]);
        assert_eq!(objs[0].description, "trash bin with liner");
    }

    #[test]
    fn sentinel_and_prose() {
        assert!(parse_model_object_json("-1").unwrap().is_empty());
        assert!(parse_model_object_json(" \"-1\"\n").unwrap().is_empty());
        let prose = "Here you go:\n```json\n{\"object1\": {\"description\": \"mug\"}}\n```";
        let objs = parse_model_object_json(prose).unwrap();
        assert_eq!(objs[0].description, "mug");
        assert!(!objs[0].container);
    }

    #[test]
    fn numeric_order_and_errors() {
        let text = r#"{"object10": {"description": "j"}, "object2": {"description": "b", "container": true}}"#;
        let objs = parse_model_object_json(text).unwrap();
        assert_eq!(objs[0].description, "b");
        assert!(matches!(parse_model_object_json("no json here"), Err(BackendError::Unparseable(_))));
        assert!(matches!(
            parse_model_object_json(r#"{"thing": {"description": "x"}}"#),
            Err(BackendError::SchemaViolation(_))
        ));
        assert!(parse_model_object_json(r#"{"object1": {"description": "x", "container": "maybe"}}"#).is_err());
    }
}
