use alloc::string::{String, ToString};

/// Pull the first loadable JSON object out of free-form model output.
///
/// Code fences are stripped, then every `{` is tried as the start of an
/// outermost balanced block (braces inside string literals are ignored). The
/// first block that parses as JSON wins.
pub fn extract_json_block(model_output: &str) -> Option<String> {
    let text = strip_fences(model_output);
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(off) = text[start..].find('{') {
        let open = start + off;
        if let Some(close) = matching_brace(bytes, open) {
            let candidate = &text[open..=close];
            if serde_json::from_str::<serde::de::IgnoredAny>(candidate).is_ok() {
                return Some(candidate.to_string());
            }
        }
        start = open + 1;
    }
    None
}

fn strip_fences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find("```") {
        out.push_str(&rest[..pos]);
        rest = &rest[pos + 3..];
        // Drop an info string such as `json` directly after an opening fence.
        let info_len = rest
            .find(|c: char| !c.is_ascii_alphanumeric())
            .unwrap_or(rest.len());
        rest = &rest[info_len..];
        out.push(' ');
    }
    out.push_str(rest);
    out
}

/// Index of the `}` closing the `{` at `open`, tracking string literals.
fn matching_brace(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block() {
        assert_eq!(
            extract_json_block("Here is the graph: ```json {\"floor\":{}} ```").as_deref(),
            Some("{\"floor\":{}}")
        );
    }

    #[test]
    fn no_braces() {
        assert_eq!(extract_json_block("I cannot help with that."), None);
    }

    #[test]
    fn braces_inside_strings() {
        let text = r#"Sure. {"floor": {"support": [{"sign saying }{ hi": {}}, {"box {big}": {}}]}} done"#;
        assert_eq!(
            extract_json_block(text).as_deref(),
            Some(r#"{"floor": {"support": [{"sign saying }{ hi": {}}, {"box {big}": {}}]}}"#)
        );
    }

    #[test]
    fn skips_unparseable_candidates() {
        let text = "set {a, b} then {\"wall\": {}}";
        assert_eq!(extract_json_block(text).as_deref(), Some("{\"wall\": {}}"));
    }

    #[test]
    fn unbalanced() {
        assert_eq!(extract_json_block("{\"floor\": {"), None);
    }

    #[test]
    fn multiline_fence() {
        let text = "The mug is on the desk.\n\n```json\n{\n    \"floor\": {}\n}\n```\n";
        assert_eq!(extract_json_block(text).as_deref(), Some("{\n    \"floor\": {}\n}"));
    }
}
