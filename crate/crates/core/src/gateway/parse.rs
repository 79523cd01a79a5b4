use serde_json::Value;

use crate::survey::ScaleSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no JSON object in output")]
    NoJson,
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("response {0:?} is not an integer")]
    NotInteger(String),
    #[error("response {raw} outside scale bounds [{min}, {max}]")]
    OutOfBounds { raw: i64, min: i64, max: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Structured {
    pub response: i64,
    pub reasoning: Option<String>,
}

/// First JSON object embedded anywhere in `text` (code fences and prose
/// around it are ignored).
pub fn first_json_object(text: &str) -> Option<serde_json::Map<String, Value>> {
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

fn as_integer(v: &Value) -> Result<i64, ParseError> {
    match v {
        Value::Number(n) => n.as_i64().ok_or_else(|| ParseError::NotInteger(n.to_string())),
        Value::String(s) => s.trim().parse().map_err(|_| ParseError::NotInteger(s.clone())),
        other => Err(ParseError::NotInteger(other.to_string())),
    }
}

/// Extracts `{"response": int, "reasoning"?: str}` from model output and
/// checks the response against `scale`. Out-of-range values are errors,
/// never clamped.
pub fn parse_structured(raw_text: &str, expect_reasoning: bool, scale: &ScaleSpec) -> Result<Structured, ParseError> {
    let obj = first_json_object(raw_text).ok_or(ParseError::NoJson)?;
    let response = as_integer(obj.get("response").ok_or(ParseError::MissingField("response"))?)?;
    if !scale.contains(response) {
        return Err(ParseError::OutOfBounds { raw: response, min: scale.min, max: scale.max });
    }
    let reasoning = match obj.get("reasoning") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => Some(other.to_string()),
        None => None,
    };
    if expect_reasoning && reasoning.is_none() {
        return Err(ParseError::MissingField("reasoning"));
    }
    Ok(Structured { response, reasoning })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s17() -> ScaleSpec {
        ScaleSpec::new(1, 7).unwrap()
    }

    #[test]
    fn string_encoded_integer() {
        assert_eq!(parse_structured(r#"{"response": "7"}"#, false, &s17()).unwrap().response, 7);
    }

    #[test]
    fn fenced_json() {
        assert_eq!(parse_structured("```json\n{\"response\": 3}\n```", false, &s17()).unwrap().response, 3);
    }

    #[test]
    fn bounds_error() {
        assert_eq!(
            parse_structured(r#"{"response": 9}"#, false, &s17()),
            Err(ParseError::OutOfBounds { raw: 9, min: 1, max: 7 })
        );
    }

    #[test]
    fn reasoning_extracted() {
        let s = parse_structured(r#"Sure. {"reasoning":"low trust","response":"2"} done"#, true, &s17()).unwrap();
        assert_eq!(s, Structured { response: 2, reasoning: Some("low trust".into()) });
        assert_eq!(parse_structured(r#"{"response":"2"}"#, true, &s17()), Err(ParseError::MissingField("reasoning")));
    }

    #[test]
    fn rejects_non_json_and_non_integer() {
        assert_eq!(parse_structured("five", false, &s17()), Err(ParseError::NoJson));
        assert!(matches!(parse_structured(r#"{"response": 2.5}"#, false, &s17()), Err(ParseError::NotInteger(_))));
        assert!(matches!(parse_structured(r#"{"response": "x"}"#, false, &s17()), Err(ParseError::NotInteger(_))));
    }

    #[test]
    fn skips_unbalanced_braces() {
        let t = r#"{ not json } then {"response": 4}"#;
        assert_eq!(parse_structured(t, false, &s17()).unwrap().response, 4);
    }
}
