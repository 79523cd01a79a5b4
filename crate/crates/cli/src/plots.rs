//! Declarative Vega-Lite v5 specs for the figure analogues, each checked
//! against a JSON Schema shipped alongside it.

use serde_json::{json, Value};
use simdiverge::analysis::{BlockRow, InteractionRow};
use simdiverge::trace::DirectionSummary;

use crate::pipeline::FrequencyRow;

pub const VEGA_LITE: &str = "https://vega.github.io/schema/vega-lite/v5.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    BlockRemoval,
    Interactions,
    Direction,
    ReasoningFrequency,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] =
        [PlotKind::BlockRemoval, PlotKind::Interactions, PlotKind::Direction, PlotKind::ReasoningFrequency];

    pub fn file_stem(self) -> &'static str {
        match self {
            PlotKind::BlockRemoval => "block_removal",
            PlotKind::Interactions => "interactions",
            PlotKind::Direction => "direction",
            PlotKind::ReasoningFrequency => "reasoning_frequency",
        }
    }

    fn row_fields(self) -> &'static [(&'static str, &'static str)] {
        match self {
            PlotKind::BlockRemoval => &[
                ("panel", "string"),
                ("domain", "string"),
                ("outcome", "string"),
                ("source", "string"),
                ("block", "string"),
                ("retained_pct", "number?"),
            ],
            PlotKind::Interactions => &[
                ("panel", "string"),
                ("format", "string"),
                ("rank", "integer"),
                ("feature", "string"),
                ("block", "string"),
                ("coefficient", "number"),
            ],
            PlotKind::Direction => &[("variable", "string"), ("label", "string"), ("proportion", "number"), ("n", "integer")],
            PlotKind::ReasoningFrequency => &[("domain", "string"), ("variable", "string"), ("count", "integer")],
        }
    }

    fn mark(self) -> &'static str {
        match self {
            PlotKind::BlockRemoval | PlotKind::Direction | PlotKind::ReasoningFrequency => "bar",
            PlotKind::Interactions => "point",
        }
    }

    /// JSON Schema every spec of this kind must satisfy.
    pub fn schema(self) -> Value {
        let props: serde_json::Map<String, Value> =
            self.row_fields().iter().map(|(k, t)| (k.to_string(), json!({ "type": field_type(t) }))).collect();
        let required: Vec<&str> = self.row_fields().iter().map(|(k, _)| *k).collect();
        let encoding = json!({
            "type": "object",
            "required": ["x", "y"],
            "properties": {
                "x": { "type": "object" },
                "y": { "type": "object" }
            }
        });
        let unit = match self {
            PlotKind::Interactions => json!({
                "type": "object",
                "required": ["layer"],
                "properties": {
                    "layer": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "prefixItems": [
                            { "type": "object", "required": ["mark", "encoding"],
                              "properties": { "mark": { "properties": { "type": { "const": "point" } } }, "encoding": encoding } },
                            { "type": "object", "required": ["mark", "encoding"],
                              "properties": { "mark": { "properties": { "type": { "const": "rule" } } },
                                              "encoding": { "required": ["x"], "properties": { "x": { "required": ["datum"], "properties": { "datum": { "const": 0 } } } } } } }
                        ]
                    }
                }
            }),
            _ => json!({
                "type": "object",
                "required": ["mark", "encoding"],
                "properties": {
                    "mark": { "type": "object", "required": ["type"], "properties": { "type": { "const": self.mark() } } },
                    "encoding": encoding
                }
            }),
        };
        let faceted = matches!(self, PlotKind::BlockRemoval | PlotKind::Interactions);
        let mut required_top = vec!["$schema", "title", "data", "usermeta"];
        let mut properties = json!({
            "$schema": { "const": VEGA_LITE },
            "title": { "type": "string" },
            "usermeta": { "type": "object", "required": ["run_id", "kind"], "properties": {
                "run_id": { "type": "string" }, "kind": { "const": self.file_stem() } } },
            "data": {
                "type": "object",
                "required": ["values"],
                "properties": { "values": { "type": "array", "items": {
                    "type": "object", "required": required, "properties": props } } }
            }
        });
        let obj = properties.as_object_mut().expect("object");
        if faceted {
            required_top.extend(["facet", "spec"]);
            obj.insert("facet".into(), json!({ "type": "object", "required": ["field"] }));
            obj.insert("spec".into(), unit);
        } else {
            let unit = unit.as_object().expect("object");
            required_top.extend(["mark", "encoding"]);
            for (k, v) in unit["properties"].as_object().expect("properties") {
                obj.insert(k.clone(), v.clone());
            }
        }
        json!({
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "title": format!("{} plot spec", self.file_stem()),
            "type": "object",
            "required": required_top,
            "properties": properties
        })
    }
}

pub fn validate(kind: PlotKind, spec: &Value) -> Result<(), String> {
    let schema = kind.schema();
    let validator = jsonschema::validator_for(&schema).map_err(|e| format!("schema: {e}"))?;
    let errors: Vec<String> = validator.iter_errors(spec).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("; "))
    }
}

/// A trailing `?` marks a nullable field.
fn field_type(t: &str) -> Value {
    match t.strip_suffix('?') {
        Some(base) => json!([base, "null"]),
        None => json!(t),
    }
}

fn panel(domain: &str, outcome: &str) -> String {
    format!("{domain} / {outcome}")
}

fn header(kind: PlotKind, title: &str, run_id: &str, values: Vec<Value>) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("$schema".into(), json!(VEGA_LITE));
    m.insert("title".into(), json!(title));
    m.insert("usermeta".into(), json!({ "run_id": run_id, "kind": kind.file_stem() }));
    m.insert("data".into(), json!({ "values": values }));
    m
}

/// Grouped bars of retained R² share per block, one panel per domain and
/// outcome. Suppressed ratios stay in the data as null so every panel shows.
pub fn block_removal_spec(rows: &[BlockRow], run_id: &str) -> Value {
    let values = rows
        .iter()
        .map(|r| {
            json!({
                "panel": panel(&r.domain, &r.outcome),
                "domain": r.domain,
                "outcome": r.outcome,
                "source": r.source,
                "block": r.block,
                "retained_pct": r.retained_pct,
            })
        })
        .collect();
    let mut m = header(PlotKind::BlockRemoval, "Predictive power retained after block removal (%)", run_id, values);
    m.insert("facet".into(), json!({ "field": "panel", "type": "nominal", "columns": 2 }));
    m.insert(
        "spec".into(),
        json!({
            "mark": { "type": "bar" },
            "encoding": {
                "x": { "field": "block", "type": "nominal", "title": "Removed block" },
                "xOffset": { "field": "source", "type": "nominal" },
                "y": { "field": "retained_pct", "type": "quantitative", "title": "Retained R² (%)" },
                "color": { "field": "source", "type": "nominal" }
            }
        }),
    );
    Value::Object(m)
}

/// Dot plot of the top simulation-by-feature coefficients with a zero rule.
pub fn interactions_spec(rows: &[InteractionRow], run_id: &str) -> Value {
    let values = rows
        .iter()
        .map(|r| {
            json!({
                "panel": panel(&r.domain, &r.outcome),
                "format": r.format,
                "rank": r.rank,
                "feature": r.feature,
                "block": r.block,
                "coefficient": r.coefficient,
            })
        })
        .collect();
    let mut m = header(PlotKind::Interactions, "Simulation-by-feature interaction coefficients", run_id, values);
    m.insert("facet".into(), json!({ "field": "panel", "type": "nominal", "columns": 2 }));
    m.insert(
        "spec".into(),
        json!({
            "layer": [
                {
                    "mark": { "type": "point", "filled": true },
                    "encoding": {
                        "x": { "field": "coefficient", "type": "quantitative", "title": "Standardized coefficient" },
                        "y": { "field": "feature", "type": "nominal", "sort": { "field": "rank" } },
                        "color": { "field": "format", "type": "nominal" },
                        "shape": { "field": "block", "type": "nominal" }
                    }
                },
                {
                    "mark": { "type": "rule", "strokeDash": [4, 4] },
                    "encoding": { "x": { "datum": 0 } }
                }
            ]
        }),
    );
    Value::Object(m)
}

pub fn direction_spec(summary: &[DirectionSummary], run_id: &str) -> Value {
    let mut values = Vec::new();
    for s in summary {
        for (label, p) in [("Negative", s.negative), ("Neutral", s.neutral), ("Positive", s.positive)] {
            values.push(json!({ "variable": s.variable, "label": label, "proportion": p, "n": s.n }));
        }
    }
    let mut m = header(PlotKind::Direction, "Direction of association in corpus spans", run_id, values);
    m.insert("mark".into(), json!({ "type": "bar" }));
    m.insert(
        "encoding".into(),
        json!({
            "x": { "field": "proportion", "type": "quantitative", "stack": "normalize" },
            "y": { "field": "variable", "type": "nominal" },
            "color": { "field": "label", "type": "nominal",
                       "scale": { "domain": ["Negative", "Neutral", "Positive"] } }
        }),
    );
    Value::Object(m)
}

pub fn frequency_spec(rows: &[FrequencyRow], run_id: &str) -> Value {
    let values = rows
        .iter()
        .filter(|r| r.top)
        .map(|r| json!({ "domain": r.domain, "variable": r.variable, "count": r.count }))
        .collect();
    let mut m = header(PlotKind::ReasoningFrequency, "Variables most often referenced in reasoning", run_id, values);
    m.insert("mark".into(), json!({ "type": "bar" }));
    m.insert(
        "encoding".into(),
        json!({
            "x": { "field": "count", "type": "quantitative" },
            "y": { "field": "variable", "type": "nominal", "sort": "-x" },
            "yOffset": { "field": "domain", "type": "nominal" },
            "color": { "field": "domain", "type": "nominal" }
        }),
    );
    Value::Object(m)
}
