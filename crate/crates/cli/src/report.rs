//! Markdown report and plot specs assembled from a run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use simdiverge::analysis::{AlignmentRow, BlockRow, CouplingRow, InteractionRow, R2Row, GROUND_TRUTH};
use simdiverge::trace::DirectionSummary;

use crate::artifacts::{read_csv, strip_comments, RunManifest, StepWriter};
use crate::pipeline::FrequencyRow;
use crate::plots::{self, PlotKind};
use crate::{Error, Result};

/// Published belief–sharing ρ for the ground-truth row, shown beside the
/// run's own values for formatting comparison only.
pub const REFERENCE_COUPLING: [(&str, f64); 3] = [("health", 0.606), ("climate", 0.418), ("politics", 0.342)];
/// Climate value quoted in the dataset description, which disagrees with the
/// table value above.
pub const CLIMATE_TEXT_RHO: f64 = 0.421;

/// Every numeric artifact embedded in the report, in order.
const TABLES: [(&str, &str); 11] = [
    ("simulate/cells.csv", "Simulation cells"),
    ("data/ingest.csv", "Ingested datasets"),
    ("step1/divergence.csv", "Step 1: distributional divergence"),
    ("step2/alignment.csv", "Step 2: human vs simulated susceptibility (ρ)"),
    ("step3/coupling.csv", "Step 3: belief–sharing coupling (ρ)"),
    ("step4/r2.csv", "Step 4: cross-validated R²"),
    ("step4/block_removal.csv", "Step 4: block removal"),
    ("step5/interactions.csv", "Step 5: simulation-by-feature interactions"),
    ("step6/frequency.csv", "Step 6: variables referenced in reasoning"),
    ("step6/direction.csv", "Step 6: direction of association"),
    ("step6/agreement.csv", "Step 6: annotator agreement"),
];

fn rows<T: DeserializeOwned>(out: &Path, rel: &str) -> Result<Vec<T>> {
    let path = out.join(rel);
    if path.exists() {
        read_csv(&path)
    } else {
        Ok(Vec::new())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.3}"))
}

fn md_table(out: &mut String, header: &[String], body: &[Vec<String>]) {
    let esc = |s: &str| s.replace('|', "\\|");
    let _ = writeln!(out, "| {} |", header.iter().map(|h| esc(h)).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in body {
        let _ = writeln!(out, "| {} |", r.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | "));
    }
    out.push('\n');
}

fn csv_to_md(out: &mut String, path: &Path) -> Result<bool> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Ok(false);
    };
    let mut r = csv::Reader::from_reader(strip_comments(&text).as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| Error::Csv(e.to_string()))?.iter().map(String::from).collect();
    let mut body = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        body.push(rec.iter().map(String::from).collect());
    }
    if body.is_empty() {
        out.push_str("(no rows)\n\n");
    } else {
        md_table(out, &header, &body);
    }
    Ok(true)
}

/// Rows keyed by (domain, outcome), one column per distinct `col` value in
/// first-seen order.
fn pivot<'a>(
    out: &mut String,
    first: &str,
    items: impl Iterator<Item = (String, &'a str, Option<f64>)>,
) {
    let mut cols: Vec<String> = Vec::new();
    let mut cells: BTreeMap<String, BTreeMap<String, Option<f64>>> = BTreeMap::new();
    let mut order = Vec::new();
    for (key, col, v) in items {
        if !cols.iter().any(|c| c == col) {
            cols.push(col.to_string());
        }
        if !cells.contains_key(&key) {
            order.push(key.clone());
        }
        cells.entry(key).or_default().insert(col.to_string(), v);
    }
    if order.is_empty() {
        out.push_str("(no rows)\n\n");
        return;
    }
    let header: Vec<String> = std::iter::once(first.to_string()).chain(cols.iter().cloned()).collect();
    let body: Vec<Vec<String>> = order
        .iter()
        .map(|k| {
            std::iter::once(k.clone())
                .chain(cols.iter().map(|c| cells[k].get(c).map_or_else(|| "".into(), |v| fmt_opt(*v))))
                .collect()
        })
        .collect();
    md_table(out, &header, &body);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub report: String,
    pub plots: Vec<(PlotKind, serde_json::Value)>,
}

/// Builds the report and plot specs without touching disk.
pub fn build(out: &Path, manifest: &RunManifest) -> Result<ReportOutput> {
    let run_id = &manifest.run_id;
    let alignment: Vec<AlignmentRow> = rows(out, "step2/alignment.csv")?;
    let coupling: Vec<CouplingRow> = rows(out, "step3/coupling.csv")?;
    let r2: Vec<R2Row> = rows(out, "step4/r2.csv")?;
    let blocks: Vec<BlockRow> = rows(out, "step4/block_removal.csv")?;
    let interactions: Vec<InteractionRow> = rows(out, "step5/interactions.csv")?;
    let direction: Vec<DirectionSummary> = rows(out, "step6/direction.csv")?;
    let frequency: Vec<FrequencyRow> = rows(out, "step6/frequency.csv")?;

    let mut md = String::new();
    let _ = writeln!(md, "# Divergence report\n");
    let _ = writeln!(md, "run_id: `{run_id}`  ");
    let _ = writeln!(md, "tool version: {}  ", manifest.tool_version);
    let _ = writeln!(md, "config sha256: `{}`\n", manifest.config_sha256);
    md.push_str("## Run\n\n");
    let mut body: Vec<Vec<String>> = manifest
        .datasets
        .iter()
        .map(|(d, e)| vec![d.clone(), e.source.clone(), e.respondents.to_string(), e.records.to_string()])
        .collect();
    md_table(&mut md, &["domain".into(), "source".into(), "respondents".into(), "records".into()], &body);
    body = manifest.settings.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    body.extend(manifest.seeds.iter().map(|(k, v)| vec![format!("seed.{k}"), v.to_string()]));
    body.push(vec!["models".into(), manifest.models.join(", ")]);
    body.push(vec!["annotators".into(), manifest.annotators.join(", ")]);
    md_table(&mut md, &["setting".into(), "value".into()], &body);
    let steps: Vec<Vec<String>> = manifest
        .steps
        .iter()
        .map(|(s, r)| vec![s.clone(), r.status.clone(), r.artifacts.len().to_string(), r.notes.len().to_string()])
        .collect();
    md_table(&mut md, &["step".into(), "status".into(), "artifacts".into(), "notes".into()], &steps);
    if !manifest.warnings.is_empty() {
        md.push_str("### Warnings\n\n");
        for w in &manifest.warnings {
            let _ = writeln!(md, "- {w}");
        }
        md.push('\n');
    }

    md.push_str("## Susceptibility alignment by format (ρ)\n\n");
    pivot(
        &mut md,
        "domain / outcome",
        alignment.iter().map(|r| (format!("{} / {}", r.domain, r.outcome), r.format.as_str(), r.rho)),
    );
    md.push_str("## Belief–sharing coupling (ρ)\n\n");
    pivot(&mut md, "domain", coupling.iter().map(|r| {
            let col = if r.format.is_empty() { r.source.as_str() } else { r.format.as_str() };
            (r.domain.clone(), col, r.rho)
        }));
    md.push_str("## Cross-validated R² by source\n\n");
    pivot(
        &mut md,
        "domain / outcome",
        r2.iter().map(|r| (format!("{} / {}", r.domain, r.outcome), r.source.as_str(), r.r2)),
    );

    md.push_str("## Reference values\n\n");
    md.push_str("Published ground-truth belief–sharing ρ, for layout comparison only.\n\n");
    let body: Vec<Vec<String>> = REFERENCE_COUPLING
        .iter()
        .map(|(d, v)| {
            let ours = coupling.iter().find(|r| r.domain == *d && r.source == GROUND_TRUTH).and_then(|r| r.rho);
            vec![d.to_string(), format!("{v:.3}"), fmt_opt(ours)]
        })
        .collect();
    md_table(&mut md, &["domain".into(), "reference ρ".into(), "this run".into()], &body);
    let _ = writeln!(
        md,
        "The climate value also appears as {CLIMATE_TEXT_RHO:.3} in the published dataset description; the table value {:.3} is used here.\n",
        REFERENCE_COUPLING[1].1
    );

    md.push_str("## Artifacts\n\n");
    for (rel, title) in TABLES {
        let mut section = String::new();
        let _ = writeln!(section, "### {title}\n\n`{rel}`\n");
        if csv_to_md(&mut section, &out.join(rel))? {
            md.push_str(&section);
        }
    }

    let plots = vec![
        (PlotKind::BlockRemoval, plots::block_removal_spec(&blocks, run_id)),
        (PlotKind::Interactions, plots::interactions_spec(&interactions, run_id)),
        (PlotKind::Direction, plots::direction_spec(&direction, run_id)),
        (PlotKind::ReasoningFrequency, plots::frequency_spec(&frequency, run_id)),
    ];
    for (kind, spec) in &plots {
        plots::validate(*kind, spec)
            .map_err(|message| Error::PlotSpec { kind: kind.file_stem().into(), message })?;
    }
    md.push_str("## Plots\n\n");
    for (kind, _) in &plots {
        let _ = writeln!(md, "- `plots/{}.vl.json` (schema `schemas/{}.schema.json`)", kind.file_stem(), kind.file_stem());
    }
    Ok(ReportOutput { report: md, plots })
}

/// Writes `report/` under the run directory and records it in the manifest.
pub fn emit_report(out: &Path) -> Result<RunManifest> {
    let mut manifest = RunManifest::load(out)
        .ok_or_else(|| Error::Config(format!("{} has no run manifest: run simulate first", out.display())))?;
    let built = build(out, &manifest)?;
    let mut w = StepWriter::new(out, &manifest.run_id);
    w.bytes("report/report.md", built.report.as_bytes())?;
    for (kind, spec) in &built.plots {
        w.json(&format!("report/plots/{}.vl.json", kind.file_stem()), spec)?;
        w.json(&format!("report/schemas/{}.schema.json", kind.file_stem()), &kind.schema())?;
    }
    manifest.steps.insert("report".into(), w.finish());
    manifest.save(out)?;
    Ok(manifest)
}
