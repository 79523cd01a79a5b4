//! Reasoning-trace and corpus-span annotation: variable extraction with a
//! three-annotator unanimity rule, agreement statistics, corpus query
//! generation, span filtering and direction-of-association labelling.

mod direction;
mod extract;
mod frequency;
mod human;
mod prompts;
mod spans;
mod variables;

pub use direction::{
    aggregate_direction, annotator_kappa, classify_all, classify_direction, direction_summary, parse_direction,
    write_labels_csv, Direction, DirectionLabel, DirectionRun, DirectionSummary, SpanDirection,
};
pub use extract::{
    extract_all, extract_variables, extraction_agreement, intersect_votes, parse_extraction, ChainExtraction,
    ExtractionRun, ExtractionVote, RetainedSet,
};
pub use frequency::{reasoning_frequency, DomainFrequency, VariableCount};
pub use human::{
    human_direction_kappa, human_extraction_agreement, read_human_direction, read_human_extraction,
    HumanDirectionRow, HumanExtractionRow,
};
pub use prompts::{direction_prompt, extraction_prompt};
pub use spans::{
    collect_spans, filter_spans, generate_queries, read_spans_jsonl, span_id, CorpusSpan, Query, RawSpan, Target,
    TEMPLATES,
};
pub use variables::{CandidateVariable, Category, VariableRoster};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::gateway::GatewayError;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("variable roster: {0}")]
    Roster(String),
    #[error("exactly 3 annotators required, got {0}")]
    Annotators(usize),
    #[error("reasoning chain {0} is empty")]
    EmptyChain(String),
    #[error("spans line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

pub type Result<T> = std::result::Result<T, TraceError>;

/// Maps `f` over `items` on at most `k` worker threads; output keeps input order.
pub(crate) fn bounded_map<T: Sync, R: Send>(items: &[T], k: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..k.max(1).min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("filled")).collect()
}
