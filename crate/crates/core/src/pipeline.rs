//! Stage runners that read and write artifact files. Each stage writes a
//! fixed set of files into an output directory; the same inputs always
//! produce the same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{read_predictions, PredictionsError};
use crate::conversation::{build_conversations, PackResult, PromptTemplate};
use crate::eval::{evaluate, EvalConfig, EvalError, EvalReport, GoldStep, PredictionRecord};
use crate::grammar::ActionRegistry;
use crate::ingest::{ingest_all, load_manifest, IngestError, IngestRun};
use crate::jsonl::{self, JsonlError};
use crate::model::{GroundingRecord, Trajectory};
use crate::planning::{transform_corpus, InstructionTemplates, TransformConfig, TransformOutcome};
use crate::stats::{compute_stats, StatsReport};

pub const GROUNDING_FILE: &str = "grounding.jsonl";
pub const TRAJECTORIES_FILE: &str = "trajectories.jsonl";
pub const REJECTIONS_FILE: &str = "rejections.jsonl";
pub const INGEST_SUMMARY_FILE: &str = "ingest_summary.json";
pub const CONVERSATIONS_FILE: &str = "conversations.jsonl";
pub const PACK_REJECTIONS_FILE: &str = "pack_rejections.jsonl";
pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const GOLD_FILE: &str = "gold.jsonl";
pub const SKIPPED_FILE: &str = "skipped.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Predictions(#[from] PredictionsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact types always serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn ingest_stage(manifest: &Path, registry: &ActionRegistry, out: &Path) -> Result<IngestRun, PipelineError> {
    let sources = load_manifest(manifest)?;
    let run = ingest_all(&sources, registry)?;
    ensure_dir(out)?;
    jsonl::write(&out.join(GROUNDING_FILE), &run.grounding)?;
    jsonl::write(&out.join(TRAJECTORIES_FILE), &run.trajectories)?;
    jsonl::write(&out.join(REJECTIONS_FILE), &run.rejections)?;
    write_json(&out.join(INGEST_SUMMARY_FILE), &run.summaries)?;
    Ok(run)
}

pub fn pack_stage(
    grounding: &[GroundingRecord],
    max_turns: usize,
    template: &PromptTemplate,
    out: &Path,
) -> Result<PackResult, PipelineError> {
    let packed = build_conversations(grounding, max_turns, template);
    ensure_dir(out)?;
    jsonl::write(&out.join(CONVERSATIONS_FILE), &packed.conversations)?;
    jsonl::write(&out.join(PACK_REJECTIONS_FILE), &packed.rejected)?;
    Ok(packed)
}

/// Writes the samples, their gold steps, and skipped trajectories.
pub fn transform_stage(
    trajectories: &[Trajectory],
    cfg: TransformConfig,
    templates: &InstructionTemplates,
    out: &Path,
) -> Result<TransformOutcome, PipelineError> {
    let outcome = transform_corpus(trajectories, cfg, templates);
    let gold: Vec<GoldStep> = outcome.samples.iter().map(GoldStep::from_sample).collect();
    ensure_dir(out)?;
    jsonl::write(&out.join(SAMPLES_FILE), &outcome.samples)?;
    jsonl::write(&out.join(GOLD_FILE), &gold)?;
    jsonl::write(&out.join(SKIPPED_FILE), &outcome.skipped)?;
    Ok(outcome)
}

pub fn eval_stage(
    gold: &[GoldStep],
    preds: &[PredictionRecord],
    cfg: &EvalConfig,
    out: &Path,
) -> Result<EvalReport, PipelineError> {
    let report = evaluate(gold, preds, cfg)?;
    ensure_dir(out)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}

pub fn stats_stage(
    grounding: &[GroundingRecord],
    trajectories: &[Trajectory],
    out: &Path,
) -> Result<StatsReport, PipelineError> {
    let report = compute_stats(grounding, trajectories);
    ensure_dir(out)?;
    write_json(&out.join(STATS_FILE), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub max_turns: usize,
    pub transform: TransformConfig,
    pub eval: EvalConfig,
    pub extract: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_turns: crate::conversation::DEFAULT_MAX_TURNS,
            transform: TransformConfig::default(),
            eval: EvalConfig::default(),
            extract: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub ingest: IngestRun,
    pub conversations: usize,
    pub turns: usize,
    pub samples: usize,
    pub report: Option<EvalReport>,
    pub stats: StatsReport,
}

/// ingest, pack, transform, stats, and (given predictions) eval.
pub fn run_all(
    manifest: &Path,
    predictions: Option<&Path>,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<PipelineSummary, PipelineError> {
    let registry = ActionRegistry::builtin();
    let ingest = ingest_stage(manifest, &registry, out)?;
    let packed = pack_stage(&ingest.grounding, cfg.max_turns, &PromptTemplate::default(), out)?;
    let outcome = transform_stage(&ingest.trajectories, cfg.transform, &InstructionTemplates::default(), out)?;
    let stats = stats_stage(&ingest.grounding, &ingest.trajectories, out)?;
    let report = match predictions {
        Some(p) => {
            let preds = read_predictions(p, cfg.extract, &registry)?;
            let gold: Vec<GoldStep> = outcome.samples.iter().map(GoldStep::from_sample).collect();
            Some(eval_stage(&gold, &preds, &cfg.eval, out)?)
        }
        None => None,
    };
    Ok(PipelineSummary {
        ingest,
        conversations: packed.conversations.len(),
        turns: packed.total_turns(),
        samples: outcome.samples.len(),
        report,
        stats,
    })
}
