mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use guipipe_core::client::{read_predictions, ModelClient, PredictionLine};
use guipipe_core::conversation::PromptTemplate;
use guipipe_core::eval::{GoldStep, GroundingRule, TextMatch};
use guipipe_core::model::{GroundingRecord, Trajectory};
use guipipe_core::pipeline::{self, PipelineConfig};
use guipipe_core::planning::{HistoryMode, InstructionTemplates, PlanningSample};
use guipipe_core::synth::{self, FixtureParams};
use guipipe_core::{jsonl, ActionRegistry};

use config::{FileConfig, FlagConfig, RunConfig};

const PREDICTIONS_FILE: &str = "predictions.jsonl";

#[derive(Parser)]
#[command(name = "guipipe", version, about = "GUI grounding and planning data pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Source manifest (JSON array of sources).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory; later stages read earlier outputs from here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// History rendering for planning samples.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Add the previous action as a second target.
    #[arg(long, global = true)]
    hybrid: bool,
    #[arg(long, global = true)]
    max_turns: Option<usize>,
    #[arg(long, global = true, value_enum)]
    grounding_rule: Option<RuleArg>,
    /// Normalized distance for the distance rule (default 0.14).
    #[arg(long, global = true)]
    distance_threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    text_match: Option<TextArg>,
    /// Pull the first action expression out of surrounding prose.
    #[arg(long, global = true)]
    extract: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file declaring extra action kinds.
    #[arg(long, global = true)]
    actions: Option<PathBuf>,
    /// Model endpoint base URL.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    timeout_secs: Option<f64>,
    #[arg(long, global = true)]
    max_retries: Option<u32>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Instruction,
    Action,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Box,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum TextArg {
    Normalized,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Read every source in the manifest into canonical JSONL.
    Ingest,
    /// Pack grounding records into per-screenshot conversations.
    Pack {
        /// Canonical grounding JSONL [default: <out>/grounding.jsonl]
        #[arg(long)]
        input: Option<PathBuf>,
        /// Single-line prompt template with an {element_desc} slot.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Turn trajectories into planning samples and gold steps.
    Transform {
        /// Canonical trajectory JSONL [default: <out>/trajectories.jsonl]
        #[arg(long)]
        input: Option<PathBuf>,
        /// Instruction template table (JSON).
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Query a model endpoint for every planning sample.
    Infer {
        /// [default: <out>/samples.jsonl]
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Score predictions against gold steps.
    Eval {
        /// [default: <out>/gold.jsonl]
        #[arg(long)]
        gold: Option<PathBuf>,
        /// [default: <out>/predictions.jsonl]
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Element, screenshot and trace counts per source.
    Stats {
        #[arg(long)]
        grounding: Option<PathBuf>,
        #[arg(long)]
        trajectories: Option<PathBuf>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// ingest, pack, transform, stats, and eval when predictions are given.
    Run {
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Write seeded synthetic sources, a manifest, and predictions.
    Fixtures {
        #[arg(long, default_value_t = FixtureParams::default().grounding_records)]
        grounding_records: usize,
        #[arg(long, default_value_t = FixtureParams::default().screenshots)]
        screenshots: usize,
        #[arg(long, default_value_t = FixtureParams::default().trajectories)]
        trajectories: usize,
        #[arg(long, default_value_t = FixtureParams::default().max_steps)]
        max_steps: u32,
        /// Omit the source with malformed lines.
        #[arg(long)]
        clean: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Pack { .. } => "pack",
            Command::Transform { .. } => "transform",
            Command::Infer { .. } => "infer",
            Command::Eval { .. } => "eval",
            Command::Stats { .. } => "stats",
            Command::Run { .. } => "run",
            Command::Fixtures { .. } => "fixtures",
        }
    }
}

enum Failure {
    /// Unreadable or invalid input data. Exit status 1.
    Input(anyhow::Error),
    /// Bad flags or config file. Exit status 2.
    Config(anyhow::Error),
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn conf<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn resolve(g: GlobalArgs) -> anyhow::Result<RunConfig> {
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = FlagConfig {
        manifest: g.manifest,
        out: g.out,
        mode: g.mode.map(|m| match m {
            ModeArg::Instruction => HistoryMode::Instruction,
            ModeArg::Action => HistoryMode::Action,
        }),
        hybrid: g.hybrid,
        max_turns: g.max_turns,
        grounding_rule: g.grounding_rule.map(|r| match r {
            RuleArg::Box => GroundingRule::Box,
            RuleArg::Distance => GroundingRule::Distance,
        }),
        distance_threshold: g.distance_threshold,
        text_match: g.text_match.map(|t| match t {
            TextArg::Normalized => TextMatch::Normalized,
            TextArg::Exact => TextMatch::Exact,
        }),
        extract: g.extract,
        seed: g.seed,
        actions: g.actions,
        endpoint: g.endpoint,
        timeout_secs: g.timeout_secs,
        max_retries: g.max_retries,
        max_in_flight: g.max_in_flight,
    };
    RunConfig::resolve(flags, file)
}

fn run(cli: Cli) -> CmdResult {
    let cfg = resolve(cli.global).map_err(conf)?;
    let registry = match &cfg.actions {
        Some(p) => ActionRegistry::from_json_file(p).map_err(conf)?,
        None => ActionRegistry::builtin(),
    };
    pipeline::ensure_dir(&cfg.out).map_err(conf)?;
    let name = cli.command.name();
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg, &registry)?,
        Command::Pack { input, template } => cmd_pack(&cfg, input, template)?,
        Command::Transform { input, templates } => cmd_transform(&cfg, input, templates)?,
        Command::Infer { samples } => cmd_infer(&cfg, samples, &registry)?,
        Command::Eval { gold, predictions } => cmd_eval(&cfg, gold, predictions, &registry)?,
        Command::Stats {
            grounding,
            trajectories,
            json,
        } => cmd_stats(&cfg, grounding, trajectories, json)?,
        Command::Run { predictions } => cmd_run(&cfg, predictions)?,
        Command::Fixtures {
            grounding_records,
            screenshots,
            trajectories,
            max_steps,
            clean,
        } => {
            let params = FixtureParams {
                seed: cfg.seed,
                grounding_records,
                screenshots,
                trajectories,
                max_steps,
                with_rejects: !clean,
            };
            cmd_fixtures(&cfg, &params)?
        }
    }
    pipeline::write_json(&cfg.out.join(format!("{name}.run.json")), &cfg).map_err(input)
}

fn manifest(cfg: &RunConfig) -> Result<&Path, Failure> {
    cfg.manifest
        .as_deref()
        .ok_or_else(|| conf(anyhow!("--manifest is required (flag or config file)")))
}

fn or_out(p: Option<PathBuf>, cfg: &RunConfig, file: &str) -> PathBuf {
    p.unwrap_or_else(|| cfg.out.join(file))
}

fn cmd_ingest(cfg: &RunConfig, registry: &ActionRegistry) -> CmdResult {
    let run = pipeline::ingest_stage(manifest(cfg)?, registry, &cfg.out).map_err(input)?;
    for s in &run.summaries {
        println!("{s}");
    }
    println!(
        "ingested {} grounding records and {} trajectories; {} lines rejected (see {})",
        run.grounding.len(),
        run.trajectories.len(),
        run.rejections.len(),
        cfg.out.join(pipeline::REJECTIONS_FILE).display()
    );
    Ok(())
}

fn cmd_pack(cfg: &RunConfig, input_path: Option<PathBuf>, template: Option<PathBuf>) -> CmdResult {
    let template = match template {
        Some(p) => PromptTemplate::from_file(&p).map_err(conf)?,
        None => PromptTemplate::default(),
    };
    let records: Vec<GroundingRecord> =
        jsonl::read(&or_out(input_path, cfg, pipeline::GROUNDING_FILE)).map_err(input)?;
    let packed = pipeline::pack_stage(&records, cfg.max_turns, &template, &cfg.out).map_err(input)?;
    println!(
        "packed {} records into {} conversations ({} groups rejected)",
        packed.total_turns(),
        packed.conversations.len(),
        packed.rejected.len()
    );
    Ok(())
}

fn cmd_transform(cfg: &RunConfig, input_path: Option<PathBuf>, templates: Option<PathBuf>) -> CmdResult {
    let templates = match templates {
        Some(p) => InstructionTemplates::from_file(&p).map_err(conf)?,
        None => InstructionTemplates::default(),
    };
    let trajs: Vec<Trajectory> = jsonl::read(&or_out(input_path, cfg, pipeline::TRAJECTORIES_FILE)).map_err(input)?;
    let out = pipeline::transform_stage(&trajs, cfg.transform(), &templates, &cfg.out).map_err(input)?;
    let back = out.samples.iter().filter(|s| s.target_back.is_some()).count();
    println!(
        "{} samples ({} with a previous-action target) from {} trajectories; {} skipped",
        out.samples.len(),
        back,
        trajs.len() - out.skipped.len(),
        out.skipped.len()
    );
    Ok(())
}

fn cmd_infer(cfg: &RunConfig, samples: Option<PathBuf>, registry: &ActionRegistry) -> CmdResult {
    let ep = cfg
        .endpoint
        .as_ref()
        .ok_or_else(|| conf(anyhow!("--endpoint is required (flag or config file)")))?;
    let client = ModelClient::new(ep.to_config()).map_err(conf)?;
    let samples: Vec<PlanningSample> = jsonl::read(&or_out(samples, cfg, pipeline::SAMPLES_FILE)).map_err(input)?;
    let rt = tokio::runtime::Runtime::new().context("starting runtime").map_err(input)?;
    let records = rt.block_on(client.batch_infer(&samples, cfg.extract, registry));
    let lines: Vec<PredictionLine> = records.iter().map(PredictionLine::from).collect();
    let failed = lines.iter().filter(|l| l.error.is_some()).count();
    jsonl::write(&cfg.out.join(PREDICTIONS_FILE), &lines).map_err(input)?;
    println!("{} predictions written, {failed} failed requests", lines.len());
    Ok(())
}

fn cmd_eval(
    cfg: &RunConfig,
    gold: Option<PathBuf>,
    predictions: Option<PathBuf>,
    registry: &ActionRegistry,
) -> CmdResult {
    let gold: Vec<GoldStep> = jsonl::read(&or_out(gold, cfg, pipeline::GOLD_FILE)).map_err(input)?;
    let preds = read_predictions(&or_out(predictions, cfg, PREDICTIONS_FILE), cfg.extract, registry).map_err(input)?;
    let report = pipeline::eval_stage(&gold, &preds, &cfg.eval(), &cfg.out).map_err(input)?;
    print!("{report}");
    Ok(())
}

fn read_or_empty<T: serde::de::DeserializeOwned>(given: Option<PathBuf>, fallback: PathBuf) -> Result<Vec<T>, Failure> {
    match given {
        Some(p) => jsonl::read(&p).map_err(input),
        None if fallback.exists() => jsonl::read(&fallback).map_err(input),
        None => Ok(Vec::new()),
    }
}

fn cmd_stats(cfg: &RunConfig, grounding: Option<PathBuf>, trajectories: Option<PathBuf>, json: bool) -> CmdResult {
    let g: Vec<GroundingRecord> = read_or_empty(grounding, cfg.out.join(pipeline::GROUNDING_FILE))?;
    let t: Vec<Trajectory> = read_or_empty(trajectories, cfg.out.join(pipeline::TRAJECTORIES_FILE))?;
    let report = pipeline::stats_stage(&g, &t, &cfg.out).map_err(input)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(input)?);
    } else {
        print!("{report}");
    }
    Ok(())
}

fn cmd_run(cfg: &RunConfig, predictions: Option<PathBuf>) -> CmdResult {
    let pcfg = PipelineConfig {
        max_turns: cfg.max_turns,
        transform: cfg.transform(),
        eval: cfg.eval(),
        extract: cfg.extract,
    };
    let s = pipeline::run_all(manifest(cfg)?, predictions.as_deref(), &pcfg, &cfg.out).map_err(input)?;
    for src in &s.ingest.summaries {
        println!("{src}");
    }
    println!("{} conversations, {} turns; {} planning samples", s.conversations, s.turns, s.samples);
    print!("{}", s.stats);
    if let Some(r) = &s.report {
        print!("{r}");
    }
    Ok(())
}

fn cmd_fixtures(cfg: &RunConfig, params: &FixtureParams) -> CmdResult {
    let manifest = synth::write_fixture_sources(&cfg.out, params).map_err(input)?;
    let sources = guipipe_core::ingest::load_manifest(&manifest).map_err(input)?;
    let run = guipipe_core::ingest::ingest_all(&sources, &ActionRegistry::builtin()).map_err(input)?;
    let samples = guipipe_core::planning::transform_corpus(
        &run.trajectories,
        cfg.transform(),
        &InstructionTemplates::default(),
    )
    .samples;
    let preds = synth::noisy_predictions(&samples, params.seed);
    jsonl::write(&cfg.out.join(PREDICTIONS_FILE), &preds).map_err(input)?;
    println!(
        "wrote {} ({} sources) and {} predictions for {} samples (seed {})",
        manifest.display(),
        sources.len(),
        preds.len(),
        samples.len(),
        params.seed
    );
    Ok(())
}
