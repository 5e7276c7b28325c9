//! Step-level offline metrics: action type accuracy, grounding accuracy and
//! step success rate.
//!
//! Grounding is judged by one of two predicates. Under the `box` rule a
//! prediction hits when its point, projected onto the screen, falls inside
//! the gold element box; gold steps without a box fall back to the distance
//! rule. Under the `distance` rule a prediction hits when its Euclidean
//! distance to the gold point in unit space is at most the threshold.
//! Predictions that carry no coordinate never hit. Gold steps whose action
//! has no coordinate are excluded from the grounding denominator.
//!
//! Missing and unparseable predictions count as failures on every metric.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::ClientError;
use crate::geometry::point_in_box;
use crate::grammar::{parse_model_output, ActionRegistry, ParseError};
use crate::model::{Action, BBox, ScreenSize};
use crate::planning::PlanningSample;

pub const DEFAULT_DISTANCE_THRESHOLD: f64 = 0.14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldStep {
    pub sample_id: String,
    pub gold_action: Action,
    #[serde(default)]
    pub gold_box: Option<BBox>,
    pub screen: ScreenSize,
}

impl GoldStep {
    /// Gold for a planning sample: its forward target, without a box.
    pub fn from_sample(s: &PlanningSample) -> Self {
        Self {
            sample_id: s.sample_id.clone(),
            gold_action: s.target_forward.clone(),
            gold_box: None,
            screen: s.screen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionError {
    #[error("unparseable: {0}")]
    Parse(ParseError),
    #[error("transport: {0}")]
    Transport(ClientError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub raw_text: String,
    pub parsed: Result<Action, PredictionError>,
}

impl PredictionRecord {
    pub fn from_raw(sample_id: String, raw_text: String, extract: bool, registry: &ActionRegistry) -> Self {
        let parsed = parse_model_output(&raw_text, extract, registry).map_err(PredictionError::Parse);
        Self {
            sample_id,
            raw_text,
            parsed,
        }
    }

    pub fn action(&self) -> Option<&Action> {
        self.parsed.as_ref().ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingRule {
    #[default]
    Box,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextMatch {
    /// Trim, case-fold and collapse internal whitespace before comparing.
    #[default]
    Normalized,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub grounding_rule: GroundingRule,
    pub distance_threshold: f64,
    pub text_match: TextMatch,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            grounding_rule: GroundingRule::Box,
            distance_threshold: DEFAULT_DISTANCE_THRESHOLD,
            text_match: TextMatch::Normalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub type_ok: bool,
    /// `None` when the gold action has no coordinate.
    pub grounding_ok: Option<bool>,
    pub payload_ok: bool,
    pub success: bool,
}

pub fn match_type(gold: &Action, pred: Option<&Action>) -> bool {
    pred.is_some_and(|p| p.kind_name() == gold.kind_name())
}

pub fn match_grounding(gold: &GoldStep, pred: Option<&Action>, cfg: &EvalConfig) -> Option<bool> {
    let gold_point = gold.gold_action.point()?;
    let Some(pred_point) = pred.and_then(Action::point) else {
        return Some(false);
    };
    let hit = match (cfg.grounding_rule, gold.gold_box) {
        (GroundingRule::Box, Some(b)) => point_in_box(pred_point, b, gold.screen),
        _ => {
            let dist = (pred_point.dist2_milli(&gold_point) as f64).sqrt() / 1000.0;
            dist <= cfg.distance_threshold
        }
    };
    Some(hit)
}

pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn text_eq(a: &str, b: &str, mode: TextMatch) -> bool {
    match mode {
        TextMatch::Exact => a == b,
        TextMatch::Normalized => normalize_text(a) == normalize_text(b),
    }
}

/// Whether the non-coordinate payload agrees. Coordinates are judged by
/// [`match_grounding`], so point kinds are vacuously true here.
pub fn match_payload(gold: &Action, pred: &Action, mode: TextMatch) -> bool {
    match (gold, pred) {
        (Action::Type(g), Action::Type(p)) => text_eq(g, p, mode),
        (Action::Scroll(g), Action::Scroll(p)) => g == p,
        (Action::OpenApp(g), Action::OpenApp(p)) => g.to_lowercase() == p.to_lowercase(),
        (Action::Terminate(g), Action::Terminate(p)) => g == p,
        (Action::Extension(g), Action::Extension(p)) => {
            g.name == p.name
                && g.args.len() == p.args.len()
                && g.args.iter().zip(&p.args).all(|((gk, gv), (pk, pv))| gk == pk && text_eq(gv, pv, mode))
        }
        (g, p) => g.kind_name() == p.kind_name(),
    }
}

pub fn match_step(gold: &GoldStep, pred: Option<&Action>, cfg: &EvalConfig) -> StepVerdict {
    let type_ok = match_type(&gold.gold_action, pred);
    let grounding_ok = match_grounding(gold, pred, cfg);
    let payload_ok = type_ok && pred.is_some_and(|p| match_payload(&gold.gold_action, p, cfg.text_match));
    StepVerdict {
        type_ok,
        grounding_ok,
        payload_ok,
        success: type_ok && grounding_ok.unwrap_or(true) && payload_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("prediction for unknown sample_id `{0}`")]
    UnknownSample(String),
    #[error("duplicate prediction for sample_id `{0}`")]
    DuplicatePrediction(String),
    #[error("duplicate gold step for sample_id `{0}`")]
    DuplicateGold(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindBreakdown {
    pub n: usize,
    pub type_correct: usize,
    pub grounding_n: usize,
    pub grounding_correct: usize,
    pub success: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_steps: usize,
    pub type_acc: f64,
    /// `None` when no gold step carries a coordinate.
    pub grounding_acc: Option<f64>,
    pub sr: f64,
    pub type_correct: usize,
    pub grounding_n: usize,
    pub grounding_correct: usize,
    pub success: usize,
    pub unparseable: usize,
    pub missing: usize,
    /// Keyed by gold action kind.
    pub by_kind: BTreeMap<String, KindBreakdown>,
    pub config: EvalConfig,
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-step verdicts ordered by sample_id.
pub fn score_steps(
    gold: &[GoldStep],
    preds: &[PredictionRecord],
    cfg: &EvalConfig,
) -> Result<Vec<(String, StepVerdict)>, EvalError> {
    Ok(join(gold, preds)?
        .into_iter()
        .map(|(g, p)| (g.sample_id.clone(), match_step(g, p.and_then(PredictionRecord::action), cfg)))
        .collect())
}

fn join<'a>(
    gold: &'a [GoldStep],
    preds: &'a [PredictionRecord],
) -> Result<Vec<(&'a GoldStep, Option<&'a PredictionRecord>)>, EvalError> {
    let mut by_id: BTreeMap<&str, &GoldStep> = BTreeMap::new();
    for g in gold {
        if by_id.insert(&g.sample_id, g).is_some() {
            return Err(EvalError::DuplicateGold(g.sample_id.clone()));
        }
    }
    let mut pred_by_id: BTreeMap<&str, &PredictionRecord> = BTreeMap::new();
    for p in preds {
        if !by_id.contains_key(p.sample_id.as_str()) {
            return Err(EvalError::UnknownSample(p.sample_id.clone()));
        }
        if pred_by_id.insert(&p.sample_id, p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.sample_id.clone()));
        }
    }
    Ok(by_id.into_iter().map(|(id, g)| (g, pred_by_id.get(id).copied())).collect())
}

pub fn evaluate(gold: &[GoldStep], preds: &[PredictionRecord], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    let joined = join(gold, preds)?;
    let mut by_kind: BTreeMap<String, KindBreakdown> = BTreeMap::new();
    let (mut unparseable, mut missing) = (0, 0);
    for (g, p) in &joined {
        match p {
            None => missing += 1,
            Some(p) if p.parsed.is_err() => unparseable += 1,
            Some(_) => {}
        }
        let v = match_step(g, p.and_then(PredictionRecord::action), cfg);
        let k = by_kind.entry(g.gold_action.kind_name().to_string()).or_default();
        k.n += 1;
        k.type_correct += usize::from(v.type_ok);
        if let Some(hit) = v.grounding_ok {
            k.grounding_n += 1;
            k.grounding_correct += usize::from(hit);
        }
        k.success += usize::from(v.success);
    }

    let sum = |f: fn(&KindBreakdown) -> usize| by_kind.values().map(f).sum::<usize>();
    let n_steps = joined.len();
    let type_correct = sum(|k| k.type_correct);
    let grounding_n = sum(|k| k.grounding_n);
    let grounding_correct = sum(|k| k.grounding_correct);
    let success = sum(|k| k.success);
    Ok(EvalReport {
        n_steps,
        type_acc: frac(type_correct, n_steps),
        grounding_acc: (grounding_n > 0).then(|| frac(grounding_correct, grounding_n)),
        sr: frac(success, n_steps),
        type_correct,
        grounding_n,
        grounding_correct,
        success,
        unparseable,
        missing,
        by_kind,
        config: *cfg,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: f64| format!("{:.1}", v * 100.0);
        let rule = match self.config.grounding_rule {
            GroundingRule::Box => "box",
            GroundingRule::Distance => "distance",
        };
        writeln!(
            f,
            "steps {}  type {}  grounding {}  SR {}",
            self.n_steps,
            pct(self.type_acc),
            self.grounding_acc.map(pct).unwrap_or_else(|| "n/a".into()),
            pct(self.sr)
        )?;
        writeln!(
            f,
            "unparseable {}  missing {}  grounding rule {rule} (distance threshold {})",
            self.unparseable, self.missing, self.config.distance_threshold
        )?;
        for (kind, k) in &self.by_kind {
            writeln!(
                f,
                "  {kind:<14} n={:<5} type={:<5} grounding={}/{:<5} success={}",
                k.n, k.type_correct, k.grounding_correct, k.grounding_n, k.success
            )?;
        }
        Ok(())
    }
}
