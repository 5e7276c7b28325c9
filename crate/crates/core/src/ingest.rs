//! Declarative ingestion of heterogeneous source datasets.
//!
//! A manifest is a JSON array of sources. Each source names a JSONL file,
//! whether it holds grounding records or trajectories, the coordinate space
//! its numbers live in, and a [`FieldMapping`] from canonical fields to
//! JSON pointers (RFC 6901) into each source line, with optional constant
//! defaults:
//!
//! ```json
//! [{
//!   "source_tag": "web-a",
//!   "kind": "grounding",
//!   "path": "web_a.jsonl",
//!   "coordinate_space": "absolute_pixels",
//!   "synthesis_kind": "referring",
//!   "mapping": {
//!     "fields": {"screenshot_ref": "/img", "element_desc": "/text", "box": "/bbox"},
//!     "defaults": {"screen": [1920, 1080]}
//!   }
//! }]
//! ```
//!
//! Grounding fields: `screenshot_ref`, `screen`, `element_desc`, and at
//! least one of `box` / `point`; optionally `synthesis_kind`.
//! Trajectory fields: `task`, `steps` (an array), and per step (pointers
//! relative to the step object) `step.screenshot_ref`, `step.screen`,
//! either `step.action` (action text) or `step.action_type` with
//! `step.point` / `step.text` / `step.direction` / `step.app_name` /
//! `step.status`, and optionally `step.low_level_instruction`.
//!
//! Screens are `[w, h]` or `{"width", "height"}`; boxes `[x1, y1, x2, y2]` or
//! `{"x1", ...}`; points `[x, y]` or `{"x", "y"}`. Pixel coordinates are
//! rounded to the nearest pixel and a box edge equal to the screen size is
//! treated as the exclusive edge of the last pixel. `coordinate_space`
//! applies to points and, unless `box_space` overrides it, to boxes.
//!
//! Every source line yields either one record or one [`Rejection`]; blank
//! lines are rejected too, so records + rejections always equals lines.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{self, RelPoint};
use crate::grammar::{self, ActionRegistry};
use crate::model::{
    validate_trajectory, Action, ActionKind, BBox, GroundingRecord, NormPoint, Observation, PixelPoint, ScreenSize,
    ScrollDirection, Step, SynthesisKind, TerminateStatus, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Grounding,
    Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordinateSpace {
    #[serde(rename = "absolute_pixels")]
    AbsolutePixels,
    #[serde(rename = "relative_1000")]
    Relative1000,
    #[serde(rename = "unit")]
    Unit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapping {
    /// Canonical field name → JSON pointer into the source record.
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    /// Canonical field name → value used when the pointer is unmapped or
    /// resolves to nothing.
    #[serde(default)]
    pub defaults: BTreeMap<String, Value>,
    /// Source action-type names → canonical names, for `step.action_type`.
    #[serde(default)]
    pub action_aliases: BTreeMap<String, String>,
}

impl FieldMapping {
    fn covers(&self, field: &str) -> bool {
        self.fields.contains_key(field) || self.defaults.contains_key(field)
    }

    fn resolve<'v>(&'v self, record: &'v Value, field: &str) -> Option<&'v Value> {
        self.fields
            .get(field)
            .and_then(|p| record.pointer(p))
            .filter(|v| !v.is_null())
            .or_else(|| self.defaults.get(field).filter(|v| !v.is_null()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceManifest {
    pub source_tag: String,
    pub kind: SourceKind,
    pub path: String,
    pub mapping: FieldMapping,
    #[serde(default)]
    pub synthesis_kind: SynthesisKind,
    pub coordinate_space: CoordinateSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_space: Option<CoordinateSpace>,
    /// Directory that relative `path`s resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

const GROUNDING_FIELDS: &[&str] = &["screenshot_ref", "screen", "element_desc", "box", "point", "synthesis_kind"];
const TRAJECTORY_FIELDS: &[&str] = &[
    "task",
    "steps",
    "step.screenshot_ref",
    "step.screen",
    "step.action",
    "step.action_type",
    "step.point",
    "step.text",
    "step.direction",
    "step.app_name",
    "step.status",
    "step.low_level_instruction",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("manifest {path}: source {index}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        index: usize,
        field: String,
        message: String,
    },
    #[error("manifest {path}: duplicate source_tag `{tag}`")]
    DuplicateTag { path: PathBuf, tag: String },
    #[error("unsupported resource scheme in `{0}` (only local paths and file:// are supported)")]
    UnsupportedScheme(String),
    #[error("source `{tag}` is a {actual:?} source, expected {expected:?}")]
    WrongKind {
        tag: String,
        expected: SourceKind,
        actual: SourceKind,
    },
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<Vec<SourceManifest>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut manifests: Vec<SourceManifest> = serde_json::from_str(&text).map_err(|e| IngestError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut tags = HashSet::new();
    for (index, m) in manifests.iter_mut().enumerate() {
        m.base_dir = base_dir.clone();
        check_manifest(m).map_err(|(field, message)| IngestError::Field {
            path: path.to_path_buf(),
            index,
            field,
            message,
        })?;
        if !tags.insert(m.source_tag.clone()) {
            return Err(IngestError::DuplicateTag {
                path: path.to_path_buf(),
                tag: m.source_tag.clone(),
            });
        }
    }
    Ok(manifests)
}

fn check_manifest(m: &SourceManifest) -> Result<(), (String, String)> {
    let fail = |field: &str, msg: &str| Err((field.to_string(), msg.to_string()));
    if m.source_tag.trim().is_empty() {
        return fail("source_tag", "must not be empty");
    }
    if m.path.is_empty() {
        return fail("path", "must not be empty");
    }
    let known = match m.kind {
        SourceKind::Grounding => GROUNDING_FIELDS,
        SourceKind::Trajectory => TRAJECTORY_FIELDS,
    };
    let mapping = &m.mapping;
    for name in mapping.fields.keys().chain(mapping.defaults.keys()) {
        if !known.contains(&name.as_str()) {
            return fail(name, "not a canonical field for this source kind");
        }
    }
    for (name, pointer) in &mapping.fields {
        if !is_valid_pointer(pointer) {
            return fail(name, &format!("invalid JSON pointer {pointer:?}"));
        }
    }
    let required: &[&str] = match m.kind {
        SourceKind::Grounding => &["screenshot_ref", "screen", "element_desc"],
        SourceKind::Trajectory => &["task", "steps", "step.screenshot_ref", "step.screen"],
    };
    for field in required {
        if !mapping.covers(field) {
            return fail(field, "required field is not mapped");
        }
    }
    match m.kind {
        SourceKind::Grounding if !mapping.covers("box") && !mapping.covers("point") => {
            fail("point", "one of `box` or `point` must be mapped")
        }
        SourceKind::Trajectory if !mapping.covers("step.action") && !mapping.covers("step.action_type") => {
            fail("step.action", "one of `step.action` or `step.action_type` must be mapped")
        }
        _ => Ok(()),
    }
}

fn is_valid_pointer(p: &str) -> bool {
    if p.is_empty() {
        return true;
    }
    if !p.starts_with('/') {
        return false;
    }
    let mut chars = p.chars();
    while let Some(c) = chars.next() {
        if c == '~' && !matches!(chars.next(), Some('0' | '1')) {
            return false;
        }
    }
    true
}

impl SourceManifest {
    /// Local filesystem location of the source data.
    pub fn resolved_path(&self) -> Result<PathBuf, IngestError> {
        let local = match self.path.split_once("://") {
            Some(("file", rest)) => rest,
            Some(_) => return Err(IngestError::UnsupportedScheme(self.path.clone())),
            None => self.path.as_str(),
        };
        let p = Path::new(local);
        Ok(if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        })
    }

    fn expect_kind(&self, expected: SourceKind) -> Result<(), IngestError> {
        if self.kind != expected {
            return Err(IngestError::WrongKind {
                tag: self.source_tag.clone(),
                expected,
                actual: self.kind,
            });
        }
        Ok(())
    }

    fn read_lines(&self) -> Result<String, IngestError> {
        let path = self.resolved_path()?;
        fs::read_to_string(&path).map_err(|source| IngestError::Io { path, source })
    }
}

/// A source line that did not yield a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source_tag: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome<T> {
    pub source_tag: String,
    pub lines: usize,
    pub records: Vec<T>,
    pub rejections: Vec<Rejection>,
}

pub fn ingest_grounding(m: &SourceManifest) -> Result<IngestOutcome<GroundingRecord>, IngestError> {
    m.expect_kind(SourceKind::Grounding)?;
    let text = m.read_lines()?;
    Ok(run_lines(m, &text, grounding_from_value))
}

pub fn ingest_trajectories(
    m: &SourceManifest,
    registry: &ActionRegistry,
) -> Result<IngestOutcome<Trajectory>, IngestError> {
    m.expect_kind(SourceKind::Trajectory)?;
    let text = m.read_lines()?;
    Ok(run_lines(m, &text, |m, v| trajectory_from_value(m, v, registry)))
}

fn run_lines<T: Send>(
    m: &SourceManifest,
    text: &str,
    convert: impl Fn(&SourceManifest, &Value) -> Result<T, String> + Sync,
) -> IngestOutcome<T> {
    let lines: Vec<&str> = text.lines().collect();
    // Lines are converted in parallel; collect() keeps source order.
    let results: Vec<Result<T, String>> = lines
        .par_iter()
        .map(|line| {
            if line.trim().is_empty() {
                return Err("blank line".to_string());
            }
            let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
            convert(m, &value)
        })
        .collect();

    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(reason) => rejections.push(Rejection {
                source_tag: m.source_tag.clone(),
                line: i + 1,
                reason,
            }),
        }
    }
    IngestOutcome {
        source_tag: m.source_tag.clone(),
        lines: lines.len(),
        records,
        rejections,
    }
}

struct FieldReader<'a> {
    mapping: &'a FieldMapping,
    record: &'a Value,
    prefix: &'static str,
}

impl<'a> FieldReader<'a> {
    fn get(&self, field: &str) -> Option<&'a Value> {
        let key: Cow<str> = if self.prefix.is_empty() {
            Cow::Borrowed(field)
        } else {
            Cow::Owned(format!("{}{field}", self.prefix))
        };
        self.mapping.resolve(self.record, &key)
    }

    fn required(&self, field: &str) -> Result<&'a Value, String> {
        self.get(field).ok_or_else(|| format!("missing `{}{field}`", self.prefix))
    }

    fn string(&self, field: &str) -> Result<String, String> {
        match self.required(field)? {
            Value::String(s) => Ok(s.clone()),
            other => Err(format!("`{}{field}` must be a string, got {}", self.prefix, kind_of(other))),
        }
    }

    fn opt_string(&self, field: &str) -> Result<Option<String>, String> {
        match self.get(field) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(format!("`{}{field}` must be a string, got {}", self.prefix, kind_of(other))),
        }
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Reads numbers from `[a, b, ...]` or `{"k1": a, "k2": b, ...}`.
fn numbers<const N: usize>(v: &Value, keys: [&str; N], what: &str) -> Result<[f64; N], String> {
    let mut out = [0.0; N];
    for (i, key) in keys.iter().enumerate() {
        let item = match v {
            Value::Array(a) if a.len() == N => &a[i],
            Value::Object(o) => o.get(*key).ok_or_else(|| format!("{what} is missing `{key}`"))?,
            _ => return Err(format!("{what} must be a {N}-element array or an object with {keys:?}")),
        };
        out[i] = item
            .as_f64()
            .filter(|f| f.is_finite())
            .ok_or_else(|| format!("{what} `{key}` must be a number"))?;
    }
    Ok(out)
}

fn parse_screen(v: &Value) -> Result<ScreenSize, String> {
    let [w, h] = numbers(v, ["width", "height"], "screen")?;
    let dim = |f: f64| -> Result<u32, String> {
        if f.fract() != 0.0 || f < 1.0 || f > f64::from(u32::MAX) {
            return Err(format!("screen dimension {f} must be a positive integer"));
        }
        Ok(f as u32)
    };
    ScreenSize::new(dim(w)?, dim(h)?).map_err(|e| e.to_string())
}

/// Converts one coordinate to a pixel index on an axis of length `dim`.
fn to_pixel(v: f64, dim: u32, space: CoordinateSpace) -> Result<u32, String> {
    let (scaled, limit) = match space {
        CoordinateSpace::AbsolutePixels => (v, f64::from(dim)),
        CoordinateSpace::Relative1000 => (v * f64::from(dim) / 1000.0, f64::from(dim)),
        CoordinateSpace::Unit => (v * f64::from(dim), f64::from(dim)),
    };
    if !(0.0..=limit).contains(&scaled) {
        return Err(format!("coordinate {v} lies outside the screen"));
    }
    Ok((scaled.round() as u32).min(dim - 1))
}

fn parse_box(v: &Value, screen: ScreenSize, space: CoordinateSpace) -> Result<BBox, String> {
    let [x1, y1, x2, y2] = numbers(v, ["x1", "y1", "x2", "y2"], "box")?;
    let (w, h) = (screen.width(), screen.height());
    BBox::on_screen(
        to_pixel(x1, w, space)?,
        to_pixel(y1, h, space)?,
        to_pixel(x2, w, space)?,
        to_pixel(y2, h, space)?,
        screen,
    )
    .map_err(|e| e.to_string())
}

fn parse_point(v: &Value, screen: ScreenSize, space: CoordinateSpace) -> Result<NormPoint, String> {
    let [x, y] = numbers(v, ["x", "y"], "point")?;
    match space {
        CoordinateSpace::AbsolutePixels => {
            let px = |f: f64| -> Result<u32, String> {
                let r = f.round();
                if r < 0.0 || r > f64::from(u32::MAX) {
                    return Err(format!("pixel coordinate {f} is negative or too large"));
                }
                Ok(r as u32)
            };
            geometry::normalize_point(PixelPoint::new(px(x)?, px(y)?), screen).map_err(|e| e.to_string())
        }
        CoordinateSpace::Relative1000 => {
            let grid = |f: f64| -> Result<u32, String> {
                if !(0.0..=1000.0).contains(&f) {
                    return Err(format!("relative coordinate {f} is outside [0, 1000]"));
                }
                Ok(f.round() as u32)
            };
            let r = RelPoint::new(grid(x)?, grid(y)?).map_err(|e| e.to_string())?;
            Ok(geometry::to_unit(r))
        }
        CoordinateSpace::Unit => NormPoint::quantize(x, y).map_err(|e| e.to_string()),
    }
}

fn grounding_from_value(m: &SourceManifest, record: &Value) -> Result<GroundingRecord, String> {
    let f = FieldReader {
        mapping: &m.mapping,
        record,
        prefix: "",
    };
    let screenshot_ref = f.string("screenshot_ref")?;
    if screenshot_ref.is_empty() {
        return Err("empty screenshot_ref".into());
    }
    let screen = parse_screen(f.required("screen")?)?;
    let element_desc = f.string("element_desc")?;
    if element_desc.trim().is_empty() {
        return Err("empty element_desc".into());
    }
    let synthesis_kind = match f.get("synthesis_kind") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| format!("synthesis_kind: {e}"))?,
        None => m.synthesis_kind,
    };
    let box_space = m.box_space.unwrap_or(m.coordinate_space);
    let target_box = f.get("box").map(|v| parse_box(v, screen, box_space)).transpose()?;
    let record = match (target_box, f.get("point")) {
        (Some(b), _) => GroundingRecord::from_box(screenshot_ref, screen, element_desc, b, &m.source_tag, synthesis_kind)
            .map_err(|e| e.to_string())?,
        (None, Some(p)) => GroundingRecord {
            screenshot_ref,
            screen,
            element_desc,
            target_box: None,
            target_point: parse_point(p, screen, m.coordinate_space)?,
            source_tag: m.source_tag.clone(),
            synthesis_kind,
        },
        (None, None) => return Err("record has neither a box nor a point".into()),
    };
    Ok(record)
}

struct StepError {
    position: usize,
    message: String,
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.position, self.message)
    }
}

fn trajectory_from_value(m: &SourceManifest, record: &Value, registry: &ActionRegistry) -> Result<Trajectory, String> {
    let f = FieldReader {
        mapping: &m.mapping,
        record,
        prefix: "",
    };
    let task = f.string("task")?;
    let raw_steps = match f.required("steps")? {
        Value::Array(a) => a,
        other => return Err(format!("`steps` must be an array, got {}", kind_of(other))),
    };
    let steps = raw_steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            step_from_value(m, s, i as u32 + 1, registry).map_err(|message| StepError {
                position: i + 1,
                message,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let t = Trajectory {
        task,
        steps,
        source_tag: m.source_tag.clone(),
    };
    let violations = validate_trajectory(&t);
    if !violations.is_empty() {
        let joined: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(format!("invalid trajectory: {}", joined.join("; ")));
    }
    Ok(t)
}

fn step_from_value(m: &SourceManifest, step: &Value, index: u32, registry: &ActionRegistry) -> Result<Step, String> {
    let f = FieldReader {
        mapping: &m.mapping,
        record: step,
        prefix: "step.",
    };
    let screenshot_ref = f.string("screenshot_ref")?;
    let screen = parse_screen(f.required("screen")?)?;
    let action = match f.opt_string("action")? {
        Some(text) => grammar::parse_action_with(&text, registry)
            .map_err(|e| format!("action parse error ({}): {e}", e.class().as_str()))?,
        None => structured_action(m, &f, screen, registry)?,
    };
    let low_level_instruction = f.opt_string("low_level_instruction")?.filter(|s| !s.trim().is_empty());
    Ok(Step {
        index,
        observation: Observation { screenshot_ref, screen },
        action,
        low_level_instruction,
    })
}

fn structured_action(
    m: &SourceManifest,
    f: &FieldReader<'_>,
    screen: ScreenSize,
    registry: &ActionRegistry,
) -> Result<Action, String> {
    let raw_type = f.string("action_type")?;
    let name = m.mapping.action_aliases.get(&raw_type).unwrap_or(&raw_type);
    let point = || -> Result<NormPoint, String> { parse_point(f.required("point")?, screen, m.coordinate_space) };
    let Some(kind) = ActionKind::from_name(name) else {
        if registry.get(name).is_some() {
            return Err(format!("action type `{name}` is an extension kind; map it via `step.action` text"));
        }
        return Err(format!("unknown action type `{raw_type}`"));
    };
    Ok(match kind {
        ActionKind::Click => Action::Click(point()?),
        ActionKind::LongPress => Action::LongPress(point()?),
        ActionKind::Type => Action::Type(f.string("text")?),
        ActionKind::Scroll => {
            let d = f.string("direction")?;
            Action::Scroll(ScrollDirection::from_name(&d.to_lowercase()).ok_or(format!("unknown scroll direction {d:?}"))?)
        }
        ActionKind::OpenApp => Action::OpenApp(f.string("app_name")?),
        ActionKind::NavigateBack => Action::NavigateBack,
        ActionKind::NavigateHome => Action::NavigateHome,
        ActionKind::Wait => Action::Wait,
        ActionKind::Terminate => {
            let s = f.string("status")?;
            Action::Terminate(TerminateStatus::from_name(&s.to_lowercase()).ok_or(format!("unknown terminate status {s:?}"))?)
        }
    })
}

/// Per-source counts for a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub source_tag: String,
    pub kind: SourceKind,
    pub lines: usize,
    pub records: usize,
    pub rejected: usize,
}

impl fmt::Display for SourceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            SourceKind::Grounding => "grounding",
            SourceKind::Trajectory => "trajectory",
        };
        write!(
            f,
            "{}: {kind}, {} lines, {} records, {} rejected",
            self.source_tag, self.lines, self.records, self.rejected
        )?;
        if self.rejected > 0 {
            write!(f, " [!]")?;
        }
        Ok(())
    }
}

/// Everything produced by ingesting all sources of a manifest, in
/// manifest order then source line order.
#[derive(Debug, Clone, Default)]
pub struct IngestRun {
    pub grounding: Vec<GroundingRecord>,
    pub trajectories: Vec<Trajectory>,
    pub rejections: Vec<Rejection>,
    pub summaries: Vec<SourceSummary>,
}

pub fn ingest_all(manifests: &[SourceManifest], registry: &ActionRegistry) -> Result<IngestRun, IngestError> {
    let mut run = IngestRun::default();
    for m in manifests {
        let (lines, records, mut rejections) = match m.kind {
            SourceKind::Grounding => {
                let o = ingest_grounding(m)?;
                let n = o.records.len();
                run.grounding.extend(o.records);
                (o.lines, n, o.rejections)
            }
            SourceKind::Trajectory => {
                let o = ingest_trajectories(m, registry)?;
                let n = o.records.len();
                run.trajectories.extend(o.records);
                (o.lines, n, o.rejections)
            }
        };
        run.summaries.push(SourceSummary {
            source_tag: m.source_tag.clone(),
            kind: m.kind,
            lines,
            records,
            rejected: rejections.len(),
        });
        run.rejections.append(&mut rejections);
    }
    Ok(run)
}

/// The mapping under which canonical grounding JSONL re-ingests to itself.
pub fn identity_grounding_mapping() -> FieldMapping {
    let fields = [
        ("screenshot_ref", "/screenshot_ref"),
        ("screen", "/screen"),
        ("element_desc", "/element_desc"),
        ("box", "/target_box"),
        ("point", "/target_point"),
        ("synthesis_kind", "/synthesis_kind"),
    ];
    FieldMapping {
        fields: fields.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        ..Default::default()
    }
}

/// The mapping under which canonical trajectory JSONL re-ingests to itself.
pub fn identity_trajectory_mapping() -> FieldMapping {
    let fields = [
        ("task", "/task"),
        ("steps", "/steps"),
        ("step.screenshot_ref", "/observation/screenshot_ref"),
        ("step.screen", "/observation/screen"),
        ("step.action", "/action"),
        ("step.low_level_instruction", "/low_level_instruction"),
    ];
    FieldMapping {
        fields: fields.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        ..Default::default()
    }
}
