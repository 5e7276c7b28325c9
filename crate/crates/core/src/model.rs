//! Canonical domain types shared by every pipeline stage.
//!
//! All values are immutable after construction. Constructors enforce the
//! per-type invariants, so a `NormPoint` or `BBox` in hand is always valid;
//! trajectory-level rules that span several steps are reported as data by
//! [`validate_trajectory`] instead.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::geometry;

/// Resolution of the unit grid: unit coordinates are multiples of `1 / GRID`.
pub const GRID: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("screen dimensions must be positive, got {width}x{height}")]
    EmptyScreen { width: u32, height: u32 },
    #[error("unit coordinate {0} is outside [0, 1]")]
    UnitOutOfRange(f64),
    #[error("grid coordinate {0} is outside [0, {GRID}]")]
    GridOutOfRange(u32),
    #[error("box ({x1}, {y1}, {x2}, {y2}) has inverted corners")]
    InvertedBox { x1: u32, y1: u32, x2: u32, y2: u32 },
    #[error("box {bbox} does not fit a {screen} screen")]
    BoxOffScreen { bbox: BBox, screen: ScreenSize },
    #[error("`{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("target_point {point} is not the normalized center {expected} of target_box")]
    PointBoxMismatch { point: NormPoint, expected: NormPoint },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ScreenSizeRepr", into = "ScreenSizeRepr")]
pub struct ScreenSize {
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
struct ScreenSizeRepr {
    width: u32,
    height: u32,
}

impl ScreenSize {
    pub fn new(width: u32, height: u32) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyScreen { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.x < self.width && p.y < self.height
    }
}

impl TryFrom<ScreenSizeRepr> for ScreenSize {
    type Error = ModelError;
    fn try_from(r: ScreenSizeRepr) -> Result<Self, Self::Error> {
        Self::new(r.width, r.height)
    }
}

impl From<ScreenSize> for ScreenSizeRepr {
    fn from(s: ScreenSize) -> Self {
        Self {
            width: s.width,
            height: s.height,
        }
    }
}

impl fmt::Display for ScreenSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// An absolute pixel position. Validity is relative to a [`ScreenSize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: u32,
    pub y: u32,
}

impl PixelPoint {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// A resolution-independent point in `[0, 1]²`, stored as thousandths so
/// that equality and round trips are exact.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormPoint {
    x: u16,
    y: u16,
}

impl NormPoint {
    pub const ORIGIN: NormPoint = NormPoint { x: 0, y: 0 };

    /// Builds a point from grid units (thousandths).
    pub fn from_milli(x: u32, y: u32) -> Result<Self, ModelError> {
        for v in [x, y] {
            if v > GRID {
                return Err(ModelError::GridOutOfRange(v));
            }
        }
        Ok(Self {
            x: x as u16,
            y: y as u16,
        })
    }

    /// Snaps arbitrary unit coordinates to the nearest multiple of 0.001.
    pub fn quantize(x: f64, y: f64) -> Result<Self, ModelError> {
        Ok(Self {
            x: quantize_unit(x)?,
            y: quantize_unit(y)?,
        })
    }

    pub fn x(&self) -> f64 {
        f64::from(self.x) / f64::from(GRID)
    }

    pub fn y(&self) -> f64 {
        f64::from(self.y) / f64::from(GRID)
    }

    pub fn x_milli(&self) -> u16 {
        self.x
    }

    pub fn y_milli(&self) -> u16 {
        self.y
    }

    /// Squared Euclidean distance in grid units.
    pub fn dist2_milli(&self, other: &NormPoint) -> u64 {
        let dx = i64::from(self.x) - i64::from(other.x);
        let dy = i64::from(self.y) - i64::from(other.y);
        (dx * dx + dy * dy) as u64
    }
}

fn quantize_unit(v: f64) -> Result<u16, ModelError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ModelError::UnitOutOfRange(v));
    }
    Ok((v * f64::from(GRID)).round() as u16)
}

/// Formats a thousandths value with exactly three decimals, e.g. `0.347`.
pub fn format_milli(m: u16) -> String {
    format!("{}.{:03}", m / 1000, m % 1000)
}

impl fmt::Debug for NormPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NormPoint{self}")
    }
}

impl fmt::Display for NormPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_milli(self.x), format_milli(self.y))
    }
}

impl Serialize for NormPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            x: Box<RawValue>,
            y: Box<RawValue>,
        }
        let raw = |m: u16| RawValue::from_string(format_milli(m)).map_err(serde::ser::Error::custom);
        Repr {
            x: raw(self.x)?,
            y: raw(self.y)?,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NormPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            x: f64,
            y: f64,
        }
        let r = Repr::deserialize(deserializer)?;
        NormPoint::quantize(r.x, r.y).map_err(D::Error::custom)
    }
}

/// Axis-aligned element box in pixels, corners inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "BBoxRepr", into = "BBoxRepr")]
pub struct BBox {
    x1: u32,
    y1: u32,
    x2: u32,
    y2: u32,
}

#[derive(Serialize, Deserialize)]
struct BBoxRepr {
    x1: u32,
    y1: u32,
    x2: u32,
    y2: u32,
}

impl BBox {
    pub fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Result<Self, ModelError> {
        if x1 > x2 || y1 > y2 {
            return Err(ModelError::InvertedBox { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Like [`BBox::new`] but also requires both corners to lie on `screen`.
    pub fn on_screen(x1: u32, y1: u32, x2: u32, y2: u32, screen: ScreenSize) -> Result<Self, ModelError> {
        let b = Self::new(x1, y1, x2, y2)?;
        if !b.fits(screen) {
            return Err(ModelError::BoxOffScreen { bbox: b, screen });
        }
        Ok(b)
    }

    pub fn x1(&self) -> u32 {
        self.x1
    }
    pub fn y1(&self) -> u32 {
        self.y1
    }
    pub fn x2(&self) -> u32 {
        self.x2
    }
    pub fn y2(&self) -> u32 {
        self.y2
    }

    pub fn fits(&self, screen: ScreenSize) -> bool {
        screen.contains(PixelPoint::new(self.x2, self.y2))
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        (self.x1..=self.x2).contains(&p.x) && (self.y1..=self.y2).contains(&p.y)
    }
}

impl TryFrom<BBoxRepr> for BBox {
    type Error = ModelError;
    fn try_from(r: BBoxRepr) -> Result<Self, Self::Error> {
        Self::new(r.x1, r.y1, r.x2, r.y2)
    }
}

impl From<BBox> for BBoxRepr {
    fn from(b: BBox) -> Self {
        Self {
            x1: b.x1,
            y1: b.y1,
            x2: b.x2,
            y2: b.y2,
        }
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x1, self.y1, self.x2, self.y2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrollDirection {
    Up,
    Down,
    Left,
    Right,
}

impl ScrollDirection {
    pub const ALL: [ScrollDirection; 4] = [Self::Up, Self::Down, Self::Left, Self::Right];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Up => "up",
            Self::Down => "down",
            Self::Left => "left",
            Self::Right => "right",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminateStatus {
    Success,
    Failure,
}

impl TerminateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Failure => "failure",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "success" => Some(Self::Success),
            "failure" => Some(Self::Failure),
            _ => None,
        }
    }
}

/// The built-in action kinds of the unified action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Click,
    LongPress,
    Type,
    Scroll,
    OpenApp,
    NavigateBack,
    NavigateHome,
    Wait,
    Terminate,
}

impl ActionKind {
    pub const ALL: [ActionKind; 9] = [
        Self::Click,
        Self::LongPress,
        Self::Type,
        Self::Scroll,
        Self::OpenApp,
        Self::NavigateBack,
        Self::NavigateHome,
        Self::Wait,
        Self::Terminate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Click => "click",
            Self::LongPress => "long_press",
            Self::Type => "type",
            Self::Scroll => "scroll",
            Self::OpenApp => "open_app",
            Self::NavigateBack => "navigate_back",
            Self::NavigateHome => "navigate_home",
            Self::Wait => "wait",
            Self::Terminate => "terminate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn has_point(&self) -> bool {
        matches!(self, Self::Click | Self::LongPress)
    }
}

/// An action kind registered at runtime through an
/// [`ActionRegistry`](crate::grammar::ActionRegistry).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtensionAction {
    pub name: String,
    pub point: Option<NormPoint>,
    /// Text-valued parameters, in registry declaration order.
    pub args: Vec<(String, String)>,
}

/// One executable step of an agent.
///
/// JSON form is the canonical action string, see [`crate::grammar`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Click(NormPoint),
    LongPress(NormPoint),
    Type(String),
    Scroll(ScrollDirection),
    OpenApp(String),
    NavigateBack,
    NavigateHome,
    Wait,
    Terminate(TerminateStatus),
    Extension(ExtensionAction),
}

impl Action {
    pub fn kind(&self) -> Option<ActionKind> {
        Some(match self {
            Self::Click(_) => ActionKind::Click,
            Self::LongPress(_) => ActionKind::LongPress,
            Self::Type(_) => ActionKind::Type,
            Self::Scroll(_) => ActionKind::Scroll,
            Self::OpenApp(_) => ActionKind::OpenApp,
            Self::NavigateBack => ActionKind::NavigateBack,
            Self::NavigateHome => ActionKind::NavigateHome,
            Self::Wait => ActionKind::Wait,
            Self::Terminate(_) => ActionKind::Terminate,
            Self::Extension(_) => return None,
        })
    }

    pub fn kind_name(&self) -> &str {
        match self {
            Self::Extension(e) => &e.name,
            other => other.kind().map(|k| k.name()).unwrap_or_default(),
        }
    }

    /// The screen coordinate this action targets, if any.
    pub fn point(&self) -> Option<NormPoint> {
        match self {
            Self::Click(p) | Self::LongPress(p) => Some(*p),
            Self::Extension(e) => e.point,
            _ => None,
        }
    }

    pub fn is_terminate(&self) -> bool {
        matches!(self, Self::Terminate(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::grammar::serialize_action(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub screenshot_ref: String,
    pub screen: ScreenSize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub index: u32,
    pub observation: Observation,
    pub action: Action,
    #[serde(default)]
    pub low_level_instruction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: String,
    pub steps: Vec<Step>,
    pub source_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisKind {
    Referring,
    Contextual,
    Functional,
    #[default]
    Unspecified,
}

/// One element description paired with its target on a screenshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundingRecord {
    pub screenshot_ref: String,
    pub screen: ScreenSize,
    pub element_desc: String,
    pub target_box: Option<BBox>,
    pub target_point: NormPoint,
    pub source_tag: String,
    pub synthesis_kind: SynthesisKind,
}

impl GroundingRecord {
    /// Builds a record whose target point is the normalized center of `bbox`.
    pub fn from_box(
        screenshot_ref: impl Into<String>,
        screen: ScreenSize,
        element_desc: impl Into<String>,
        bbox: BBox,
        source_tag: impl Into<String>,
        synthesis_kind: SynthesisKind,
    ) -> Result<Self, ModelError> {
        let target_point = box_target(bbox, screen)?;
        let r = Self {
            screenshot_ref: screenshot_ref.into(),
            screen,
            element_desc: element_desc.into(),
            target_box: Some(bbox),
            target_point,
            source_tag: source_tag.into(),
            synthesis_kind,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.screenshot_ref.is_empty() {
            return Err(ModelError::EmptyField("screenshot_ref"));
        }
        if self.element_desc.trim().is_empty() {
            return Err(ModelError::EmptyField("element_desc"));
        }
        if let Some(b) = self.target_box {
            let expected = box_target(b, self.screen)?;
            if expected != self.target_point {
                return Err(ModelError::PointBoxMismatch {
                    point: self.target_point,
                    expected,
                });
            }
        }
        Ok(())
    }
}

fn box_target(b: BBox, screen: ScreenSize) -> Result<NormPoint, ModelError> {
    if !b.fits(screen) {
        return Err(ModelError::BoxOffScreen { bbox: b, screen });
    }
    Ok(geometry::normalize_point(geometry::box_center(b), screen)
        .expect("center of an on-screen box is on screen"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryRule {
    EmptySteps,
    IndexGap,
    IndexOrder,
    PrematureTerminate,
    EmptyScreenshotRef,
    BlankInstruction,
}

impl TrajectoryRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::EmptySteps => "empty-steps",
            Self::IndexGap => "index-gap",
            Self::IndexOrder => "index-order",
            Self::PrematureTerminate => "premature-terminate",
            Self::EmptyScreenshotRef => "empty-screenshot-ref",
            Self::BlankInstruction => "blank-instruction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step_index: Option<u32>,
    pub rule: TrajectoryRule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step_index {
            Some(i) => write!(f, "step {i}: {}: {}", self.rule.as_str(), self.detail),
            None => write!(f, "{}: {}", self.rule.as_str(), self.detail),
        }
    }
}

/// Checks every trajectory-level invariant; an empty result means valid.
pub fn validate_trajectory(t: &Trajectory) -> Vec<Violation> {
    let mut out = Vec::new();
    if t.steps.is_empty() {
        out.push(Violation {
            step_index: None,
            rule: TrajectoryRule::EmptySteps,
            detail: "trajectory has no steps".into(),
        });
        return out;
    }

    let mut expected = 1u32;
    for step in &t.steps {
        let idx = step.index;
        if idx > expected {
            let detail = if idx - expected == 1 {
                format!("index {expected} is missing")
            } else {
                format!("indices {expected}..={} are missing", idx - 1)
            };
            out.push(Violation {
                step_index: Some(expected),
                rule: TrajectoryRule::IndexGap,
                detail,
            });
        } else if idx < expected {
            out.push(Violation {
                step_index: Some(idx),
                rule: TrajectoryRule::IndexOrder,
                detail: format!("index {idx} appears where {expected} was expected"),
            });
        }
        expected = expected.max(idx.saturating_add(1));

        if step.observation.screenshot_ref.is_empty() {
            out.push(Violation {
                step_index: Some(idx),
                rule: TrajectoryRule::EmptyScreenshotRef,
                detail: "observation has an empty screenshot_ref".into(),
            });
        }
        if matches!(&step.low_level_instruction, Some(s) if s.trim().is_empty()) {
            out.push(Violation {
                step_index: Some(idx),
                rule: TrajectoryRule::BlankInstruction,
                detail: "low_level_instruction is blank".into(),
            });
        }
    }

    let last = t.steps.len() - 1;
    for (pos, step) in t.steps.iter().enumerate() {
        if pos != last && step.action.is_terminate() {
            out.push(Violation {
                step_index: Some(step.index),
                rule: TrajectoryRule::PrematureTerminate,
                detail: format!("terminate at step {} of {}", pos + 1, t.steps.len()),
            });
        }
    }
    out
}
