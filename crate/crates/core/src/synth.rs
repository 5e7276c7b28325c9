//! Seeded synthetic data: canonical records, and raw source files with a
//! manifest that ingests them. Same seed, same bytes.

use std::io;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::client::PredictionLine;
use crate::grammar::serialize_action;
use crate::model::{
    Action, BBox, GroundingRecord, NormPoint, Observation, ScreenSize, ScrollDirection, Step, SynthesisKind,
    TerminateStatus, Trajectory,
};
use crate::planning::PlanningSample;

const SCREENS: &[(u32, u32)] = &[(1080, 1920), (1080, 2400), (1440, 3120), (1920, 1080), (2560, 1440)];
const ADJECTIVES: &[&str] = &["blue", "large", "round", "top", "bottom", "left", "right", "grey", "small", "highlighted"];
const NOUNS: &[&str] = &[
    "search icon",
    "settings button",
    "back arrow",
    "submit button",
    "menu",
    "text field",
    "checkbox",
    "profile picture",
    "share icon",
    "close button",
];
const WORDS: &[&str] = &["coffee", "weather today", "hello world", "Alice", "42", "flight to Paris", "notes"];
const APPS: &[&str] = &["Settings", "Chrome", "Gmail", "Maps", "Calendar", "Camera"];
const TASKS: &[&str] = &[
    "Turn on dark mode",
    "Search for a recipe",
    "Send a message to Alice",
    "Set an alarm for 7 am",
    "Find the nearest cafe",
];

pub struct Synth {
    rng: ChaCha8Rng,
}

impl Synth {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("non-empty pool")
    }

    pub fn screen(&mut self) -> ScreenSize {
        let (w, h) = self.pick(SCREENS);
        ScreenSize::new(w, h).expect("pool sizes are positive")
    }

    pub fn point(&mut self) -> NormPoint {
        NormPoint::from_milli(self.rng.random_range(0..=1000), self.rng.random_range(0..=1000)).expect("in range")
    }

    pub fn element_desc(&mut self) -> String {
        format!("{} {}", self.pick(ADJECTIVES), self.pick(NOUNS))
    }

    /// Any built-in action except `terminate`.
    pub fn step_action(&mut self) -> Action {
        match self.rng.random_range(0..8) {
            0 | 1 => Action::Click(self.point()),
            2 => Action::LongPress(self.point()),
            3 => Action::Type(self.pick(WORDS).to_string()),
            4 => Action::Scroll(self.pick(&ScrollDirection::ALL)),
            5 => Action::OpenApp(self.pick(APPS).to_string()),
            6 => Action::NavigateBack,
            _ => {
                if self.rng.random_bool(0.5) {
                    Action::NavigateHome
                } else {
                    Action::Wait
                }
            }
        }
    }

    pub fn action(&mut self) -> Action {
        if self.rng.random_bool(0.1) {
            Action::Terminate(self.status())
        } else {
            self.step_action()
        }
    }

    fn status(&mut self) -> TerminateStatus {
        if self.rng.random_bool(0.8) {
            TerminateStatus::Success
        } else {
            TerminateStatus::Failure
        }
    }

    /// A bounding box of at least 2x2 pixels on `screen`.
    pub fn bbox(&mut self, screen: ScreenSize) -> BBox {
        let (w, h) = (screen.width(), screen.height());
        let x1 = self.rng.random_range(0..w - 1);
        let y1 = self.rng.random_range(0..h - 1);
        let x2 = self.rng.random_range(x1 + 1..=(x1 + w / 4).min(w - 1));
        let y2 = self.rng.random_range(y1 + 1..=(y1 + h / 8).min(h - 1));
        BBox::on_screen(x1, y1, x2, y2, screen).expect("box built on screen")
    }

    /// Grounding records spread over `shots` screenshots.
    pub fn grounding(&mut self, tag: &str, n: usize, shots: usize) -> Vec<GroundingRecord> {
        let shots = shots.max(1);
        let screens: Vec<ScreenSize> = (0..shots).map(|_| self.screen()).collect();
        (0..n)
            .map(|_| {
                let k = self.rng.random_range(0..shots);
                let screen = screens[k];
                let bbox = self.bbox(screen);
                let desc = self.element_desc();
                GroundingRecord::from_box(
                    format!("{tag}/shot{k:04}.png"),
                    screen,
                    desc,
                    bbox,
                    tag,
                    SynthesisKind::Referring,
                )
                .expect("synthetic box is valid")
            })
            .collect()
    }

    /// A valid trajectory of `len` steps; the last step terminates with
    /// probability 0.7.
    pub fn trajectory(&mut self, tag: &str, episode: usize, len: u32) -> Trajectory {
        let screen = self.screen();
        let task = self.pick(TASKS).to_string();
        let steps = (1..=len.max(1))
            .map(|i| {
                let action = if i == len && self.rng.random_bool(0.7) {
                    Action::Terminate(self.status())
                } else {
                    self.step_action()
                };
                let low_level_instruction = self.rng.random_bool(0.6).then(|| match &action {
                    Action::Click(_) | Action::LongPress(_) => format!("Tap the {}", self.element_desc()),
                    other => format!("Do {}", other.kind_name()),
                });
                Step {
                    index: i,
                    observation: Observation {
                        screenshot_ref: format!("{tag}/ep{episode:04}/step{i:02}.png"),
                        screen,
                    },
                    action,
                    low_level_instruction,
                }
            })
            .collect();
        Trajectory {
            task,
            steps,
            source_tag: tag.to_string(),
        }
    }

    pub fn trajectories(&mut self, tag: &str, n: usize, max_len: u32) -> Vec<Trajectory> {
        (0..n)
            .map(|e| {
                let len = self.rng.random_range(1..=max_len.max(1));
                self.trajectory(tag, e, len)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureParams {
    pub seed: u64,
    pub grounding_records: usize,
    pub screenshots: usize,
    pub trajectories: usize,
    pub max_steps: u32,
    /// Add a third source containing malformed lines.
    pub with_rejects: bool,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            seed: 7,
            grounding_records: 60,
            screenshots: 12,
            trajectories: 20,
            max_steps: 8,
            with_rejects: false,
        }
    }
}

pub const GROUNDING_SOURCE: &str = "grounding.raw.jsonl";
pub const TRAJECTORY_SOURCE: &str = "trajectories.raw.jsonl";
pub const NOISY_SOURCE: &str = "noisy.raw.jsonl";
pub const MANIFEST: &str = "manifest.json";

fn raw_grounding(r: &GroundingRecord) -> Value {
    let b = r.target_box.expect("synthetic records carry a box");
    json!({
        "image": {"path": r.screenshot_ref, "size": [r.screen.width(), r.screen.height()]},
        "instruction": r.element_desc,
        "bbox": [b.x1(), b.y1(), b.x2(), b.y2()],
    })
}

fn raw_step(s: &Step) -> Value {
    let mut v = json!({
        "img": s.observation.screenshot_ref,
        "res": {"width": s.observation.screen.width(), "height": s.observation.screen.height()},
    });
    let o = v.as_object_mut().expect("object literal");
    let (ty, extra): (&str, Option<(&str, Value)>) = match &s.action {
        Action::Click(p) => ("tap", Some(("coords", json!([p.x_milli(), p.y_milli()])))),
        Action::LongPress(p) => ("long_press", Some(("coords", json!([p.x_milli(), p.y_milli()])))),
        Action::Type(t) => ("type", Some(("typed", json!(t)))),
        Action::Scroll(d) => ("scroll", Some(("dir", json!(d.as_str().to_uppercase())))),
        Action::OpenApp(a) => ("open_app", Some(("app", json!(a)))),
        Action::NavigateBack => ("press_back", None),
        Action::NavigateHome => ("press_home", None),
        Action::Wait => ("wait", None),
        Action::Terminate(st) => ("status", Some(("goal_status", json!(st.as_str())))),
        Action::Extension(_) => unreachable!("synthetic trajectories use built-in kinds"),
    };
    o.insert("type".into(), json!(ty));
    if let Some((k, val)) = extra {
        o.insert(k.into(), val);
    }
    if let Some(ll) = &s.low_level_instruction {
        o.insert("note".into(), json!(ll));
    }
    v
}

fn manifest_json() -> Value {
    json!([
        {
            "source_tag": "synth-ground",
            "kind": "grounding",
            "path": GROUNDING_SOURCE,
            "synthesis_kind": "referring",
            "coordinate_space": "absolute_pixels",
            "mapping": {
                "fields": {
                    "screenshot_ref": "/image/path",
                    "screen": "/image/size",
                    "element_desc": "/instruction",
                    "box": "/bbox"
                }
            }
        },
        {
            "source_tag": "synth-traj",
            "kind": "trajectory",
            "path": TRAJECTORY_SOURCE,
            "coordinate_space": "relative_1000",
            "mapping": {
                "fields": {
                    "task": "/goal",
                    "steps": "/episode",
                    "step.screenshot_ref": "/img",
                    "step.screen": "/res",
                    "step.action_type": "/type",
                    "step.point": "/coords",
                    "step.text": "/typed",
                    "step.direction": "/dir",
                    "step.app_name": "/app",
                    "step.status": "/goal_status",
                    "step.low_level_instruction": "/note"
                },
                "action_aliases": {
                    "tap": "click",
                    "press_back": "navigate_back",
                    "press_home": "navigate_home",
                    "status": "terminate"
                }
            }
        }
    ])
}

/// The canonical corpus that [`write_fixture_sources`] encodes in its two
/// clean sources.
pub fn fixture_corpus(params: &FixtureParams) -> (Vec<GroundingRecord>, Vec<Trajectory>) {
    let mut s = Synth::new(params.seed);
    let g = s.grounding("synth-ground", params.grounding_records, params.screenshots);
    let t = s.trajectories("synth-traj", params.trajectories, params.max_steps);
    (g, t)
}

const NOISY_BAD_LINES: &[&str] = &[
    "{\"shot\": \"noisy/a.png\", \"dims\": {\"width\": 1080, \"height\": 1920}, \"label\": \"ok\", \"xy\": [1.3, 0.2]}",
    "{\"shot\": \"noisy/b.png\", \"dims\": {\"width\": 1080, \"height\": 1920}, \"xy\": [0.5, 0.5]}",
    "",
    "{\"shot\": \"noisy/c.png\", \"dims\": {\"width\": 1080",
    "{\"shot\": \"noisy/d.png\", \"dims\": {\"width\": 0, \"height\": 1920}, \"label\": \"zero\", \"xy\": [0.1, 0.1]}",
];

fn noisy_lines(seed: u64) -> String {
    let mut s = Synth::new(seed ^ 0x5eed);
    let mut lines: Vec<String> = (0..10)
        .map(|i| {
            let screen = s.screen();
            let p = s.point();
            json!({
                "shot": format!("noisy/{i:02}.png"),
                "dims": {"width": screen.width(), "height": screen.height()},
                "label": s.element_desc(),
                "xy": [p.x(), p.y()],
            })
            .to_string()
        })
        .collect();
    for (k, bad) in NOISY_BAD_LINES.iter().enumerate() {
        lines.insert(2 * k + 1, bad.to_string());
    }
    lines.iter().map(|l| format!("{l}\n")).collect()
}

fn noisy_manifest_entry() -> Value {
    json!({
        "source_tag": "synth-noisy",
        "kind": "grounding",
        "path": NOISY_SOURCE,
        "synthesis_kind": "functional",
        "coordinate_space": "unit",
        "mapping": {
            "fields": {
                "screenshot_ref": "/shot",
                "screen": "/dims",
                "element_desc": "/label",
                "point": "/xy"
            }
        }
    })
}

/// Writes raw sources in non-canonical layouts plus a manifest that maps
/// them, and returns the manifest path. With `with_rejects`, a third source
/// mixes valid records with malformed lines.
pub fn write_fixture_sources(dir: &Path, params: &FixtureParams) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let (g, t) = fixture_corpus(params);

    let text: String = g.iter().map(|r| format!("{}\n", raw_grounding(r))).collect();
    std::fs::write(dir.join(GROUNDING_SOURCE), text)?;

    let text: String = t
        .iter()
        .map(|tr| {
            let steps: Vec<Value> = tr.steps.iter().map(raw_step).collect();
            format!("{}\n", json!({"goal": tr.task, "episode": steps}))
        })
        .collect();
    std::fs::write(dir.join(TRAJECTORY_SOURCE), text)?;

    let mut manifest = manifest_json();
    if params.with_rejects {
        std::fs::write(dir.join(NOISY_SOURCE), noisy_lines(params.seed))?;
        manifest.as_array_mut().expect("manifest is an array").push(noisy_manifest_entry());
    }
    let path = dir.join(MANIFEST);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, body + "\n")?;
    Ok(path)
}

/// Model-like predictions for `samples`: mostly right, some perturbed,
/// some of the wrong kind, some unparseable, some missing.
pub fn noisy_predictions(samples: &[PlanningSample], seed: u64) -> Vec<PredictionLine> {
    let mut s = Synth::new(seed);
    let mut out = Vec::with_capacity(samples.len());
    for sample in samples {
        let gold = &sample.target_forward;
        let roll = s.rng.random_range(0..100);
        let raw = match roll {
            0..=54 => serialize_action(gold),
            55..=69 => serialize_action(&s.perturb(gold)),
            70..=79 => serialize_action(&s.step_action()),
            80..=89 => s.pick(GARBAGE).to_string(),
            _ => continue,
        };
        out.push(PredictionLine {
            sample_id: sample.sample_id.clone(),
            raw_text: raw,
            error: None,
        });
    }
    out
}

const GARBAGE: &[&str] = &[
    "I think we should click the button",
    "click(x=1.5, y=0.2)",
    "click(x=0.5)",
    "swipe(direction=\"up\")",
    "type(text=\"unterminated)",
    "",
];

impl Synth {
    /// Same kind as `a`, different payload where the kind has one.
    fn perturb(&mut self, a: &Action) -> Action {
        match a {
            Action::Click(_) => Action::Click(self.point()),
            Action::LongPress(_) => Action::LongPress(self.point()),
            Action::Type(t) => Action::Type(format!("{t} extra")),
            Action::Scroll(d) => {
                let i = ScrollDirection::ALL.iter().position(|x| x == d).unwrap_or(0);
                Action::Scroll(ScrollDirection::ALL[(i + 1) % 4])
            }
            Action::OpenApp(n) => Action::OpenApp(n.to_uppercase()),
            Action::Terminate(TerminateStatus::Success) => Action::Terminate(TerminateStatus::Failure),
            Action::Terminate(TerminateStatus::Failure) => Action::Terminate(TerminateStatus::Success),
            other => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_trajectory;

    #[test]
    fn same_seed_same_corpus() {
        let params = FixtureParams::default();
        assert_eq!(fixture_corpus(&params), fixture_corpus(&params));
        let other = FixtureParams { seed: 8, ..params };
        assert_ne!(fixture_corpus(&params), fixture_corpus(&other));
    }

    #[test]
    fn generated_data_is_valid() {
        let mut s = Synth::new(1);
        for t in s.trajectories("x", 50, 12) {
            assert!(validate_trajectory(&t).is_empty(), "{t:?}");
        }
        for r in s.grounding("g", 200, 10) {
            r.validate().unwrap();
        }
    }

    #[test]
    fn raw_sources_ingest_to_the_canonical_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let params = FixtureParams {
            with_rejects: true,
            ..FixtureParams::default()
        };
        let manifest = write_fixture_sources(dir.path(), &params).unwrap();
        let sources = crate::ingest::load_manifest(&manifest).unwrap();
        let run = crate::ingest::ingest_all(&sources, &crate::grammar::ActionRegistry::builtin()).unwrap();
        let (g, t) = fixture_corpus(&params);
        assert_eq!(run.trajectories, t);
        assert_eq!(run.grounding[..g.len()], g[..]);
        assert_eq!(run.grounding.len(), g.len() + 10);
        assert_eq!(run.rejections.len(), NOISY_BAD_LINES.len());
        assert!(run.rejections.iter().all(|r| r.source_tag == "synth-noisy"));
    }
}
