//! Trajectory → training sample transformation.
//!
//! A forward sample at step `n` asks for `a_n` given the task, the history
//! `a_1..a_{n-1}` and the current screenshot. A hybrid sample additionally
//! asks for `a_{n-1}`, the action that produced the current screen. Targets
//! render as labeled lines:
//!
//! ```text
//! Previous action: click(x=0.200, y=0.200)
//! Next action: type(text="hi")
//! ```
//!
//! so the forward target is always a suffix of the hybrid one.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::serialize_action;
use crate::model::{format_milli, validate_trajectory, Action, ActionKind, ScreenSize, Step, Trajectory};

pub const PREVIOUS_LABEL: &str = "Previous action: ";
pub const NEXT_LABEL: &str = "Next action: ";
pub const EMPTY_HISTORY: &str = "None.";

const DEFAULT_TEMPLATES: &str = include_str!("../assets/instruction_templates.v1.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    /// Natural-language low-level instructions.
    #[default]
    Instruction,
    /// Serialized action expressions.
    Action,
}

impl fmt::Display for HistoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Instruction => "instruction",
            Self::Action => "action",
        })
    }
}

#[derive(Debug, Error)]
pub enum PlanningError {
    #[error("step {n} is out of range for a trajectory of {len} steps")]
    StepOutOfRange { n: usize, len: usize },
    #[error("reading instruction templates {path}: {message}")]
    Templates { path: String, message: String },
}

/// Fallback phrasing for steps without a low-level instruction annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTemplates {
    pub version: u32,
    pub templates: BTreeMap<String, String>,
}

impl Default for InstructionTemplates {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("bundled instruction templates are valid")
    }
}

impl InstructionTemplates {
    pub fn parse(json: &str) -> Result<Self, String> {
        let t: Self = serde_json::from_str(json).map_err(|e| e.to_string())?;
        for kind in ActionKind::ALL {
            if !t.templates.contains_key(kind.name()) {
                return Err(format!("no template for `{}`", kind.name()));
            }
        }
        Ok(t)
    }

    pub fn from_file(path: &Path) -> Result<Self, PlanningError> {
        let err = |message: String| PlanningError::Templates {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::parse(&text).map_err(err)
    }

    pub fn render(&self, a: &Action) -> String {
        let Some(template) = self.templates.get(a.kind_name()) else {
            return format!("Perform {}.", serialize_action(a));
        };
        let mut out = template.clone();
        if let Some(p) = a.point() {
            out = out
                .replace("{x}", &format_milli(p.x_milli()))
                .replace("{y}", &format_milli(p.y_milli()));
        }
        match a {
            Action::Type(t) => out = out.replace("{text}", t),
            Action::Scroll(d) => out = out.replace("{direction}", d.as_str()),
            Action::OpenApp(n) => out = out.replace("{name}", n),
            Action::Terminate(s) => out = out.replace("{status}", s.as_str()),
            _ => {}
        }
        out
    }
}

/// Numbered history lines, or `None.` for an empty prefix.
pub fn render_history(steps: &[Step], mode: HistoryMode, templates: &InstructionTemplates) -> String {
    if steps.is_empty() {
        return EMPTY_HISTORY.to_string();
    }
    let lines: Vec<String> = steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let body = match mode {
                HistoryMode::Action => serialize_action(&s.action),
                HistoryMode::Instruction => match &s.low_level_instruction {
                    Some(i) => i.clone(),
                    None => templates.render(&s.action),
                },
            };
            format!("{}. {body}", k + 1)
        })
        .collect();
    lines.join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningSample {
    pub sample_id: String,
    pub task: String,
    pub history_text: String,
    pub current_screenshot_ref: String,
    pub screen: ScreenSize,
    pub step_index: u32,
    pub target_forward: Action,
    pub target_back: Option<Action>,
    pub history_mode: HistoryMode,
    pub rendered_target: String,
    /// Screenshots of steps `1..n-1`, for trainers that consume them.
    #[serde(default)]
    pub history_screenshot_refs: Vec<String>,
}

impl PlanningSample {
    /// Rebuilds the target string from the target actions.
    pub fn expected_rendered_target(&self) -> String {
        render_target(self.target_back.as_ref(), &self.target_forward)
    }
}

fn render_target(back: Option<&Action>, forward: &Action) -> String {
    let next = format!("{NEXT_LABEL}{}", serialize_action(forward));
    match back {
        Some(b) => format!("{PREVIOUS_LABEL}{}\n{next}", serialize_action(b)),
        None => next,
    }
}

/// Forward sample for 1-based step `n`.
pub fn make_forward_sample(
    t: &Trajectory,
    n: usize,
    mode: HistoryMode,
    templates: &InstructionTemplates,
) -> Result<PlanningSample, PlanningError> {
    if n == 0 || n > t.steps.len() {
        return Err(PlanningError::StepOutOfRange { n, len: t.steps.len() });
    }
    let step = &t.steps[n - 1];
    let prefix = &t.steps[..n - 1];
    Ok(PlanningSample {
        sample_id: String::new(),
        task: t.task.clone(),
        history_text: render_history(prefix, mode, templates),
        current_screenshot_ref: step.observation.screenshot_ref.clone(),
        screen: step.observation.screen,
        step_index: n as u32,
        target_forward: step.action.clone(),
        target_back: None,
        history_mode: mode,
        rendered_target: render_target(None, &step.action),
        history_screenshot_refs: prefix.iter().map(|s| s.observation.screenshot_ref.clone()).collect(),
    })
}

/// Forward sample plus the back-tracking target `a_{n-1}` when `n >= 2`.
pub fn make_hybrid_sample(
    t: &Trajectory,
    n: usize,
    mode: HistoryMode,
    templates: &InstructionTemplates,
) -> Result<PlanningSample, PlanningError> {
    let mut s = make_forward_sample(t, n, mode, templates)?;
    if n >= 2 {
        let back = t.steps[n - 2].action.clone();
        s.rendered_target = render_target(Some(&back), &s.target_forward);
        s.target_back = Some(back);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransformConfig {
    pub mode: HistoryMode,
    pub hybrid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedTrajectory {
    pub source_tag: String,
    pub ordinal: usize,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransformOutcome {
    pub samples: Vec<PlanningSample>,
    pub skipped: Vec<SkippedTrajectory>,
}

/// One sample per step of every valid trajectory.
///
/// Trajectories are numbered from 0 within their `source_tag`, in input
/// order; `sample_id` is `source_tag/ordinal/step_index`. Output is ordered
/// by (source_tag, ordinal, step_index).
pub fn transform_corpus(
    trajs: &[Trajectory],
    cfg: TransformConfig,
    templates: &InstructionTemplates,
) -> TransformOutcome {
    let mut next_ordinal: HashMap<&str, usize> = HashMap::new();
    let mut keyed: Vec<(&str, usize, &Trajectory)> = trajs
        .iter()
        .map(|t| {
            let o = next_ordinal.entry(t.source_tag.as_str()).or_default();
            let ordinal = *o;
            *o += 1;
            (t.source_tag.as_str(), ordinal, t)
        })
        .collect();
    keyed.sort_by_key(|&(tag, ordinal, _)| (tag, ordinal));

    let per_traj: Vec<Result<Vec<PlanningSample>, SkippedTrajectory>> = keyed
        .par_iter()
        .map(|&(tag, ordinal, t)| {
            let violations = validate_trajectory(t);
            if !violations.is_empty() {
                return Err(SkippedTrajectory {
                    source_tag: tag.to_string(),
                    ordinal,
                    reasons: violations.iter().map(ToString::to_string).collect(),
                });
            }
            Ok((1..=t.steps.len())
                .map(|n| {
                    let mut s = if cfg.hybrid {
                        make_hybrid_sample(t, n, cfg.mode, templates)
                    } else {
                        make_forward_sample(t, n, cfg.mode, templates)
                    }
                    .expect("n is within 1..=len");
                    s.sample_id = format!("{tag}/{ordinal}/{n}");
                    s
                })
                .collect())
        })
        .collect();

    let mut out = TransformOutcome::default();
    for r in per_traj {
        match r {
            Ok(mut s) => out.samples.append(&mut s),
            Err(skip) => out.skipped.push(skip),
        }
    }
    out
}

/// The text prompt sent to a model for a sample.
pub fn render_planning_prompt(s: &PlanningSample) -> String {
    format!(
        "Task: {}\nPrevious actions:\n{}\nCurrent screenshot: {}\nWhat is the next action?",
        s.task, s.history_text, s.current_screenshot_ref
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NormPoint, Observation, TerminateStatus};

    fn step(index: u32, action: Action, instr: Option<&str>) -> Step {
        Step {
            index,
            observation: Observation {
                screenshot_ref: format!("s{index}.png"),
                screen: ScreenSize::new(1080, 2400).unwrap(),
            },
            action,
            low_level_instruction: instr.map(str::to_string),
        }
    }

    fn click(x: u32, y: u32) -> Action {
        Action::Click(NormPoint::from_milli(x, y).unwrap())
    }

    fn traj(tag: &str, actions: Vec<Action>) -> Trajectory {
        Trajectory {
            task: "do the thing".into(),
            steps: actions.into_iter().enumerate().map(|(i, a)| step(i as u32 + 1, a, None)).collect(),
            source_tag: tag.into(),
        }
    }

    fn tpl() -> InstructionTemplates {
        InstructionTemplates::default()
    }

    fn len_n(tag: &str, n: usize) -> Trajectory {
        let mut actions: Vec<Action> = (0..n - 1).map(|i| click(i as u32 * 10, 5)).collect();
        actions.push(Action::Terminate(TerminateStatus::Success));
        traj(tag, actions)
    }

    #[test]
    fn history_examples() {
        for mode in [HistoryMode::Action, HistoryMode::Instruction] {
            assert_eq!(render_history(&[], mode, &tpl()), "None.");
        }
        let steps = [step(1, click(200, 200), None)];
        assert_eq!(render_history(&steps, HistoryMode::Action, &tpl()), "1. click(x=0.200, y=0.200)");

        let quoted = "Click on the question how to cancel or change my reservation?";
        let steps = [step(1, click(200, 200), Some(quoted))];
        assert_eq!(render_history(&steps, HistoryMode::Instruction, &tpl()), format!("1. {quoted}"));
    }

    #[test]
    fn instruction_fallback_uses_templates() {
        let steps = [
            step(1, click(200, 350), None),
            step(2, Action::Type("hi".into()), None),
            step(3, Action::Scroll(crate::model::ScrollDirection::Down), None),
        ];
        assert_eq!(
            render_history(&steps, HistoryMode::Instruction, &tpl()),
            "1. Click at (0.200, 0.350) on the screen.\n2. Type \"hi\" into the focused field.\n3. Scroll down."
        );
        let ext = Action::Extension(crate::model::ExtensionAction {
            name: "shake".into(),
            point: None,
            args: vec![],
        });
        assert_eq!(tpl().render(&ext), "Perform shake().");
    }

    #[test]
    fn forward_samples() {
        let t = traj("a", vec![click(1, 1), click(2, 2), Action::Terminate(TerminateStatus::Success)]);
        let s1 = make_forward_sample(&t, 1, HistoryMode::Action, &tpl()).unwrap();
        assert_eq!(s1.history_text, "None.");
        assert_eq!(s1.target_forward, click(1, 1));
        assert_eq!(s1.target_back, None);
        assert_eq!(s1.rendered_target, "Next action: click(x=0.001, y=0.001)");

        let s3 = make_forward_sample(&t, 3, HistoryMode::Action, &tpl()).unwrap();
        assert_eq!(s3.history_text, "1. click(x=0.001, y=0.001)\n2. click(x=0.002, y=0.002)");
        assert_eq!(s3.target_forward, Action::Terminate(TerminateStatus::Success));
        assert_eq!(s3.history_screenshot_refs, ["s1.png", "s2.png"]);
        assert_eq!(s3.current_screenshot_ref, "s3.png");

        assert!(make_forward_sample(&t, 0, HistoryMode::Action, &tpl()).is_err());
        assert!(make_forward_sample(&t, 4, HistoryMode::Action, &tpl()).is_err());
        let all: Vec<_> = (1..=3).map(|n| make_forward_sample(&t, n, HistoryMode::Action, &tpl())).collect();
        assert_eq!(all.iter().filter(|s| s.is_ok()).count(), 3);
    }

    #[test]
    fn hybrid_samples() {
        let t = traj("a", vec![click(200, 200), Action::Type("hi".into())]);
        let s1 = make_hybrid_sample(&t, 1, HistoryMode::Action, &tpl()).unwrap();
        assert_eq!(s1, make_forward_sample(&t, 1, HistoryMode::Action, &tpl()).unwrap());
        let s2 = make_hybrid_sample(&t, 2, HistoryMode::Action, &tpl()).unwrap();
        assert_eq!(
            s2.rendered_target,
            "Previous action: click(x=0.200, y=0.200)\nNext action: type(text=\"hi\")"
        );
        assert_eq!(s2.rendered_target, s2.expected_rendered_target());
        let fwd = make_forward_sample(&t, 2, HistoryMode::Action, &tpl()).unwrap();
        assert!(s2.rendered_target.ends_with(&fwd.rendered_target));

        let t4 = len_n("a", 4);
        let samples: Vec<_> = (1..=4).map(|n| make_hybrid_sample(&t4, n, HistoryMode::Action, &tpl()).unwrap()).collect();
        assert_eq!(samples.iter().filter(|s| s.target_back.is_some()).count(), 3);
    }

    #[test]
    fn corpus_counts_and_ids() {
        let corpus = [len_n("src", 3), len_n("src", 5)];
        let fwd = transform_corpus(&corpus, TransformConfig { mode: HistoryMode::Action, hybrid: false }, &tpl());
        assert_eq!(fwd.samples.len(), 8);
        assert!(fwd.samples.iter().all(|s| s.target_back.is_none()));
        assert_eq!(fwd.samples[0].sample_id, "src/0/1");
        assert_eq!(fwd.samples[7].sample_id, "src/1/5");

        let hyb = transform_corpus(&corpus, TransformConfig { mode: HistoryMode::Action, hybrid: true }, &tpl());
        assert_eq!(hyb.samples.len(), 8);
        assert_eq!(hyb.samples.iter().filter(|s| s.target_back.is_some()).count(), 6);

        let ins = transform_corpus(&corpus, TransformConfig { mode: HistoryMode::Instruction, hybrid: true }, &tpl());
        assert_eq!(ins.samples.len(), hyb.samples.len());
        for (a, b) in ins.samples.iter().zip(&hyb.samples) {
            assert_eq!(a.target_forward, b.target_forward);
            assert_eq!(a.target_back, b.target_back);
            assert_eq!(a.rendered_target, b.rendered_target);
            assert_eq!(a.sample_id, b.sample_id);
        }
        assert_ne!(ins.samples[1].history_text, hyb.samples[1].history_text);
    }

    #[test]
    fn corpus_orders_by_tag_and_skips_invalid() {
        let mut bad = len_n("b", 3);
        bad.steps[0].action = Action::Terminate(TerminateStatus::Failure);
        let corpus = [len_n("z", 1), bad, len_n("b", 2), len_n("z", 1)];
        let out = transform_corpus(&corpus, TransformConfig::default(), &tpl());
        let ids: Vec<_> = out.samples.iter().map(|s| s.sample_id.as_str()).collect();
        assert_eq!(ids, ["b/1/1", "b/1/2", "z/0/1", "z/1/1"]);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!((out.skipped[0].source_tag.as_str(), out.skipped[0].ordinal), ("b", 0));
    }
}
