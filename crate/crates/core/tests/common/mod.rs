#![allow(dead_code)]

pub mod stub;

use guipipe_core::model::{Action, ScreenSize};
use guipipe_core::planning::{HistoryMode, PlanningSample};
use guipipe_core::serialize_action;

/// Minimal planning samples with ids `s000`, `s001`, ...
pub fn samples(n: usize) -> Vec<PlanningSample> {
    (0..n)
        .map(|i| PlanningSample {
            sample_id: format!("s{i:03}"),
            task: "task".into(),
            history_text: "None.".into(),
            current_screenshot_ref: format!("shot{i}.png"),
            screen: ScreenSize::new(100, 100).unwrap(),
            step_index: 1,
            target_forward: Action::Wait,
            target_back: None,
            history_mode: HistoryMode::Action,
            rendered_target: format!("Next action: {}", serialize_action(&Action::Wait)),
            history_screenshot_refs: Vec::new(),
        })
        .collect()
}
