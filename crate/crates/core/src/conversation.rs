//! Packing of grounding records into multi-turn conversations, one
//! screenshot per conversation, so an image is loaded once for many
//! description/answer pairs.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::serialize_action;
use crate::model::{Action, GroundingRecord, NormPoint, ScreenSize};

pub const DEFAULT_MAX_TURNS: usize = 20;

const PLACEHOLDER: &str = "{element_desc}";
const DEFAULT_TEMPLATE: &str = include_str!("../assets/grounding_prompt.v1.txt");

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template must contain the `{PLACEHOLDER}` placeholder on a single line")]
    Malformed,
}

/// Single-line grounding instruction with an `{element_desc}` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("bundled template is well-formed")
    }
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let text = text.trim_end_matches(['\n', '\r']);
        if !text.contains(PLACEHOLDER) || text.contains('\n') {
            return Err(TemplateError::Malformed);
        }
        Ok(Self { text: text.to_string() })
    }

    pub fn from_file(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn render(&self, element_desc: &str) -> String {
        self.text.replace(PLACEHOLDER, element_desc)
    }
}

pub fn render_grounding_prompt(r: &GroundingRecord, template: &PromptTemplate) -> String {
    template.render(&r.element_desc)
}

/// The answer side of a grounding turn: a click on the target point.
pub fn render_grounding_answer(p: NormPoint) -> String {
    serialize_action(&Action::Click(p))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub prompt: String,
    pub answer_point: NormPoint,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub screenshot_ref: String,
    pub screen: ScreenSize,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRejection {
    pub screenshot_ref: String,
    pub records: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackResult {
    /// Ordered by screenshot_ref, then by chunk.
    pub conversations: Vec<Conversation>,
    pub rejected: Vec<GroupRejection>,
}

impl PackResult {
    pub fn total_turns(&self) -> usize {
        self.conversations.iter().map(|c| c.turns.len()).sum()
    }
}

/// Groups records by screenshot and splits each group into chunks of at
/// most `max_turns`, turns sorted by element description.
///
/// # Panics
/// If `max_turns` is zero.
pub fn build_conversations<'a>(
    records: impl IntoIterator<Item = &'a GroundingRecord>,
    max_turns: usize,
    template: &PromptTemplate,
) -> PackResult {
    assert!(max_turns >= 1, "max_turns must be at least 1");
    let mut groups: BTreeMap<&str, Vec<&GroundingRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.screenshot_ref.as_str()).or_default().push(r);
    }

    let packed: Vec<Result<Vec<Conversation>, GroupRejection>> = groups
        .into_par_iter()
        .map(|(shot, mut group)| {
            let screen = group[0].screen;
            if let Some(other) = group.iter().find(|r| r.screen != screen) {
                return Err(GroupRejection {
                    screenshot_ref: shot.to_string(),
                    records: group.len(),
                    reason: format!("conflicting screen sizes {screen} and {}", other.screen),
                });
            }
            // Full-record tie-break keeps the order independent of input order.
            group.sort_by(|a, b| a.element_desc.cmp(&b.element_desc).then_with(|| a.cmp(b)));
            Ok(group
                .chunks(max_turns)
                .map(|chunk| Conversation {
                    screenshot_ref: shot.to_string(),
                    screen,
                    turns: chunk
                        .iter()
                        .map(|r| Turn {
                            prompt: render_grounding_prompt(r, template),
                            answer_point: r.target_point,
                            answer: render_grounding_answer(r.target_point),
                        })
                        .collect(),
                })
                .collect())
        })
        .collect();

    let mut out = PackResult::default();
    for p in packed {
        match p {
            Ok(mut convs) => out.conversations.append(&mut convs),
            Err(r) => out.rejected.push(r),
        }
    }
    out
}
