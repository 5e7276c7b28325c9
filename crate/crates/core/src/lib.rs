//! Data pipeline and evaluation toolkit for GUI agents.
//!
//! Heterogeneous grounding and trajectory corpora are ingested into one
//! canonical JSONL format with resolution-independent coordinates, packed
//! into multi-turn grounding conversations, expanded into forward-planning
//! and back-tracking training samples, and scored with step-level metrics
//! (action type accuracy, grounding accuracy, step success rate).

pub mod client;
pub mod conversation;
pub mod eval;
pub mod geometry;
pub mod grammar;
pub mod ingest;
pub mod jsonl;
pub mod model;
pub mod pipeline;
pub mod planning;
pub mod stats;
pub mod synth;

pub use grammar::{parse_action, serialize_action, ActionRegistry, ErrorClass, ParseError};
pub use model::{
    validate_trajectory, Action, ActionKind, BBox, GroundingRecord, NormPoint, Observation, PixelPoint, ScreenSize,
    ScrollDirection, Step, SynthesisKind, TerminateStatus, Trajectory, Violation,
};
