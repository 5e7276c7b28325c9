//! Seeded workloads shared by the benchmarks.

use guipipe_core::eval::{GoldStep, PredictionRecord};
use guipipe_core::model::{Action, GroundingRecord, Trajectory};
use guipipe_core::planning::{transform_corpus, InstructionTemplates, TransformConfig};
use guipipe_core::synth::{noisy_predictions, Synth};
use guipipe_core::{serialize_action, ActionRegistry};

pub fn actions(n: usize) -> Vec<Action> {
    let mut s = Synth::new(1);
    (0..n).map(|_| s.action()).collect()
}

pub fn action_strings(n: usize) -> Vec<String> {
    actions(n).iter().map(serialize_action).collect()
}

pub fn grounding(n: usize, shots: usize) -> Vec<GroundingRecord> {
    Synth::new(2).grounding("bench", n, shots)
}

pub fn trajectories(n: usize, max_len: u32) -> Vec<Trajectory> {
    Synth::new(3).trajectories("bench", n, max_len)
}

/// Gold steps and noisy predictions over `n` trajectories.
pub fn eval_set(n: usize) -> (Vec<GoldStep>, Vec<PredictionRecord>) {
    let samples = transform_corpus(&trajectories(n, 12), TransformConfig::default(), &InstructionTemplates::default()).samples;
    let gold = samples.iter().map(GoldStep::from_sample).collect();
    let registry = ActionRegistry::builtin();
    let preds = noisy_predictions(&samples, 4)
        .into_iter()
        .map(|l| PredictionRecord::from_raw(l.sample_id, l.raw_text, false, &registry))
        .collect();
    (gold, preds)
}
