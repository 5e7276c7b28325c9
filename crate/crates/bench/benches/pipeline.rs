use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use guipipe_bench as w;
use guipipe_core::conversation::{build_conversations, PromptTemplate};
use guipipe_core::eval::{evaluate, EvalConfig};
use guipipe_core::geometry::{denormalize, normalize_point};
use guipipe_core::model::{PixelPoint, ScreenSize};
use guipipe_core::planning::{transform_corpus, HistoryMode, InstructionTemplates, TransformConfig};
use guipipe_core::stats::compute_stats;
use guipipe_core::{parse_action, serialize_action};

fn grammar(c: &mut Criterion) {
    let actions = w::actions(10_000);
    let strings = w::action_strings(10_000);
    let mut g = c.benchmark_group("grammar");
    g.throughput(Throughput::Elements(actions.len() as u64));
    g.bench_function("serialize", |b| {
        b.iter(|| actions.iter().map(|a| serialize_action(black_box(a)).len()).sum::<usize>())
    });
    g.bench_function("parse", |b| {
        b.iter(|| strings.iter().filter(|s| parse_action(black_box(s)).is_ok()).count())
    });
    g.finish();
}

fn geometry(c: &mut Criterion) {
    let screen = ScreenSize::new(1080, 2400).unwrap();
    let points: Vec<PixelPoint> = (0..10_000u32).map(|i| PixelPoint::new(i % 1080, (i * 7) % 2400)).collect();
    let mut g = c.benchmark_group("geometry");
    g.throughput(Throughput::Elements(points.len() as u64));
    g.bench_function("round_trip", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|&p| denormalize(normalize_point(black_box(p), screen).unwrap(), screen).x)
                .sum::<u32>()
        })
    });
    g.finish();
}

fn packing(c: &mut Criterion) {
    let template = PromptTemplate::default();
    let mut g = c.benchmark_group("pack");
    for (n, shots) in [(1_000, 100), (50_000, 5_000)] {
        let records = w::grounding(n, shots);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &records, |b, r| {
            b.iter(|| build_conversations(r, 20, &template).total_turns())
        });
    }
    g.finish();
}

fn transform(c: &mut Criterion) {
    let trajs = w::trajectories(1_000, 15);
    let templates = InstructionTemplates::default();
    let mut g = c.benchmark_group("transform");
    for mode in [HistoryMode::Action, HistoryMode::Instruction] {
        let cfg = TransformConfig { mode, hybrid: true };
        g.bench_function(mode.to_string(), |b| b.iter(|| transform_corpus(&trajs, cfg, &templates).samples.len()));
    }
    g.finish();
}

fn scoring(c: &mut Criterion) {
    let (gold, preds) = w::eval_set(500);
    let cfg = EvalConfig::default();
    let mut g = c.benchmark_group("evaluate");
    g.throughput(Throughput::Elements(gold.len() as u64));
    g.bench_function("noisy", |b| b.iter(|| evaluate(&gold, &preds, &cfg).unwrap().sr));
    g.finish();
}

fn stats(c: &mut Criterion) {
    let g = w::grounding(20_000, 2_000);
    let t = w::trajectories(2_000, 15);
    c.bench_function("stats", |b| b.iter(|| compute_stats(&g, &t).total.screenshots));
}

criterion_group!(benches, grammar, geometry, packing, transform, scoring, stats);
criterion_main!(benches);
