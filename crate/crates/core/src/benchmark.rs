//! A synthetic domain-generalization benchmark small enough for one CPU.
//!
//! Each seed gets its own source dataset, 5:1 train/validation split, a
//! clean test set drawn from the source distribution, and a target domain
//! built from fresh clouds by a composite held-out transform (occlusion then
//! dropping). Training modes are compared by their accuracy on that target.

use rand::{Rng, RngCore};

use crate::data::{build_target_domain, generate_synthetic_dataset, split_train_val, Dataset, ShapeFamily, Split};
use crate::error::Result;
use crate::geometry::{transform_dropping, TransformSpec};
use crate::meta::{
    build_task_set, evaluate, train_with_mode, TaskParamMode, TaskSet, TrainConfig, TrainMode, TrainOutcome,
    ValueRanges,
};
use crate::nn::ModelParams;
use crate::rng::seeded;

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub classes: usize,
    pub per_class: usize,
    /// Instances per class in the clean test set and in the target domain.
    pub test_per_class: usize,
    pub points: usize,
    /// Applied in order to build the target domain.
    pub held_out: Vec<TransformSpec>,
    pub train: TrainConfig,
}

impl Benchmark {
    /// The configuration used by the examples and the acceptance suite:
    /// five classes, 128-point clouds, a compact network and stratified
    /// task parameters scaled to the sparser clouds.
    pub fn desk() -> Self {
        Self {
            classes: 5,
            per_class: 100,
            test_per_class: 300,
            points: 128,
            held_out: vec![
                TransformSpec::Occlusion { grid: 0.25 },
                TransformSpec::Dropping { percent: 40.0 },
            ],
            train: TrainConfig {
                batch_size: 16,
                tasks_per_step: 4,
                inner_lr: 0.0003,
                outer_lr: 0.003,
                max_epochs: 25,
                task_params: TaskParamMode::Stratified,
                ranges: ValueRanges {
                    density: Some((1.2, 1.8)),
                    dropping: Some((20.0, 60.0)),
                    occlusion: Some((0.05, 0.3)),
                },
                point_widths: vec![32, 64, 128],
                head_widths: vec![64],
                ..TrainConfig::default()
            },
        }
    }
}

/// Everything one seed of the benchmark trains and evaluates on.
#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub train: Dataset,
    pub val: Dataset,
    pub clean: Dataset,
    pub target: Dataset,
    pub task_set: TaskSet,
}

#[derive(Debug, Clone)]
pub struct ModeResult {
    pub mode: TrainMode,
    pub seed: u64,
    pub clean_accuracy: f64,
    pub target_accuracy: f64,
    pub mean_epoch_seconds: f64,
    pub outcome: TrainOutcome,
}

impl Benchmark {
    pub fn prepare(&self, seed: u64) -> Result<BenchmarkData> {
        let mut rng = seeded(seed);
        let (source_seed, split_seed, test_seed, target_seed) =
            (rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64());
        let families = ShapeFamily::first(self.classes)?;
        let source = generate_synthetic_dataset(&families, self.per_class, self.points, source_seed)?;
        let (train, val) = split_train_val(&source, split_seed)?;
        let task_set = build_task_set(&self.train.ranges, self.train.task_params, seed)?;
        let mut clean = generate_synthetic_dataset(&families, self.test_per_class, self.points, test_seed)?;
        let target = build_target_domain(&clean, &self.held_out, task_set.transforms(), target_seed)?;
        clean.split = Split::Target;
        Ok(BenchmarkData {
            train,
            val,
            clean,
            target,
            task_set,
        })
    }

    pub fn run(&self, data: &BenchmarkData, mode: TrainMode, seed: u64) -> Result<ModeResult> {
        let config = TrainConfig {
            mode,
            seed,
            ..self.train.clone()
        };
        let outcome = train_with_mode(&config, &data.train, &data.val, &data.task_set, mode, false)?;
        let clean_accuracy = evaluate(&outcome.params, &data.clean)?.accuracy;
        let target_accuracy = evaluate(&outcome.params, &data.target)?.accuracy;
        let mean_epoch_seconds =
            outcome.epoch_seconds.iter().sum::<f64>() / outcome.epoch_seconds.len().max(1) as f64;
        Ok(ModeResult {
            mode,
            seed,
            clean_accuracy,
            target_accuracy,
            mean_epoch_seconds,
            outcome,
        })
    }
}

/// Accuracy of `params` on dropping-transformed copies of `dataset`, one
/// entry per percentage. Each cloud keeps a single random anchor across all
/// percentages, so the removed sets are nested as the percentage grows.
pub fn dropping_sweep(params: &ModelParams, dataset: &Dataset, percents: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut rng = seeded(seed);
    let anchors: Vec<usize> = dataset.items.iter().map(|c| rng.random_range(0..c.len())).collect();
    percents
        .iter()
        .map(|&x| {
            let items = dataset
                .items
                .iter()
                .zip(&anchors)
                .map(|(cloud, &anchor)| transform_dropping(cloud, anchor, x))
                .collect::<Result<Vec<_>>>()?;
            let dropped = Dataset::new(items, dataset.class_names.clone(), Split::Target)?;
            Ok(evaluate(params, &dropped)?.accuracy)
        })
        .collect()
}
