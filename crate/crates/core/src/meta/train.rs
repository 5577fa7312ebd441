use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{TrainConfig, TrainMode};
use super::sampling::{sample_task_indices, update_probabilities};
use super::task_set::TaskSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{apply_transform, PointCloud};
use crate::nn::{cross_entropy, forward, init_params, loss_and_grad, sgd_step, AdamState, Gradients, ModelParams};
use crate::rng::{Purpose, SeedStreams};

/// Result of one meta-training step.
#[derive(Debug, Clone)]
pub struct MetaStep {
    /// First-order gradient of the summed post-adaptation losses.
    pub gradient: Gradients,
    /// Sum of the per-task post-adaptation losses.
    pub loss: f64,
    /// Sampled task indices, in sampling order.
    pub tasks: Vec<usize>,
    /// Post-adaptation loss of every sampled task.
    pub task_losses: Vec<f64>,
}

/// Per-task mean loss and accuracy on the validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub losses: Vec<f64>,
    pub accuracies: Vec<f64>,
}

/// One row of training history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub val_losses: Vec<f64>,
    pub val_accuracies: Vec<f64>,
    /// Task probabilities after this epoch's update.
    pub probabilities: Vec<f64>,
    /// Training loss of every step in the epoch.
    pub step_losses: Vec<f64>,
}

impl EpochRecord {
    pub fn train_loss(&self) -> f64 {
        if self.step_losses.is_empty() {
            return 0.0;
        }
        self.step_losses.iter().sum::<f64>() / self.step_losses.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub adam: AdamState,
    /// The task set with its final probabilities.
    pub task_set: TaskSet,
    pub history: Vec<EpochRecord>,
    /// Whether every validation loss fell below the bound before the cap.
    pub converged: bool,
    /// Wall-clock seconds of each epoch's training phase. Not part of the
    /// deterministic history.
    pub epoch_seconds: Vec<f64>,
    /// Parameters after every outer update, when requested.
    pub trajectory: Vec<ModelParams>,
}

/// Adapts to every task batch with one gradient step and returns the
/// first-order outer gradient: the sum over tasks of the gradient at the
/// adapted parameters, together with each adapted loss.
pub fn meta_gradient(
    params: &ModelParams,
    task_batches: &[Vec<PointCloud>],
    inner_lr: f64,
) -> Result<(Gradients, Vec<f64>)> {
    let mut total = Gradients::zeros(params.architecture());
    let mut losses = Vec::with_capacity(task_batches.len());
    for batch in task_batches {
        let (_, inner) = loss_and_grad(params, batch)?;
        let adapted = sgd_step(params, &inner, inner_lr)?;
        let (loss, outer) = loss_and_grad(&adapted, batch)?;
        total.accumulate(&outer)?;
        losses.push(loss);
    }
    Ok((total, losses))
}

fn transform_batch<R: Rng + ?Sized>(
    task_set: &TaskSet,
    task: usize,
    batch: &[PointCloud],
    rng: &mut R,
) -> Result<Vec<PointCloud>> {
    let spec = &task_set.transforms()[task];
    batch.iter().map(|c| apply_transform(spec, c, rng)).collect()
}

/// One meta-training step on a source minibatch: sample `k` tasks from the
/// task set's probabilities, transform the same batch once per task (fresh
/// dynamic parameters per cloud), and compute the first-order meta gradient.
pub fn meta_train_step<R: Rng + ?Sized>(
    params: &ModelParams,
    task_set: &TaskSet,
    batch: &[PointCloud],
    k: usize,
    inner_lr: f64,
    rng: &mut R,
) -> Result<MetaStep> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty minibatch".into()));
    }
    let tasks = sample_task_indices(task_set.probabilities(), k, rng)?;
    let batches = tasks
        .iter()
        .map(|&t| transform_batch(task_set, t, batch, rng))
        .collect::<Result<Vec<_>>>()?;
    let (gradient, task_losses) = meta_gradient(params, &batches, inner_lr)?;
    Ok(MetaStep {
        gradient,
        loss: task_losses.iter().sum(),
        tasks,
        task_losses,
    })
}

fn score(params: &ModelParams, clouds: &[PointCloud]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for cloud in clouds {
        let logits = forward(params, cloud)?;
        loss += cross_entropy(&logits, cloud.label);
        if crate::nn::network_argmax(&logits) == cloud.label {
            correct += 1;
        }
    }
    let n = clouds.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Mean loss and accuracy of every task (not only sampled ones) over the
/// whole validation set; each cloud gets fresh dynamic parameters.
pub fn meta_validate<R: Rng + ?Sized>(
    params: &ModelParams,
    task_set: &TaskSet,
    val: &[PointCloud],
    rng: &mut R,
) -> Result<Validation> {
    if val.is_empty() {
        return Err(Error::InvalidInput("empty validation set".into()));
    }
    let mut out = Validation {
        losses: Vec::with_capacity(task_set.len()),
        accuracies: Vec::with_capacity(task_set.len()),
    };
    for task in 0..task_set.len() {
        let transformed = transform_batch(task_set, task, val, rng)?;
        let (loss, acc) = score(params, &transformed)?;
        out.losses.push(loss);
        out.accuracies.push(acc);
    }
    Ok(out)
}

fn validate_cached(params: &ModelParams, cache: &[Vec<PointCloud>]) -> Result<Validation> {
    let mut out = Validation {
        losses: Vec::new(),
        accuracies: Vec::new(),
    };
    for clouds in cache {
        let (loss, acc) = score(params, clouds)?;
        out.losses.push(loss);
        out.accuracies.push(acc);
    }
    Ok(out)
}

/// Full meta-training with soft-sampling.
pub fn train_metasets(config: &TrainConfig, train: &Dataset, val: &Dataset, task_set: &TaskSet) -> Result<TrainOutcome> {
    train_with_mode(config, train, val, task_set, TrainMode::Metasets, false)
}

/// One of the ablation baselines (or the full method, for `Metasets`).
pub fn train_baseline(
    config: &TrainConfig,
    train: &Dataset,
    val: &Dataset,
    task_set: &TaskSet,
    mode: TrainMode,
) -> Result<TrainOutcome> {
    train_with_mode(config, train, val, task_set, mode, false)
}

/// Shared training loop. With `record_trajectory`, the parameters after
/// every outer update are kept in [`TrainOutcome::trajectory`].
///
/// Randomness is forked from `config.seed` per purpose: initialization,
/// minibatch order, task sampling, training transforms, validation
/// transforms and static pre-transformation each own a stream, so two modes
/// that do not use a stream see identical draws from the others. Training
/// transforms are further keyed by (step, task slot) and validation
/// transforms by epoch, so runs that differ only in sampling probabilities
/// transform a batch identically whenever they pick the same task.
pub fn train_with_mode(
    config: &TrainConfig,
    train: &Dataset,
    val: &Dataset,
    task_set: &TaskSet,
    mode: TrainMode,
    record_trajectory: bool,
) -> Result<TrainOutcome> {
    config.validate()?;
    train.validate()?;
    val.validate()?;
    if train.classes() != val.classes() {
        return Err(Error::InvalidInput(format!(
            "train has {} classes but validation has {}",
            train.classes(),
            val.classes()
        )));
    }
    if mode.is_meta() && config.tasks_per_step > task_set.len() {
        return Err(Error::InvalidInput(format!(
            "cannot sample K = {} of N = {} tasks",
            config.tasks_per_step,
            task_set.len()
        )));
    }

    let streams = SeedStreams::new(config.seed);
    let mut init_rng = streams.fork(Purpose::Init);
    let mut order_rng = streams.fork(Purpose::BatchOrder);
    let mut task_rng = streams.fork(Purpose::TaskSampling);

    let arch = config.architecture(train.classes());
    let mut params = init_params(&arch, &mut init_rng)?;
    let mut adam = AdamState::new(&arch);
    let mut tasks = task_set.clone();
    tasks.reset_uniform();

    let (train_cache, val_cache) = if mode == TrainMode::StaticTransform {
        let mut static_rng = streams.fork(Purpose::StaticTransforms);
        let mut build = |clouds: &[PointCloud]| -> Result<Vec<Vec<PointCloud>>> {
            (0..tasks.len())
                .map(|t| transform_batch(&tasks, t, clouds, &mut static_rng))
                .collect()
        };
        (build(&train.items)?, build(&val.items)?)
    } else {
        (Vec::new(), Vec::new())
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut epoch_seconds = Vec::new();
    let mut trajectory = Vec::new();
    let mut converged = false;
    let mut step = 0u64;
    let slots = config.tasks_per_step as u64;

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut order_rng);
        let mut step_losses = Vec::new();
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<PointCloud> = chunk.iter().map(|&i| train.items[i].clone()).collect();
            let slot_rng = |slot: usize| streams.substream(Purpose::TrainTransforms, step * slots + slot as u64);
            let (loss, gradient) = match mode {
                TrainMode::None => loss_and_grad(&params, &batch)?,
                TrainMode::Augment => {
                    let task = task_rng.random_range(0..tasks.len());
                    let transformed = transform_batch(&tasks, task, &batch, &mut slot_rng(0))?;
                    loss_and_grad(&params, &transformed)?
                }
                TrainMode::Metasets | TrainMode::NoSoftSampling => {
                    let sampled = sample_task_indices(tasks.probabilities(), config.tasks_per_step, &mut task_rng)?;
                    let batches = sampled
                        .iter()
                        .enumerate()
                        .map(|(slot, &t)| transform_batch(&tasks, t, &batch, &mut slot_rng(slot)))
                        .collect::<Result<Vec<_>>>()?;
                    let (g, losses) = meta_gradient(&params, &batches, config.inner_lr)?;
                    (losses.iter().sum(), g)
                }
                TrainMode::StaticTransform => {
                    let sampled = sample_task_indices(tasks.probabilities(), config.tasks_per_step, &mut task_rng)?;
                    let batches: Vec<Vec<PointCloud>> = sampled
                        .iter()
                        .map(|&t| chunk.iter().map(|&i| train_cache[t][i].clone()).collect())
                        .collect();
                    let (g, losses) = meta_gradient(&params, &batches, config.inner_lr)?;
                    (losses.iter().sum(), g)
                }
            };
            adam.update(&mut params, &gradient, config.outer_lr)?;
            if !params.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "parameters diverged in epoch {epoch}; lower the learning rates"
                )));
            }
            if record_trajectory {
                trajectory.push(params.clone());
            }
            step_losses.push(loss);
            step += 1;
        }
        epoch_seconds.push(started.elapsed().as_secs_f64());

        let validation = if mode == TrainMode::StaticTransform {
            validate_cached(&params, &val_cache)?
        } else {
            let mut val_rng = streams.substream(Purpose::ValidationTransforms, epoch as u64);
            meta_validate(&params, &tasks, &val.items, &mut val_rng)?
        };
        if mode.soft_sampling() {
            tasks.set_probabilities(update_probabilities(&validation.losses)?)?;
        }
        let record = EpochRecord {
            epoch,
            val_losses: validation.losses,
            val_accuracies: validation.accuracies,
            probabilities: tasks.probabilities().to_vec(),
            step_losses,
        };
        info!(
            "{mode} epoch {epoch}: train loss {:.4}, mean val loss {:.4}",
            record.train_loss(),
            record.val_losses.iter().sum::<f64>() / record.val_losses.len() as f64
        );
        let done = record.val_losses.iter().all(|&l| l < config.epsilon);
        history.push(record);
        if done {
            converged = true;
            break;
        }
    }

    Ok(TrainOutcome {
        params,
        adam,
        task_set: tasks,
        history,
        converged,
        epoch_seconds,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_dataset, split_train_val, ShapeFamily};
    use crate::geometry::TransformSpec;
    use crate::nn::{init_params_seeded, loss_batch, Architecture};
    use crate::rng::seeded;

    fn tiny_data() -> (Dataset, Dataset) {
        let ds = generate_synthetic_dataset(&ShapeFamily::first(3).unwrap(), 12, 64, 1).unwrap();
        split_train_val(&ds, 2).unwrap()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            tasks_per_step: 2,
            inner_lr: 0.01,
            outer_lr: 0.01,
            max_epochs: 2,
            point_widths: vec![8, 16],
            head_widths: vec![8],
            ..Default::default()
        }
    }

    fn tasks() -> TaskSet {
        TaskSet::new(vec![
            TransformSpec::density(1.4).unwrap(),
            TransformSpec::dropping(30.0).unwrap(),
            TransformSpec::occlusion(0.1).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn zero_inner_rate_reduces_to_summed_plain_gradients() {
        let (train, _) = tiny_data();
        let params = init_params_seeded(&Architecture::compact(3), 3).unwrap();
        let batch = &train.items[..6];
        let ts = tasks();
        let step = meta_train_step(&params, &ts, batch, 3, 0.0, &mut seeded(4)).unwrap();
        // Replay the same draws by hand.
        let mut rng = seeded(4);
        let sampled = sample_task_indices(ts.probabilities(), 3, &mut rng).unwrap();
        assert_eq!(sampled, step.tasks);
        let mut expected = Gradients::zeros(params.architecture());
        let mut loss = 0.0;
        for &t in &sampled {
            let b = transform_batch(&ts, t, batch, &mut rng).unwrap();
            let (l, g) = loss_and_grad(&params, &b).unwrap();
            expected.accumulate(&g).unwrap();
            loss += l;
        }
        assert_eq!(step.gradient, expected);
        assert!((step.loss - loss).abs() < 1e-12);
    }

    #[test]
    fn single_identity_task_is_one_first_order_step() {
        let (train, _) = tiny_data();
        let params = init_params_seeded(&Architecture::compact(3), 5).unwrap();
        let batch = &train.items[..5];
        let ts = TaskSet::new(vec![TransformSpec::Identity]).unwrap();
        let eta = 0.05;
        let step = meta_train_step(&params, &ts, batch, 1, eta, &mut seeded(0)).unwrap();
        let (_, g) = loss_and_grad(&params, batch).unwrap();
        let adapted = sgd_step(&params, &g, eta).unwrap();
        let (l, g_adapted) = loss_and_grad(&adapted, batch).unwrap();
        assert_eq!(step.gradient, g_adapted);
        assert_eq!(step.loss, l);
    }

    #[test]
    fn meta_loss_is_sum_of_adapted_task_losses() {
        let (train, _) = tiny_data();
        let params = init_params_seeded(&Architecture::compact(3), 6).unwrap();
        let batch = &train.items[..7];
        let ts = tasks();
        let eta = 0.1;
        let step = meta_train_step(&params, &ts, batch, 3, eta, &mut seeded(8)).unwrap();
        assert!(step.loss >= 0.0);
        // Independent recomputation from the replayed transforms.
        let mut rng = seeded(8);
        let sampled = sample_task_indices(ts.probabilities(), 3, &mut rng).unwrap();
        let mut total = 0.0;
        for &t in &sampled {
            let b = transform_batch(&ts, t, batch, &mut rng).unwrap();
            let (_, g) = loss_and_grad(&params, &b).unwrap();
            let adapted = sgd_step(&params, &g, eta).unwrap();
            total += loss_batch(&adapted, &b).unwrap();
        }
        assert!((step.loss - total).abs() < 1e-12);
        assert!((step.task_losses.iter().sum::<f64>() - step.loss).abs() < 1e-12);
    }

    #[test]
    fn uniform_model_validates_at_log_c() {
        let (_, val) = tiny_data();
        let params = ModelParams::zeros(&Architecture::compact(3)).unwrap();
        let v = meta_validate(&params, &tasks(), &val.items, &mut seeded(0)).unwrap();
        assert_eq!(v.losses.len(), 3);
        for l in v.losses {
            assert!((l - 3f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_is_order_independent_for_identity_tasks() {
        let (_, val) = tiny_data();
        let params = init_params_seeded(&Architecture::compact(3), 1).unwrap();
        let ts = TaskSet::new(vec![TransformSpec::Identity; 2]).unwrap();
        let a = meta_validate(&params, &ts, &val.items, &mut seeded(0)).unwrap();
        let mut rev = val.items.clone();
        rev.reverse();
        let b = meta_validate(&params, &ts, &rev, &mut seeded(1)).unwrap();
        for (x, y) in a.losses.iter().zip(&b.losses) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(a.accuracies, b.accuracies);
    }

    #[test]
    fn infinite_bound_stops_after_one_epoch() {
        let (train, val) = tiny_data();
        let cfg = TrainConfig { epsilon: f64::INFINITY, max_epochs: 5, ..tiny_config() };
        let out = train_metasets(&cfg, &train, &val, &tasks()).unwrap();
        assert_eq!(out.history.len(), 1);
        assert!(out.converged);
    }

    #[test]
    fn epoch_cap_ends_unconverged_with_full_records() {
        let (train, val) = tiny_data();
        let out = train_metasets(&tiny_config(), &train, &val, &tasks()).unwrap();
        assert!(!out.converged);
        assert_eq!(out.history.len(), 2);
        for rec in &out.history {
            assert_eq!(rec.val_losses.len(), 3);
            assert_eq!(rec.val_accuracies.len(), 3);
            assert!(rec.val_losses.iter().all(|&l| l >= 0.0));
            assert!((rec.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(rec.probabilities.iter().all(|&p| p > 0.0));
            // softmax keeps the loss ordering
            for i in 0..3 {
                for j in 0..3 {
                    if rec.val_losses[i] > rec.val_losses[j] {
                        assert!(rec.probabilities[i] > rec.probabilities[j]);
                    }
                }
            }
        }
        assert_eq!(out.history[0].step_losses.len(), train.len().div_ceil(8));
    }

    #[test]
    fn every_mode_is_deterministic() {
        let (train, val) = tiny_data();
        for mode in TrainMode::ALL {
            let a = train_baseline(&tiny_config(), &train, &val, &tasks(), mode).unwrap();
            let b = train_baseline(&tiny_config(), &train, &val, &tasks(), mode).unwrap();
            assert_eq!(a.params, b.params, "{mode}");
            assert_eq!(a.history, b.history, "{mode}");
        }
    }

    #[test]
    fn frozen_sampling_keeps_uniform_probabilities() {
        let (train, val) = tiny_data();
        let out = train_baseline(&tiny_config(), &train, &val, &tasks(), TrainMode::NoSoftSampling).unwrap();
        for rec in &out.history {
            assert!(rec.probabilities.iter().all(|&p| p == 1.0 / 3.0));
        }
    }

    #[test]
    fn too_many_tasks_per_step_is_rejected() {
        let (train, val) = tiny_data();
        let cfg = TrainConfig { tasks_per_step: 4, ..tiny_config() };
        assert!(train_metasets(&cfg, &train, &val, &tasks()).is_err());
    }
}
