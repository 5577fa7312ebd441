use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::task_set::{TaskParamMode, ValueRanges};
use crate::error::{Error, Result};
use crate::nn::Architecture;

/// Which training procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    /// Meta-training with soft-sampled tasks.
    Metasets,
    /// Plain supervised training on untransformed clouds.
    None,
    /// Each minibatch transformed by one uniformly chosen task; no inner
    /// adaptation.
    Augment,
    /// Meta-training with task probabilities frozen at 1/N.
    NoSoftSampling,
    /// Meta-training on transforms drawn once per cloud before training.
    StaticTransform,
}

impl TrainMode {
    pub const ALL: [TrainMode; 5] = [
        TrainMode::Metasets,
        TrainMode::None,
        TrainMode::Augment,
        TrainMode::NoSoftSampling,
        TrainMode::StaticTransform,
    ];

    pub fn is_meta(&self) -> bool {
        matches!(self, TrainMode::Metasets | TrainMode::NoSoftSampling | TrainMode::StaticTransform)
    }

    pub fn soft_sampling(&self) -> bool {
        matches!(self, TrainMode::Metasets | TrainMode::StaticTransform)
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::Metasets => "metasets",
            TrainMode::None => "none",
            TrainMode::Augment => "augment",
            TrainMode::NoSoftSampling => "no-soft-sampling",
            TrainMode::StaticTransform => "static-transform",
        })
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrainMode::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown training mode `{s}`")))
    }
}

/// Hyperparameters of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Source clouds per minibatch (B).
    pub batch_size: usize,
    /// Tasks sampled per meta-training step (K).
    pub tasks_per_step: usize,
    /// Inner adaptation step size (eta).
    pub inner_lr: f64,
    /// Outer Adam learning rate (beta).
    pub outer_lr: f64,
    /// Training stops once every validation loss is below this bound.
    pub epsilon: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub mode: TrainMode,
    pub task_params: TaskParamMode,
    pub ranges: ValueRanges,
    pub point_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let arch = Architecture::pointnet(2);
        Self {
            batch_size: 128,
            tasks_per_step: 4,
            inner_lr: 0.0003,
            outer_lr: 0.001,
            epsilon: 0.001,
            max_epochs: 30,
            seed: 0,
            mode: TrainMode::Metasets,
            task_params: TaskParamMode::Paper,
            ranges: ValueRanges::default(),
            point_widths: arch.point_widths,
            head_widths: arch.head_widths,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidInput(m));
        if self.batch_size == 0 {
            return fail("batch size must be at least 1".into());
        }
        if self.tasks_per_step == 0 {
            return fail("tasks per step must be at least 1".into());
        }
        if !(self.inner_lr >= 0.0 && self.inner_lr.is_finite()) {
            return fail(format!("inner learning rate must be >= 0, got {}", self.inner_lr));
        }
        if !(self.outer_lr > 0.0 && self.outer_lr.is_finite()) {
            return fail(format!("outer learning rate must be > 0, got {}", self.outer_lr));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return fail(format!("convergence bound must be > 0, got {}", self.epsilon));
        }
        if self.max_epochs == 0 {
            return fail("epoch cap must be at least 1".into());
        }
        self.ranges.validate()
    }

    pub fn architecture(&self, classes: usize) -> Architecture {
        Architecture {
            point_widths: self.point_widths.clone(),
            head_widths: self.head_widths.clone(),
            classes,
        }
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("bad width `{v}`")))
        .collect()
}

fn parse_range(value: &str) -> std::result::Result<Option<(f64, f64)>, String> {
    if value.trim() == "none" {
        return Ok(None);
    }
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("range must be `lo,hi` or `none`, got `{value}`"));
    }
    let lo = parts[0].parse().map_err(|_| format!("bad number `{}`", parts[0]))?;
    let hi = parts[1].parse().map_err(|_| format!("bad number `{}`", parts[1]))?;
    Ok(Some((lo, hi)))
}

/// Parses flat `key = value` text on top of the defaults. `#` starts a
/// comment. `origin` is used in error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| Error::parse(origin, no, format!("bad {what} `{value}`"));
        match key {
            "batch_size" | "B" => cfg.batch_size = value.parse().map_err(|_| bad("batch size"))?,
            "tasks_per_step" | "K" => cfg.tasks_per_step = value.parse().map_err(|_| bad("task count"))?,
            "eta" | "inner_lr" => cfg.inner_lr = value.parse().map_err(|_| bad("learning rate"))?,
            "beta" | "outer_lr" => cfg.outer_lr = value.parse().map_err(|_| bad("learning rate"))?,
            "epsilon" => cfg.epsilon = value.parse().map_err(|_| bad("bound"))?,
            "epochs" | "max_epochs" => cfg.max_epochs = value.parse().map_err(|_| bad("epoch count"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
            "mode" => cfg.mode = value.parse().map_err(|_| bad("mode"))?,
            "task_params" => cfg.task_params = value.parse().map_err(|_| bad("task-parameter mode"))?,
            "point_widths" => cfg.point_widths = parse_list(value).map_err(|m| Error::parse(origin, no, m))?,
            "head_widths" => cfg.head_widths = parse_list(value).map_err(|m| Error::parse(origin, no, m))?,
            "range_density" => cfg.ranges.density = parse_range(value).map_err(|m| Error::parse(origin, no, m))?,
            "range_dropping" => cfg.ranges.dropping = parse_range(value).map_err(|m| Error::parse(origin, no, m))?,
            "range_occlusion" => cfg.ranges.occlusion = parse_range(value).map_err(|m| Error::parse(origin, no, m))?,
            other => return Err(Error::parse(origin, no, format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}
