use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TransformSpec;
use crate::rng::seeded;

/// Gate values of the three density tasks in the fixed parameter set.
pub const FIXED_GATES: [f64; 3] = [1.3, 1.4, 1.6];
/// Drop ratios (percent) of the three dropping tasks.
pub const FIXED_PERCENTS: [f64; 3] = [24.0, 36.0, 45.0];
/// Grid sizes of the three occlusion tasks.
pub const FIXED_GRIDS: [f64; 3] = [0.035, 0.022, 0.017];

/// Where the static transform parameters come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskParamMode {
    /// The fixed nine values above.
    Paper,
    /// One uniform draw from each third of every valid range.
    Stratified,
}

impl fmt::Display for TaskParamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskParamMode::Paper => "paper",
            TaskParamMode::Stratified => "stratified",
        })
    }
}

impl std::str::FromStr for TaskParamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(TaskParamMode::Paper),
            "stratified" => Ok(TaskParamMode::Stratified),
            other => Err(Error::InvalidInput(format!("unknown task-parameter mode `{other}`"))),
        }
    }
}

/// Valid static-parameter ranges `(t1, t2)` per transform kind. A `None`
/// range leaves that kind out of stratified task sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRanges {
    pub density: Option<(f64, f64)>,
    pub dropping: Option<(f64, f64)>,
    pub occlusion: Option<(f64, f64)>,
}

impl Default for ValueRanges {
    fn default() -> Self {
        Self {
            density: Some((1.2, 1.8)),
            dropping: Some((20.0, 50.0)),
            occlusion: Some((0.015, 0.04)),
        }
    }
}

impl ValueRanges {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, r: Option<(f64, f64)>, ok: &dyn Fn(f64, f64) -> bool| match r {
            Some((lo, hi)) if !(lo < hi && ok(lo, hi)) => Err(Error::InvalidInput(format!(
                "invalid {name} range ({lo}, {hi})"
            ))),
            _ => Ok(()),
        };
        check("density", self.density, &|lo, _| lo >= 1.0)?;
        check("dropping", self.dropping, &|lo, hi| lo >= 0.0 && hi <= 100.0)?;
        check("occlusion", self.occlusion, &|lo, hi| lo >= 0.0 && hi.is_finite())?;
        if self.density.is_none() && self.dropping.is_none() && self.occlusion.is_none() {
            return Err(Error::InvalidInput("no transform kind has a range".into()));
        }
        Ok(())
    }
}

/// N transforms and their sampling probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    transforms: Vec<TransformSpec>,
    probabilities: Vec<f64>,
}

impl TaskSet {
    /// A task set with uniform probabilities.
    pub fn new(transforms: Vec<TransformSpec>) -> Result<Self> {
        if transforms.is_empty() {
            return Err(Error::InvalidInput("task set needs at least one transform".into()));
        }
        for t in &transforms {
            t.validate()?;
        }
        let n = transforms.len();
        Ok(Self {
            transforms,
            probabilities: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    pub fn transforms(&self) -> &[TransformSpec] {
        &self.transforms
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn set_probabilities(&mut self, p: Vec<f64>) -> Result<()> {
        if p.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} probabilities for {} tasks",
                p.len(),
                self.len()
            )));
        }
        super::sampling::check_distribution(&p)?;
        self.probabilities = p;
        Ok(())
    }

    pub fn reset_uniform(&mut self) {
        let n = self.len();
        self.probabilities = vec![1.0 / n as f64; n];
    }
}

fn stratified_draws<R: Rng + ?Sized>(range: (f64, f64), count: usize, rng: &mut R) -> Vec<f64> {
    let (lo, hi) = range;
    let width = (hi - lo) / count as f64;
    (0..count)
        .map(|i| {
            let a = lo + width * i as f64;
            let b = if i + 1 == count { hi } else { a + width };
            // Open interval: the endpoints themselves may be invalid values.
            loop {
                let v = rng.random_range(a..b);
                if v > a {
                    break v;
                }
            }
        })
        .collect()
}

/// Three tasks per transform kind, ordered density, dropping, occlusion.
pub fn build_task_set(ranges: &ValueRanges, mode: TaskParamMode, seed: u64) -> Result<TaskSet> {
    ranges.validate()?;
    let mut specs = Vec::new();
    match mode {
        TaskParamMode::Paper => {
            specs.extend(FIXED_GATES.iter().map(|&g| TransformSpec::Density { gate: g }));
            specs.extend(FIXED_PERCENTS.iter().map(|&x| TransformSpec::Dropping { percent: x }));
            specs.extend(FIXED_GRIDS.iter().map(|&w| TransformSpec::Occlusion { grid: w }));
        }
        TaskParamMode::Stratified => {
            let mut rng = seeded(seed);
            if let Some(r) = ranges.density {
                specs.extend(stratified_draws(r, 3, &mut rng).into_iter().map(|g| TransformSpec::Density { gate: g }));
            }
            if let Some(r) = ranges.dropping {
                specs.extend(stratified_draws(r, 3, &mut rng).into_iter().map(|x| TransformSpec::Dropping { percent: x }));
            }
            if let Some(r) = ranges.occlusion {
                specs.extend(stratified_draws(r, 3, &mut rng).into_iter().map(|w| TransformSpec::Occlusion { grid: w }));
            }
        }
    }
    TaskSet::new(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_mode_has_the_nine_values() {
        let ts = build_task_set(&ValueRanges::default(), TaskParamMode::Paper, 0).unwrap();
        let params: Vec<f64> = ts.transforms().iter().map(|t| t.param().unwrap()).collect();
        assert_eq!(params, vec![1.3, 1.4, 1.6, 24.0, 36.0, 45.0, 0.035, 0.022, 0.017]);
        assert!(ts.probabilities().iter().all(|&p| p == 1.0 / 9.0));
    }

    #[test]
    fn stratified_mode_draws_one_value_per_sub_range() {
        for seed in 0..50 {
            let ranges = ValueRanges {
                density: Some((1.2, 1.8)),
                ..Default::default()
            };
            let ts = build_task_set(&ranges, TaskParamMode::Stratified, seed).unwrap();
            assert_eq!(ts.len(), 9);
            let gates: Vec<f64> = ts.transforms()[..3].iter().map(|t| t.param().unwrap()).collect();
            let bounds = [(1.2, 1.4), (1.4, 1.6), (1.6, 1.8)];
            for (g, (lo, hi)) in gates.iter().zip(bounds) {
                assert!(*g > lo - 1e-12 && *g < hi + 1e-12, "{g} outside ({lo}, {hi})");
            }
        }
    }

    #[test]
    fn ranges_are_validated() {
        let bad = [
            ValueRanges { density: Some((0.8, 1.5)), ..Default::default() },
            ValueRanges { dropping: Some((10.0, 120.0)), ..Default::default() },
            ValueRanges { occlusion: Some((0.2, 0.1)), ..Default::default() },
            ValueRanges { density: None, dropping: None, occlusion: None },
        ];
        for r in bad {
            assert!(build_task_set(&r, TaskParamMode::Stratified, 0).is_err());
        }
        let partial = ValueRanges { density: None, occlusion: None, ..Default::default() };
        assert_eq!(build_task_set(&partial, TaskParamMode::Stratified, 0).unwrap().len(), 3);
    }

    #[test]
    fn probability_updates_are_checked() {
        let mut ts = TaskSet::new(vec![TransformSpec::Identity; 3]).unwrap();
        assert!(ts.set_probabilities(vec![0.5, 0.5]).is_err());
        assert!(ts.set_probabilities(vec![0.5, 0.5, 0.0]).is_err());
        ts.set_probabilities(vec![0.2, 0.3, 0.5]).unwrap();
        ts.reset_uniform();
        assert_eq!(ts.probabilities(), &[1.0 / 3.0; 3]);
    }
}
