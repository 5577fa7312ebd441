//! Datasets: synthetic shape families, stratified source splits, held-out
//! target domains, and on-disk storage.

mod io;
mod shapes;

use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{apply_transform, normalize_unit_ball, PointCloud, TransformSpec};
use crate::rng::seeded;

pub use io::{load_dataset, parse_manifest, save_dataset, MANIFEST_FILE};
pub use shapes::{sample_instance, sample_surface, ShapeFamily, ShapeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    /// Not yet divided into train and validation parts.
    Source,
    Train,
    Val,
    Target,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Source => "source",
            Split::Train => "train",
            Split::Val => "val",
            Split::Target => "target",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Split::Source),
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "target" => Ok(Split::Target),
            other => Err(Error::InvalidInput(format!("unknown split `{other}`"))),
        }
    }
}

/// Labelled point clouds; every label indexes `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<PointCloud>,
    pub class_names: Vec<String>,
    pub split: Split,
}

impl Dataset {
    pub fn new(items: Vec<PointCloud>, class_names: Vec<String>, split: Split) -> Result<Self> {
        let ds = Self {
            items,
            class_names,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        if self.class_names.len() < 2 {
            return Err(Error::InvalidInput("dataset needs at least 2 classes".into()));
        }
        for (i, cloud) in self.items.iter().enumerate() {
            if cloud.label >= self.class_names.len() {
                return Err(Error::InvalidInput(format!(
                    "item {i} has label {} but only {} classes exist",
                    cloud.label,
                    self.class_names.len()
                )));
            }
            if cloud.is_empty() {
                return Err(Error::InvalidInput(format!("item {i} has no points")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for cloud in &self.items {
            counts[cloud.label] += 1;
        }
        counts
    }
}

/// `per_class` instances of every family, class-major, each sampled with
/// `points` surface points and unit-ball normalized.
pub fn generate_synthetic_dataset(
    families: &[ShapeFamily],
    per_class: usize,
    points: usize,
    seed: u64,
) -> Result<Dataset> {
    if families.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 shape families".into()));
    }
    if per_class == 0 {
        return Err(Error::InvalidInput("per-class count must be at least 1".into()));
    }
    if points < shapes::MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "need at least {} points per cloud, got {points}",
            shapes::MIN_POINTS
        )));
    }
    for family in families {
        family.validate()?;
    }
    let mut rng = seeded(seed);
    let mut items = Vec::with_capacity(families.len() * per_class);
    for (label, family) in families.iter().enumerate() {
        for _ in 0..per_class {
            let raw = sample_instance(family, points, label, &mut rng);
            items.push(normalize_unit_ball(&raw)?);
        }
    }
    let names = families.iter().map(|f| f.kind.to_string()).collect();
    Dataset::new(items, names, Split::Source)
}

/// Stratified 5:1 train/validation split.
///
/// Each class contributes `floor(n_c / 6)` validation items; the remainder
/// needed to reach `floor(n / 6)` overall goes to the classes with the
/// largest fractional part (lower class index first). Classes with fewer
/// than six items still get one validation item.
pub fn split_train_val(dataset: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    if dataset.len() < 6 {
        return Err(Error::InvalidInput(format!(
            "need at least 6 items to split, got {}",
            dataset.len()
        )));
    }
    let classes = dataset.classes();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, cloud) in dataset.items.iter().enumerate() {
        members[cloud.label].push(i);
    }

    let mut val_counts: Vec<usize> = members.iter().map(|m| m.len() / 6).collect();
    let target = dataset.len() / 6;
    let assigned: usize = val_counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..classes).filter(|&c| !members[c].is_empty()).collect();
    by_remainder.sort_by_key(|&c| (std::cmp::Reverse(members[c].len() % 6), c));
    for &c in by_remainder.iter().take(target.saturating_sub(assigned)) {
        val_counts[c] += 1;
    }
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() && val_counts[c] == 0 {
            warn!(
                "class {} has only {} items; moving one into validation",
                dataset.class_names[c],
                m.len()
            );
            val_counts[c] = 1;
        }
    }

    let mut rng = seeded(seed);
    let mut is_val = vec![false; dataset.len()];
    for (c, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut rng);
        for &i in &m[..val_counts[c]] {
            is_val[i] = true;
        }
    }
    let pick = |want_val: bool| -> Vec<PointCloud> {
        dataset
            .items
            .iter()
            .zip(&is_val)
            .filter(|(_, &v)| v == want_val)
            .map(|(c, _)| c.clone())
            .collect()
    };
    let train = Dataset {
        items: pick(false),
        class_names: dataset.class_names.clone(),
        split: Split::Train,
    };
    let val = Dataset {
        items: pick(true),
        class_names: dataset.class_names.clone(),
        split: Split::Val,
    };
    Ok((train, val))
}

/// Applies the held-out transforms, in order, to every source cloud.
///
/// The held-out parameters must not coincide with any transform used for
/// training, so the resulting domain is unseen. Labels are preserved and
/// every output cloud is a subset of its source cloud.
pub fn build_target_domain(
    source: &Dataset,
    held_out: &[TransformSpec],
    training: &[TransformSpec],
    seed: u64,
) -> Result<Dataset> {
    for spec in held_out {
        spec.validate()?;
        if *spec != TransformSpec::Identity && training.contains(spec) {
            return Err(Error::InvalidInput(format!(
                "held-out transform {spec} is part of the training task set"
            )));
        }
    }
    let mut rng = seeded(seed);
    let mut items = Vec::with_capacity(source.len());
    for cloud in &source.items {
        let mut out = cloud.clone();
        for spec in held_out {
            out = apply_transform(spec, &out, &mut rng)?;
        }
        items.push(out);
    }
    Dataset::new(items, source.class_names.clone(), Split::Target)
}
