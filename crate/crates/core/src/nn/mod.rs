//! A PointNet-style classifier without input/feature transform networks:
//! a shared per-point MLP, coordinate-wise max pooling, and a small MLP head.
//! Gradients are derived by hand for this fixed architecture.

mod checkpoint;
mod network;
mod optim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use network::{cross_entropy, forward, loss_and_grad, loss_batch, predict};
pub(crate) use network::argmax as network_argmax;
pub use optim::{adam_step, sgd_step, AdamState};

/// Layer widths of the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// Output widths of the shared per-point layers (input width is 3).
    pub point_widths: Vec<usize>,
    /// Hidden widths of the head; the output layer has `classes` units.
    pub head_widths: Vec<usize>,
    pub classes: usize,
}

impl Architecture {
    /// 3 -> 64 -> 128 -> 256, max pool, 256 -> 128 -> C.
    pub fn pointnet(classes: usize) -> Self {
        Self {
            point_widths: vec![64, 128, 256],
            head_widths: vec![128],
            classes,
        }
    }

    /// A narrower variant for quick experiments on small synthetic data.
    pub fn compact(classes: usize) -> Self {
        Self {
            point_widths: vec![32, 64, 128],
            head_widths: vec![64],
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.point_widths.is_empty() {
            return Err(Error::InvalidInput("per-point MLP needs at least one layer".into()));
        }
        if self.point_widths.iter().chain(&self.head_widths).any(|&w| w == 0) {
            return Err(Error::InvalidInput("layer widths must be positive".into()));
        }
        Ok(())
    }

    /// Width of the pooled global feature.
    pub fn feature_width(&self) -> usize {
        *self.point_widths.last().unwrap_or(&3)
    }

    pub(crate) fn layers(&self) -> Vec<Layer> {
        let mut layers = Vec::new();
        let mut offset = 0;
        let mut input = 3;
        let widths = self
            .point_widths
            .iter()
            .chain(&self.head_widths)
            .copied()
            .chain(std::iter::once(self.classes));
        for output in widths {
            layers.push(Layer {
                input,
                output,
                weights: offset,
                bias: offset + input * output,
            });
            offset += input * output + output;
            input = output;
        }
        layers
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.input * l.output + l.output).sum()
    }
}

/// Offsets of one dense layer inside the flat parameter vector. Weights are
/// stored row-major as `input x output`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layer {
    pub input: usize,
    pub output: usize,
    pub weights: usize,
    pub bias: usize,
}

impl Layer {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.weights..self.weights + self.input * self.output
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        self.bias..self.bias + self.output
    }
}

/// Classifier weights, flattened layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    values: Vec<f64>,
}

/// Derivatives of a loss with respect to every entry of a [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    arch: Architecture,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch: arch.clone(),
            values: vec![0.0; arch.param_count()],
        })
    }

    pub fn from_values(arch: &Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "architecture has {} parameters, got {}",
                arch.param_count(),
                values.len()
            )));
        }
        Ok(Self {
            arch: arch.clone(),
            values,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Indices of every bias entry.
    pub fn bias_indices(&self) -> Vec<usize> {
        self.arch.layers().iter().flat_map(|l| l.bias_range()).collect()
    }

    /// Weight slice of layer `index` (per-point layers first, then head).
    pub fn layer_weights(&self, index: usize) -> &[f64] {
        let layer = self.arch.layers()[index];
        &self.values[layer.weight_range()]
    }

    pub(crate) fn check_congruent(&self, arch: &Architecture) -> Result<()> {
        if &self.arch != arch {
            return Err(Error::ShapeMismatch(format!(
                "architectures differ: {:?} vs {:?}",
                self.arch, arch
            )));
        }
        Ok(())
    }
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            arch: arch.clone(),
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn from_values(arch: &Architecture, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "architecture has {} parameters, got {}",
                arch.param_count(),
                values.len()
            )));
        }
        Ok(Self {
            arch: arch.clone(),
            values,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        if self.arch != other.arch {
            return Err(Error::ShapeMismatch("cannot add gradients of different shapes".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// Weights uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
pub fn init_params<R: rand::Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(arch)?;
    for layer in arch.layers() {
        let bound = 1.0 / (layer.input as f64).sqrt();
        for w in &mut params.values[layer.weight_range()] {
            *w = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}

/// [`init_params`] from a bare seed.
pub fn init_params_seeded(arch: &Architecture, seed: u64) -> Result<ModelParams> {
    init_params(arch, &mut crate::rng::seeded(seed))
}
