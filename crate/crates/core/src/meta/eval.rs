use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, forward, network_argmax, ModelParams};

/// Accuracy and loss of a model on one dataset, overall and per class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub accuracy: f64,
    pub mean_loss: f64,
    pub per_class_total: Vec<usize>,
    pub per_class_correct: Vec<usize>,
}

impl EvalReport {
    /// `None` for classes absent from the dataset.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        self.per_class_total
            .iter()
            .zip(&self.per_class_correct)
            .map(|(&t, &c)| (t > 0).then(|| c as f64 / t as f64))
            .collect()
    }

    /// Plain-text table: one row per class, then the overall numbers.
    pub fn render(&self) -> String {
        let width = self.class_names.iter().map(String::len).max().unwrap_or(5).max(7);
        let mut out = format!("{:<width$}  {:>7}  {:>9}\n", "class", "count", "accuracy");
        for ((name, total), acc) in self
            .class_names
            .iter()
            .zip(&self.per_class_total)
            .zip(self.per_class_accuracy())
        {
            let acc = acc.map_or_else(|| "-".to_string(), |a| format!("{:.2}", 100.0 * a));
            out.push_str(&format!("{name:<width$}  {total:>7}  {acc:>9}\n"));
        }
        let total: usize = self.per_class_total.iter().sum();
        out.push_str(&format!(
            "{:<width$}  {total:>7}  {:>9.2}\nmean loss {:.6}\n",
            "overall",
            100.0 * self.accuracy,
            self.mean_loss
        ));
        out
    }
}

pub fn evaluate(params: &ModelParams, dataset: &Dataset) -> Result<EvalReport> {
    dataset.validate()?;
    let classes = params.architecture().classes;
    if classes != dataset.classes() {
        return Err(Error::InvalidInput(format!(
            "model predicts {classes} classes but the dataset has {}",
            dataset.classes()
        )));
    }
    let mut total = vec![0usize; classes];
    let mut correct = vec![0usize; classes];
    let mut loss = 0.0;
    for cloud in &dataset.items {
        let logits = forward(params, cloud)?;
        loss += cross_entropy(&logits, cloud.label);
        total[cloud.label] += 1;
        if network_argmax(&logits) == cloud.label {
            correct[cloud.label] += 1;
        }
    }
    let n = dataset.len() as f64;
    Ok(EvalReport {
        class_names: dataset.class_names.clone(),
        accuracy: correct.iter().sum::<usize>() as f64 / n,
        mean_loss: loss / n,
        per_class_total: total,
        per_class_correct: correct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_dataset, ShapeFamily};
    use crate::nn::{init_params_seeded, Architecture};

    #[test]
    fn uniform_model_is_at_chance() {
        let ds = generate_synthetic_dataset(&ShapeFamily::defaults(), 20, 64, 0).unwrap();
        let params = ModelParams::zeros(&Architecture::compact(5)).unwrap();
        let report = evaluate(&params, &ds).unwrap();
        // All logits tie, so every cloud is predicted as class 0.
        assert!((report.accuracy - 0.2).abs() < 0.03);
        assert!((report.mean_loss - 5f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn per_class_accuracies_weight_to_overall() {
        let ds = generate_synthetic_dataset(&ShapeFamily::defaults(), 7, 64, 1).unwrap();
        let params = init_params_seeded(&Architecture::compact(5), 2).unwrap();
        let r = evaluate(&params, &ds).unwrap();
        let weighted: f64 = r
            .per_class_accuracy()
            .iter()
            .zip(&r.per_class_total)
            .map(|(a, &t)| a.unwrap() * t as f64)
            .sum::<f64>()
            / ds.len() as f64;
        assert!((weighted - r.accuracy).abs() < 1e-12);
        assert!(r.render().contains("overall"));
    }

    #[test]
    fn class_count_mismatch_is_rejected() {
        let ds = generate_synthetic_dataset(&ShapeFamily::defaults(), 2, 64, 1).unwrap();
        let params = ModelParams::zeros(&Architecture::compact(3)).unwrap();
        assert!(matches!(evaluate(&params, &ds), Err(Error::InvalidInput(_))));
    }
}
